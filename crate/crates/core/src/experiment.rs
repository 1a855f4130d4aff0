//! End-to-end runs: split the observed entries, optionally corrupt the
//! training split, derive the TDW threshold from training values, train
//! from a fixed initialization and score the test split.
//!
//! Independent runs (repeats over split seeds, grid points) are fanned out
//! with [`Exec`]; each run is internally sequential and deterministic.

use crate::data_io::{inject_outliers, split_dataset, OutlierPlan, SplitSets};
use crate::error::{LftError, Result};
use crate::eval::{evaluate, Metrics};
use crate::exec::Exec;
use crate::loss::{compute_tau, LossKind, LossSpec};
use crate::model::{init_model, FactorModel, DEFAULT_INIT_SCALE, DEFAULT_INIT_SEED};
use crate::tensor::{EntryIndex, SparseTensor};
use crate::trainer::{train, TrainConfig, TrainReport, DEFAULT_LAMBDA};

/// Loss family; the TDW threshold is resolved per run from training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossChoice {
    L2,
    Tdw,
}

impl LossChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            LossChoice::L2 => "l2",
            LossChoice::Tdw => "tdw",
        }
    }
}

impl std::str::FromStr for LossChoice {
    type Err = LftError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(LossChoice::L2),
            "tdw" => Ok(LossChoice::Tdw),
            other => Err(LftError::InvalidConfig(format!(
                "unknown loss `{other}` (expected l2 or tdw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub loss: LossChoice,
    pub rank: usize,
    pub lambda: f64,
    pub init_seed: u64,
    pub init_scale: f64,
    pub split: (f64, f64, f64),
    pub train: TrainConfig,
    /// Corruption applied to the training split only.
    pub outliers: Option<OutlierPlan>,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            loss: LossChoice::Tdw,
            rank: 20,
            lambda: DEFAULT_LAMBDA,
            init_seed: DEFAULT_INIT_SEED,
            init_scale: DEFAULT_INIT_SCALE,
            split: crate::data_io::DEFAULT_SPLIT,
            train: TrainConfig::default(),
            outliers: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub split_seed: u64,
    pub spec: LossSpec,
    pub sizes: (usize, usize, usize),
    pub corrupted: Vec<EntryIndex>,
    pub model: FactorModel,
    pub report: TrainReport,
    pub test: Metrics,
}

/// Split plus (possibly corrupted) training set for one seed.
pub fn prepare(data: &SparseTensor, exp: &Experiment, split_seed: u64) -> Result<(SplitSets, Vec<EntryIndex>)> {
    let mut sets = split_dataset(data, exp.split, split_seed)?;
    let mut corrupted = Vec::new();
    if let Some(plan) = &exp.outliers {
        let (train, idxs) = inject_outliers(&sets.train, plan)?;
        sets.train = train;
        corrupted = idxs;
    }
    Ok((sets, corrupted))
}

pub fn loss_spec(choice: LossChoice, lambda: f64, train: &SparseTensor) -> Result<LossSpec> {
    match choice {
        LossChoice::L2 => LossSpec::l2(lambda),
        LossChoice::Tdw => LossSpec::new(
            LossKind::Tdw {
                tau: compute_tau(train)?,
            },
            lambda,
        ),
    }
}

/// Trains on prepared sets; the model always starts from the experiment's
/// fixed initialization.
pub fn run_on_sets(sets: &SplitSets, exp: &Experiment) -> Result<(LossSpec, FactorModel, TrainReport, Metrics)> {
    let spec = loss_spec(exp.loss, exp.lambda, &sets.train)?;
    let mut model = init_model(sets.train.dims(), exp.rank, exp.init_seed, exp.init_scale)?;
    let report = train(&mut model, &sets.train, &sets.val, &spec, &exp.train)?;
    let test = evaluate(&model, &sets.test)?;
    Ok((spec, model, report, test))
}

pub fn run(data: &SparseTensor, exp: &Experiment, split_seed: u64) -> Result<RunOutcome> {
    let (sets, corrupted) = prepare(data, exp, split_seed)?;
    let (spec, model, report, test) = run_on_sets(&sets, exp)?;
    Ok(RunOutcome {
        split_seed,
        spec,
        sizes: sets.sizes(),
        corrupted,
        model,
        report,
        test,
    })
}

/// One run per split seed; results come back in seed order.
pub fn run_many(data: &SparseTensor, exp: &Experiment, split_seeds: &[u64], exec: Exec) -> Result<Vec<RunOutcome>> {
    exec.map(split_seeds, |&seed| {
        let mut e = exp.clone();
        e.train.seed = seed;
        run(data, &e, seed)
    })
    .into_iter()
    .collect()
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for a single
/// value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub eta: f64,
    pub lambda: f64,
    pub val: Metrics,
    pub epochs: usize,
}

/// Log-spaced grid from `lo` to `hi` inclusive with `n` points.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|p| (a + (b - a) * p as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Trains one model per `(eta, lambda)` pair on the training split and
/// scores each on the validation split. Points failing to train (e.g.
/// divergence at a large step) are reported with infinite metrics.
pub fn grid_search(sets: &SplitSets, exp: &Experiment, etas: &[f64], lambdas: &[f64], exec: Exec) -> Vec<GridPoint> {
    let pairs: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&eta| lambdas.iter().map(move |&lambda| (eta, lambda)))
        .collect();
    exec.map(&pairs, |&(eta, lambda)| {
        let mut e = exp.clone();
        e.lambda = lambda;
        e.train.eta = eta;
        let outcome = (|| {
            let spec = loss_spec(e.loss, lambda, &sets.train)?;
            let mut model = init_model(sets.train.dims(), e.rank, e.init_seed, e.init_scale)?;
            let report = train(&mut model, &sets.train, &sets.val, &spec, &e.train)?;
            Ok::<_, LftError>((evaluate(&model, &sets.val)?, report.epochs_run))
        })();
        match outcome {
            Ok((val, epochs)) => GridPoint {
                eta,
                lambda,
                val,
                epochs,
            },
            Err(_) => GridPoint {
                eta,
                lambda,
                val: Metrics {
                    rmse: f64::INFINITY,
                    mae: f64::INFINITY,
                },
                epochs: 0,
            },
        }
    })
}

/// Grid point with the lowest validation RMSE (first on ties).
pub fn best_point(points: &[GridPoint]) -> Option<&GridPoint> {
    points
        .iter()
        .reduce(|best, p| if p.val.rmse < best.val.rmse { p } else { best })
}
