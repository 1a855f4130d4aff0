//! Per-entry SGD with validation-driven early stopping.
//!
//! One epoch visits every training entry exactly once. For each entry the
//! residual is computed from the current rows, and the three touched rows
//! `u_i`, `s_j`, `t_k` are updated simultaneously from their pre-step values:
//!
//! ```text
//! u[i,r] -= eta * (g * s[j,r] * t[k,r] + lambda * u[i,r])
//! s[j,r] -= eta * (g * u[i,r] * t[k,r] + lambda * s[j,r])
//! t[k,r] -= eta * (g * u[i,r] * s[j,r] + lambda * t[k,r])
//! ```
//!
//! with `g` from [`entry_grad_coeff`].
//!
//! Training stops after `max_epochs` epochs, or as soon as the signed drop
//! in the validation metric between two successive epochs is below `tol`
//! (a rise in validation error therefore also stops training).

use std::time::Instant;

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LftError, Result};
use crate::eval::{evaluate, Metrics};
use crate::loss::{entry_grad_coeff, total_loss, LossKind, LossSpec};
use crate::model::{FactorMatrix, FactorModel};
use crate::tensor::{build_tensor, EntryIndex, SparseTensor};

pub const DEFAULT_ETA: f64 = 0.002;
pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_MAX_EPOCHS: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMetric {
    Rmse,
    Mae,
}

impl StopMetric {
    fn pick(self, m: &Metrics) -> f64 {
        match self {
            StopMetric::Rmse => m.rmse,
            StopMetric::Mae => m.mae,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate.
    pub eta: f64,
    pub max_epochs: usize,
    pub tol: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    pub shuffle: bool,
    pub stop_metric: StopMetric,
    /// Return the best-validation snapshot instead of the final model.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            max_epochs: DEFAULT_MAX_EPOCHS,
            tol: DEFAULT_TOL,
            seed: 42,
            shuffle: true,
            stop_metric: StopMetric::Rmse,
            keep_best: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LftError::InvalidConfig(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(LftError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_epochs == 0 {
            return Err(LftError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Converged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Converged => "converged",
        }
    }
}

/// Validation metrics after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub val_rmse: f64,
    pub val_mae: f64,
    /// Wall-clock seconds since training started, measured after evaluation.
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub trace: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub wall_time_seconds: f64,
}

impl TrainReport {
    fn best_by(&self, key: impl Fn(&EpochRecord) -> f64) -> &EpochRecord {
        // First epoch wins ties.
        self.trace
            .iter()
            .reduce(|best, r| if key(r) < key(best) { r } else { best })
            .expect("trace is never empty")
    }

    pub fn best_rmse(&self) -> &EpochRecord {
        self.best_by(|r| r.val_rmse)
    }

    pub fn best_mae(&self) -> &EpochRecord {
        self.best_by(|r| r.val_mae)
    }

    /// Seconds until the epoch with the lowest validation RMSE.
    pub fn time_to_best_rmse(&self) -> f64 {
        self.best_rmse().elapsed_seconds
    }

    pub fn time_to_best_mae(&self) -> f64 {
        self.best_mae().elapsed_seconds
    }

    pub fn final_record(&self) -> &EpochRecord {
        self.trace.last().expect("trace is never empty")
    }
}

/// Visiting order of the training entries for the given epoch.
pub fn epoch_order(n: usize, cfg: &TrainConfig, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if cfg.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);
    }
    order
}

fn check_dims(m: &FactorModel, data: &SparseTensor) -> Result<()> {
    if m.dims() != data.dims() {
        return Err(LftError::DimensionMismatch {
            model: m.dims(),
            data: data.dims(),
        });
    }
    Ok(())
}

/// One SGD pass over `train`. Returns the number of steps taken.
pub fn sgd_epoch(
    m: &mut FactorModel,
    train: &SparseTensor,
    spec: &LossSpec,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<usize> {
    check_dims(m, train)?;
    let rank = m.rank();
    let eta = cfg.eta;
    let lambda = spec.lambda;
    let indices = train.indices();
    let values = train.values();

    let mut u0 = vec![0.0; rank];
    let mut s0 = vec![0.0; rank];
    let mut t0 = vec![0.0; rank];
    let order = epoch_order(train.len(), cfg, epoch);
    let FactorModel { u, s, t } = m;

    for (step, &p) in order.iter().enumerate() {
        let idx = indices[p];
        u0.copy_from_slice(u.row(idx.i));
        s0.copy_from_slice(s.row(idx.j));
        t0.copy_from_slice(t.row(idx.k));

        let yhat = crate::model::triple_dot(&u0, &s0, &t0);
        let g = entry_grad_coeff(spec, values[p], yhat);

        let mut finite = true;
        for (r, ur) in u.row_mut(idx.i).iter_mut().enumerate() {
            *ur = u0[r] - eta * (g * s0[r] * t0[r] + lambda * u0[r]);
            finite &= ur.is_finite();
        }
        for (r, sr) in s.row_mut(idx.j).iter_mut().enumerate() {
            *sr = s0[r] - eta * (g * u0[r] * t0[r] + lambda * s0[r]);
            finite &= sr.is_finite();
        }
        for (r, tr) in t.row_mut(idx.k).iter_mut().enumerate() {
            *tr = t0[r] - eta * (g * u0[r] * s0[r] + lambda * t0[r]);
            finite &= tr.is_finite();
        }
        if !finite {
            return Err(LftError::Divergence {
                epoch,
                step,
                index: idx,
            });
        }
    }
    Ok(order.len())
}

/// Runs SGD epochs until convergence or the epoch cap. The model is
/// updated in place; with `keep_best` it is replaced by the snapshot with
/// the lowest validation `stop_metric` before returning.
pub fn train(
    m: &mut FactorModel,
    train_set: &SparseTensor,
    val: &SparseTensor,
    spec: &LossSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if val.is_empty() {
        return Err(LftError::Empty("validation set"));
    }
    check_dims(m, train_set)?;
    check_dims(m, val)?;

    let start = Instant::now();
    let mut trace: Vec<EpochRecord> = Vec::with_capacity(cfg.max_epochs.min(4096));
    let mut best: Option<(f64, FactorModel)> = None;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        sgd_epoch(m, train_set, spec, cfg, epoch)?;
        let metrics = evaluate(m, val)?;
        let rec = EpochRecord {
            epoch,
            val_rmse: metrics.rmse,
            val_mae: metrics.mae,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        };
        let current = cfg.stop_metric.pick(&metrics);
        if cfg.keep_best && best.as_ref().is_none_or(|(b, _)| current < *b) {
            best = Some((current, m.clone()));
        }
        let previous = trace.last().map(|r| {
            cfg.stop_metric.pick(&Metrics {
                rmse: r.val_rmse,
                mae: r.val_mae,
            })
        });
        trace.push(rec);
        if let Some(prev) = previous {
            if prev - current < cfg.tol {
                stop_reason = StopReason::Converged;
                break;
            }
        }
    }

    if let Some((_, snapshot)) = best {
        *m = snapshot;
    }
    Ok(TrainReport {
        epochs_run: trace.len(),
        trace,
        stop_reason,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

fn param_mut(m: &mut FactorModel, which: usize, row: usize, r: usize) -> &mut f64 {
    let mat = match which {
        0 => &mut m.u,
        1 => &mut m.s,
        _ => &mut m.t,
    };
    &mut mat.row_mut(row)[r]
}

/// Outcome of [`numeric_gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Worst `||analytic - numeric|| / max(||analytic||, ||numeric||)` over
    /// the per-sample gradient vectors.
    pub max_rel_error: f64,
    pub samples: usize,
    /// Draws rejected for lying near a kink of the loss.
    pub skipped: usize,
}

const BOUNDARY_MARGIN: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

/// Compares the analytic SGD directions against central finite differences
/// of [`total_loss`] on random tiny models (rank <= 3, every dim <= 4), one
/// observed entry per sample. Draws within `1e-4` of a kink (`d = 0`, or the
/// TDW branch switch) are redrawn, so exactly `trials` samples are scored.
///
/// The loss kind and `lambda` are taken from `spec`.
pub fn numeric_gradient_check(spec: &LossSpec, trials: usize, seed: u64) -> Result<GradCheck> {
    if trials == 0 {
        return Err(LftError::InvalidConfig("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = Uniform::new(-1.0, 1.0).expect("valid range");
    let dim = Uniform::new_inclusive(1usize, 4).expect("valid range");
    let rank_d = Uniform::new_inclusive(1usize, 3).expect("valid range");
    let target = Uniform::new(-2.0, 2.0).expect("valid range");

    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let mut skipped = 0;
    while samples < trials {
        let (di, dj, dk, rank) = (
            dim.sample(&mut rng),
            dim.sample(&mut rng),
            dim.sample(&mut rng),
            rank_d.sample(&mut rng),
        );
        let mut mat = |rows: usize| {
            let data = (0..rows * rank).map(|_| factor.sample(&mut rng)).collect();
            FactorMatrix::from_vec(rows, rank, data)
        };
        let mut model = FactorModel::from_factors(mat(di)?, mat(dj)?, mat(dk)?)?;
        let idx = EntryIndex::new(
            Uniform::new(0, di).expect("di >= 1").sample(&mut rng),
            Uniform::new(0, dj).expect("dj >= 1").sample(&mut rng),
            Uniform::new(0, dk).expect("dk >= 1").sample(&mut rng),
        );
        let y = target.sample(&mut rng);
        let yhat = model.predict_unchecked(idx);
        let d = (y - yhat).abs();
        let near_kink = d < BOUNDARY_MARGIN
            || matches!(spec.kind, LossKind::Tdw { tau } if (d - (y - tau).abs()).abs() < BOUNDARY_MARGIN);
        if near_kink {
            skipped += 1;
            continue;
        }
        let data = build_tensor(model.dims(), [(idx, y)])?;

        let g = entry_grad_coeff(spec, y, yhat);
        let (ui, sj, tk) = (
            model.u.row(idx.i).to_vec(),
            model.s.row(idx.j).to_vec(),
            model.t.row(idx.k).to_vec(),
        );
        let mut analytic = Vec::with_capacity(3 * rank);
        for r in 0..rank {
            analytic.push(g * sj[r] * tk[r] + spec.lambda * ui[r]);
        }
        for r in 0..rank {
            analytic.push(g * ui[r] * tk[r] + spec.lambda * sj[r]);
        }
        for r in 0..rank {
            analytic.push(g * ui[r] * sj[r] + spec.lambda * tk[r]);
        }

        let mut numeric = Vec::with_capacity(3 * rank);
        for (which, row) in [(0, idx.i), (1, idx.j), (2, idx.k)] {
            for r in 0..rank {
                let orig = *param_mut(&mut model, which, row, r);
                *param_mut(&mut model, which, row, r) = orig + FD_STEP;
                let plus = total_loss(&model, &data, spec)?;
                *param_mut(&mut model, which, row, r) = orig - FD_STEP;
                let minus = total_loss(&model, &data, spec)?;
                *param_mut(&mut model, which, row, r) = orig;
                numeric.push((plus - minus) / (2.0 * FD_STEP));
            }
        }

        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        let rel = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
        worst = worst.max(rel);
        samples += 1;
    }
    Ok(GradCheck {
        max_rel_error: worst,
        samples,
        skipped,
    })
}
