use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use lft_core::data_io::{
    generate_synthetic, parse_checkpoint, parse_coo_text, parse_queries, write_checkpoint, write_coo_text, OutlierPlan,
};
use lft_core::exec::Exec;
use lft_core::experiment::{self, best_point, grid_search, log_grid, mean_std, Experiment, LossChoice, RunOutcome};
use lft_core::tensor::{build_tensor, SparseTensor};
use lft_core::trainer::{TrainConfig, TrainReport};
use sha2::{Digest, Sha256};

use crate::manifest::{unix_now, Manifest};
use crate::{CommonArgs, CompareCmd, GridCmd, ImputeCmd, RepeatCmd, SynthCmd, TrainCmd};

pub const CURVE_HEADER: &str = "epoch,val_rmse,val_mae";
pub const COMPARE_HEADER: &str = "loss,test_rmse,test_mae,time_rmse_s,time_mae_s";

struct Dataset {
    tensor: SparseTensor,
    path: String,
    sha256: String,
}

fn read_text(path: &Path) -> Result<(String, String)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let hex = digest.iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    });
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not valid UTF-8", path.display()))?;
    Ok((text, hex))
}

fn load_data(path: &Path) -> Result<Dataset> {
    let (text, sha256) = read_text(path)?;
    let tensor = parse_coo_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Dataset {
        tensor,
        path: path.display().to_string(),
        sha256,
    })
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Parses `a:b:c` and normalizes it to proportions.
pub fn parse_split(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("invalid split `{s}`"))?;
    let [a, b, c] = parts[..] else {
        bail!("split `{s}` must have three parts, e.g. 7:1:2");
    };
    ensure!(a > 0.0 && b > 0.0 && c > 0.0, "split `{s}` parts must be positive");
    let total = a + b + c;
    Ok((a / total, b / total, c / total))
}

fn experiment_from(common: &CommonArgs, loss: LossChoice) -> Result<Experiment> {
    let outliers = if common.outlier_fraction > 0.0 {
        Some(OutlierPlan::new(
            common.outlier_fraction,
            common.outlier_magnitude,
            common.outlier_seed,
        )?)
    } else {
        None
    };
    let train = TrainConfig {
        eta: common.eta,
        max_epochs: common.max_epochs,
        tol: common.tol,
        seed: common.seed,
        shuffle: !common.no_shuffle,
        stop_metric: common.stop_metric.into(),
        keep_best: common.keep_best,
    };
    train.validate()?;
    Ok(Experiment {
        loss,
        rank: common.rank,
        lambda: common.lambda,
        init_seed: common.init_seed,
        init_scale: common.init_scale,
        split: parse_split(&common.split)?,
        train,
        outliers,
    })
}

fn config_manifest(command: &str, data: &Dataset, exp: &Experiment) -> Manifest {
    let mut m = Manifest::new();
    let d = data.tensor.dims();
    m.set("tool", concat!("lft ", env!("CARGO_PKG_VERSION")))
        .set("command", command)
        .set("data_path", &data.path)
        .set("data_sha256", &data.sha256)
        .set("data_dims", format!("{} {} {}", d.i, d.j, d.k))
        .set("data_entries", data.tensor.len())
        .set("loss", exp.loss.as_str())
        .set("rank", exp.rank)
        .set("eta", exp.train.eta)
        .set("lambda", exp.lambda)
        .set("max_epochs", exp.train.max_epochs)
        .set("tol", exp.train.tol)
        .set("shuffle", exp.train.shuffle)
        .set("shuffle_seed", exp.train.seed)
        .set("stop_metric", format!("{:?}", exp.train.stop_metric).to_lowercase())
        .set("keep_best", exp.train.keep_best)
        .set("init_seed", exp.init_seed)
        .set("init_scale", exp.init_scale)
        .set("split", format!("{}:{}:{}", exp.split.0, exp.split.1, exp.split.2));
    match &exp.outliers {
        Some(p) => m
            .set("outlier_fraction", p.fraction)
            .set("outlier_magnitude", p.magnitude)
            .set("outlier_seed", p.seed),
        None => m.set("outlier_fraction", 0),
    };
    m
}

fn record_outcome(m: &mut Manifest, out: &RunOutcome) {
    let r = &out.report;
    let fin = r.final_record();
    m.set("split_seed", out.split_seed)
        .set("n_train", out.sizes.0)
        .set("n_val", out.sizes.1)
        .set("n_test", out.sizes.2)
        .set("n_corrupted", out.corrupted.len())
        .set("tau", out.spec.tau().map_or("none".to_string(), |t| t.to_string()))
        .set("epochs", r.epochs_run)
        .set("stop_reason", r.stop_reason.as_str())
        .set("final_val_rmse", fin.val_rmse)
        .set("final_val_mae", fin.val_mae)
        .set("best_val_rmse_epoch", r.best_rmse().epoch)
        .set("best_val_mae_epoch", r.best_mae().epoch)
        .set("test_rmse", out.test.rmse)
        .set("test_mae", out.test.mae);
    m.timing("wall_s", r.wall_time_seconds)
        .timing("to_best_rmse_s", r.time_to_best_rmse())
        .timing("to_best_mae_s", r.time_to_best_mae());
}

pub fn curve_csv(report: &TrainReport) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for e in &report.trace {
        writeln!(out, "{},{},{}", e.epoch, e.val_rmse, e.val_mae).unwrap();
    }
    out
}

fn ensure_finite(out: &RunOutcome) -> Result<()> {
    ensure!(
        out.test.rmse.is_finite() && out.test.mae.is_finite() && out.model.is_finite(),
        "training produced non-finite results"
    );
    Ok(())
}

pub fn train(cmd: &TrainCmd) -> Result<()> {
    let started = unix_now();
    let data = load_data(&cmd.common.data)?;
    let exp = experiment_from(&cmd.common, cmd.loss.into())?;
    let out = experiment::run(&data.tensor, &exp, cmd.common.seed)?;
    ensure_finite(&out)?;

    if let Some(p) = &cmd.out_model {
        write_out(p, &write_checkpoint(&out.model))?;
    }
    if let Some(p) = &cmd.out_curve {
        write_out(p, &curve_csv(&out.report))?;
    }
    if let Some(p) = &cmd.out_manifest {
        let mut m = config_manifest("train", &data, &exp);
        record_outcome(&mut m, &out);
        m.timing("started_unix", started).timing("finished_unix", unix_now());
        write_out(p, &m.render())?;
    }
    println!("rmse={} mae={}", out.test.rmse, out.test.mae);
    Ok(())
}

pub fn repeat(cmd: &RepeatCmd) -> Result<()> {
    ensure!(cmd.runs >= 1, "--runs must be at least 1");
    let started = unix_now();
    let data = load_data(&cmd.common.data)?;
    let exp = experiment_from(&cmd.common, cmd.loss.into())?;
    let seeds: Vec<u64> = (0..cmd.runs as u64)
        .map(|r| {
            if cmd.fixed_split {
                cmd.common.seed
            } else {
                cmd.common.seed + r
            }
        })
        .collect();
    let exec = if cmd.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let outs = experiment::run_many(&data.tensor, &exp, &seeds, exec)?;
    for o in &outs {
        ensure_finite(o)?;
    }

    if let Some(dir) = &cmd.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (r, o) in outs.iter().enumerate() {
            let mut e = exp.clone();
            e.train.seed = o.split_seed;
            let mut m = config_manifest("repeat", &data, &e);
            m.set("run", r);
            record_outcome(&mut m, o);
            m.timing("batch_started_unix", started);
            write_out(&dir.join(format!("run_{r}.manifest")), &m.render())?;
        }
    }

    let rmses: Vec<f64> = outs.iter().map(|o| o.test.rmse).collect();
    let maes: Vec<f64> = outs.iter().map(|o| o.test.mae).collect();
    let (rm, rs) = mean_std(&rmses);
    let (mm, ms) = mean_std(&maes);
    let mut csv = String::from("run,split_seed,test_rmse,test_mae,epochs,stop_reason\n");
    for (r, o) in outs.iter().enumerate() {
        let rep = &o.report;
        writeln!(
            csv,
            "{r},{},{},{},{},{}",
            o.split_seed,
            o.test.rmse,
            o.test.mae,
            rep.epochs_run,
            rep.stop_reason.as_str()
        )
        .unwrap();
    }
    writeln!(csv, "mean,,{rm},{mm},,").unwrap();
    writeln!(csv, "std,,{rs},{ms},,").unwrap();
    match &cmd.out_csv {
        Some(p) => write_out(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn compare(cmd: &CompareCmd) -> Result<()> {
    ensure!(!cmd.losses.is_empty(), "--losses must name at least one loss");
    let data = load_data(&cmd.common.data)?;
    let base = experiment_from(&cmd.common, LossChoice::L2)?;
    let (sets, _) = experiment::prepare(&data.tensor, &base, cmd.common.seed)?;

    let mut csv = String::from(COMPARE_HEADER);
    csv.push('\n');
    // Sequential on purpose: the timing columns are compared across rows.
    for &loss in &cmd.losses {
        let exp = Experiment {
            loss: loss.into(),
            ..base.clone()
        };
        let (_, model, report, test) = experiment::run_on_sets(&sets, &exp)?;
        ensure!(
            test.rmse.is_finite() && model.is_finite(),
            "{} training produced non-finite results",
            exp.loss.as_str()
        );
        writeln!(
            csv,
            "{},{},{},{},{}",
            exp.loss.as_str(),
            test.rmse,
            test.mae,
            report.time_to_best_rmse(),
            report.time_to_best_mae()
        )
        .unwrap();
    }
    if let Some(p) = &cmd.out_csv {
        write_out(p, &csv)?;
    }
    print!("{csv}");
    Ok(())
}

pub fn impute(cmd: &ImputeCmd) -> Result<()> {
    let (text, _) = read_text(&cmd.model)?;
    let model = parse_checkpoint(&text).with_context(|| format!("parsing {}", cmd.model.display()))?;
    let idxs = if cmd.all_missing {
        let path = cmd.data.as_ref().expect("clap enforces --data");
        let data = load_data(path)?;
        ensure!(
            data.tensor.dims() == model.dims(),
            "data dims {} do not match model dims {}",
            data.tensor.dims(),
            model.dims()
        );
        data.tensor.missing_indices().collect::<Vec<_>>()
    } else {
        let Some(q) = &cmd.queries else {
            bail!("pass --queries <file> or --all-missing --data <file>");
        };
        let (text, _) = read_text(q)?;
        parse_queries(&text).with_context(|| format!("parsing {}", q.display()))?
    };
    let preds = model.predict_many(&idxs)?;
    ensure!(preds.iter().all(|p| p.is_finite()), "non-finite prediction");
    let out = build_tensor(model.dims(), idxs.into_iter().zip(preds))?;
    let text = write_coo_text(&out);
    match &cmd.out {
        Some(p) => write_out(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn grid(cmd: &GridCmd) -> Result<()> {
    let data = load_data(&cmd.common.data)?;
    let exp = experiment_from(&cmd.common, cmd.loss.into())?;
    let etas = if cmd.etas.is_empty() {
        log_grid(1e-4, 1e-2, 5)
    } else {
        cmd.etas.clone()
    };
    let lambdas = if cmd.lambdas.is_empty() {
        vec![1e-3, 1e-2, 1e-1]
    } else {
        cmd.lambdas.clone()
    };
    let (sets, _) = experiment::prepare(&data.tensor, &exp, cmd.common.seed)?;
    let points = grid_search(&sets, &exp, &etas, &lambdas, Exec::default());

    let mut csv = String::from("eta,lambda,val_rmse,val_mae,epochs\n");
    for p in &points {
        writeln!(csv, "{},{},{},{},{}", p.eta, p.lambda, p.val.rmse, p.val.mae, p.epochs).unwrap();
    }
    match &cmd.out_csv {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    let best = best_point(&points).context("empty grid")?;
    ensure!(best.val.rmse.is_finite(), "every grid point diverged");
    println!(
        "best eta={} lambda={} val_rmse={} val_mae={}",
        best.eta, best.lambda, best.val.rmse, best.val.mae
    );
    Ok(())
}

pub fn synth(cmd: &SynthCmd) -> Result<()> {
    let [i, j, k] = cmd.dims[..] else {
        bail!("--dims takes exactly three values");
    };
    let (t, truth) = generate_synthetic((i, j, k), cmd.rank, cmd.density, cmd.noise, cmd.seed)?;
    write_out(&cmd.out, &write_coo_text(&t))?;
    if let Some(p) = &cmd.out_truth {
        write_out(p, &write_checkpoint(&truth))?;
    }
    Ok(())
}
