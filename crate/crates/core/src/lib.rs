//! Sparse third-order tensor completion by latent factorization.
//!
//! A partially observed tensor `Y` (sensors x intervals x days) is
//! approximated by a rank-`R` CP model, `yhat[i,j,k] = sum_r u[i,r] s[j,r] t[k,r]`,
//! whose objective is defined on observed entries only. The factors are fit
//! by per-entry SGD under either a plain squared loss with Tikhonov
//! regularization or the outlier-resistant threshold-distance-weighted (TDW)
//! loss, with validation-based early stopping.
//!
//! ```
//! use lft_core::prelude::*;
//!
//! let (data, _) = generate_synthetic((8, 8, 4), 2, 0.6, 0.0, 1).unwrap();
//! let sets = split_dataset(&data, DEFAULT_SPLIT, 7).unwrap();
//! let spec = LossSpec::tdw(0.01, compute_tau(&sets.train).unwrap()).unwrap();
//! let mut model = init_model(data.dims(), 2, 42, 0.5).unwrap();
//! let cfg = TrainConfig { eta: 0.01, max_epochs: 20, ..TrainConfig::default() };
//! let report = train(&mut model, &sets.train, &sets.val, &spec, &cfg).unwrap();
//! assert!(report.epochs_run <= 20);
//! let m = evaluate(&model, &sets.test).unwrap();
//! assert!(m.rmse >= m.mae);
//! ```

pub mod data_io;
pub mod error;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod loss;
pub mod model;
pub mod tensor;
pub mod trainer;

pub use error::{LftError, Result};

pub mod prelude {
    pub use crate::data_io::{
        generate_synthetic, inject_outliers, parse_checkpoint, parse_coo_text, split_dataset, write_checkpoint,
        write_coo_text, OutlierPlan, SplitSets, DEFAULT_SPLIT,
    };
    pub use crate::error::{LftError, Result};
    pub use crate::eval::{evaluate, mae, rmse, Metrics};
    pub use crate::exec::Exec;
    pub use crate::experiment::{run, run_many, Experiment, LossChoice, RunOutcome};
    pub use crate::loss::{compute_tau, entry_grad_coeff, entry_loss, total_loss, LossKind, LossSpec};
    pub use crate::model::{init_model, predict_entry, predict_many, FactorModel};
    pub use crate::tensor::{build_tensor, density, median_value, Dims, EntryIndex, SparseTensor};
    pub use crate::trainer::{
        numeric_gradient_check, sgd_epoch, train, StopMetric, StopReason, TrainConfig, TrainReport,
    };
}
