//! Per-entry objectives and their gradient coefficients.
//!
//! Two data terms are supported, with residual `d = y - yhat`:
//!
//! * `L2`: `d^2 / 2`.
//! * `TDW` (threshold-distance weighted) with threshold `tau` and
//!   threshold distance `w = |y - tau|`: `d^2` when `|d| >= w`, otherwise
//!   `w * |d|`.
//!
//! Note the squared region of TDW carries no `1/2`, so its gradient is twice
//! the L2 gradient for the same residual. Also note `w` grows with the
//! distance of the *observation* from `tau`: samples far from the median get
//! a large fixed weight on the absolute branch.
//!
//! The gradient coefficient `g` is defined so that the data-term partial
//! with respect to `u[i,r]` is `g * s[j,r] * t[k,r]` (and symmetrically for
//! the other two factors). Equivalently, `g` is the derivative of the entry
//! loss with respect to `yhat`.

use crate::error::{LftError, Result};
use crate::model::FactorModel;
use crate::tensor::{median_value, SparseTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    L2,
    Tdw { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Tikhonov coefficient.
    pub lambda: f64,
}

impl LossSpec {
    pub fn l2(lambda: f64) -> Result<Self> {
        Self::new(LossKind::L2, lambda)
    }

    pub fn tdw(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(LossKind::Tdw { tau }, lambda)
    }

    pub fn new(kind: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(LftError::InvalidConfig(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        if let LossKind::Tdw { tau } = kind {
            if !tau.is_finite() {
                return Err(LftError::InvalidConfig(format!("tau must be finite, got {tau}")));
            }
        }
        Ok(Self { kind, lambda })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LossKind::L2 => "l2",
            LossKind::Tdw { .. } => "tdw",
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self.kind {
            LossKind::Tdw { tau } => Some(tau),
            LossKind::L2 => None,
        }
    }
}

/// Which piece of the TDW loss an entry falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdwBranch {
    Squared,
    Absolute,
}

pub fn tdw_branch(y: f64, yhat: f64, tau: f64) -> TdwBranch {
    if (y - yhat).abs() >= (y - tau).abs() {
        TdwBranch::Squared
    } else {
        TdwBranch::Absolute
    }
}

/// Both TDW pieces evaluated at the same point, `(d^2, |y - tau| * |d|)`.
pub fn tdw_branch_values(y: f64, yhat: f64, tau: f64) -> (f64, f64) {
    let d = y - yhat;
    (d * d, (y - tau).abs() * d.abs())
}

/// `sign` with `sign(0) = 0`.
#[inline]
fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Data-term loss for one observation; regularization is not included.
#[inline]
pub fn entry_loss(spec: &LossSpec, y: f64, yhat: f64) -> f64 {
    let d = y - yhat;
    match spec.kind {
        LossKind::L2 => 0.5 * d * d,
        LossKind::Tdw { tau } => {
            let w = (y - tau).abs();
            if d.abs() >= w {
                d * d
            } else {
                w * d.abs()
            }
        }
    }
}

/// Gradient coefficient `g = d(entry_loss)/d(yhat)`.
#[inline]
pub fn entry_grad_coeff(spec: &LossSpec, y: f64, yhat: f64) -> f64 {
    let d = y - yhat;
    match spec.kind {
        LossKind::L2 => -d,
        LossKind::Tdw { tau } => {
            let w = (y - tau).abs();
            if d.abs() >= w {
                -2.0 * d
            } else {
                -w * signum0(d)
            }
        }
    }
}

/// Threshold for TDW: median of the given (training) values.
pub fn compute_tau(train: &SparseTensor) -> Result<f64> {
    if train.is_empty() {
        return Err(LftError::Empty("cannot compute tau from an empty training set"));
    }
    median_value(train.values())
}

/// Objective over all entries of `data`: summed data terms plus
/// `lambda / 2` times the squared norms of the three rows touched by each
/// observation. Rows are penalized once per observation that touches them.
pub fn total_loss(m: &FactorModel, data: &SparseTensor, spec: &LossSpec) -> Result<f64> {
    if m.dims() != data.dims() {
        return Err(LftError::DimensionMismatch {
            model: m.dims(),
            data: data.dims(),
        });
    }
    let sq = |row: &[f64]| row.iter().map(|v| v * v).sum::<f64>();
    let mut fit = 0.0;
    let mut reg = 0.0;
    for (idx, y) in data.entries() {
        fit += entry_loss(spec, y, m.predict_unchecked(idx));
        if spec.lambda != 0.0 {
            reg += sq(m.u.row(idx.i)) + sq(m.s.row(idx.j)) + sq(m.t.row(idx.k));
        }
    }
    Ok(fit + 0.5 * spec.lambda * reg)
}
