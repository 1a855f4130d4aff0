//! RMSE / MAE over an evaluation entry set. The sum and the divisor range
//! over the same set.

use crate::error::{LftError, Result};
use crate::exec::Exec;
use crate::model::FactorModel;
use crate::tensor::SparseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
}

fn residuals(m: &FactorModel, set: &SparseTensor, exec: Exec) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(LftError::Empty("evaluation set"));
    }
    if m.dims() != set.dims() {
        return Err(LftError::DimensionMismatch {
            model: m.dims(),
            data: set.dims(),
        });
    }
    let preds = m.predict_many_with(set.indices(), exec)?;
    Ok(set.values().iter().zip(preds).map(|(y, p)| y - p).collect())
}

/// Both metrics from one pass of predictions.
pub fn evaluate_with(m: &FactorModel, set: &SparseTensor, exec: Exec) -> Result<Metrics> {
    let res = residuals(m, set, exec)?;
    let n = res.len() as f64;
    let (sq, abs) = res.iter().fold((0.0, 0.0), |(sq, abs), r| (sq + r * r, abs + r.abs()));
    Ok(Metrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
    })
}

pub fn evaluate(m: &FactorModel, set: &SparseTensor) -> Result<Metrics> {
    evaluate_with(m, set, Exec::default())
}

pub fn rmse(m: &FactorModel, set: &SparseTensor) -> Result<f64> {
    evaluate(m, set).map(|e| e.rmse)
}

pub fn mae(m: &FactorModel, set: &SparseTensor) -> Result<f64> {
    evaluate(m, set).map(|e| e.mae)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FactorMatrix;
    use crate::tensor::{build_tensor, EntryIndex};

    /// Rank-1 model of ones: every prediction is exactly 1.
    fn unit_model(dims: (usize, usize, usize)) -> FactorModel {
        FactorModel::from_factors(
            FactorMatrix::filled(dims.0, 1, 1.0),
            FactorMatrix::filled(dims.1, 1, 1.0),
            FactorMatrix::filled(dims.2, 1, 1.0),
        )
        .unwrap()
    }

    fn set(values: &[f64]) -> SparseTensor {
        build_tensor(
            (values.len().max(1), 1, 1),
            values.iter().enumerate().map(|(p, &v)| (EntryIndex::new(p, 0, 0), v)),
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        let perfect = set(&[1.0, 1.0, 1.0]);
        let m = unit_model((3, 1, 1));
        assert_eq!(rmse(&m, &perfect).unwrap(), 0.0);
        assert_eq!(mae(&m, &perfect).unwrap(), 0.0);

        let one = set(&[4.0]);
        assert_eq!(rmse(&unit_model((1, 1, 1)), &one).unwrap(), 3.0);

        let two = set(&[4.0, 5.0]);
        let m2 = unit_model((2, 1, 1));
        assert!((rmse(&m2, &two).unwrap() - 3.535_533_905_932_737_6).abs() < 1e-12);
        assert_eq!(mae(&m2, &two).unwrap(), 3.5);

        let constant = set(&[3.5, -1.5, 3.5, -1.5]);
        let m4 = unit_model((4, 1, 1));
        assert_eq!(mae(&m4, &constant).unwrap(), 2.5);
        assert_eq!(rmse(&m4, &constant).unwrap(), 2.5);
    }

    #[test]
    fn empty_set_is_error() {
        let empty = SparseTensor::empty((1, 1, 1).into()).unwrap();
        assert!(rmse(&unit_model((1, 1, 1)), &empty).is_err());
        assert!(mae(&unit_model((1, 1, 1)), &empty).is_err());
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let m = crate::model::init_model((6, 5, 4), 3, 1, 1.0).unwrap();
        let t = build_tensor(
            (6, 5, 4),
            (0..120).map(|p| (EntryIndex::new(p / 20, (p / 4) % 5, p % 4), (p as f64).sqrt())),
        )
        .unwrap();
        assert_eq!(
            evaluate_with(&m, &t, Exec::Sequential).unwrap(),
            evaluate_with(&m, &t, Exec::Parallel).unwrap()
        );
    }
}
