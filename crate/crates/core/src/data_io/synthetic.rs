//! Synthetic low-rank tensors with known ground truth, and controlled
//! outlier corruption.

use rand::distr::{Distribution, Uniform};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{LftError, Result};
use crate::model::{FactorMatrix, FactorModel};
use crate::tensor::{Dims, EntryIndex, SparseTensor};

/// Draws factors uniform on `[0, 1)`, observes `ceil(density * I * J * K)`
/// distinct random cells, and sets each value to the ground-truth prediction
/// plus Gaussian noise of standard deviation `noise_sigma`.
///
/// Returns the observed tensor and the generating model.
pub fn generate_synthetic(
    dims: impl Into<Dims>,
    rank: usize,
    density: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(SparseTensor, FactorModel)> {
    let dims = dims.into();
    if !dims.is_valid() {
        return Err(LftError::InvalidDims(dims));
    }
    if rank == 0 {
        return Err(LftError::ZeroRank);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(LftError::InvalidConfig(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(LftError::InvalidConfig(format!(
            "noise sigma must be nonnegative, got {noise_sigma}"
        )));
    }
    let cells = dims.cells();
    let expected = density * cells as f64;
    if expected < 1.0 {
        return Err(LftError::InvalidConfig(format!(
            "density {density} observes fewer than one of {cells} cells"
        )));
    }
    let cells = usize::try_from(cells)
        .map_err(|_| LftError::InvalidConfig(format!("tensor with {cells} cells is too large")))?;
    let count = ((expected - 1e-9).ceil() as usize).min(cells);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize| {
        let data = (0..rows * rank).map(|_| rng.random::<f64>()).collect();
        FactorMatrix::from_vec(rows, rank, data)
    };
    let truth = FactorModel::from_factors(draw(dims.i)?, draw(dims.j)?, draw(dims.k)?)?;

    let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("sigma is finite and positive"));
    let (jk, k) = (dims.j * dims.k, dims.k);
    let entries: Vec<(EntryIndex, f64)> = sample(&mut rng, cells, count)
        .into_iter()
        .map(|lin| EntryIndex::new(lin / jk, (lin % jk) / k, lin % k))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|idx| {
            let clean = truth.predict_unchecked(idx);
            let y = match &noise {
                Some(n) => clean + n.sample(&mut rng),
                None => clean,
            };
            (idx, y)
        })
        .collect();
    Ok((SparseTensor::new(dims, entries)?, truth))
}

/// Corruption plan: a `fraction` of entries is shifted by
/// `magnitude` standard deviations of the data, with random sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierPlan {
    pub fraction: f64,
    pub magnitude: f64,
    pub seed: u64,
}

impl OutlierPlan {
    pub fn new(fraction: f64, magnitude: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(LftError::InvalidConfig(format!(
                "outlier fraction must be in [0, 1], got {fraction}"
            )));
        }
        if !(magnitude > 0.0 && magnitude.is_finite()) {
            return Err(LftError::InvalidConfig(format!(
                "outlier magnitude must be positive, got {magnitude}"
            )));
        }
        Ok(Self {
            fraction,
            magnitude,
            seed,
        })
    }
}

/// Population standard deviation of the observed values (0 when empty).
pub fn value_std(t: &SparseTensor) -> f64 {
    let n = t.len();
    if n == 0 {
        return 0.0;
    }
    let mean = t.values().iter().sum::<f64>() / n as f64;
    (t.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
}

/// Shifts `floor(fraction * N)` randomly chosen entries by
/// `+-magnitude * sigma`. Returns the corrupted tensor and the corrupted
/// indices in entry order.
pub fn inject_outliers(t: &SparseTensor, plan: &OutlierPlan) -> Result<(SparseTensor, Vec<EntryIndex>)> {
    let plan = OutlierPlan::new(plan.fraction, plan.magnitude, plan.seed)?;
    let n = t.len();
    let count = ((n as f64 * plan.fraction) + 1e-9).floor() as usize;
    let count = count.min(n);
    let shift = plan.magnitude * value_std(t);

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut positions = sample(&mut rng, n, count).into_vec();
    positions.sort_unstable();
    let coin = Uniform::new(0u8, 2).expect("valid range");
    let mut values = t.values().to_vec();
    for &p in &positions {
        let sign = if coin.sample(&mut rng) == 0 { -1.0 } else { 1.0 };
        values[p] += sign * shift;
    }
    let corrupted = t.with_values(values)?;
    let idxs = positions.iter().map(|&p| t.indices()[p]).collect();
    Ok((corrupted, idxs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_values_equal_truth() {
        let (t, truth) = generate_synthetic((6, 5, 4), 2, 0.5, 0.0, 1).unwrap();
        assert_eq!(t.len(), 60);
        for (idx, y) in t.entries() {
            assert_eq!(y, truth.predict(idx).unwrap());
        }
    }

    #[test]
    fn counts() {
        let (full, _) = generate_synthetic((3, 4, 5), 2, 1.0, 0.1, 2).unwrap();
        assert_eq!(full.len(), 60);
        assert_eq!(full.missing_count(), 0);
        let (t, m) = generate_synthetic((20, 20, 10), 3, 0.3, 0.0, 3).unwrap();
        assert_eq!(t.len(), 1200);
        assert_eq!(m.rank(), 3);
        assert!(generate_synthetic((2, 2, 2), 1, 0.1, 0.0, 0).is_err());
        assert!(generate_synthetic((2, 2, 2), 1, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic((5, 5, 5), 2, 0.4, 0.2, 9).unwrap();
        let b = generate_synthetic((5, 5, 5), 2, 0.4, 0.2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outlier_counts_and_shifts() {
        let (t, _) = generate_synthetic((20, 20, 10), 3, 0.3, 0.0, 4).unwrap();
        let (same, none) = inject_outliers(&t, &OutlierPlan::new(0.0, 10.0, 1).unwrap()).unwrap();
        assert_eq!(same, t);
        assert!(none.is_empty());

        let (_, some) = inject_outliers(&t, &OutlierPlan::new(0.05, 10.0, 1).unwrap()).unwrap();
        assert_eq!(some.len(), 60);

        let sigma = value_std(&t);
        let (all, idxs) = inject_outliers(&t, &OutlierPlan::new(1.0, 3.0, 1).unwrap()).unwrap();
        assert_eq!(idxs.len(), t.len());
        for (a, b) in all.values().iter().zip(t.values()) {
            assert!(((a - b).abs() - 3.0 * sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_validation() {
        assert!(OutlierPlan::new(1.5, 1.0, 0).is_err());
        assert!(OutlierPlan::new(0.5, 0.0, 0).is_err());
    }
}
