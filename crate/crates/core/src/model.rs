//! Rank-R latent factor model: three row-major factor matrices whose
//! per-entry triple products reconstruct the tensor.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LftError, Result};
use crate::exec::Exec;
use crate::tensor::{Dims, EntryIndex};

pub const DEFAULT_INIT_SCALE: f64 = 0.05;
pub const DEFAULT_INIT_SEED: u64 = 42;

/// Dense `rows x rank` matrix, one contiguous row per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    rank: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn from_vec(rows: usize, rank: usize, data: Vec<f64>) -> Result<Self> {
        if rank == 0 {
            return Err(LftError::ZeroRank);
        }
        if data.len() != rows * rank {
            return Err(LftError::InvalidConfig(format!(
                "factor matrix expects {} values ({rows}x{rank}), got {}",
                rows * rank,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LftError::InvalidConfig("non-finite factor value".into()));
        }
        Ok(Self { rows, rank, data })
    }

    pub fn filled(rows: usize, rank: usize, value: f64) -> Self {
        Self {
            rows,
            rank,
            data: vec![value; rows * rank],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.rank..(r + 1) * self.rank]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.rank..(r + 1) * self.rank]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Factor matrices `U` (sensors), `S` (intervals) and `T` (days).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub(crate) u: FactorMatrix,
    pub(crate) s: FactorMatrix,
    pub(crate) t: FactorMatrix,
}

impl FactorModel {
    pub fn from_factors(u: FactorMatrix, s: FactorMatrix, t: FactorMatrix) -> Result<Self> {
        if u.rank != s.rank || s.rank != t.rank {
            return Err(LftError::InvalidConfig(format!(
                "factor ranks differ: {}, {}, {}",
                u.rank, s.rank, t.rank
            )));
        }
        let dims = Dims::new(u.rows, s.rows, t.rows);
        if !dims.is_valid() {
            return Err(LftError::InvalidDims(dims));
        }
        Ok(Self { u, s, t })
    }

    /// Every element uniform on `(0, scale)`, drawn from a generator seeded
    /// by `seed`. Same arguments give a bitwise-identical model.
    pub fn init(dims: impl Into<Dims>, rank: usize, seed: u64, scale: f64) -> Result<Self> {
        let dims = dims.into();
        if rank == 0 {
            return Err(LftError::ZeroRank);
        }
        if !dims.is_valid() {
            return Err(LftError::InvalidDims(dims));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LftError::InvalidConfig(format!(
                "init scale must be positive, got {scale}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize| {
            let data = (0..rows * rank).map(|_| rng.sample::<f64, _>(Open01) * scale).collect();
            FactorMatrix { rows, rank, data }
        };
        let u = draw(dims.i);
        let s = draw(dims.j);
        let t = draw(dims.k);
        Ok(Self { u, s, t })
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.u.rows, self.s.rows, self.t.rows)
    }

    pub fn rank(&self) -> usize {
        self.u.rank
    }

    pub fn u(&self) -> &FactorMatrix {
        &self.u
    }

    pub fn s(&self) -> &FactorMatrix {
        &self.s
    }

    pub fn t(&self) -> &FactorMatrix {
        &self.t
    }

    pub fn factors_mut(&mut self) -> (&mut FactorMatrix, &mut FactorMatrix, &mut FactorMatrix) {
        (&mut self.u, &mut self.s, &mut self.t)
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.s, &self.t]
            .iter()
            .all(|m| m.data.iter().all(|v| v.is_finite()))
    }

    /// `sum_r u[i,r] * s[j,r] * t[k,r]` without a bounds check on the index.
    #[inline]
    pub(crate) fn predict_unchecked(&self, idx: EntryIndex) -> f64 {
        triple_dot(self.u.row(idx.i), self.s.row(idx.j), self.t.row(idx.k))
    }

    pub fn predict(&self, idx: EntryIndex) -> Result<f64> {
        let dims = self.dims();
        if !dims.contains(idx) {
            return Err(LftError::IndexOutOfRange { index: idx, dims });
        }
        Ok(self.predict_unchecked(idx))
    }

    pub fn predict_many(&self, idxs: &[EntryIndex]) -> Result<Vec<f64>> {
        self.predict_many_with(idxs, Exec::default())
    }

    pub fn predict_many_with(&self, idxs: &[EntryIndex], exec: Exec) -> Result<Vec<f64>> {
        let dims = self.dims();
        if let Some(&index) = idxs.iter().find(|idx| !dims.contains(**idx)) {
            return Err(LftError::IndexOutOfRange { index, dims });
        }
        Ok(exec.map(idxs, |&idx| self.predict_unchecked(idx)))
    }
}

#[inline]
pub(crate) fn triple_dot(u: &[f64], s: &[f64], t: &[f64]) -> f64 {
    u.iter().zip(s).zip(t).map(|((a, b), c)| a * b * c).sum()
}

pub fn init_model(dims: impl Into<Dims>, rank: usize, seed: u64, scale: f64) -> Result<FactorModel> {
    FactorModel::init(dims, rank, seed, scale)
}

pub fn predict_entry(m: &FactorModel, idx: EntryIndex) -> Result<f64> {
    m.predict(idx)
}

pub fn predict_many(m: &FactorModel, idxs: &[EntryIndex]) -> Result<Vec<f64>> {
    m.predict_many(idxs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(u: Vec<f64>, s: Vec<f64>, t: Vec<f64>, rank: usize) -> FactorModel {
        let rows = |v: &Vec<f64>| v.len() / rank;
        FactorModel::from_factors(
            FactorMatrix::from_vec(rows(&u), rank, u).unwrap(),
            FactorMatrix::from_vec(rows(&s), rank, s).unwrap(),
            FactorMatrix::from_vec(rows(&t), rank, t).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn init_is_deterministic_and_in_range() {
        let a = init_model((5, 4, 3), 4, 7, 0.05).unwrap();
        let b = init_model((5, 4, 3), 4, 7, 0.05).unwrap();
        assert_eq!(a, b);
        for m in [a.u(), a.s(), a.t()] {
            assert!(m.as_slice().iter().all(|&v| v > 0.0 && v < 0.05));
        }
        let c = init_model((5, 4, 3), 4, 8, 0.05).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_guangzhou_shapes() {
        let m = init_model((214, 144, 61), 20, DEFAULT_INIT_SEED, DEFAULT_INIT_SCALE).unwrap();
        assert_eq!((m.u().rows(), m.u().rank()), (214, 20));
        assert_eq!((m.s().rows(), m.s().rank()), (144, 20));
        assert_eq!((m.t().rows(), m.t().rank()), (61, 20));
    }

    #[test]
    fn init_rejects_degenerate() {
        assert_eq!(init_model((2, 2, 2), 0, 1, 0.05), Err(LftError::ZeroRank));
        assert!(matches!(
            init_model((2, 0, 2), 3, 1, 0.05),
            Err(LftError::InvalidDims(_))
        ));
    }

    #[test]
    fn predict_examples() {
        let ones = FactorModel::from_factors(
            FactorMatrix::filled(2, 5, 1.0),
            FactorMatrix::filled(2, 5, 1.0),
            FactorMatrix::filled(2, 5, 1.0),
        )
        .unwrap();
        assert_eq!(predict_entry(&ones, EntryIndex::new(1, 0, 1)).unwrap(), 5.0);

        let m = model(vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], 2);
        assert_eq!(predict_entry(&m, EntryIndex::new(0, 0, 0)).unwrap(), 63.0);

        let mut z = init_model((3, 3, 3), 2, 1, 0.5).unwrap();
        z.u.row_mut(1).fill(0.0);
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(z.predict(EntryIndex::new(1, j, k)).unwrap(), 0.0);
            }
        }
        assert!(z.predict(EntryIndex::new(3, 0, 0)).is_err());
    }

    #[test]
    fn predict_many_matches_single() {
        let m = init_model((4, 3, 2), 3, 9, 1.0).unwrap();
        assert!(predict_many(&m, &[]).unwrap().is_empty());
        let idxs = [
            EntryIndex::new(0, 0, 0),
            EntryIndex::new(3, 2, 1),
            EntryIndex::new(1, 1, 0),
        ];
        let many = predict_many(&m, &idxs).unwrap();
        for (idx, v) in idxs.iter().zip(&many) {
            assert_eq!(*v, predict_entry(&m, *idx).unwrap());
        }
        assert!(predict_many(&m, &[EntryIndex::new(0, 3, 0)]).is_err());
    }
}
