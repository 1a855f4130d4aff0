//! Coordinate-list storage for a partially observed third-order tensor.
//!
//! Only the known entries are stored. The missing set is the complement of
//! the stored indices and is never materialized; [`SparseTensor::missing_indices`]
//! walks it lazily.

use std::collections::HashSet;
use std::fmt;

use crate::error::{LftError, Result};

/// Mode sizes `(sensors, intervals, days)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Dims {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    /// Number of cells in the full tensor.
    pub fn cells(&self) -> u128 {
        self.i as u128 * self.j as u128 * self.k as u128
    }

    pub fn is_valid(&self) -> bool {
        self.i >= 1 && self.j >= 1 && self.k >= 1
    }

    pub fn contains(&self, idx: EntryIndex) -> bool {
        idx.i < self.i && idx.j < self.j && idx.k < self.k
    }

    fn linear(&self, idx: EntryIndex) -> u128 {
        (idx.i as u128 * self.j as u128 + idx.j as u128) * self.k as u128 + idx.k as u128
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

impl From<(usize, usize, usize)> for Dims {
    fn from((i, j, k): (usize, usize, usize)) -> Self {
        Self { i, j, k }
    }
}

/// Zero-based `(sensor, interval, day)` coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl EntryIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }
}

impl fmt::Display for EntryIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

impl From<(usize, usize, usize)> for EntryIndex {
    fn from((i, j, k): (usize, usize, usize)) -> Self {
        Self { i, j, k }
    }
}

/// Immutable COO tensor. Entries keep their insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    dims: Dims,
    indices: Vec<EntryIndex>,
    values: Vec<f64>,
}

impl SparseTensor {
    /// Validates and builds a tensor from `(index, value)` pairs.
    ///
    /// Rejects out-of-range indices, duplicates and non-finite values.
    pub fn new<I>(dims: Dims, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EntryIndex, f64)>,
    {
        if !dims.is_valid() {
            return Err(LftError::InvalidDims(dims));
        }
        let iter = entries.into_iter();
        let hint = iter.size_hint().0;
        let mut indices = Vec::with_capacity(hint);
        let mut values = Vec::with_capacity(hint);
        let mut seen = HashSet::with_capacity(hint);
        for (index, value) in iter {
            if !dims.contains(index) {
                return Err(LftError::IndexOutOfRange { index, dims });
            }
            if !value.is_finite() {
                return Err(LftError::NonFiniteValue { index, value });
            }
            if !seen.insert(dims.linear(index)) {
                return Err(LftError::DuplicateIndex(index));
            }
            indices.push(index);
            values.push(value);
        }
        // Unreachable once duplicates are rejected, kept as an explicit invariant.
        if indices.len() as u128 > dims.cells() {
            return Err(LftError::TooManyEntries {
                count: indices.len(),
                capacity: dims.cells(),
            });
        }
        Ok(Self { dims, indices, values })
    }

    /// Empty tensor with the given shape.
    pub fn empty(dims: Dims) -> Result<Self> {
        Self::new(dims, std::iter::empty())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[EntryIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = (EntryIndex, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Fraction of observed cells.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.dims.cells() as f64
    }

    /// Tensor made of the entries at the given positions, in that order.
    ///
    /// Positions must be distinct and in range; no revalidation is done
    /// because every entry already satisfies the invariants.
    pub(crate) fn select(&self, positions: &[usize]) -> Self {
        Self {
            dims: self.dims,
            indices: positions.iter().map(|&p| self.indices[p]).collect(),
            values: positions.iter().map(|&p| self.values[p]).collect(),
        }
    }

    /// Same indices with replaced values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(values.len(), self.values.len());
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(LftError::NonFiniteValue {
                index: self.indices[pos],
                value: values[pos],
            });
        }
        Ok(Self {
            dims: self.dims,
            indices: self.indices.clone(),
            values,
        })
    }

    /// Lazily enumerates every unobserved index in row-major order.
    pub fn missing_indices(&self) -> impl Iterator<Item = EntryIndex> + '_ {
        let observed: HashSet<EntryIndex> = self.indices.iter().copied().collect();
        let Dims { i, j, k } = self.dims;
        (0..i)
            .flat_map(move |a| (0..j).flat_map(move |b| (0..k).map(move |c| EntryIndex::new(a, b, c))))
            .filter(move |idx| !observed.contains(idx))
    }

    /// Number of unobserved cells.
    pub fn missing_count(&self) -> u128 {
        self.dims.cells() - self.len() as u128
    }
}

/// Builds a validated tensor; see [`SparseTensor::new`].
pub fn build_tensor<I>(dims: impl Into<Dims>, entries: I) -> Result<SparseTensor>
where
    I: IntoIterator<Item = (EntryIndex, f64)>,
{
    SparseTensor::new(dims.into(), entries)
}

pub fn density(t: &SparseTensor) -> f64 {
    t.density()
}

/// Median of a nonempty sample. Even counts average the two middle order
/// statistics.
pub fn median_value(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(LftError::Empty("median of an empty sample"));
    }
    let mut buf = values.to_vec();
    let n = buf.len();
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        return Ok(upper);
    }
    let lower = lower.iter().copied().max_by(f64::total_cmp).expect("n >= 2");
    Ok(lower + (upper - lower) / 2.0)
}
