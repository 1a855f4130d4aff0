use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LftError, Result};
use crate::tensor::SparseTensor;

/// Train / validation / test proportions used by default.
pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.7, 0.1, 0.2);

/// Disjoint partitions of a tensor's observed entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSets {
    pub train: SparseTensor,
    pub val: SparseTensor,
    pub test: SparseTensor,
}

impl SplitSets {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Shuffles the entries with a seeded generator and cuts them into
/// `floor(N * r_train)` training, `floor(N * r_val)` validation and the
/// remaining test entries. Each subset keeps the source insertion order.
pub fn split_dataset(t: &SparseTensor, ratios: (f64, f64, f64), seed: u64) -> Result<SplitSets> {
    let (rt, rv, rs) = ratios;
    if !(rt > 0.0 && rv > 0.0 && rs > 0.0) || ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(LftError::InvalidConfig(format!(
            "split ratios must be positive and sum to 1, got {rt}:{rv}:{rs}"
        )));
    }
    let n = t.len();
    // The epsilon keeps exact products such as 70 * 0.1 from flooring down.
    let n_train = ((n as f64 * rt) + 1e-9).floor() as usize;
    let n_val = ((n as f64 * rv) + 1e-9).floor() as usize;
    let n_train = n_train.min(n);
    let n_val = n_val.min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = order.split_at_mut(n_train);
    let (val, test) = rest.split_at_mut(n_val);
    for (name, part) in [("training", &*train), ("validation", &*val), ("test", &*test)] {
        if part.is_empty() {
            return Err(LftError::EmptySplit(name));
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitSets {
        train: t.select(train),
        val: t.select(val),
        test: t.select(test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{build_tensor, EntryIndex};

    fn line(n: usize) -> SparseTensor {
        build_tensor((n, 1, 1), (0..n).map(|p| (EntryIndex::new(p, 0, 0), p as f64))).unwrap()
    }

    #[test]
    fn seven_one_two() {
        let s = split_dataset(&line(10), DEFAULT_SPLIT, 3).unwrap();
        assert_eq!(s.sizes(), (7, 1, 2));
    }

    #[test]
    fn deterministic() {
        let t = line(57);
        assert_eq!(
            split_dataset(&t, DEFAULT_SPLIT, 11).unwrap(),
            split_dataset(&t, DEFAULT_SPLIT, 11).unwrap()
        );
        assert_ne!(
            split_dataset(&t, DEFAULT_SPLIT, 11).unwrap(),
            split_dataset(&t, DEFAULT_SPLIT, 12).unwrap()
        );
    }

    #[test]
    fn rejects_bad_ratios_and_empty_parts() {
        assert!(split_dataset(&line(10), (0.7, 0.2, 0.2), 0).is_err());
        assert!(split_dataset(&line(10), (0.9, 0.1, 0.0), 0).is_err());
        assert_eq!(
            split_dataset(&line(5), DEFAULT_SPLIT, 0),
            Err(LftError::EmptySplit("validation"))
        );
    }
}
