use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction,
            seed,
        }
    }

    /// Training-part size for `n` instances: `floor(fraction * n)`.
    pub fn train_size(&self, n: usize) -> Result<usize> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        let k = (self.train_fraction * n as f64).floor() as usize;
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!(
                "train fraction {} leaves an empty part for {n} instances",
                self.train_fraction
            )));
        }
        Ok(k)
    }
}

/// Shuffles `0..n` with `spec.seed` and cuts it into train and test
/// index lists, each in shuffled order.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = spec.train_size(n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = idx.split_off(k);
    Ok((idx, test))
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halves_and_is_deterministic() {
        let spec = SplitSpec::new(0.5, 7);
        let (a, b) = split_indices(10, &spec).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        assert!(a.iter().all(|i| !b.contains(i)));
        assert_eq!(split_indices(10, &spec).unwrap(), (a, b));
    }

    #[test]
    fn rejects_degenerate_fractions() {
        assert!(split_indices(1, &SplitSpec::new(0.5, 0)).is_err());
        assert!(split_indices(10, &SplitSpec::new(0.0, 0)).is_err());
        assert!(split_indices(10, &SplitSpec::new(1.0, 0)).is_err());
        assert!(split_indices(10, &SplitSpec::new(0.01, 0)).is_err());
    }

    proptest! {
        #[test]
        fn partitions_exactly(n in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let spec = SplitSpec::new(frac, seed);
            prop_assume!(spec.train_size(n).is_ok());
            let (a, b) = split_indices(n, &spec).unwrap();
            prop_assert_eq!(a.len() + b.len(), n);
            let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
