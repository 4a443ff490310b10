//! Equal-frequency and equal-width binning of numeric columns.
//!
//! Quantile edges are linearly interpolated order statistics; consecutive
//! edges closer than `1e-8` are merged, and a value is assigned to the
//! number of inner edges that are `<= value`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinStrategy {
    #[default]
    Quantile,
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binning<T> {
    /// Bin index of every input value.
    pub codes: Vec<u32>,
    /// Monotone edges; bin `i` spans `edges[i]..edges[i + 1]`.
    pub edges: Vec<T>,
}

impl<T: Real> Binning<T> {
    pub fn bins(&self) -> usize {
        self.edges.len().saturating_sub(1).max(1)
    }
}

pub fn discretize<T: Real>(column: &[T], n_bins: usize, strategy: BinStrategy) -> Result<Binning<T>> {
    let edges = fit_edges(column, n_bins, strategy)?;
    let codes = column.iter().map(|&v| assign_bin(v, &edges)).collect();
    Ok(Binning { codes, edges })
}

pub fn fit_edges<T: Real>(column: &[T], n_bins: usize, strategy: BinStrategy) -> Result<Vec<T>> {
    if column.is_empty() {
        return Err(Error::Empty("column to discretize"));
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {n_bins}"
        )));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in numeric column".into()));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        log::warn!("constant column; using a single bin");
        return Ok(vec![lo, hi]);
    }
    let nb = T::from_usize(n_bins).unwrap();
    let raw: Vec<T> = match strategy {
        BinStrategy::Uniform => (0..=n_bins)
            .map(|i| lo + (hi - lo) * T::from_usize(i).unwrap() / nb)
            .collect(),
        BinStrategy::Quantile => {
            let last = T::from_usize(sorted.len() - 1).unwrap();
            (0..=n_bins)
                .map(|i| {
                    let pos = last * T::from_usize(i).unwrap() / nb;
                    let below = pos.floor();
                    let k = below.to_usize().unwrap();
                    let frac = pos - below;
                    if k + 1 < sorted.len() {
                        sorted[k] + (sorted[k + 1] - sorted[k]) * frac
                    } else {
                        sorted[k]
                    }
                })
                .collect()
        }
    };
    let tol = T::from_f64(1e-8).unwrap();
    let mut edges: Vec<T> = Vec::with_capacity(raw.len());
    for e in raw {
        match edges.last() {
            Some(&prev) if e - prev <= tol => {}
            _ => edges.push(e),
        }
    }
    if edges.len() - 1 < n_bins {
        log::warn!(
            "{} of {n_bins} bins collapsed by tied values",
            n_bins + 1 - edges.len()
        );
    }
    Ok(edges)
}

/// Bin index of `v`: the number of inner edges `<= v`.
pub fn assign_bin<T: Real>(v: T, edges: &[T]) -> u32 {
    if edges.len() <= 2 {
        return 0;
    }
    let inner = &edges[1..edges.len() - 1];
    inner.partition_point(|&e| e <= v) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_identity_binning() {
        let col: Vec<f64> = (0..10).map(f64::from).collect();
        let b = discretize(&col, 10, BinStrategy::Uniform).unwrap();
        assert_eq!(b.codes, (0..10).collect::<Vec<u32>>());
        let colf: Vec<f32> = (0..10).map(|v| v as f32).collect();
        let b = discretize(&colf, 10, BinStrategy::Uniform).unwrap();
        assert_eq!(b.codes, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn quantile_equal_frequency() {
        let b = discretize(&[1.0f64, 1.0, 1.0, 2.0, 2.0, 2.0], 2, BinStrategy::Quantile).unwrap();
        assert_eq!(b.codes, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(b.edges, vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn constant_and_empty_columns() {
        let b = discretize(&[3.0f64; 5], 10, BinStrategy::Quantile).unwrap();
        assert_eq!(b.codes, vec![0; 5]);
        assert_eq!(b.bins(), 1);
        assert!(discretize::<f64>(&[], 10, BinStrategy::Quantile).is_err());
        assert!(discretize(&[1.0f64, 2.0], 1, BinStrategy::Quantile).is_err());
    }

    #[test]
    fn tied_values_collapse_bins() {
        let b = discretize(&[0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 4, BinStrategy::Quantile).unwrap();
        assert!(b.edges.len() < 5);
        assert!(b.edges.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn binning_is_monotone(
            col in prop::collection::vec(-1e3f64..1e3, 2..80),
            bins in 2usize..12,
            uniform in any::<bool>(),
        ) {
            let strategy = if uniform { BinStrategy::Uniform } else { BinStrategy::Quantile };
            let b = discretize(&col, bins, strategy).unwrap();
            prop_assert!(b.edges.windows(2).all(|w| w[0] <= w[1]));
            for i in 0..col.len() {
                prop_assert!((b.codes[i] as usize) < bins);
                for j in 0..col.len() {
                    if col[i] <= col[j] {
                        prop_assert!(b.codes[i] <= b.codes[j]);
                    }
                }
            }
        }
    }
}
