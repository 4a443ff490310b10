//! Metrics, the repeated train/test protocol and its reports.

mod curve;
mod experiment;
mod metrics;

use crate::dataset::Dataset;
use crate::error::{check_len, Result};
use crate::rule::RuleSet;

pub use curve::{prune_curve, CurvePoint, PruneCurve};
pub use experiment::{
    best_of, format_table, run_experiment, train, Algorithm, ExperimentConfig, Report, RunResult,
    Summary, Trained,
};
pub use metrics::{accuracy, f1, Confusion};

/// Whether `rules` labels every instance of `sample` correctly, i.e. lies
/// in the version space of the sample.
pub fn version_space_oracle(rules: &RuleSet, sample: &Dataset) -> Result<bool> {
    if let Some(r) = rules.rules().first() {
        check_len(sample.width(), r.len())?;
    }
    Ok(sample
        .rows
        .iter()
        .zip(&sample.labels)
        .all(|(x, y)| rules.covers_unchecked(x) == y.is_positive()))
}
