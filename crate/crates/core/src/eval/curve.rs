use std::fmt::Write;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::ensemble::{correct_by_prefix, select_k_by_training_accuracy, WeightedRuleSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "K")]
    pub k: usize,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Accuracy as a function of how many of the heaviest rules are kept.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PruneCurve {
    pub points: Vec<CurvePoint>,
    pub threshold: f64,
    /// Smallest `K` reaching `threshold` times the full training accuracy.
    pub selected_k: usize,
}

impl PruneCurve {
    /// Tab-separated `K\ttrain_acc\ttest_acc`, one line per `K`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("K\ttrain_acc\ttest_acc\n");
        for p in &self.points {
            writeln!(out, "{}\t{:.6}\t{:.6}", p.k, p.train_acc, p.test_acc).unwrap();
        }
        out
    }

    pub fn selected(&self) -> &CurvePoint {
        &self.points[self.selected_k - 1]
    }
}

pub fn prune_curve(
    w: &WeightedRuleSet,
    train: &Dataset,
    test: &Dataset,
    threshold: f64,
) -> Result<PruneCurve> {
    if w.is_empty() {
        return Err(Error::Empty("weighted rule set"));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Empty("evaluation data"));
    }
    let tr = correct_by_prefix(w, train)?;
    let te = correct_by_prefix(w, test)?;
    let points = tr
        .iter()
        .zip(&te)
        .enumerate()
        .map(|(i, (&a, &b))| CurvePoint {
            k: i + 1,
            train_acc: a as f64 / train.len() as f64,
            test_acc: b as f64 / test.len() as f64,
        })
        .collect();
    Ok(PruneCurve {
        points,
        threshold,
        selected_k: select_k_by_training_accuracy(w, train, threshold)?,
    })
}
