use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::dataset::{split_indices, BinFit, Dataset, Discretize, Encoding, Label, Manifest, SplitSpec};
use crate::ensemble::{
    aggregate_bp, derive_seed, fit_ensemble, prune_top_k, select_k_by_training_accuracy,
    VoteEnsemble, WeightedRuleSet,
};
use crate::error::{Error, Result};
use crate::eval::metrics::Confusion;
use crate::findrs::{self, LearnerState};
use crate::model::Model;
use crate::num::mean_std;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// A single fit followed by pruning.
    Findrs,
    /// Majority vote over shuffled fits.
    Bo,
    /// Weighted pool of the rules of shuffled fits.
    Bp,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Findrs => "findrs",
            Algorithm::Bo => "bo",
            Algorithm::Bp => "bp",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "findrs" => Ok(Algorithm::Findrs),
            "bo" => Ok(Algorithm::Bo),
            "bp" => Ok(Algorithm::Bp),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: Manifest,
    pub algorithm: Algorithm,
    pub tau: usize,
    pub ensemble_size: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub encoding: Encoding,
    /// Fraction of full training accuracy the selected `K` must reach.
    pub threshold: f64,
    /// Record per-run wall-clock time. Off by default so that reports are
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    /// Defaults taken from the manifest where it sets them: `tau` 0,
    /// 100 ensemble members, 10 repeats, half the data for training.
    pub fn new(manifest: Manifest, algorithm: Algorithm) -> Self {
        ExperimentConfig {
            algorithm,
            tau: manifest.tau.unwrap_or(0),
            ensemble_size: manifest.ensemble_size.unwrap_or(100),
            repeats: manifest.repeats.unwrap_or(10),
            train_fraction: 0.5,
            seed: 0,
            encoding: manifest.encoding,
            threshold: 0.99,
            timing: false,
            manifest,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of one training call.
#[derive(Clone, Debug)]
pub enum Trained {
    FindRs {
        state: LearnerState,
        unpruned: usize,
    },
    Bo(VoteEnsemble),
    Bp {
        ensemble: VoteEnsemble,
        /// All pooled rules active.
        weighted: WeightedRuleSet,
        /// `K` chosen on the training data; `None` when no rule was learned.
        selected_k: Option<usize>,
    },
}

/// Fits `algorithm` on `data`. Ensemble member `t` shuffles with
/// `derive_seed(seed, t)`.
pub fn train(
    algorithm: Algorithm,
    data: &Dataset,
    tau: usize,
    ensemble_size: usize,
    seed: u64,
    threshold: f64,
) -> Result<Trained> {
    let (p, n) = (data.positives(), data.negatives());
    Ok(match algorithm {
        Algorithm::Findrs => {
            let raw = findrs::fit(&p, &n, tau)?;
            let unpruned = raw.len();
            Trained::FindRs {
                state: findrs::prune(&raw),
                unpruned,
            }
        }
        Algorithm::Bo => Trained::Bo(fit_ensemble(&p, &n, ensemble_size, tau, seed)?),
        Algorithm::Bp => {
            let ensemble = fit_ensemble(&p, &n, ensemble_size, tau, seed)?;
            let weighted = aggregate_bp(&ensemble);
            let selected_k = if weighted.is_empty() {
                None
            } else {
                Some(select_k_by_training_accuracy(&weighted, data, threshold)?)
            };
            Trained::Bp {
                ensemble,
                weighted,
                selected_k,
            }
        }
    })
}

impl Trained {
    pub fn rules_before_prune(&self) -> usize {
        match self {
            Trained::FindRs { unpruned, .. } => *unpruned,
            Trained::Bo(e) | Trained::Bp { ensemble: e, .. } => e.unpruned_sizes.iter().sum(),
        }
    }

    pub fn rules_after_prune(&self) -> usize {
        match self {
            Trained::FindRs { state, .. } => state.len(),
            Trained::Bo(e) | Trained::Bp { ensemble: e, .. } => {
                e.hypotheses.iter().map(LearnerState::len).sum()
            }
        }
    }

    pub fn contradictions(&self) -> usize {
        match self {
            Trained::FindRs { state, .. } => state.contradictions(),
            Trained::Bo(e) | Trained::Bp { ensemble: e, .. } => {
                e.hypotheses.iter().map(LearnerState::contradictions).sum()
            }
        }
    }

    /// The weighted rule set cut to the selected `K`.
    pub fn pruned(&self) -> Option<WeightedRuleSet> {
        match self {
            Trained::Bp {
                weighted,
                selected_k: Some(k),
                ..
            } => Some(prune_top_k(weighted, *k).expect("selected K lies in range")),
            _ => None,
        }
    }

    pub fn predict(&self, x: &[crate::rule::Value]) -> Result<Label> {
        match self {
            Trained::FindRs { state, .. } => state.predict(x),
            Trained::Bo(e) => e.predict(x),
            Trained::Bp { weighted, .. } => weighted.predict(x),
        }
    }

    /// Serializable model; weighted rule sets keep the selected `K`.
    pub fn into_model(self, data: &Dataset, tau: usize) -> Model {
        let schema = data.schema.clone();
        let class = data.positive_class.clone();
        match self {
            Trained::FindRs { state, .. } => Model::findrs(schema, class, &state),
            Trained::Bo(e) => Model::bo(schema, class, tau, &e),
            Trained::Bp { .. } => {
                let w = self.pruned().unwrap_or_else(|| match &self {
                    Trained::Bp { weighted, .. } => weighted.clone(),
                    _ => unreachable!(),
                });
                Model::bp(schema, class, tau, w)
            }
        }
    }
}

fn confusion(predict: impl Fn(&[crate::rule::Value]) -> Result<Label>, data: &Dataset) -> Result<Confusion> {
    let pred = data.rows.iter().map(|x| predict(x)).collect::<Result<Vec<_>>>()?;
    Confusion::new(&pred, &data.labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub split_seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub train_accuracy: f64,
    pub train_f1: f64,
    /// Summed over ensemble members.
    pub rules_before_prune: usize,
    pub rules_after_prune: usize,
    pub contradictions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_rules: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let (mean, std) = mean_std(values);
        Summary { mean, std }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub encoding: Encoding,
    pub tau: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub accuracy: Summary,
    pub f1: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_accuracy: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_f1: Option<Summary>,
    pub runs: Vec<RunResult>,
}

fn optional_summary(runs: &[RunResult], get: impl Fn(&RunResult) -> Option<f64>) -> Option<Summary> {
    let v: Option<Vec<f64>> = runs.iter().map(get).collect();
    v.filter(|v| !v.is_empty()).map(|v| Summary::of(&v))
}

impl Report {
    fn new(cfg: &ExperimentConfig, runs: Vec<RunResult>) -> Result<Report> {
        let ensemble = cfg.algorithm != Algorithm::Findrs;
        let mut report = Report {
            dataset: cfg.manifest.name(),
            algorithm: cfg.algorithm,
            encoding: cfg.encoding,
            tau: cfg.tau,
            ensemble_size: ensemble.then_some(cfg.ensemble_size),
            repeats: cfg.repeats,
            train_fraction: cfg.train_fraction,
            seed: cfg.seed,
            threshold: (cfg.algorithm == Algorithm::Bp).then_some(cfg.threshold),
            accuracy: Summary { mean: 0.0, std: 0.0 },
            f1: Summary { mean: 0.0, std: 0.0 },
            pruned_accuracy: None,
            pruned_f1: None,
            runs,
        };
        report.summarize();
        report.check()?;
        Ok(report)
    }

    fn summarize(&mut self) {
        let acc: Vec<f64> = self.runs.iter().map(|r| r.accuracy).collect();
        let f1: Vec<f64> = self.runs.iter().map(|r| r.f1).collect();
        self.accuracy = Summary::of(&acc);
        self.f1 = Summary::of(&f1);
        self.pruned_accuracy = optional_summary(&self.runs, |r| r.pruned_accuracy);
        self.pruned_f1 = optional_summary(&self.runs, |r| r.pruned_f1);
    }

    /// Verifies that the summaries follow from the per-run lists.
    pub fn check(&self) -> Result<()> {
        if self.runs.len() != self.repeats {
            return Err(Error::Invariant(format!(
                "report has {} runs for {} repeats",
                self.runs.len(),
                self.repeats
            )));
        }
        let mut again = self.clone();
        again.summarize();
        if again.accuracy != self.accuracy
            || again.f1 != self.f1
            || again.pruned_accuracy != self.pruned_accuracy
            || again.pruned_f1 != self.pruned_f1
        {
            return Err(Error::Invariant("report summaries disagree with its runs".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn needs_per_run_binning(m: &Manifest) -> bool {
    m.bin_fit == BinFit::Train && !matches!(&m.discretize, Discretize::Keyword(k) if k == "none")
}

/// Repeated random splits: run `r` splits with seed `seed + r`, trains on
/// the training part and scores on the rest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let manifest = cfg.manifest.with_encoding(cfg.encoding);
    let table = manifest.load_raw()?;
    let shared = if needs_per_run_binning(&manifest) {
        None
    } else {
        Some(manifest.build(table.clone(), None)?)
    };
    let n = table.rows();
    let runs = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let start = cfg.timing.then(Instant::now);
            let split_seed = cfg.seed.wrapping_add(r as u64);
            let (train_idx, test_idx) = split_indices(n, &SplitSpec::new(cfg.train_fraction, split_seed))?;
            let built;
            let full = match &shared {
                Some(d) => d,
                None => {
                    built = manifest.build(table.clone(), Some(&train_idx))?;
                    &built
                }
            };
            let train_set = full.subset(&train_idx);
            let test_set = full.subset(&test_idx);
            let model = train(
                cfg.algorithm,
                &train_set,
                cfg.tau,
                cfg.ensemble_size,
                derive_seed(cfg.seed, r as u64),
                cfg.threshold,
            )?;
            let test = confusion(|x| model.predict(x), &test_set)?;
            let tr = confusion(|x| model.predict(x), &train_set)?;
            let mut result = RunResult {
                run: r,
                split_seed,
                train_size: train_set.len(),
                test_size: test_set.len(),
                accuracy: test.accuracy(),
                f1: test.f1(),
                train_accuracy: tr.accuracy(),
                train_f1: tr.f1(),
                rules_before_prune: model.rules_before_prune(),
                rules_after_prune: model.rules_after_prune(),
                contradictions: model.contradictions(),
                distinct_rules: None,
                selected_k: None,
                gamma_k: None,
                pruned_accuracy: None,
                pruned_f1: None,
                wall_clock_seconds: None,
            };
            if let Trained::Bp { weighted, .. } = &model {
                result.distinct_rules = Some(weighted.len());
                if let Some(w) = model.pruned() {
                    let c = confusion(|x| w.predict(x), &test_set)?;
                    result.selected_k = Some(w.active());
                    result.gamma_k = Some(w.gamma());
                    result.pruned_accuracy = Some(c.accuracy());
                    result.pruned_f1 = Some(c.f1());
                }
                log::info!(
                    "{} run {r}: |G| = {}, selected K = {:?}",
                    manifest.name(),
                    weighted.len(),
                    result.selected_k
                );
            }
            result.wall_clock_seconds = start.map(|s| s.elapsed().as_secs_f64());
            Ok(result)
        })
        .collect::<Result<Vec<_>>>()?;
    Report::new(cfg, runs)
}

/// The report with the highest mean F1; earlier reports win ties.
pub fn best_of(reports: Vec<Report>) -> Option<Report> {
    reports.into_iter().reduce(|best, r| if r.f1.mean > best.f1.mean { r } else { best })
}

/// Aligned text table, one row per report.
pub fn format_table(reports: &[Report]) -> String {
    let header = ["dataset", "F1", "accuracy", "algo", "enc", "tau", "T", "runs"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.dataset.clone(),
                r.f1.to_string(),
                r.accuracy.to_string(),
                r.algorithm.to_string(),
                r.encoding.to_string(),
                r.tau.to_string(),
                r.ensemble_size.map_or("-".into(), |t| t.to_string()),
                r.repeats.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in &rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}
