//! Monotone DNF rule learning on categorical data.
//!
//! [`findrs`] learns a small disjunction of conjunctive rules from positive
//! and negative examples, with a tolerance `tau` on how many negatives a
//! rule may cover. [`ensemble`] repeats the fit over shuffled presentation
//! orders and either votes ([`ensemble::predict_bo`]) or pools the rules
//! into a [`ensemble::WeightedRuleSet`] that can be cut down to its
//! heaviest rules. [`dataset`] turns CSV files into interned categorical
//! instances and [`eval`] runs the repeated split protocol used for
//! benchmarking.

pub mod classifier;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod findrs;
pub mod model;
pub mod num;
pub mod rule;

pub use classifier::Classifier;
pub use dataset::{Dataset, Encoding, Label, Manifest, Schema};
pub use ensemble::{
    aggregate_bp, fit_ensemble, predict_bo, predict_bp, prune_top_k,
    select_k_by_training_accuracy, VoteEnsemble, WeightedRuleSet,
};
pub use error::{Error, Result};
pub use findrs::{fit, prune, FitReport, LearnerState};
pub use num::{Fraction, Real};
pub use rule::{hypothesis_space_size, Constraint, Rule, RuleSet, Value};

/// Exact ratio of counts.
pub type Rational = num_rational::Ratio<u64>;
/// Bin codes with `f64` edges.
pub type Binning64 = dataset::Binning<f64>;
/// Bin codes with `f32` edges.
pub type Binning32 = dataset::Binning<f32>;
