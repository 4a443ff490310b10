//! Aggregation of many rule sets learned from shuffled presentation orders.
//!
//! [`predict_bo`] takes a plain majority vote over the hypotheses.
//! [`WeightedRuleSet`] instead pools the distinct rules, weighting each by
//! how many hypotheses discovered it: an instance is positive when the
//! total weight of the rules covering it exceeds half the number of votes.
//! Keeping only the `K` heaviest rules rescales that threshold by the
//! fraction of weight retained.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::Classifier;
use crate::dataset::{Dataset, Label};
use crate::error::{check_len, Error, Result};
use crate::findrs::{fit, prune, LearnerState};
use crate::num::Fraction;
use crate::rule::{Rule, Value};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoteEnsemble {
    pub hypotheses: Vec<LearnerState>,
    pub seeds: Vec<u64>,
    /// Rule count of each hypothesis before pruning.
    pub unpruned_sizes: Vec<usize>,
}

impl VoteEnsemble {
    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    fn arity(&self) -> Option<usize> {
        self.hypotheses.iter().find_map(LearnerState::arity)
    }
}

/// Runs `runs` independent fits, each on its own shuffle of `positives`,
/// pruning each result. Run `t` shuffles with `derive_seed(master_seed, t)`.
pub fn fit_ensemble<I>(
    positives: &[I],
    negatives: &[I],
    runs: usize,
    tau: usize,
    master_seed: u64,
) -> Result<VoteEnsemble>
where
    I: AsRef<[Value]> + Sync,
{
    if runs == 0 {
        return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|t| derive_seed(master_seed, t)).collect();
    let fitted: Vec<(usize, LearnerState)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut order: Vec<&[Value]> = positives.iter().map(AsRef::as_ref).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let negs: Vec<&[Value]> = negatives.iter().map(AsRef::as_ref).collect();
            fit(&order, &negs, tau).map(|s| (s.len(), prune(&s)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (unpruned_sizes, hypotheses) = fitted.into_iter().unzip();
    Ok(VoteEnsemble {
        hypotheses,
        seeds,
        unpruned_sizes,
    })
}

/// Majority vote; a tied vote is negative.
pub fn predict_bo(e: &VoteEnsemble, x: &[Value]) -> Result<Label> {
    if let Some(m) = e.arity() {
        check_len(m, x.len())?;
    }
    let sum: i64 = e
        .hypotheses
        .iter()
        .map(|h| Label::from_bool(h.rules().covers_unchecked(x)).sign())
        .sum();
    Ok(Label::from_bool(sum > 0))
}

impl Classifier for VoteEnsemble {
    fn predict(&self, x: &[Value]) -> Result<Label> {
        predict_bo(self, x)
    }
}

/// Distinct rules with discovery counts, optionally restricted to the `K`
/// heaviest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedRuleSet {
    rules: Vec<Rule>,
    alphas: Vec<u64>,
    votes: u64,
    /// Rule indices by weight, heaviest first, ties in discovery order.
    ranking: Vec<usize>,
    active: usize,
}

impl WeightedRuleSet {
    /// `rules` in discovery order with their weights; `votes` is the number
    /// of aggregated hypotheses. All rules start active.
    pub fn new(rules: Vec<Rule>, alphas: Vec<u64>, votes: u64) -> Result<Self> {
        check_len(rules.len(), alphas.len())?;
        if votes == 0 {
            return Err(Error::InvalidArgument("vote count must be at least 1".into()));
        }
        if alphas.contains(&0) {
            return Err(Error::InvalidArgument("rule weights must be positive".into()));
        }
        if let Some(first) = rules.first() {
            for r in &rules[1..] {
                check_len(first.len(), r.len())?;
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !rules.iter().all(|r| seen.insert(r)) {
            return Err(Error::InvalidArgument("duplicate rule in weighted rule set".into()));
        }
        let mut ranking: Vec<usize> = (0..rules.len()).collect();
        ranking.sort_by_key(|&i| std::cmp::Reverse(alphas[i]));
        let active = rules.len();
        Ok(WeightedRuleSet {
            rules,
            alphas,
            votes,
            ranking,
            active,
        })
    }

    /// Rules in discovery order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn votes(&self) -> u64 {
        self.votes
    }

    /// `|G|`.
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Active prefix length `K`.
    pub fn active(&self) -> usize {
        self.active
    }

    /// Discovery-order indices ranked by weight.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// Active rules with weights, heaviest first.
    pub fn ranked(&self) -> impl Iterator<Item = (&Rule, u64)> + '_ {
        self.ranking[..self.active]
            .iter()
            .map(|&i| (&self.rules[i], self.alphas[i]))
    }

    pub fn total_weight(&self) -> u64 {
        self.alphas.iter().sum()
    }

    fn prefix_weight(&self, k: usize) -> u64 {
        self.ranking[..k].iter().map(|&i| self.alphas[i]).sum()
    }

    /// Fraction of the total weight held by the active rules.
    pub fn gamma<F: Fraction>(&self) -> F {
        let total = self.total_weight();
        if total == 0 {
            return F::from_ratio(1, 1);
        }
        F::from_ratio(self.prefix_weight(self.active), total)
    }

    fn arity(&self) -> Option<usize> {
        self.rules.first().map(Rule::len)
    }
}

/// Pools the rules of every hypothesis; a rule's weight is the number of
/// times it occurs across hypotheses.
pub fn aggregate_bp(e: &VoteEnsemble) -> WeightedRuleSet {
    let mut index: HashMap<&Rule, usize> = HashMap::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut alphas: Vec<u64> = Vec::new();
    for h in &e.hypotheses {
        for r in h.rules().rules() {
            match index.get(r) {
                Some(&i) => alphas[i] += 1,
                None => {
                    index.insert(r, rules.len());
                    rules.push(r.clone());
                    alphas.push(1);
                }
            }
        }
    }
    WeightedRuleSet::new(rules, alphas, e.len().max(1) as u64)
        .expect("aggregated rules are distinct with positive weights")
}

/// Positive iff the weight of active rules covering `x` exceeds
/// `gamma_K * T / 2`. Evaluated in integers: `2 * covered * total > kept * T`.
pub fn predict_bp(w: &WeightedRuleSet, x: &[Value]) -> Result<Label> {
    if let Some(m) = w.arity() {
        check_len(m, x.len())?;
    }
    let covered: u64 = w
        .ranked()
        .filter(|(r, _)| r.covers_unchecked(x))
        .map(|(_, a)| a)
        .sum();
    let kept = w.prefix_weight(w.active) as u128;
    Ok(Label::from_bool(
        2 * covered as u128 * w.total_weight() as u128 > kept * w.votes as u128,
    ))
}

impl Classifier for WeightedRuleSet {
    fn predict(&self, x: &[Value]) -> Result<Label> {
        predict_bp(self, x)
    }
}

/// Keeps the `k` heaviest rules; the full rule list is retained so the
/// operation can be undone with `k = |G|`.
pub fn prune_top_k(w: &WeightedRuleSet, k: usize) -> Result<WeightedRuleSet> {
    if k == 0 || k > w.len() {
        return Err(Error::InvalidArgument(format!(
            "K must lie in 1..={}, got {k}",
            w.len()
        )));
    }
    Ok(WeightedRuleSet {
        active: k,
        ..w.clone()
    })
}

/// Number of correctly classified instances of `data` for every prefix
/// length `K = 1..=|G|` (entry `K - 1`), in one pass over the data.
pub fn correct_by_prefix(w: &WeightedRuleSet, data: &Dataset) -> Result<Vec<usize>> {
    if let Some(m) = w.arity() {
        check_len(m, data.width())?;
    }
    let ranked: Vec<(&Rule, u64)> = w.ranking.iter().map(|&i| (&w.rules[i], w.alphas[i])).collect();
    let mut prefix = Vec::with_capacity(ranked.len());
    let mut acc = 0u64;
    for (_, a) in &ranked {
        acc += a;
        prefix.push(acc as u128);
    }
    let total = w.total_weight() as u128;
    let votes = w.votes as u128;
    let mut correct = vec![0usize; ranked.len()];
    for (x, y) in data.rows.iter().zip(&data.labels) {
        let mut covered = 0u128;
        for (k, (r, a)) in ranked.iter().enumerate() {
            if r.covers_unchecked(x) {
                covered += *a as u128;
            }
            let positive = 2 * covered * total > prefix[k] * votes;
            if positive == y.is_positive() {
                correct[k] += 1;
            }
        }
    }
    Ok(correct)
}

/// Smallest `K` whose training accuracy reaches `threshold` times the
/// accuracy of the full rule set. Accuracy need not be monotone in `K`, so
/// every prefix is evaluated.
pub fn select_k_by_training_accuracy(
    w: &WeightedRuleSet,
    train: &Dataset,
    threshold: f64,
) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::Empty("weighted rule set"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let correct = correct_by_prefix(w, train)?;
    let full = *correct.last().unwrap() as f64;
    Ok(correct
        .iter()
        .position(|&c| c as f64 >= threshold * full)
        .map_or(w.len(), |i| i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Schema};
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn state(rules: &[&[u32]]) -> LearnerState {
        let buckets = rules.iter().map(|r| vec![r.to_vec()]).collect();
        LearnerState::from_buckets::<Vec<u32>>(buckets, &[], 0).unwrap()
    }

    fn ensemble(hyps: Vec<LearnerState>) -> VoteEnsemble {
        let seeds = (0..hyps.len() as u64).collect();
        let unpruned_sizes = hyps.iter().map(LearnerState::len).collect();
        VoteEnsemble {
            hypotheses: hyps,
            seeds,
            unpruned_sizes,
        }
    }

    #[test]
    fn majority_vote_and_tie() {
        let yes = state(&[&[1, 1]]);
        let no = state(&[&[2, 2]]);
        let e = ensemble(vec![yes.clone(), yes.clone(), no.clone()]);
        assert_eq!(predict_bo(&e, &[1, 1]).unwrap(), Label::Positive);
        let e = ensemble(vec![yes.clone(), no.clone()]);
        assert_eq!(predict_bo(&e, &[1, 1]).unwrap(), Label::Negative);
        let e = ensemble(vec![yes.clone(); 4]);
        assert_eq!(predict_bo(&e, &[1, 1]).unwrap(), Label::Positive);
        assert!(predict_bo(&e, &[1]).is_err());
    }

    #[test]
    fn aggregation_counts_occurrences() {
        let a = state(&[&[1, 1], &[2, 2]]);
        let w = aggregate_bp(&ensemble(vec![a.clone()]));
        assert_eq!((w.len(), w.alphas()), (2, &[1, 1][..]));
        let w = aggregate_bp(&ensemble(vec![a.clone(), a.clone()]));
        assert_eq!(w.alphas(), &[2, 2]);
        assert_eq!(w.gamma::<Ratio<u64>>(), Ratio::from_integer(1));
        let b = state(&[&[3, 3], &[2, 2]]);
        let w = aggregate_bp(&ensemble(vec![a, b]));
        assert_eq!(w.alphas(), &[1, 2, 1]);
        assert_eq!(w.total_weight(), 4);
        assert_eq!(w.ranking(), &[1, 0, 2]);
    }

    #[test]
    fn gamma_of_top_two() {
        let rules = vec![
            Rule::from_instance(&[0]),
            Rule::from_instance(&[1]),
            Rule::from_instance(&[2]),
        ];
        let w = WeightedRuleSet::new(rules, vec![5, 3, 2], 10).unwrap();
        let w2 = prune_top_k(&w, 2).unwrap();
        assert_eq!(w2.gamma::<Ratio<u64>>(), Ratio::new(4, 5));
        assert!((w2.gamma::<f64>() - 0.8).abs() < 1e-12);
        assert!(prune_top_k(&w, 0).is_err());
        assert!(prune_top_k(&w, 4).is_err());
        assert_eq!(prune_top_k(&w, 3).unwrap(), w);
    }

    #[test]
    fn uncovered_instance_is_negative() {
        let w = WeightedRuleSet::new(vec![Rule::from_instance(&[0, 0])], vec![3], 4).unwrap();
        assert_eq!(predict_bp(&w, &[1, 1]).unwrap(), Label::Negative);
        assert!(predict_bp(&w, &[1]).is_err());
    }

    /// Closed-form check of `sum > gamma * T / 2` in floating point.
    #[test]
    fn pruned_threshold_matches_closed_form() {
        let r = Rule::from_instance(&[0, 0]);
        let others = vec![
            Rule::new(vec![crate::rule::Constraint::Any, crate::rule::Constraint::Value(1)]),
            Rule::from_instance(&[1, 1]),
        ];
        let mut rules = vec![r];
        rules.extend(others);
        let w = WeightedRuleSet::new(rules, vec![3, 2, 1], 4).unwrap();
        let w1 = prune_top_k(&w, 1).unwrap();
        let total: f64 = 6.0;
        let gamma = 3.0 / total;
        let x = [0u32, 0];
        let expected = 3.0 > gamma * 4.0 / 2.0;
        assert!(expected);
        assert_eq!(predict_bp(&w1, &x).unwrap(), Label::from_bool(expected));
        // full set at the boundary: (0,1) is covered by weight 2 == T/2, not above
        assert_eq!(predict_bp(&w, &[0, 1]).unwrap(), Label::Negative);
    }

    #[test]
    fn top_rule_alone_can_suffice() {
        let attrs = vec![Attribute {
            name: "a".into(),
            values: vec!["0".into(), "1".into(), "2".into()],
            bin_edges: None,
        }];
        let train = Dataset::new(
            Schema::attribute_value(attrs),
            vec![vec![0], vec![1], vec![2]],
            vec![Label::Positive, Label::Negative, Label::Negative],
            "p".into(),
        )
        .unwrap();
        let w = WeightedRuleSet::new(
            vec![Rule::from_instance(&[2]), Rule::from_instance(&[0])],
            vec![1, 5],
            5,
        )
        .unwrap();
        assert_eq!(select_k_by_training_accuracy(&w, &train, 0.99).unwrap(), 1);
        assert!(select_k_by_training_accuracy(&w, &train, 0.0).is_err());
        let empty = WeightedRuleSet::new(vec![], vec![], 1).unwrap();
        assert!(select_k_by_training_accuracy(&empty, &train, 0.99).is_err());
    }

    #[test]
    fn ensembles_are_reproducible() {
        let p: Vec<Vec<u32>> = (0..20).map(|i| vec![i % 3, i % 4, i % 5]).collect();
        let n: Vec<Vec<u32>> = vec![vec![0, 0, 4], vec![2, 3, 0], vec![1, 1, 1]];
        let p: Vec<Vec<u32>> = p.into_iter().filter(|x| !n.contains(x)).collect();
        let a = fit_ensemble(&p, &n, 7, 0, 11).unwrap();
        let b = fit_ensemble(&p, &n, 7, 0, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(aggregate_bp(&a), aggregate_bp(&b));
        assert!(fit_ensemble(&p, &n, 0, 0, 11).is_err());
        let single = fit_ensemble(&p, &n, 1, 0, 11).unwrap();
        assert_eq!(single.len(), 1);
    }

    fn arb_weighted() -> impl Strategy<Value = (WeightedRuleSet, Vec<Vec<u32>>)> {
        let rule = prop::collection::vec(prop::option::of(0u32..3), 3)
            .prop_map(|c| Rule::new(c.into_iter().map(Into::into).collect()));
        (
            prop::collection::hash_set(rule, 1..12),
            1u64..20,
            prop::collection::vec(prop::collection::vec(0u32..3, 3), 1..30),
        )
            .prop_flat_map(|(rules, votes, xs)| {
                let rules: Vec<Rule> = rules.into_iter().collect();
                let n = rules.len();
                (
                    Just(rules),
                    prop::collection::vec(1u64..=votes, n),
                    Just(votes),
                    Just(xs),
                )
            })
            .prop_map(|(rules, alphas, votes, xs)| {
                (WeightedRuleSet::new(rules, alphas, votes).unwrap(), xs)
            })
    }

    proptest! {
        #[test]
        fn full_set_reduces_to_half_vote_rule((w, xs) in arb_weighted()) {
            for x in &xs {
                let count: u64 = w
                    .rules()
                    .iter()
                    .zip(w.alphas())
                    .filter(|(r, _)| r.covers(x).unwrap())
                    .map(|(_, a)| a)
                    .sum();
                let expected = 2 * count > w.votes();
                prop_assert_eq!(predict_bp(&w, x).unwrap(), Label::from_bool(expected));
            }
        }

        #[test]
        fn gamma_is_monotone((w, _xs) in arb_weighted()) {
            let mut last = Ratio::<u64>::from_integer(0);
            for k in 1..=w.len() {
                let g: Ratio<u64> = prune_top_k(&w, k).unwrap().gamma();
                prop_assert!(g >= last);
                last = g;
            }
            prop_assert_eq!(last, Ratio::from_integer(1));
        }

        #[test]
        fn prefix_accuracy_matches_direct((w, xs) in arb_weighted()) {
            let attrs = (0..3)
                .map(|i| Attribute {
                    name: format!("a{i}"),
                    values: vec!["0".into(), "1".into(), "2".into()],
                    bin_edges: None,
                })
                .collect();
            let labels = xs.iter().enumerate().map(|(i, _)| Label::from_bool(i % 3 == 0)).collect();
            let data = Dataset::new(Schema::attribute_value(attrs), xs.clone(), labels, "p".into()).unwrap();
            let by_k = correct_by_prefix(&w, &data).unwrap();
            for k in 1..=w.len() {
                let wk = prune_top_k(&w, k).unwrap();
                let direct = data
                    .rows
                    .iter()
                    .zip(&data.labels)
                    .filter(|(x, y)| predict_bp(&wk, x).unwrap() == **y)
                    .count();
                prop_assert_eq!(by_k[k - 1], direct);
            }
        }
    }
}
