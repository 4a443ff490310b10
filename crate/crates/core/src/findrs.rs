//! Greedy bottom-up learning of a monotone DNF.
//!
//! Positives are visited once, in the order given. Each one is absorbed by
//! the first rule whose least generalization still covers at most `tau`
//! training negatives; otherwise it seeds a new fully specific rule. Every
//! rule remembers the bucket of positives it was built from, which is what
//! [`prune`] uses to drop redundant rules afterwards.

use serde::Serialize;

use crate::classifier::Classifier;
use crate::dataset::Label;
use crate::error::{check_len, Error, Result};
use crate::rule::{Constraint, Rule, RuleSet, Value};

/// Bitsets of training negatives keyed by (attribute, value), so counting
/// the negatives a conjunction covers is an AND over its constrained slots.
struct NegativeIndex {
    n: usize,
    words: usize,
    by_value: Vec<Vec<Vec<u64>>>,
    scratch: Vec<u64>,
}

impl NegativeIndex {
    fn new<I: AsRef<[Value]>>(negatives: &[I], m: usize) -> Self {
        let n = negatives.len();
        let words = n.div_ceil(64);
        let mut by_value: Vec<Vec<Vec<u64>>> = vec![Vec::new(); m];
        for (i, x) in negatives.iter().enumerate() {
            for (a, &v) in x.as_ref().iter().enumerate() {
                let slots = &mut by_value[a];
                if slots.len() <= v as usize {
                    slots.resize(v as usize + 1, vec![0; words]);
                }
                slots[v as usize][i / 64] |= 1 << (i % 64);
            }
        }
        NegativeIndex {
            n,
            words,
            by_value,
            scratch: vec![0; words],
        }
    }

    /// Negatives covered by the conjunction of `terms`.
    fn count<It: Iterator<Item = (usize, Value)>>(&mut self, terms: It) -> usize {
        if self.n == 0 {
            return 0;
        }
        self.scratch.fill(!0);
        if self.n % 64 != 0 {
            self.scratch[self.words - 1] = (1u64 << (self.n % 64)) - 1;
        }
        for (a, v) in terms {
            let Some(bits) = self.by_value[a].get(v as usize) else {
                return 0;
            };
            let mut any = 0;
            for (s, b) in self.scratch.iter_mut().zip(bits) {
                *s &= b;
                any |= *s;
            }
            if any == 0 {
                return 0;
            }
        }
        self.scratch.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn count_rule(&mut self, rule: &Rule) -> usize {
        self.count(
            rule.constraints()
                .iter()
                .enumerate()
                .filter_map(|(a, c)| c.value().map(|v| (a, v))),
        )
    }

    /// Negatives covered by the least generalization of `rule` covering `x`.
    fn count_generalized(&mut self, rule: &Rule, x: &[Value]) -> usize {
        self.count(
            rule.constraints()
                .iter()
                .zip(x)
                .enumerate()
                .filter_map(|(a, (c, &xv))| match *c {
                    Constraint::Value(v) if v == xv => Some((a, v)),
                    _ => None,
                }),
        )
    }
}

/// Rule set under construction together with the buckets that built it.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    rules: RuleSet,
    buckets: Vec<Vec<Vec<Value>>>,
    tau: usize,
    negative_coverage: Vec<usize>,
    contradictions: usize,
    arity: Option<usize>,
}

impl LearnerState {
    pub fn empty(tau: usize) -> Self {
        LearnerState {
            rules: RuleSet::empty(),
            buckets: Vec::new(),
            tau,
            negative_coverage: Vec::new(),
            contradictions: 0,
            arity: None,
        }
    }

    /// Builds a state from explicit parts; rules are recomputed from the
    /// buckets and negative coverage from `negatives`.
    pub fn from_buckets<I: AsRef<[Value]>>(
        buckets: Vec<Vec<Vec<Value>>>,
        negatives: &[I],
        tau: usize,
    ) -> Result<Self> {
        let mut state = LearnerState::empty(tau);
        for b in &buckets {
            let first = b
                .first()
                .ok_or_else(|| Error::InvalidArgument("empty bucket".into()))?;
            let m = *state.arity.get_or_insert(first.len());
            let mut r = Rule::from_instance(first);
            for x in &b[1..] {
                check_len(m, x.len())?;
                r.generalize_in_place(x);
            }
            state.rules.rules_mut().push(r);
        }
        if let Some(m) = state.arity {
            let mut index = NegativeIndex::new(negatives, m);
            state.negative_coverage = state.rules.rules().iter().map(|r| index.count_rule(r)).collect();
        }
        state.buckets = buckets;
        Ok(state)
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn buckets(&self) -> &[Vec<Vec<Value>>] {
        &self.buckets
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn negative_coverage(&self) -> &[usize] {
        &self.negative_coverage
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    /// Singleton rules that had to be added although they cover more than
    /// `tau` negatives (identical feature vectors with opposite labels).
    pub fn contradictions(&self) -> usize {
        self.contradictions
    }

    pub fn arity(&self) -> Option<usize> {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Whether every rule is the least generalization of its bucket.
    pub fn buckets_coherent(&self) -> bool {
        self.rules.len() == self.buckets.len()
            && self.rules.rules().iter().zip(&self.buckets).all(|(r, b)| {
                let Some(first) = b.first() else { return false };
                let mut lgg = Rule::from_instance(first);
                for x in &b[1..] {
                    lgg.generalize_in_place(x);
                }
                &lgg == r
            })
    }
}

impl Classifier for LearnerState {
    fn predict(&self, x: &[Value]) -> Result<Label> {
        if let Some(m) = self.arity {
            check_len(m, x.len())?;
        }
        Ok(Label::from_bool(self.rules.covers_unchecked(x)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FitReport {
    pub rules_before_prune: usize,
    pub rules_after_prune: usize,
    pub iterations: usize,
    pub contradictions: usize,
    pub bucket_sizes: Vec<usize>,
    pub negative_coverage: Vec<usize>,
}

fn check_arity<I: AsRef<[Value]>>(positives: &[I], negatives: &[I]) -> Result<Option<usize>> {
    let mut all = positives.iter().chain(negatives).map(|x| x.as_ref().len());
    let Some(m) = all.next() else { return Ok(None) };
    for len in all {
        check_len(m, len)?;
    }
    Ok(Some(m))
}

/// Learns a rule set from `positives` (visited in order) and `negatives`.
pub fn fit<I: AsRef<[Value]>>(positives: &[I], negatives: &[I], tau: usize) -> Result<LearnerState> {
    fit_observed(positives, negatives, tau, |_| {})
}

/// [`fit`], calling `observe` with the running state after each positive.
pub fn fit_observed<I, F>(positives: &[I], negatives: &[I], tau: usize, mut observe: F) -> Result<LearnerState>
where
    I: AsRef<[Value]>,
    F: FnMut(&LearnerState),
{
    let mut state = LearnerState::empty(tau);
    let Some(m) = check_arity(positives, negatives)? else {
        return Ok(state);
    };
    state.arity = Some(m);
    let mut index = NegativeIndex::new(negatives, m);

    for p in positives {
        let p = p.as_ref();
        let mut placed = false;
        for i in 0..state.rules.len() {
            let rule = &state.rules.rules()[i];
            if rule.covers_unchecked(p) {
                state.buckets[i].push(p.to_vec());
                placed = true;
                break;
            }
            let covered = index.count_generalized(rule, p);
            if covered <= tau {
                state.rules.rules_mut()[i].generalize_in_place(p);
                state.negative_coverage[i] = covered;
                state.buckets[i].push(p.to_vec());
                placed = true;
                break;
            }
        }
        if !placed {
            let rule = Rule::from_instance(p);
            let covered = index.count_rule(&rule);
            if covered > tau {
                state.contradictions += 1;
                log::warn!("positive instance also appears {covered} times as a negative");
            }
            state.rules.rules_mut().push(rule);
            state.buckets.push(vec![p.to_vec()]);
            state.negative_coverage.push(covered);
        }
        #[cfg(test)]
        debug_assert!(check_prop1(&state));
        observe(&state);
    }
    Ok(state)
}

/// Removes rules whose whole bucket is covered by other remaining rules,
/// moving each orphaned instance to the first remaining rule covering it.
/// Repeats until no rule can be removed.
pub fn prune(state: &LearnerState) -> LearnerState {
    let mut out = state.clone();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < out.rules.len() {
            let rules = out.rules.rules();
            let targets: Option<Vec<usize>> = out.buckets[i]
                .iter()
                .map(|x| {
                    (0..rules.len()).find(|&j| j != i && rules[j].covers_unchecked(x))
                })
                .collect();
            match targets {
                Some(targets) => {
                    out.rules.rules_mut().remove(i);
                    out.negative_coverage.remove(i);
                    let orphans = out.buckets.remove(i);
                    for (x, j) in orphans.into_iter().zip(targets) {
                        let j = if j > i { j - 1 } else { j };
                        out.buckets[j].push(x);
                    }
                    changed = true;
                }
                None => i += 1,
            }
        }
        if !changed {
            break;
        }
    }
    out
}

/// No rule covers an instance in the bucket of a later rule.
pub fn check_prop1(state: &LearnerState) -> bool {
    let rules = state.rules.rules();
    state.buckets.iter().enumerate().all(|(i, bucket)| {
        bucket
            .iter()
            .all(|x| rules[..i].iter().all(|r| !r.covers_unchecked(x)))
    })
}

pub fn predict(state: &LearnerState, x: &[Value]) -> Result<Label> {
    state.predict(x)
}

/// [`fit`] followed by [`prune`].
pub fn train<I: AsRef<[Value]>>(
    positives: &[I],
    negatives: &[I],
    tau: usize,
) -> Result<(LearnerState, FitReport)> {
    let raw = fit(positives, negatives, tau)?;
    let pruned = prune(&raw);
    let report = FitReport {
        rules_before_prune: raw.len(),
        rules_after_prune: pruned.len(),
        iterations: positives.len(),
        contradictions: pruned.contradictions,
        bucket_sizes: pruned.bucket_sizes(),
        negative_coverage: pruned.negative_coverage.clone(),
    };
    Ok((pruned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_count(rule: &Rule, negatives: &[Vec<Value>]) -> usize {
        negatives.iter().filter(|n| rule.covers(n).unwrap()).count()
    }

    fn rule(spec: &[Option<Value>]) -> Rule {
        Rule::new(spec.iter().map(|&c| c.into()).collect())
    }

    #[test]
    fn two_positives_no_negatives_generalize_fully() {
        let s = fit(&[vec![1, 1], vec![2, 2]], &[], 0).unwrap();
        assert_eq!(s.rules().rules(), &[Rule::any(2)]);
        assert_eq!(s.bucket_sizes(), vec![2]);
    }

    #[test]
    fn single_positive_stays_specific() {
        let s = fit(&[vec![1, 1]], &[vec![2, 2]], 0).unwrap();
        assert_eq!(s.rules().rules(), &[Rule::from_instance(&[1, 1])]);
    }

    #[test]
    fn blocked_generalization_adds_rule() {
        // generalizations of (1,1) towards (2,2): only (?,?) covers (2,2),
        // and it also covers the negative (1,2)
        let n = vec![vec![1, 2]];
        let candidates = [rule(&[None, None])];
        assert!(candidates.iter().all(|c| naive_count(c, &n) > 0));
        let s = fit(&[vec![1, 1], vec![2, 2]], &n, 0).unwrap();
        assert_eq!(
            s.rules().rules(),
            &[Rule::from_instance(&[1, 1]), Rule::from_instance(&[2, 2])]
        );
    }

    #[test]
    fn empty_positive_set() {
        let s = fit::<Vec<Value>>(&[], &[vec![0, 1]], 0).unwrap();
        assert!(s.is_empty());
        assert_eq!(predict(&s, &[3, 4]).unwrap(), Label::Negative);
        assert!(check_prop1(&LearnerState::empty(0)));
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(fit(&[vec![1, 1]], &[vec![1]], 0).is_err());
        let s = fit(&[vec![1, 1]], &[], 0).unwrap();
        assert!(predict(&s, &[1]).is_err());
    }

    #[test]
    fn tolerance_caps_covered_negatives() {
        let p = vec![vec![0, 0], vec![1, 1]];
        let n = vec![vec![0, 1]];
        let strict = fit(&p, &n, 0).unwrap();
        assert_eq!(strict.len(), 2);
        let loose = fit(&p, &n, 1).unwrap();
        assert_eq!(loose.rules().rules(), &[Rule::any(2)]);
        assert_eq!(loose.negative_coverage(), &[1]);
    }

    #[test]
    fn contradictory_singletons_are_counted() {
        let s = fit(&[vec![0, 0]], &[vec![0, 0], vec![0, 0]], 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.contradictions(), 1);
        assert_eq!(s.negative_coverage(), &[2]);
    }

    #[test]
    fn prop1_detects_shadowed_bucket() {
        let neg: Vec<Vec<Value>> = vec![];
        let mut s = LearnerState::from_buckets(vec![vec![vec![0, 0], vec![1, 1]], vec![vec![2, 2]]], &neg, 0)
            .unwrap();
        assert_eq!(s.rules().rules()[0], Rule::any(2));
        assert!(!check_prop1(&s));
        s = prune(&s);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn prune_single_rule_is_noop() {
        let s = fit(&[vec![1, 1], vec![1, 2]], &[vec![2, 2]], 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(prune(&s), s);
    }

    #[test]
    fn prune_redistributes_redundant_bucket() {
        // attributes: a, b, c in {0,1,2}
        let negatives: Vec<Vec<Value>> = vec![vec![2, 2, 2], vec![1, 2, 0], vec![2, 1, 0]];
        let positives: Vec<Vec<Value>> =
            vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 1, 1], vec![1, 0, 1]];
        let s = fit(&positives, &negatives, 0).unwrap();
        assert!(check_prop1(&s));
        for (r, &c) in s.rules().rules().iter().zip(s.negative_coverage()) {
            assert_eq!(naive_count(r, &negatives), c);
        }

        // r0 = (0,0,?) is covered by r1 = (0,?,1) and r2 = (?,0,2) on its bucket
        let buckets = vec![
            vec![vec![0, 0, 2], vec![0, 0, 1]],
            vec![vec![0, 0, 1], vec![0, 1, 1]],
            vec![vec![0, 0, 2], vec![1, 0, 2]],
        ];
        let s = LearnerState::from_buckets(buckets, &negatives, 0).unwrap();
        assert_eq!(s.rules().rules()[0], rule(&[Some(0), Some(0), None]));
        let pruned = prune(&s);
        assert_eq!(pruned.len(), 2);
        assert_eq!(pruned.bucket_sizes(), vec![3, 3]);
        assert!(pruned.buckets_coherent());
        for p in s.buckets().concat() {
            assert!(pruned.rules().covers(&p).unwrap());
        }
    }

    #[test]
    fn worst_case_keeps_every_positive() {
        // positives pairwise differ in both attributes and every merge
        // would cover the negative grid between them
        let positives: Vec<Vec<Value>> = (0..5).map(|i| vec![i, i]).collect();
        let negatives: Vec<Vec<Value>> = (0..5)
            .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| vec![i, j]))
            .collect();
        let s = fit(&positives, &negatives, 0).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(prune(&s).len(), 5);
    }

    fn arb_data() -> impl Strategy<Value = (Vec<Vec<Value>>, Vec<Vec<Value>>)> {
        (1usize..=6, 2u32..=4).prop_flat_map(|(m, k)| {
            let row = prop::collection::vec(0..k, m);
            prop::collection::vec((row, any::<bool>()), 1..60).prop_map(|rows| {
                let mut p = Vec::new();
                let mut n: Vec<Vec<Value>> = Vec::new();
                for (x, pos) in rows {
                    if pos {
                        p.push(x);
                    } else {
                        n.push(x);
                    }
                }
                // drop positives that contradict a negative
                p.retain(|x| !n.contains(x));
                (p, n)
            })
        })
    }

    proptest! {
        #[test]
        fn index_counts_match_scan((p, n) in arb_data()) {
            prop_assume!(!p.is_empty());
            let m = p[0].len();
            let mut idx = NegativeIndex::new(&n, m);
            let r = Rule::from_instance(&p[0]);
            for x in &p {
                let g = r.generalize(x).unwrap();
                prop_assert_eq!(idx.count_generalized(&r, x), naive_count(&g, &n));
                prop_assert_eq!(idx.count_rule(&g), naive_count(&g, &n));
            }
        }

        #[test]
        fn fit_is_consistent_and_coherent((p, n) in arb_data(), tau in 0usize..2) {
            let s = fit(&p, &n, tau).unwrap();
            prop_assert!(check_prop1(&s));
            prop_assert!(s.buckets_coherent());
            prop_assert!(s.negative_coverage().iter().all(|&c| c <= tau));
            for x in &p {
                prop_assert_eq!(s.predict(x).unwrap(), Label::Positive);
            }
            if tau == 0 {
                for x in &n {
                    prop_assert_eq!(s.predict(x).unwrap(), Label::Negative);
                }
            }
            let pr = prune(&s);
            prop_assert!(pr.len() <= s.len());
            prop_assert!(check_prop1(&pr));
            prop_assert!(pr.buckets_coherent());
            prop_assert_eq!(pr.bucket_sizes().iter().sum::<usize>(), p.len());
            for x in &p {
                prop_assert_eq!(pr.predict(x).unwrap(), Label::Positive);
            }
            for (r, &c) in pr.rules().rules().iter().zip(pr.negative_coverage()) {
                prop_assert_eq!(naive_count(r, &n), c);
                prop_assert!(c <= tau);
            }
        }

        #[test]
        fn pruned_rules_are_a_subset((p, n) in arb_data()) {
            let s = fit(&p, &n, 0).unwrap();
            let pr = prune(&s);
            for r in pr.rules().rules() {
                prop_assert!(s.rules().rules().contains(r));
            }
        }
    }
}
