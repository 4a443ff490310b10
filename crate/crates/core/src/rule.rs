//! Conjunctive rules over interned categorical values and their disjunctions.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::dataset::Encoding;
use crate::error::{check_len, Error, Result};

/// Interned attribute value. Index into the attribute's domain.
pub type Value = u32;

/// Value id used for inputs that fall outside the attribute's domain.
/// No rule constrains an attribute to it, so it is only ever matched by `Any`.
pub const UNSEEN: Value = Value::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    Any,
    Value(Value),
}

impl Constraint {
    #[inline]
    pub fn matches(self, v: Value) -> bool {
        match self {
            Constraint::Any => true,
            Constraint::Value(c) => c == v,
        }
    }

    pub fn is_any(self) -> bool {
        matches!(self, Constraint::Any)
    }

    pub fn value(self) -> Option<Value> {
        match self {
            Constraint::Any => None,
            Constraint::Value(v) => Some(v),
        }
    }
}

impl From<Option<Value>> for Constraint {
    fn from(v: Option<Value>) -> Self {
        v.map_or(Constraint::Any, Constraint::Value)
    }
}

/// A conjunction with one slot per attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    constraints: Vec<Constraint>,
}

impl Rule {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Rule { constraints }
    }

    /// The most general rule over `m` attributes.
    pub fn any(m: usize) -> Self {
        Rule {
            constraints: vec![Constraint::Any; m],
        }
    }

    /// The most specific rule covering `x`: every attribute constrained.
    pub fn from_instance(x: &[Value]) -> Self {
        Rule {
            constraints: x.iter().map(|&v| Constraint::Value(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Number of constrained (non-wildcard) positions.
    pub fn specificity(&self) -> usize {
        self.constraints.iter().filter(|c| !c.is_any()).count()
    }

    pub fn covers(&self, x: &[Value]) -> Result<bool> {
        check_len(self.len(), x.len())?;
        Ok(self.covers_unchecked(x))
    }

    #[inline]
    pub(crate) fn covers_unchecked(&self, x: &[Value]) -> bool {
        self.constraints.iter().zip(x).all(|(c, &v)| c.matches(v))
    }

    /// Least generalization of `self` that covers `x`.
    pub fn generalize(&self, x: &[Value]) -> Result<Rule> {
        check_len(self.len(), x.len())?;
        let mut r = self.clone();
        r.generalize_in_place(x);
        Ok(r)
    }

    /// Drops every constraint that disagrees with `x`; returns whether the
    /// rule changed.
    pub(crate) fn generalize_in_place(&mut self, x: &[Value]) -> bool {
        let mut changed = false;
        for (c, &v) in self.constraints.iter_mut().zip(x) {
            if let Constraint::Value(cv) = *c {
                if cv != v {
                    *c = Constraint::Any;
                    changed = true;
                }
            }
        }
        changed
    }

    /// Syntactic generality: `self` is `Any` or equal to `other` everywhere.
    pub fn more_general(&self, other: &Rule) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(self
            .constraints
            .iter()
            .zip(&other.constraints)
            .all(|(a, b)| a.is_any() || a == b))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match c {
                Constraint::Any => f.write_str("?")?,
                Constraint::Value(v) => write!(f, "{v}")?,
            }
        }
        f.write_str(")")
    }
}

/// An ordered disjunction of rules (a monotone DNF).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        if let Some(first) = rules.first() {
            for r in &rules[1..] {
                check_len(first.len(), r.len())?;
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn into_rules(self) -> Vec<Rule> {
        self.rules
    }

    pub fn covers(&self, x: &[Value]) -> Result<bool> {
        if let Some(r) = self.rules.first() {
            check_len(r.len(), x.len())?;
        }
        Ok(self.covers_unchecked(x))
    }

    #[inline]
    pub(crate) fn covers_unchecked(&self, x: &[Value]) -> bool {
        self.rules.iter().any(|r| r.covers_unchecked(x))
    }

    pub(crate) fn rules_mut(&mut self) -> &mut Vec<Rule> {
        &mut self.rules
    }
}

impl FromIterator<Rule> for RuleSet {
    fn from_iter<I: IntoIterator<Item = Rule>>(iter: I) -> Self {
        RuleSet {
            rules: iter.into_iter().collect(),
        }
    }
}

/// Per-attribute term counts and total number of syntactic rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceSize {
    pub terms: Vec<BigUint>,
    pub total: BigUint,
}

/// Counts the syntactic rules available over attributes with the given
/// domain sizes: `k + 1` terms per attribute under attribute-value encoding,
/// `2^k - 1` under one-hot.
pub fn hypothesis_space_size(domain_sizes: &[usize], encoding: Encoding) -> Result<SpaceSize> {
    if let Some(pos) = domain_sizes.iter().position(|&k| k == 0) {
        return Err(Error::InvalidArgument(format!(
            "attribute {pos} has an empty domain"
        )));
    }
    let terms: Vec<BigUint> = domain_sizes
        .iter()
        .map(|&k| match encoding {
            Encoding::Av => BigUint::from(k) + 1u32,
            Encoding::Oh => (BigUint::one() << k) - 1u32,
        })
        .collect();
    let total = terms.iter().fold(BigUint::one(), |acc, t| acc * t);
    Ok(SpaceSize { terms, total })
}
