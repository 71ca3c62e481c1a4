//! Rules, follow/avoid semantics and width bounds.
//!
//! A rule is a finite sequence of blocks `(A_n, B_n)` with pairwise disjoint
//! `B_n` and `A_n ⊆ B_n`. A real matches block `n` when `X ∩ B_n = A_n`.
//! "Follows infinitely often" is truncated to the explicit set of matched
//! indices returned by [`match_set`]; callers pick the multiplicity.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{inverse_power_of_two, Scalar};
use crate::set::{RealSet, Universe};

/// Unvalidated block data, exactly as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBlock {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
}

/// Unvalidated rule data: `{"n": N, "blocks": [{"A": [...], "B": [...]}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCandidate {
    pub n: usize,
    pub blocks: Vec<RawBlock>,
}

/// One block `(A, B)`; both sides sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    a: Vec<usize>,
    b: Vec<usize>,
}

fn normalized(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl Block {
    pub fn new(a: impl IntoIterator<Item = usize>, b: impl IntoIterator<Item = usize>) -> Result<Self> {
        let a = normalized(a.into_iter().collect());
        let b = normalized(b.into_iter().collect());
        if b.is_empty() {
            return Err(Error::InvalidBlock("B is empty".into()));
        }
        if let Some(x) = a.iter().find(|x| b.binary_search(x).is_err()) {
            return Err(Error::InvalidBlock(format!("A contains {x}, which is not in B")));
        }
        Ok(Block { a, b })
    }

    /// The selected part `A`.
    pub fn selected(&self) -> &[usize] {
        &self.a
    }

    /// The support `B`.
    pub fn support(&self) -> &[usize] {
        &self.b
    }

    pub fn width(&self) -> usize {
        self.b.len()
    }

    pub fn min(&self) -> usize {
        self.b[0]
    }

    pub fn max(&self) -> usize {
        *self.b.last().expect("blocks are nonempty")
    }

    pub fn selects(&self, point: usize) -> bool {
        self.a.binary_search(&point).is_ok()
    }

    /// `X ∩ B = A`. Points must already be known to lie in `x`'s universe.
    pub fn matched_by(&self, x: &RealSet) -> bool {
        let mut a = self.a.iter().peekable();
        for &p in &self.b {
            let wanted = a.next_if_eq(&&p).is_some();
            if x.has(p) != wanted {
                return false;
            }
        }
        true
    }

    /// `(ω ∖ X) ∩ B = A`.
    pub fn matched_by_complement(&self, x: &RealSet) -> bool {
        let mut a = self.a.iter().peekable();
        for &p in &self.b {
            let wanted = a.next_if_eq(&&p).is_some();
            if x.has(p) == wanted {
                return false;
            }
        }
        true
    }

    pub fn to_raw(&self) -> RawBlock {
        RawBlock {
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }
}

/// A validated rule over a fixed universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    universe: Universe,
    blocks: Vec<Block>,
}

impl Rule {
    /// Builds a rule, rejecting overlapping blocks and points outside the universe.
    pub fn new(universe: Universe, blocks: Vec<Block>) -> Result<Self> {
        let candidate = RuleCandidate {
            n: universe.size(),
            blocks: blocks.iter().map(Block::to_raw).collect(),
        };
        let report = validate_rule(&candidate, None);
        if !report.is_ok() {
            return Err(Error::InvalidRule(report));
        }
        Ok(Rule { universe, blocks })
    }

    pub fn from_candidate(candidate: &RuleCandidate) -> Result<Self> {
        let universe = Universe::new(candidate.n)?;
        let report = validate_rule(candidate, None);
        if !report.is_ok() {
            return Err(Error::InvalidRule(report));
        }
        let blocks = candidate
            .blocks
            .iter()
            .map(|raw| Block::new(raw.a.iter().copied(), raw.b.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Rule { universe, blocks })
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, n: usize) -> &Block {
        &self.blocks[n]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Largest block width (0 for the empty rule).
    pub fn width(&self) -> usize {
        self.blocks.iter().map(Block::width).max().unwrap_or(0)
    }

    pub fn to_candidate(&self) -> RuleCandidate {
        RuleCandidate {
            n: self.universe.size(),
            blocks: self.blocks.iter().map(Block::to_raw).collect(),
        }
    }

    /// The sub-rule on the given block indices, order preserved.
    pub fn restrict_to(&self, indices: &[usize]) -> Result<Rule> {
        let blocks = indices
            .iter()
            .map(|&n| {
                self.blocks.get(n).cloned().ok_or(Error::IndexOutOfRange {
                    what: "block",
                    index: n,
                    len: self.blocks.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Rule {
            universe: self.universe,
            blocks,
        })
    }

    pub fn check_width(&self, bound: &WidthBound) -> ValidationReport {
        validate_rule(&self.to_candidate(), Some(bound))
    }

    pub fn union_points(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.blocks.iter().flat_map(|b| b.b.iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_candidate().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let candidate = RuleCandidate::deserialize(d)?;
        Rule::from_candidate(&candidate).map_err(serde::de::Error::custom)
    }
}

/// Width bound on blocks: a constant `k` or a per-index `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WidthBound {
    Constant(usize),
    PerIndex(Vec<usize>),
}

impl WidthBound {
    pub fn at(&self, n: usize) -> Option<usize> {
        match self {
            WidthBound::Constant(k) => Some(*k),
            WidthBound::PerIndex(f) => f.get(n).copied(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WidthBoundWire {
    Constant { k: usize },
    PerIndex { f: Vec<usize> },
}

impl Serialize for WidthBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WidthBound::Constant(k) => WidthBoundWire::Constant { k: *k },
            WidthBound::PerIndex(f) => WidthBoundWire::PerIndex { f: f.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WidthBound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match WidthBoundWire::deserialize(d)? {
            WidthBoundWire::Constant { k: 0 } => Err(serde::de::Error::custom("width bound k must be positive")),
            WidthBoundWire::Constant { k } => Ok(WidthBound::Constant(k)),
            WidthBoundWire::PerIndex { f } if f.contains(&0) => {
                Err(serde::de::Error::custom("width bound f must be positive"))
            }
            WidthBoundWire::PerIndex { f } => Ok(WidthBound::PerIndex(f)),
        }
    }
}

struct SetDisplay<'a>(&'a [usize]);

impl fmt::Display for SetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Intersect {
        first: usize,
        second: usize,
        points: Vec<usize>,
    },
    NotSubset {
        block: usize,
        extra: Vec<usize>,
    },
    EmptyBlock {
        block: usize,
    },
    OutOfUniverse {
        block: usize,
        points: Vec<usize>,
    },
    TooWide {
        block: usize,
        width: usize,
        bound: usize,
    },
    Unbounded {
        block: usize,
        available: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Intersect { first, second, points } => {
                write!(f, "blocks {first},{second} intersect at {}", SetDisplay(points))
            }
            Violation::NotSubset { block, extra } => {
                write!(f, "block {block}: A has {} outside B", SetDisplay(extra))
            }
            Violation::EmptyBlock { block } => write!(f, "block {block}: B is empty"),
            Violation::OutOfUniverse { block, points } => {
                write!(f, "block {block}: points {} outside the universe", SetDisplay(points))
            }
            Violation::TooWide { block, width, bound } => write!(f, "block {block} width {width} > {bound}"),
            Violation::Unbounded { block, available } => {
                write!(f, "block {block} has no width bound (f has {available} entries)")
            }
        }
    }
}

/// Outcome of [`validate_rule`]: empty means the candidate is a valid rule.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        f.write_str(&self.messages().join("; "))
    }
}

/// Checks every clause of the rule definition (and the width bound, if given).
/// Violations are data: every offending block and pair is reported.
pub fn validate_rule(candidate: &RuleCandidate, bound: Option<&WidthBound>) -> ValidationReport {
    let mut violations = Vec::new();
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut overlaps: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();

    for (n, raw) in candidate.blocks.iter().enumerate() {
        let a = normalized(raw.a.clone());
        let b = normalized(raw.b.clone());
        if b.is_empty() {
            violations.push(Violation::EmptyBlock { block: n });
        }
        let extra: Vec<usize> = a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect();
        if !extra.is_empty() {
            violations.push(Violation::NotSubset { block: n, extra });
        }
        let outside: Vec<usize> = b.iter().copied().filter(|&p| p >= candidate.n).collect();
        if !outside.is_empty() {
            violations.push(Violation::OutOfUniverse {
                block: n,
                points: outside,
            });
        }
        if let Some(bound) = bound {
            match bound.at(n) {
                Some(limit) if b.len() > limit => violations.push(Violation::TooWide {
                    block: n,
                    width: b.len(),
                    bound: limit,
                }),
                Some(_) => {}
                None => violations.push(Violation::Unbounded {
                    block: n,
                    available: match bound {
                        WidthBound::PerIndex(f) => f.len(),
                        WidthBound::Constant(_) => 0,
                    },
                }),
            }
        }
        for &p in &b {
            if let Some(&first) = owner.get(&p) {
                overlaps.entry((first, n)).or_default().push(p);
            } else {
                owner.insert(p, n);
            }
        }
    }
    violations.extend(
        overlaps
            .into_iter()
            .map(|((first, second), points)| Violation::Intersect { first, second, points }),
    );
    ValidationReport { violations }
}

/// `{ n : X ∩ B_n = A_n }`, in increasing order.
pub fn match_set(x: &RealSet, rule: &Rule) -> Result<Vec<usize>> {
    x.universe().same_as(rule.universe())?;
    Ok(rule
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.matched_by(x))
        .map(|(n, _)| n)
        .collect())
}

/// Partial sums of `Σ 2^{-f(n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowReport<S> {
    /// Entry `t` is `Σ_{n<t} 2^{-f(n)}`, for `t = 0..=horizon`.
    pub partial_sums: Vec<S>,
    pub sum_at_horizon: S,
}

pub fn slow_report<S: Scalar>(f: &[usize], horizon: usize) -> Result<SlowReport<S>> {
    if horizon > f.len() {
        return Err(Error::HorizonTooLong {
            horizon,
            available: f.len(),
        });
    }
    let mut partial_sums = Vec::with_capacity(horizon + 1);
    let mut acc = S::zero();
    partial_sums.push(acc.clone());
    for &width in &f[..horizon] {
        let e = u32::try_from(width).map_err(|_| Error::Schema(format!("width {width} too large")))?;
        acc = acc + inverse_power_of_two::<S>(e);
        partial_sums.push(acc.clone());
    }
    Ok(SlowReport {
        partial_sums,
        sum_at_horizon: acc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extreme {
    Empty,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneRuleWitness {
    pub winner: Extreme,
    pub real: RealSet,
    pub matches: usize,
    pub empty_matches: usize,
    pub full_matches: usize,
}

/// For a 1-rule, picks whichever of `∅` and the full universe matches more
/// blocks (ties go to `∅`). Each singleton block is matched by exactly one of them.
pub fn one_rule_witness(rule: &Rule) -> Result<OneRuleWitness> {
    if let Some((n, b)) = rule.blocks.iter().enumerate().find(|(_, b)| b.width() > 1) {
        return Err(Error::TooWide {
            block: n,
            width: b.width(),
            bound: 1,
        });
    }
    let empty = RealSet::empty(rule.universe);
    let full = RealSet::full(rule.universe);
    let empty_matches = match_set(&empty, rule)?.len();
    let full_matches = match_set(&full, rule)?.len();
    let (winner, real, matches) = if empty_matches >= full_matches {
        (Extreme::Empty, empty, empty_matches)
    } else {
        (Extreme::Full, full, full_matches)
    };
    Ok(OneRuleWitness {
        winner,
        real,
        matches,
        empty_matches,
        full_matches,
    })
}
