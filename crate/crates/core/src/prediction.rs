//! 2-predictors, evasion, and the translation from 2-rules to predictors.
//!
//! A predictor guesses `χ_X(ℓ)` from `χ_X ↾ ℓ` at each point `ℓ` of its
//! domain; `X` evades it at `ℓ` when the guess is wrong. A 2-rule becomes a
//! predictor that guesses the top point of each block from the bottom one,
//! and every evasion point then carries a block matched by `X` or by its
//! complement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::{match_set, Rule};
use crate::set::{RealSet, Word};

/// Longest prefix a lookup table may be keyed on.
pub const MAX_TABLE_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorFn {
    /// Explicit value for each of the `2^len` prefixes, indexed by [`Word::as_index`].
    Table { len: usize, values: Vec<bool> },
    /// Guess `χ(i)`.
    Projection(usize),
    /// Guess `1 - χ(i)`.
    FlippedProjection(usize),
}

impl PredictorFn {
    fn check(&self, at: usize) -> Result<()> {
        match self {
            PredictorFn::Table { len, values } => {
                if *len != at {
                    return Err(Error::InvalidPredictor(format!(
                        "table at {at} is keyed on length {len}"
                    )));
                }
                if *len > MAX_TABLE_LEN {
                    return Err(Error::InvalidPredictor(format!(
                        "table at {at} exceeds the {MAX_TABLE_LEN}-bit limit"
                    )));
                }
                if values.len() != 1 << len {
                    return Err(Error::InvalidPredictor(format!(
                        "table at {at} does not cover all inputs"
                    )));
                }
            }
            PredictorFn::Projection(i) | PredictorFn::FlippedProjection(i) => {
                if *i >= at {
                    return Err(Error::InvalidPredictor(format!("projection index {i} not below {at}")));
                }
            }
        }
        Ok(())
    }

    fn predict(&self, x: &RealSet, at: usize) -> bool {
        match self {
            PredictorFn::Table { values, .. } => {
                let prefix = Word((0..at).map(|p| x.has(p)).collect());
                values[prefix.as_index()]
            }
            PredictorFn::Projection(i) => x.has(*i),
            PredictorFn::FlippedProjection(i) => !x.has(*i),
        }
    }
}

/// A predictor `(π, D)`: the domain is the key set of `fns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predictor {
    fns: BTreeMap<usize, PredictorFn>,
}

impl Predictor {
    pub fn new(fns: BTreeMap<usize, PredictorFn>) -> Result<Self> {
        if fns.is_empty() {
            return Err(Error::InvalidPredictor("empty domain".into()));
        }
        for (&at, f) in &fns {
            f.check(at)?;
        }
        Ok(Predictor { fns })
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.fns.keys().copied()
    }

    pub fn get(&self, at: usize) -> Option<&PredictorFn> {
        self.fns.get(&at)
    }

    /// Recovers `(min B, max B, |A| = 1)` for projection-only predictors.
    pub fn pair_blocks(&self) -> Option<Vec<(usize, usize, bool)>> {
        self.fns
            .iter()
            .map(|(&at, f)| match f {
                PredictorFn::Projection(i) => Some((*i, at, true)),
                PredictorFn::FlippedProjection(i) => Some((*i, at, false)),
                PredictorFn::Table { .. } => None,
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PredictorFnWire {
    Projection { proj: usize },
    Flipped { flip: usize },
    Table { table: BTreeMap<Word, u8> },
}

#[derive(Serialize, Deserialize)]
struct PredictorWire {
    #[serde(rename = "D")]
    domain: Vec<usize>,
    fns: BTreeMap<usize, PredictorFnWire>,
}

impl Serialize for Predictor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let fns = self
            .fns
            .iter()
            .map(|(&at, f)| {
                let wire = match f {
                    PredictorFn::Projection(i) => PredictorFnWire::Projection { proj: *i },
                    PredictorFn::FlippedProjection(i) => PredictorFnWire::Flipped { flip: *i },
                    PredictorFn::Table { len, values } => PredictorFnWire::Table {
                        table: Word::all(*len)
                            .map(|w| {
                                let v = values[w.as_index()] as u8;
                                (w, v)
                            })
                            .collect(),
                    },
                };
                (at, wire)
            })
            .collect();
        PredictorWire {
            domain: self.domain().collect(),
            fns,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Predictor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = PredictorWire::deserialize(d)?;
        let mut domain = wire.domain.clone();
        domain.sort_unstable();
        domain.dedup();
        if !domain.iter().eq(wire.fns.keys()) {
            return Err(D::Error::custom("D must list exactly the keys of fns"));
        }
        let mut fns = BTreeMap::new();
        for (at, f) in wire.fns {
            let f = match f {
                PredictorFnWire::Projection { proj } => PredictorFn::Projection(proj),
                PredictorFnWire::Flipped { flip } => PredictorFn::FlippedProjection(flip),
                PredictorFnWire::Table { table } => {
                    if at > MAX_TABLE_LEN {
                        return Err(D::Error::custom(format!(
                            "table at {at} exceeds the {MAX_TABLE_LEN}-bit limit"
                        )));
                    }
                    let mut values = vec![None; 1 << at];
                    for (w, v) in table {
                        if w.len() != at || v > 1 {
                            return Err(D::Error::custom(format!("bad table entry {w}: {v} at {at}")));
                        }
                        values[w.as_index()] = Some(v == 1);
                    }
                    let values = values
                        .into_iter()
                        .collect::<Option<Vec<bool>>>()
                        .ok_or_else(|| D::Error::custom(format!("table at {at} does not cover all inputs")))?;
                    PredictorFn::Table { len: at, values }
                }
            };
            fns.insert(at, f);
        }
        Predictor::new(fns).map_err(D::Error::custom)
    }
}

/// `{ ℓ ∈ D : χ_X(ℓ) ≠ π_ℓ(χ_X ↾ ℓ) }`.
pub fn evades_set(x: &RealSet, predictor: &Predictor) -> Result<Vec<usize>> {
    if let Some(at) = predictor.fns.keys().next_back() {
        x.universe().check(*at)?;
    }
    Ok(predictor
        .fns
        .iter()
        .filter(|(&at, f)| x.has(at) != f.predict(x, at))
        .map(|(&at, _)| at)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RulePredictor {
    pub predictor: Predictor,
    /// Size-1 blocks, which carry no prediction.
    pub skipped: Vec<usize>,
    /// Block index behind each domain point.
    pub origin: BTreeMap<usize, usize>,
}

/// Domain `{max B_n}`; at `ℓ = max B_n` guess `χ(min B_n)` when `|A_n| = 1`
/// and `1 - χ(min B_n)` otherwise.
pub fn rule_to_predictor(rule: &Rule) -> Result<RulePredictor> {
    let mut fns = BTreeMap::new();
    let mut origin = BTreeMap::new();
    let mut skipped = Vec::new();
    for (n, block) in rule.blocks().iter().enumerate() {
        match block.width() {
            1 => skipped.push(n),
            2 => {
                let (low, high) = (block.min(), block.max());
                let f = if block.selected().len() == 1 {
                    PredictorFn::Projection(low)
                } else {
                    PredictorFn::FlippedProjection(low)
                };
                let clash = fns.insert(high, f);
                assert!(clash.is_none(), "disjoint blocks cannot share a maximum");
                origin.insert(high, n);
            }
            width => {
                return Err(Error::TooWide {
                    block: n,
                    width,
                    bound: 2,
                })
            }
        }
    }
    Ok(RulePredictor {
        predictor: Predictor::new(fns)?,
        skipped,
        origin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[serde(rename = "X")]
    Real,
    Complement,
}

/// Which case of the block pattern applies: `|A| = 1`, `|A| = 2` or `|A| = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternCase {
    Singleton,
    Full,
    Empty,
}

impl PatternCase {
    fn of(selected: usize) -> Self {
        match selected {
            1 => PatternCase::Singleton,
            0 => PatternCase::Empty,
            _ => PatternCase::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferEntry {
    pub block: usize,
    pub point: usize,
    pub case: PatternCase,
    pub matched_by: Side,
    /// `X ∩ B_n`.
    pub trace: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub entries: Vec<TransferEntry>,
    pub skipped: Vec<usize>,
}

/// For each evasion point of the derived predictor, reports whether `X` or
/// its complement matches the block behind it. Exactly one always does; if
/// neither does, the case analysis is broken and this returns
/// [`Error::TransferFailure`].
pub fn evasion_transfer(x: &RealSet, rule: &Rule) -> Result<TransferReport> {
    x.universe().same_as(rule.universe())?;
    let derived = rule_to_predictor(rule)?;
    let mut entries = Vec::new();
    for point in evades_set(x, &derived.predictor)? {
        let n = derived.origin[&point];
        let block = rule.block(n);
        let matched_by = if block.matched_by(x) {
            Side::Real
        } else if block.matched_by_complement(x) {
            Side::Complement
        } else {
            return Err(Error::TransferFailure { block: n });
        };
        entries.push(TransferEntry {
            block: n,
            point,
            case: PatternCase::of(block.selected().len()),
            matched_by,
            trace: block.support().iter().copied().filter(|&p| x.has(p)).collect(),
        });
    }
    Ok(TransferReport {
        entries,
        skipped: derived.skipped,
    })
}

impl TransferReport {
    /// Checks each entry against the case analysis: for `|A| = 1` the trace
    /// is `A` or `B ∖ A`; otherwise it is `∅` or `B`. The side must agree.
    pub fn audit(&self, rule: &Rule) -> Vec<String> {
        let mut breaches = Vec::new();
        for e in &self.entries {
            let block = rule.block(e.block);
            let complement: Vec<usize> = block.support().iter().copied().filter(|&p| !block.selects(p)).collect();
            let expected_side = match e.case {
                PatternCase::Singleton if e.trace == block.selected() => Some(Side::Real),
                PatternCase::Singleton if e.trace == complement => Some(Side::Complement),
                PatternCase::Full | PatternCase::Empty if e.trace.is_empty() => Some(if block.selected().is_empty() {
                    Side::Real
                } else {
                    Side::Complement
                }),
                PatternCase::Full | PatternCase::Empty if e.trace == block.support() => {
                    Some(if block.selected().is_empty() {
                        Side::Complement
                    } else {
                        Side::Real
                    })
                }
                _ => None,
            };
            match expected_side {
                None => breaches.push(format!(
                    "block {}: trace {:?} outside the {:?} case",
                    e.block, e.trace, e.case
                )),
                Some(side) if side != e.matched_by => breaches.push(format!(
                    "block {}: reported {:?}, case analysis gives {side:?}",
                    e.block, e.matched_by
                )),
                Some(_) => {}
            }
        }
        breaches
    }
}

/// Finite echo of "some member of a family evading every derived predictor
/// yields a follower": for each 2-rule, the first candidate with a nonempty
/// evasion set, and the blocks matched by it and by its complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvasionFollower {
    pub rule: usize,
    pub candidate: usize,
    pub evasions: usize,
    pub real_matches: Vec<usize>,
    pub complement_matches: Vec<usize>,
}

pub fn evasion_followers(candidates: &[RealSet], rules: &[Rule]) -> Result<Vec<Option<EvasionFollower>>> {
    rules
        .iter()
        .enumerate()
        .map(|(r, rule)| {
            let derived = rule_to_predictor(rule)?;
            for (c, x) in candidates.iter().enumerate() {
                x.universe().same_as(rule.universe())?;
                let evasions = evades_set(x, &derived.predictor)?.len();
                if evasions > 0 {
                    return Ok(Some(EvasionFollower {
                        rule: r,
                        candidate: c,
                        evasions,
                        real_matches: match_set(x, rule)?,
                        complement_matches: match_set(&x.complement(), rule)?,
                    }));
                }
            }
            Ok(None)
        })
        .collect()
}
