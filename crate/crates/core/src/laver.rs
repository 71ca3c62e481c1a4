//! Slaloms over ladder intervals and the 2-rule every captured real avoids.
//!
//! The ladder `a_0 = 0`, `a_{n+1} = a_n + 2^n + 1` cuts the universe into
//! intervals of length `2^n + 1`. A slalom puts at most `n` words on interval
//! `n`; since the interval is longer than `2^n`, some two positions agree on
//! every word, and the block `({i_n}, {i_n, j_n})` is then never matched by a
//! real whose word is captured.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::{Block, Rule};
use crate::set::{RealSet, Universe, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalLadder {
    universe: Universe,
    points: Vec<usize>,
}

impl IntervalLadder {
    /// `a_0..=a_count`.
    pub fn new(universe: Universe, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyInput("ladder intervals"));
        }
        let mut points = Vec::with_capacity(count + 1);
        points.push(0usize);
        for n in 0..count {
            let next = u32::try_from(n)
                .ok()
                .and_then(|e| 2usize.checked_pow(e))
                .and_then(|step| points[n].checked_add(step + 1));
            match next {
                Some(a) if a <= universe.size() => points.push(a),
                _ => {
                    return Err(Error::LadderExceedsUniverse {
                        needed: next.unwrap_or(usize::MAX),
                        size: universe.size(),
                    })
                }
            }
        }
        Ok(IntervalLadder { universe, points })
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Number of intervals.
    pub fn count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn interval(&self, n: usize) -> (usize, usize) {
        (self.points[n], self.points[n + 1])
    }

    pub fn interval_len(&self, n: usize) -> usize {
        self.points[n + 1] - self.points[n]
    }
}

pub fn interval_ladder(universe: Universe, count: usize) -> Result<IntervalLadder> {
    IntervalLadder::new(universe, count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoincidentPair {
    pub i: usize,
    pub j: usize,
    /// Whether `len > 2^bound` held, so that existence was guaranteed.
    pub guaranteed: bool,
}

/// Lexicographically least `(i, j)`, `i < j`, with `f(i) = f(j)` for every word.
/// Positions are grouped by their column across all words; at most `2^|words|`
/// groups exist, so a word length above that forces a collision.
pub fn coincident_pair(words: &[Word], bound: usize, len: usize) -> Result<CoincidentPair> {
    if let Some(w) = words.iter().find(|w| w.len() != len) {
        return Err(Error::InvalidSlalom(format!("word {w} does not have length {len}")));
    }
    let capacity = u32::try_from(bound).ok().and_then(|e| 2usize.checked_pow(e));
    let guaranteed = words.len() <= bound && capacity.is_some_and(|c| len > c);
    let mut first_seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut best: Option<(usize, usize)> = None;
    for p in 0..len {
        let column: Vec<bool> = words.iter().map(|w| w.bit(p)).collect();
        match first_seen.get(&column) {
            Some(&i) => {
                if best.is_none_or(|(bi, _)| i < bi) {
                    best = Some((i, p));
                }
            }
            None => {
                first_seen.insert(column, p);
            }
        }
    }
    best.map(|(i, j)| CoincidentPair { i, j, guaranteed })
        .ok_or(Error::NoCoincidentPair { len })
}

/// Number of classes of "agree on every word" among positions `0..len`.
pub fn agreement_classes(words: &[Word], len: usize) -> usize {
    let columns: std::collections::HashSet<Vec<bool>> =
        (0..len).map(|p| words.iter().map(|w| w.bit(p)).collect()).collect();
    columns.len()
}

/// `χ_X ↾ [a_n, a_{n+1})` for every interval of the ladder.
pub fn block_encode(x: &RealSet, ladder: &IntervalLadder) -> Result<Vec<Word>> {
    x.universe().same_as(ladder.universe)?;
    (0..ladder.count())
        .map(|n| {
            let (start, end) = ladder.interval(n);
            x.restrict(start, end)
        })
        .collect()
}

/// Word sets `S_n` on the ladder intervals, `|S_n| ≤ n`. `S_0` is forced empty
/// and omitted: `sets[0]` is `S_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSlalom {
    ladder: IntervalLadder,
    sets: Vec<Vec<Word>>,
}

impl BlockSlalom {
    pub fn new(ladder: IntervalLadder, sets: Vec<Vec<Word>>) -> Result<Self> {
        if sets.len() + 1 != ladder.count() {
            return Err(Error::InvalidSlalom(format!(
                "{} word sets for a ladder of {} intervals (expected one per interval n >= 1)",
                sets.len(),
                ladder.count()
            )));
        }
        let mut normalized = Vec::with_capacity(sets.len());
        for (t, mut s) in sets.into_iter().enumerate() {
            let n = t + 1;
            s.sort();
            s.dedup();
            if s.len() > n {
                return Err(Error::InvalidSlalom(format!(
                    "S_{n} has {} words, more than {n}",
                    s.len()
                )));
            }
            let len = ladder.interval_len(n);
            if let Some(w) = s.iter().find(|w| w.len() != len) {
                return Err(Error::InvalidSlalom(format!(
                    "S_{n}: word {w} does not have length {len}"
                )));
            }
            normalized.push(s);
        }
        Ok(BlockSlalom {
            ladder,
            sets: normalized,
        })
    }

    pub fn ladder(&self) -> &IntervalLadder {
        &self.ladder
    }

    /// `S_n` for `n >= 1`.
    pub fn set(&self, n: usize) -> &[Word] {
        &self.sets[n - 1]
    }
}

#[derive(Serialize, Deserialize)]
struct SlalomWire {
    n: usize,
    ladder: usize,
    sets: Vec<Vec<Word>>,
}

impl Serialize for BlockSlalom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SlalomWire {
            n: self.ladder.universe.size(),
            ladder: self.ladder.count(),
            sets: self.sets.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockSlalom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = SlalomWire::deserialize(d)?;
        let universe = Universe::new(wire.n).map_err(D::Error::custom)?;
        let ladder = IntervalLadder::new(universe, wire.ladder).map_err(D::Error::custom)?;
        BlockSlalom::new(ladder, wire.sets).map_err(D::Error::custom)
    }
}

/// `{ n >= 1 : χ_X ↾ [a_n, a_{n+1}) ∈ S_n }`.
pub fn capture_check(slalom: &BlockSlalom, x: &RealSet) -> Result<Vec<usize>> {
    let words = block_encode(x, &slalom.ladder)?;
    Ok((1..slalom.ladder.count())
        .filter(|&n| slalom.set(n).contains(&words[n]))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvoidingRule {
    pub rule: Rule,
    /// `(n, i_n, j_n)` in absolute positions; block `t` comes from interval `t + 1`.
    pub pairs: Vec<(usize, usize, usize)>,
}

/// For each `n >= 1`, the block `({i_n}, {i_n, j_n})` where positions
/// `i_n < j_n` of interval `n` agree on every word of `S_n`.
pub fn avoiding_rule(slalom: &BlockSlalom) -> Result<AvoidingRule> {
    let ladder = &slalom.ladder;
    let mut blocks = Vec::new();
    let mut pairs = Vec::new();
    for n in 1..ladder.count() {
        let (start, _) = ladder.interval(n);
        let pair = coincident_pair(slalom.set(n), n, ladder.interval_len(n))?;
        let (i, j) = (start + pair.i, start + pair.j);
        blocks.push(Block::new([i], [i, j])?);
        pairs.push((n, i, j));
    }
    Ok(AvoidingRule {
        rule: Rule::new(ladder.universe, blocks)?,
        pairs,
    })
}

impl AvoidingRule {
    /// Every captured interval's block must be unmatched by `x`.
    pub fn audit(&self, slalom: &BlockSlalom, x: &RealSet) -> Vec<String> {
        let captured = match capture_check(slalom, x) {
            Ok(c) => c,
            Err(e) => return vec![e.to_string()],
        };
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, (n, _, _))| captured.contains(n))
            .filter(|&(t, _)| self.rule.block(t).matched_by(x))
            .map(|(_, (n, i, j))| format!("interval {n} is captured yet X matches ({{{i}}}, {{{i},{j}}})"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::match_set;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn ladder_values() {
        let u = Universe::new(100).unwrap();
        assert_eq!(interval_ladder(u, 5).unwrap().points(), &[0, 2, 5, 10, 19, 36]);
        assert_eq!(interval_ladder(u, 1).unwrap().points(), &[0, 2]);
        assert_eq!(
            interval_ladder(Universe::new(35).unwrap(), 5),
            Err(Error::LadderExceedsUniverse { needed: 36, size: 35 })
        );
        assert!(interval_ladder(u, 0).is_err());
        assert!(interval_ladder(u, 200).is_err());
    }

    #[test]
    fn coincident_pair_examples() {
        let p = coincident_pair(&[w("01010"), w("00110")], 2, 5).unwrap();
        assert_eq!((p.i, p.j, p.guaranteed), (0, 4, true));
        let p = coincident_pair(&[w("010")], 1, 3).unwrap();
        assert_eq!((p.i, p.j), (0, 2));
        let p = coincident_pair(&[], 0, 2).unwrap();
        assert_eq!((p.i, p.j), (0, 1));
    }

    #[test]
    fn coincident_pair_unguaranteed() {
        let p = coincident_pair(&[w("0101")], 2, 4).unwrap();
        assert_eq!((p.i, p.j, p.guaranteed), (0, 2, false));
        assert_eq!(
            coincident_pair(&[w("01")], 1, 2),
            Err(Error::NoCoincidentPair { len: 2 })
        );
        assert!(coincident_pair(&[w("01")], 1, 3).is_err());
    }

    #[test]
    fn block_encoding() {
        let u = Universe::new(10).unwrap();
        let ladder = interval_ladder(u, 3).unwrap();
        let x = RealSet::from_members(u, [2, 4]).unwrap();
        let words = block_encode(&x, &ladder).unwrap();
        assert_eq!(words[1], w("101"));
        assert!(block_encode(&RealSet::empty(u), &ladder)
            .unwrap()
            .iter()
            .all(|w| !w.bits().contains(&true)));
        assert!(block_encode(&RealSet::full(u), &ladder)
            .unwrap()
            .iter()
            .all(|w| !w.bits().contains(&false)));
    }

    #[test]
    fn avoiding_rule_example() {
        let u = Universe::new(10).unwrap();
        let ladder = interval_ladder(u, 3).unwrap();
        let slalom = BlockSlalom::new(ladder, vec![vec![w("101")], vec![w("00000")]]).unwrap();
        let out = avoiding_rule(&slalom).unwrap();
        assert_eq!(out.rule.block(0).support(), &[2, 4]);
        assert_eq!(out.rule.block(0).selected(), &[2]);
        assert_eq!(out.rule.block(1).support(), &[5, 6]);
    }

    #[test]
    fn captured_real_avoids() {
        let u = Universe::new(19).unwrap();
        let ladder = interval_ladder(u, 4).unwrap();
        let x = RealSet::from_members(u, [0, 3, 4, 9, 12, 13, 17]).unwrap();
        let words = block_encode(&x, &ladder).unwrap();
        let decoy2 = w("10101");
        let sets = vec![
            vec![words[1].clone()],
            vec![words[2].clone(), decoy2],
            vec![words[3].clone()],
        ];
        let slalom = BlockSlalom::new(ladder, sets).unwrap();
        assert_eq!(capture_check(&slalom, &x).unwrap(), vec![1, 2, 3]);
        let out = avoiding_rule(&slalom).unwrap();
        assert!(match_set(&x, &out.rule).unwrap().is_empty());
        assert!(out.audit(&slalom, &x).is_empty());
    }

    #[test]
    fn slalom_validation() {
        let u = Universe::new(10).unwrap();
        let ladder = interval_ladder(u, 3).unwrap();
        assert!(BlockSlalom::new(ladder.clone(), vec![vec![w("101"), w("111")], vec![]]).is_err());
        assert!(BlockSlalom::new(ladder.clone(), vec![vec![w("10")], vec![]]).is_err());
        assert!(BlockSlalom::new(ladder.clone(), vec![vec![]]).is_err());
        let ok = BlockSlalom::new(ladder, vec![vec![w("101"), w("101")], vec![]]).unwrap();
        assert_eq!(ok.set(1).len(), 1);
        let json = serde_json::to_string(&ok).unwrap();
        assert_eq!(json, r#"{"n":10,"ladder":3,"sets":[["101"],[]]}"#);
        assert_eq!(serde_json::from_str::<BlockSlalom>(&json).unwrap(), ok);
    }

    #[test]
    fn class_count_bounded() {
        let words = [w("01010"), w("00110")];
        assert!(agreement_classes(&words, 5) <= 4);
        assert_eq!(agreement_classes(&words, 5), 4);
    }
}
