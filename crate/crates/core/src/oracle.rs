//! Brute-force reference implementations.
//!
//! Each function recomputes a quantity the direct way, sharing as little code
//! with the fast path as possible. They are slow by design and meant for
//! tests, the acceptance battery, and `violated` reports.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::families::{BooleanCombo, FamilyFragment};
use crate::rule::{Rule, RuleCandidate};
use crate::set::{RealSet, Word};
use crate::Rational;

/// Pairs of blocks sharing a point, by comparing every pair of blocks.
pub fn overlapping_blocks(candidate: &RuleCandidate) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, bi) in candidate.blocks.iter().enumerate() {
        for (j, bj) in candidate.blocks.iter().enumerate().skip(i + 1) {
            for &p in &bi.b {
                if bj.b.contains(&p) {
                    out.push((i, j, p));
                }
            }
        }
    }
    out
}

/// Indices of blocks matched by `x`, testing every point of `B_n` through
/// the checked membership query.
pub fn match_set_pointwise(x: &RealSet, rule: &Rule) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    'blocks: for (n, block) in rule.blocks().iter().enumerate() {
        for &p in block.support() {
            if x.contains(p)? != block.selected().contains(&p) {
                continue 'blocks;
            }
        }
        out.push(n);
    }
    Ok(out)
}

pub const MAX_ENUMERATED_BITS: usize = 24;

/// Probability that a uniform real matches none of the first blocks, by
/// counting assignments of `⋃ B_n` one by one.
pub fn enumerated_avoid_probability(rule: &Rule, first: usize) -> Result<Rational> {
    let blocks = rule.blocks().get(..first).ok_or(Error::IndexOutOfRange {
        what: "block prefix",
        index: first,
        len: rule.len(),
    })?;
    let points: Vec<usize> = blocks.iter().flat_map(|b| b.support().iter().copied()).collect();
    if points.len() > MAX_ENUMERATED_BITS {
        return Err(Error::Schema(format!(
            "{} bits exceed the enumeration limit {MAX_ENUMERATED_BITS}",
            points.len()
        )));
    }
    // block n as (mask, pattern) over the local bit numbering
    let mut offset = 0;
    let patterns: Vec<(u32, u32)> = blocks
        .iter()
        .map(|b| {
            let mut mask = 0u32;
            let mut pattern = 0u32;
            for (t, &p) in b.support().iter().enumerate() {
                mask |= 1 << (offset + t);
                if b.selects(p) {
                    pattern |= 1 << (offset + t);
                }
            }
            offset += b.width();
            (mask, pattern)
        })
        .collect();
    let total: u64 = 1 << points.len();
    let avoiding = (0..total)
        .filter(|&code| {
            let code = code as u32;
            patterns.iter().all(|&(mask, pattern)| code & mask != pattern)
        })
        .count();
    Ok(Rational::new(BigInt::from(avoiding), BigInt::from(total)))
}

/// Lexicographically least `(i, j)` with `w(i) = w(j)` for all words, by
/// scanning every pair.
pub fn coincident_pair_scan(words: &[Word], len: usize) -> Option<(usize, usize)> {
    (0..len)
        .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
        .find(|&(i, j)| words.iter().all(|w| w.bit(i) == w.bit(j)))
}

/// Ground points in the combination, decided one point at a time.
pub fn combo_pointwise(family: &FamilyFragment, combo: &BooleanCombo) -> Result<Vec<usize>> {
    combo.check()?;
    let n = family.universe().size();
    let mut out = Vec::new();
    for p in 0..n {
        let mut inside = match &combo.extra {
            Some(e) => e.contains(p)?,
            None => true,
        };
        for &i in &combo.positives {
            inside &= family.member(i)?.contains(p)?;
        }
        for &i in &combo.negatives {
            inside &= !family.member(i)?.contains(p)?;
        }
        if inside {
            out.push(p);
        }
    }
    Ok(out)
}

/// Points `ℓ` in the predictor's domain where `χ_X(ℓ)` differs from the
/// prediction for a 2-rule, read straight off the blocks.
pub fn rule_evasions(x: &RealSet, rule: &Rule) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for block in rule.blocks() {
        if block.width() != 2 {
            continue;
        }
        let (low, high) = (block.min(), block.max());
        let guess = if block.selected().len() == 1 {
            x.contains(low)?
        } else {
            !x.contains(low)?
        };
        if x.contains(high)? != guess {
            out.push(high);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// `|{i : m ∈ C_i}|` for each point of each listed block.
pub fn membership_counts(reals: &[RealSet], rule: &Rule, blocks: &[usize]) -> Result<Vec<Vec<usize>>> {
    blocks
        .iter()
        .map(|&n| {
            rule.block(n)
                .support()
                .iter()
                .map(|&m| {
                    reals
                        .iter()
                        .map(|c| c.contains(m).map(usize::from))
                        .sum::<Result<usize>>()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Block;
    use crate::scalar::ratio;
    use crate::set::Universe;

    #[test]
    fn enumeration_matches_examples() {
        let r = Rule::new(
            Universe::new(4).unwrap(),
            vec![Block::new([0], [0, 1]).unwrap(), Block::new([2], [2, 3]).unwrap()],
        )
        .unwrap();
        assert_eq!(enumerated_avoid_probability(&r, 2).unwrap(), ratio(9, 16));
        assert_eq!(enumerated_avoid_probability(&r, 0).unwrap(), ratio(1, 1));
    }

    #[test]
    fn pair_scan() {
        let words: Vec<Word> = ["0110", "1001"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(coincident_pair_scan(&words, 4), Some((0, 3)));
        let words: Vec<Word> = ["01"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(coincident_pair_scan(&words, 2), None);
    }
}
