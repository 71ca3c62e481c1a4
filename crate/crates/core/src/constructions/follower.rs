use crate::error::Result;
use crate::rule::{match_set, Rule};
use crate::set::{RealSet, Universe};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Follower {
    pub real: RealSet,
    /// `|match_set(real, rules[r])|` for each rule.
    pub achieved: Vec<usize>,
    /// `(rule, block)` pairs whose pattern was written into the real, in order.
    pub committed: Vec<(usize, usize)>,
}

/// Greedy finite analogue of a generic real: round-robin over the rules, each
/// taking its lowest unused block that is disjoint from every committed point
/// and committing `X ∩ B = A`. A block whose points were all committed by
/// others in agreement with its pattern counts as satisfied without a new
/// commitment. Conflicting blocks are skipped, never overwritten. Undecided
/// points end up absent.
pub fn diagonal_follower(universe: Universe, rules: &[Rule], multiplicity: usize) -> Result<Follower> {
    for r in rules {
        universe.same_as(r.universe())?;
    }
    let size = universe.size();
    let mut state: Vec<Option<bool>> = vec![None; size];
    // point -> blocks containing it
    let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); size];
    for (r, rule) in rules.iter().enumerate() {
        for (n, block) in rule.blocks().iter().enumerate() {
            for &p in block.support() {
                touching[p].push((r, n));
            }
        }
    }
    let mut satisfied: Vec<Vec<bool>> = rules.iter().map(|r| vec![false; r.len()]).collect();
    let mut count = vec![0usize; rules.len()];
    let mut cursor = vec![0usize; rules.len()];
    let mut committed = Vec::new();

    loop {
        let mut progressed = false;
        for r in 0..rules.len() {
            if count[r] >= multiplicity {
                continue;
            }
            let rule = &rules[r];
            while cursor[r] < rule.len() {
                let n = cursor[r];
                let free = rule.block(n).support().iter().all(|&p| state[p].is_none());
                if !satisfied[r][n] && free {
                    break;
                }
                cursor[r] += 1;
            }
            let Some(n) = (cursor[r] < rule.len()).then_some(cursor[r]) else {
                continue;
            };
            let block = rule.block(n);
            for &p in block.support() {
                state[p] = Some(block.selects(p));
            }
            committed.push((r, n));
            progressed = true;
            for &p in block.support() {
                for &(r2, n2) in &touching[p] {
                    if satisfied[r2][n2] {
                        continue;
                    }
                    let other = rules[r2].block(n2);
                    let agrees = other.support().iter().all(|&q| state[q] == Some(other.selects(q)));
                    if agrees {
                        satisfied[r2][n2] = true;
                        count[r2] += 1;
                    }
                }
            }
        }
        if !progressed {
            break;
        }
    }

    let real = RealSet::from_fn(universe, |p| state[p] == Some(true));
    let achieved = rules
        .iter()
        .map(|rule| match_set(&real, rule).map(|m| m.len()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Follower {
        real,
        achieved,
        committed,
    })
}

impl Follower {
    /// Committed blocks are pairwise disjoint and each is matched by the real.
    pub fn audit(&self, rules: &[Rule]) -> Vec<String> {
        let mut breaches = Vec::new();
        let mut owner = std::collections::HashMap::new();
        for &(r, n) in &self.committed {
            let block = rules[r].block(n);
            if !block.matched_by(&self.real) {
                breaches.push(format!("committed block {n} of rule {r} is not matched"));
            }
            for &p in block.support() {
                if let Some((r0, n0)) = owner.insert(p, (r, n)) {
                    breaches.push(format!("committed blocks ({r0},{n0}) and ({r},{n}) share point {p}"));
                }
            }
        }
        breaches
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Block;

    fn rule(n: usize, blocks: &[(&[usize], &[usize])]) -> Rule {
        Rule::new(
            Universe::new(n).unwrap(),
            blocks
                .iter()
                .map(|(a, b)| Block::new(a.iter().copied(), b.iter().copied()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_rule_commits_first_blocks() {
        let r = rule(10, &[(&[0], &[0, 1]), (&[3], &[2, 3]), (&[4, 5], &[4, 5])]);
        let f = diagonal_follower(r.universe(), std::slice::from_ref(&r), 2).unwrap();
        assert_eq!(f.real.to_vec(), vec![0, 3]);
        assert_eq!(f.committed, vec![(0, 0), (0, 1)]);
        assert_eq!(f.achieved, vec![2]);
        assert!(f.audit(&[r]).is_empty());
    }

    #[test]
    fn identical_rules_share_commitments() {
        let r = rule(10, &[(&[0], &[0, 1]), (&[3], &[2, 3]), (&[4], &[4, 5])]);
        let rules = [r.clone(), r];
        let f = diagonal_follower(rules[0].universe(), &rules, 2).unwrap();
        assert_eq!(f.achieved, vec![2, 2]);
        assert_eq!(f.committed, vec![(0, 0), (1, 1)]);
        assert!(f.audit(&rules).is_empty());
    }

    #[test]
    fn conflicts_are_skipped() {
        let a = rule(6, &[(&[0], &[0, 1])]);
        let b = rule(6, &[(&[1], &[0, 1]), (&[], &[2, 3])]);
        let f = diagonal_follower(a.universe(), &[a.clone(), b.clone()], 1).unwrap();
        assert_eq!(f.committed, vec![(0, 0), (1, 1)]);
        assert_eq!(f.achieved, vec![1, 1]);
    }

    #[test]
    fn starvation_is_reported_not_raised() {
        let r = rule(4, &[(&[0], &[0, 1])]);
        let f = diagonal_follower(r.universe(), &[r], 5).unwrap();
        assert_eq!(f.achieved, vec![1]);
    }

    #[test]
    fn empty_rule_list() {
        let u = Universe::new(5).unwrap();
        let f = diagonal_follower(u, &[], 3).unwrap();
        assert!(f.real.is_empty());
        assert!(f.achieved.is_empty());
    }
}
