use crate::error::{Error, Result};
use crate::rule::{match_set, Rule};
use crate::set::{RealSet, Universe};

/// Strictly increasing cut points `f(0) < f(1) < ...`, all inside the universe.
/// Segment `i` is `(f(i-1), f(i)]` with `f(-1) = -1`, so segment 0 is `[0, f(0)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpliceFunction {
    universe: Universe,
    values: Vec<usize>,
}

impl SpliceFunction {
    pub fn new(universe: Universe, values: Vec<usize>) -> Result<Self> {
        if let Some(position) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotIncreasing { position: position + 1 });
        }
        if let Some(&last) = values.last() {
            universe.check(last)?;
        }
        Ok(SpliceFunction { universe, values })
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn at(&self, i: usize) -> usize {
        self.values[i]
    }

    /// First point of segment `i`.
    pub fn segment_start(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.values[i - 1] + 1
        }
    }

    /// Index of the segment containing `point`, if any.
    pub fn segment_of(&self, point: usize) -> Option<usize> {
        let i = self.values.partition_point(|&v| v < point);
        (i < self.values.len()).then_some(i)
    }
}

/// `X ∩ (f(i-1), f(i)] = X_i ∩ (f(i-1), f(i)]`; nothing above the last used cut.
pub fn splice(f: &SpliceFunction, reals: &[RealSet]) -> Result<RealSet> {
    splice_from(f, 0, reals)
}

/// Like [`splice`], with `reals[t]` supplying segment `first + t`; points in
/// segments below `first` are left out.
pub fn splice_from(f: &SpliceFunction, first: usize, reals: &[RealSet]) -> Result<RealSet> {
    let needed = first + reals.len();
    if needed > f.values.len() {
        return Err(Error::SpliceTooShort {
            needed,
            available: f.values.len(),
        });
    }
    let mut out = RealSet::empty(f.universe);
    for (t, x) in reals.iter().enumerate() {
        f.universe.same_as(x.universe())?;
        let i = first + t;
        for p in f.segment_start(i)..=f.at(i) {
            if x.has(p) {
                out.insert(p)?;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpliceCertificate {
    pub spliced: RealSet,
    pub certified: Vec<usize>,
    /// Index `j` of the last segment used.
    pub last_segment: usize,
}

/// Given a `k`-rule, reals `X_k..X_j` and nested index sets `E_k ⊇ ... ⊇ E_j`
/// on which they match the rule, certifies the indices `n ∈ E_j` whose block
/// lies below `f(j)`; the spliced real matches every such block.
pub fn splice_certify(
    rule: &Rule,
    f: &SpliceFunction,
    first: usize,
    reals: &[RealSet],
    chains: &[Vec<usize>],
) -> Result<SpliceCertificate> {
    if reals.is_empty() {
        return Err(Error::EmptyInput("reals"));
    }
    if chains.len() != reals.len() {
        return Err(Error::Schema(format!(
            "{} reals but {} matched-index sets",
            reals.len(),
            chains.len()
        )));
    }
    if let Some((n, b)) = rule.blocks().iter().enumerate().find(|(_, b)| b.width() > first) {
        return Err(Error::TooWide {
            block: n,
            width: b.width(),
            bound: first,
        });
    }
    rule.universe().same_as(f.universe)?;
    let last = first + reals.len() - 1;
    if last >= f.values.len() {
        return Err(Error::SpliceTooShort {
            needed: last + 1,
            available: f.values.len(),
        });
    }
    let floor = f.at(first);
    if let Some(&min_point) = rule.union_points().first() {
        if min_point <= floor {
            return Err(Error::SpliceFloor { min_point, floor });
        }
    }
    for (t, (x, chain)) in reals.iter().zip(chains).enumerate() {
        x.universe().same_as(rule.universe())?;
        if t > 0 && !chain.iter().all(|n| chains[t - 1].contains(n)) {
            return Err(Error::ChainNotNested { step: t });
        }
        for &n in chain {
            if n >= rule.len() {
                return Err(Error::IndexOutOfRange {
                    what: "block",
                    index: n,
                    len: rule.len(),
                });
            }
            if !rule.block(n).matched_by(x) {
                return Err(Error::ChainMismatch { step: t, block: n });
            }
        }
    }
    let spliced = splice_from(f, first, reals)?;
    let ceiling = f.at(last);
    let mut certified: Vec<usize> = chains[reals.len() - 1]
        .iter()
        .copied()
        .filter(|&n| rule.block(n).max() < ceiling)
        .collect();
    certified.sort_unstable();
    certified.dedup();
    Ok(SpliceCertificate {
        spliced,
        certified,
        last_segment: last,
    })
}

impl SpliceCertificate {
    pub fn audit(&self, rule: &Rule) -> Vec<String> {
        let matched = match match_set(&self.spliced, rule) {
            Ok(m) => m,
            Err(e) => return vec![e.to_string()],
        };
        self.certified
            .iter()
            .filter(|n| matched.binary_search(n).is_err())
            .map(|n| format!("certified block {n} is not matched by the spliced real"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Block;

    fn u(n: usize) -> Universe {
        Universe::new(n).unwrap()
    }

    #[test]
    fn splice_examples() {
        let n = u(8);
        let x = RealSet::from_members(n, [1, 4, 7]).unwrap();
        let f = SpliceFunction::new(n, vec![2, 5]).unwrap();
        assert_eq!(splice(&f, &[x.clone(), x.clone()]).unwrap().to_vec(), vec![1, 4]);

        let s = splice(&f, &[RealSet::full(n), RealSet::empty(n)]).unwrap();
        assert_eq!(s.to_vec(), vec![0, 1, 2]);

        let f = SpliceFunction::new(n, vec![0, 1, 2]).unwrap();
        let reals: Vec<RealSet> = (0..3).map(|i| RealSet::from_members(n, [i]).unwrap()).collect();
        assert_eq!(splice(&f, &reals).unwrap().to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn splice_function_validation() {
        assert_eq!(
            SpliceFunction::new(u(8), vec![2, 2]),
            Err(Error::NotIncreasing { position: 1 })
        );
        assert!(SpliceFunction::new(u(8), vec![2, 8]).is_err());
        let f = SpliceFunction::new(u(8), vec![2]).unwrap();
        let x = RealSet::empty(u(8));
        assert!(matches!(splice(&f, &[x.clone(), x]), Err(Error::SpliceTooShort { .. })));
        assert!(splice(&f, &[RealSet::empty(u(9))]).is_err());
    }

    #[test]
    fn segment_lookup() {
        let f = SpliceFunction::new(u(10), vec![2, 5, 6]).unwrap();
        let segs: Vec<Option<usize>> = (0..10).map(|p| f.segment_of(p)).collect();
        assert_eq!(
            segs,
            vec![
                Some(0),
                Some(0),
                Some(0),
                Some(1),
                Some(1),
                Some(1),
                Some(2),
                None,
                None,
                None
            ]
        );
    }

    fn two_rule() -> Rule {
        Rule::new(
            u(20),
            vec![
                Block::new([5], [5, 6]).unwrap(),
                Block::new([], [9, 10]).unwrap(),
                Block::new([14, 15], [14, 15]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_real_certifies_everything_below_the_cut() {
        let r = two_rule();
        let x = RealSet::from_members(r.universe(), [5, 14, 15]).unwrap();
        let f = SpliceFunction::new(r.universe(), vec![0, 1, 2, 19]).unwrap();
        // k = 2: X_2 on segment (1, 2]; extend to X_3 with the same real.
        let cert = splice_certify(&r, &f, 2, &[x.clone(), x], &[vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        assert_eq!(cert.certified, vec![0, 1, 2]);
        assert!(cert.audit(&r).is_empty());
    }

    #[test]
    fn empty_chain_certifies_nothing() {
        let r = two_rule();
        let f = SpliceFunction::new(r.universe(), vec![0, 1, 2, 19]).unwrap();
        let x = RealSet::empty(r.universe());
        let cert = splice_certify(&r, &f, 2, &[x.clone(), x], &[vec![1], vec![]]).unwrap();
        assert!(cert.certified.is_empty());
    }

    #[test]
    fn straddling_blocks_are_excluded() {
        let r = two_rule();
        let n = r.universe();
        // X_2 follows everything; X_3 only blocks 0 and 1; cut f(3) = 12 leaves block 2 above.
        let x2 = RealSet::from_members(n, [5, 14, 15]).unwrap();
        let x3 = RealSet::from_members(n, [5]).unwrap();
        let f = SpliceFunction::new(n, vec![0, 1, 2, 12]).unwrap();
        let cert = splice_certify(&r, &f, 2, &[x2, x3], &[vec![0, 1, 2], vec![0, 1]]).unwrap();
        assert_eq!(cert.certified, vec![0, 1]);
        assert!(cert.audit(&r).is_empty());
        let f = SpliceFunction::new(n, vec![0, 1, 2, 9]).unwrap();
        let x = RealSet::from_members(n, [5]).unwrap();
        let cert = splice_certify(&r, &f, 2, &[x.clone(), x], &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(cert.certified, vec![0]);
    }

    #[test]
    fn splice_certify_preconditions() {
        let r = two_rule();
        let n = r.universe();
        let x = RealSet::from_members(n, [5]).unwrap();
        let f = SpliceFunction::new(n, vec![0, 1, 5, 19]).unwrap();
        assert_eq!(
            splice_certify(&r, &f, 2, &[x.clone(), x.clone()], &[vec![0], vec![0]]),
            Err(Error::SpliceFloor { min_point: 5, floor: 5 })
        );
        let f = SpliceFunction::new(n, vec![0, 1, 2, 19]).unwrap();
        assert_eq!(
            splice_certify(&r, &f, 2, &[x.clone(), x.clone()], &[vec![0], vec![0, 1]]),
            Err(Error::ChainNotNested { step: 1 })
        );
        assert_eq!(
            splice_certify(&r, &f, 2, &[x.clone(), x.clone()], &[vec![2], vec![]]),
            Err(Error::ChainMismatch { step: 0, block: 2 })
        );
        assert!(matches!(
            splice_certify(&r, &f, 1, std::slice::from_ref(&x), &[vec![]]),
            Err(Error::TooWide { .. })
        ));
    }
}
