use crate::error::{Error, Result};
use crate::rule::{Block, Rule};
use crate::set::RealSet;

/// Removes the `i`-th element (increasing enumeration) from every block of a
/// rule whose blocks all have exactly `width` elements: `B^i = B ∖ {b^i}`,
/// `A^i = A ∩ B^i`.
pub fn derived_subrule(rule: &Rule, width: usize, i: usize) -> Result<Rule> {
    if i >= width {
        return Err(Error::IndexOutOfRange {
            what: "derived subrule",
            index: i,
            len: width,
        });
    }
    check_exact_width(rule, width)?;
    let blocks = rule
        .blocks()
        .iter()
        .map(|block| {
            let removed = block.support()[i];
            Block::new(
                block.selected().iter().copied().filter(|&p| p != removed),
                block.support().iter().copied().filter(|&p| p != removed),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Rule::new(rule.universe(), blocks)
}

fn check_exact_width(rule: &Rule, width: usize) -> Result<()> {
    match rule.blocks().iter().position(|b| b.width() != width) {
        Some(n) => Err(Error::RaggedBlock {
            block: n,
            size: rule.block(n).width(),
            expected: width,
        }),
        None => Ok(()),
    }
}

fn check_shared_universe(reals: &[RealSet]) -> Result<()> {
    let first = reals.first().ok_or(Error::EmptyInput("reals"))?;
    reals.iter().try_for_each(|r| first.universe().same_as(r.universe()))
}

/// Points lying in strictly more than half of the reals.
pub fn majority_real(reals: &[RealSet]) -> Result<RealSet> {
    check_shared_universe(reals)?;
    let universe = reals[0].universe();
    let total = reals.len();
    Ok(RealSet::from_fn(universe, |p| {
        2 * reals.iter().filter(|c| c.has(p)).count() > total
    }))
}

/// `E_0 ⊇ E_1 ⊇ ... ⊇ E_{k+1}` where `E_{i+1}` keeps the indices of `E_i`
/// on which `C_i` matches the `i`-th derived subrule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EChain {
    pub sets: Vec<Vec<usize>>,
    pub reals: Vec<RealSet>,
}

impl EChain {
    pub fn last(&self) -> &[usize] {
        self.sets.last().expect("chains start with E_0")
    }
}

/// One real per derived subrule: `reals.len()` is the block width `k + 1`.
pub fn e_chain(rule: &Rule, reals: &[RealSet]) -> Result<EChain> {
    check_shared_universe(reals)?;
    rule.universe().same_as(reals[0].universe())?;
    let width = reals.len();
    check_exact_width(rule, width)?;

    let mut sets = Vec::with_capacity(width + 1);
    sets.push((0..rule.len()).collect::<Vec<_>>());
    for (i, c) in reals.iter().enumerate() {
        let derived = derived_subrule(rule, width, i)?;
        let next: Vec<usize> = sets[i]
            .iter()
            .copied()
            .filter(|&n| derived.block(n).matched_by(c))
            .collect();
        sets.push(next);
    }
    Ok(EChain {
        sets,
        reals: reals.to_vec(),
    })
}

/// The majority real together with its certificate `E_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorityCertificate {
    pub combined: RealSet,
    pub certified: Vec<usize>,
    pub chain: EChain,
}

/// Combines `k + 1` reals (each following its derived `k`-subrule) into one
/// real that matches the `(k+1)`-rule on every index of `E_{k+1}`.
pub fn majority_combine(rule: &Rule, reals: &[RealSet]) -> Result<MajorityCertificate> {
    if reals.len() < 3 {
        return Err(Error::MajorityTooNarrow { reals: reals.len() });
    }
    let chain = e_chain(rule, reals)?;
    let combined = majority_real(reals)?;
    Ok(MajorityCertificate {
        combined,
        certified: chain.last().to_vec(),
        chain,
    })
}

impl MajorityCertificate {
    /// Re-derives the guarantee from the raw bits: every certified block is
    /// matched by the combined real, and every point of a certified block is
    /// covered by `{0,1}` or `{k,k+1}` of the reals, the latter exactly on `A_n`.
    pub fn audit(&self, rule: &Rule) -> Vec<String> {
        let mut breaches = Vec::new();
        let reals = &self.chain.reals;
        let k = reals.len() - 1;
        if let Err(e) = self.combined.universe().same_as(rule.universe()) {
            return vec![e.to_string()];
        }
        for &n in &self.certified {
            let block = rule.block(n);
            let trace: Vec<usize> = block
                .support()
                .iter()
                .copied()
                .filter(|&p| self.combined.has(p))
                .collect();
            if trace != block.selected() {
                breaches.push(format!(
                    "certified block {n}: C ∩ B = {trace:?}, A = {:?}",
                    block.selected()
                ));
            }
            for &m in block.support() {
                let count = reals.iter().filter(|c| c.has(m)).count();
                let high = count >= k;
                if !(count <= 1 || high) {
                    breaches.push(format!("block {n}, point {m}: {count} of {} reals contain it", k + 1));
                } else if high != block.selects(m) {
                    breaches.push(format!("block {n}, point {m}: count {count} disagrees with A"));
                }
            }
        }
        for (i, w) in self.chain.sets.windows(2).enumerate() {
            if !w[1].iter().all(|n| w[0].binary_search(n).is_ok()) {
                breaches.push(format!("E_{} is not contained in E_{i}", i + 1));
            }
        }
        breaches
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::Universe;

    fn set(u: Universe, m: &[usize]) -> RealSet {
        RealSet::from_members(u, m.iter().copied()).unwrap()
    }

    fn one_block(n: usize, a: &[usize], b: &[usize]) -> Rule {
        Rule::new(
            Universe::new(n).unwrap(),
            vec![Block::new(a.iter().copied(), b.iter().copied()).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn derived_subrule_examples() {
        let r = one_block(10, &[5], &[1, 5, 9]);
        let d0 = derived_subrule(&r, 3, 0).unwrap();
        assert_eq!((d0.block(0).selected(), d0.block(0).support()), (&[5][..], &[5, 9][..]));
        let d1 = derived_subrule(&r, 3, 1).unwrap();
        assert_eq!((d1.block(0).selected(), d1.block(0).support()), (&[][..], &[1, 9][..]));
        let e = one_block(10, &[], &[1, 5, 9]);
        for i in 0..3 {
            let d = derived_subrule(&e, 3, i).unwrap();
            assert!(d.block(0).selected().is_empty());
            assert_eq!(d.block(0).width(), 2);
        }
        assert!(matches!(derived_subrule(&r, 3, 3), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(
            derived_subrule(&r, 4, 0),
            Err(Error::RaggedBlock {
                block: 0,
                size: 3,
                expected: 4
            })
        ));
    }

    #[test]
    fn majority_real_examples() {
        let u = Universe::new(4).unwrap();
        let x = set(u, &[0, 3]);
        assert_eq!(majority_real(&[x.clone(), x.clone(), x.clone()]).unwrap(), x);

        let u2 = Universe::new(2).unwrap();
        let m = majority_real(&[set(u2, &[]), set(u2, &[0]), set(u2, &[0])]).unwrap();
        assert_eq!(m.to_vec(), vec![0]);

        let m = majority_real(&[set(u2, &[0]), set(u2, &[0, 1]), set(u2, &[1])]).unwrap();
        assert_eq!(m.to_vec(), vec![0, 1]);

        assert_eq!(majority_real(&[]), Err(Error::EmptyInput("reals")));
        assert!(majority_real(&[set(u, &[]), set(u2, &[])]).is_err());
    }

    #[test]
    fn e_chain_examples() {
        let r = one_block(3, &[0], &[0, 1, 2]);
        let u = r.universe();
        let reals = [set(u, &[]), set(u, &[0]), set(u, &[0])];
        let chain = e_chain(&r, &reals).unwrap();
        assert_eq!(chain.sets, vec![vec![0], vec![0], vec![0], vec![0]]);

        let full = Rule::new(
            Universe::new(9).unwrap(),
            vec![
                Block::new([0, 1, 2], [0, 1, 2]).unwrap(),
                Block::new([3, 4, 5], [3, 4, 5]).unwrap(),
            ],
        )
        .unwrap();
        let all = RealSet::full(full.universe());
        let chain = e_chain(&full, &[all.clone(), all.clone(), all]).unwrap();
        assert!(chain.sets.iter().all(|e| e == &vec![0, 1]));

        let empties = vec![RealSet::empty(full.universe()); 3];
        let chain = e_chain(&full, &empties).unwrap();
        assert_eq!(chain.sets[1], Vec::<usize>::new());
    }

    #[test]
    fn majority_combine_example() {
        let r = one_block(3, &[0], &[0, 1, 2]);
        let u = r.universe();
        let cert = majority_combine(&r, &[set(u, &[]), set(u, &[0]), set(u, &[0])]).unwrap();
        assert_eq!(cert.combined.to_vec(), vec![0]);
        assert_eq!(cert.certified, vec![0]);
        assert!(cert.audit(&r).is_empty());
    }

    #[test]
    fn majority_combine_rejects_narrow() {
        let r = Rule::new(Universe::new(4).unwrap(), vec![Block::new([0], [0, 1]).unwrap()]).unwrap();
        let u = r.universe();
        assert_eq!(
            majority_combine(&r, &[set(u, &[0]), set(u, &[1])]),
            Err(Error::MajorityTooNarrow { reals: 2 })
        );
    }

    #[test]
    fn empty_certificate_is_vacuous() {
        let r = one_block(3, &[0, 1, 2], &[0, 1, 2]);
        let u = r.universe();
        let cert = majority_combine(&r, &[set(u, &[]), set(u, &[]), set(u, &[])]).unwrap();
        assert!(cert.certified.is_empty());
        assert!(cert.combined.is_empty());
        assert!(cert.audit(&r).is_empty());
    }
}
