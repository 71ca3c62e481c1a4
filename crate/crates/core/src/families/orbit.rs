use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::permutation::{
    combo_over, combo_witnesses, support_chain, BooleanCombo, FamilyFragment, FinSuppPermutation, SupportChain,
};
use super::polynomial::{polynomial_index, polynomial_member, Polynomial};
use crate::error::{Error, Result};
use crate::rule::{Block, Rule};
use crate::set::{RealSet, Universe};
use crate::Rational;

/// A rule whose matched blocks force `j_n ∈ A ∩ ⋂_{ℓ<p} σ_ℓ[X] ∖ ⋃_{ℓ≥p} σ_ℓ[X]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitRule {
    pub rule: Rule,
    /// `j_n` for each block.
    pub points: Vec<usize>,
    pub positive_count: usize,
    /// One chain per `τ = σ_k ∘ σ_ℓ^{-1}`, `k < ℓ`.
    pub chains: Vec<SupportChain>,
    /// The combination `A` after intersecting with the family combo.
    pub a_set: RealSet,
    /// `A ∩ ⋂ C_{2i} ∖ ⋃ C_{2i+1}`.
    pub e_set: RealSet,
}

/// All `σ_k ∘ σ_ℓ^{-1}` for `k < ℓ`.
pub fn pair_quotients(sigmas: &[FinSuppPermutation]) -> Vec<(usize, usize, FinSuppPermutation)> {
    let mut out = Vec::new();
    for k in 0..sigmas.len() {
        for l in k + 1..sigmas.len() {
            out.push((k, l, sigmas[k].compose(&sigmas[l].inverse())));
        }
    }
    out
}

/// Greedy orbit-rule construction. `A` is the family combination `combo`,
/// further cut down by `a` when given. Support chains avoid the combo's
/// members and each other, so `E` is itself a Boolean combination of
/// distinct members.
pub fn orbit_rule(
    family: &FamilyFragment,
    combo: &BooleanCombo,
    sigmas: &[FinSuppPermutation],
    positive_count: usize,
    a: Option<&RealSet>,
    blocks_wanted: usize,
) -> Result<OrbitRule> {
    let universe = family.universe();
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("automorphism list"));
    }
    if positive_count > sigmas.len() {
        return Err(Error::IndexOutOfRange {
            what: "positive count",
            index: positive_count,
            len: sigmas.len(),
        });
    }
    for s in sigmas {
        s.check_universe(universe)?;
    }
    let mut a_set = combo_witnesses(family, combo)?;
    if let Some(a) = a {
        a_set = a_set.intersection(a)?;
    }

    let mut excluded: Vec<usize> = combo.members().collect();
    let mut chains = Vec::new();
    let mut e_set = a_set.clone();
    for (_, _, tau) in pair_quotients(sigmas) {
        if tau.is_identity() {
            return Err(Error::IdentityPermutation);
        }
        let chain = support_chain(family, &tau, 1, &excluded)?;
        excluded.extend(&chain.members);
        let (c0, c1) = (family.member(chain.members[0])?, family.member(chain.members[1])?);
        e_set = e_set.intersection(c0)?.difference(c1)?;
        chains.push(chain);
    }

    let inverses: Vec<FinSuppPermutation> = sigmas.iter().map(FinSuppPermutation::inverse).collect();
    let mut used = RealSet::empty(universe);
    let mut blocks = Vec::new();
    let mut points = Vec::new();
    'scan: for j in e_set.members() {
        if blocks.len() == blocks_wanted {
            break;
        }
        if used.has(j) {
            continue;
        }
        let mut selected = Vec::new();
        let mut support = Vec::new();
        for (l, inv) in inverses.iter().enumerate() {
            let q = inv.apply(j);
            if used.has(q) {
                continue 'scan;
            }
            let want = l < positive_count;
            if let Some(pos) = support.iter().position(|&s| s == q) {
                // repeated preimage: keep only if both ask for the same bit
                if selected.contains(&support[pos]) != want {
                    continue 'scan;
                }
                continue;
            }
            support.push(q);
            if want {
                selected.push(q);
            }
        }
        for &q in &support {
            used.insert(q)?;
        }
        used.insert(j)?;
        blocks.push(Block::new(selected, support)?);
        points.push(j);
    }
    if blocks.len() < blocks_wanted {
        return Err(Error::Shortfall {
            what: "orbit blocks",
            wanted: blocks_wanted,
            found: blocks.len(),
        });
    }
    Ok(OrbitRule {
        rule: Rule::new(universe, blocks)?,
        points,
        positive_count,
        chains,
        a_set,
        e_set,
    })
}

impl OrbitRule {
    /// Structural checks: width, the distinct-preimage equality, `j_n ∈ E`,
    /// and `E` inside every `supp τ`.
    pub fn audit(&self, sigmas: &[FinSuppPermutation]) -> Vec<String> {
        let mut breaches = Vec::new();
        let m = sigmas.len();
        breaches.extend(self.rule.check_width(&crate::rule::WidthBound::Constant(m)).messages());
        for (n, (&j, block)) in self.points.iter().zip(self.rule.blocks()).enumerate() {
            if !self.e_set.has(j) {
                breaches.push(format!("j_{n} = {j} outside E"));
            }
            let mut pre: Vec<usize> = sigmas.iter().map(|s| s.inverse().apply(j)).collect();
            pre.sort_unstable();
            pre.dedup();
            if pre != block.support() {
                breaches.push(format!("block {n} is not the preimage set of {j}"));
            }
            if (block.width() == m) != (pre.len() == m) {
                breaches.push(format!(
                    "block {n}: width {} vs {} distinct preimages",
                    block.width(),
                    pre.len()
                ));
            }
        }
        for ((k, l, tau), chain) in pair_quotients(sigmas).iter().zip(&self.chains) {
            let moved: Vec<usize> = tau.support();
            if let Some(p) = self.e_set.members().find(|p| moved.binary_search(p).is_err()) {
                breaches.push(format!(
                    "E point {p} fixed by σ_{k}∘σ_{l}^-1 (chain k*={})",
                    chain.k_star
                ));
            }
        }
        breaches
    }

    /// For every block `x` matches, recomputes `σ_ℓ[X]` directly and checks
    /// that `j_n` lands in exactly the positive images and in `A`.
    pub fn verify(&self, sigmas: &[FinSuppPermutation], x: &RealSet) -> Result<Vec<String>> {
        let images = sigmas.iter().map(|s| s.image(x)).collect::<Result<Vec<_>>>()?;
        let mut breaches = Vec::new();
        for (n, (&j, block)) in self.points.iter().zip(self.rule.blocks()).enumerate() {
            if !block.matched_by(x) {
                continue;
            }
            if !self.a_set.has(j) {
                breaches.push(format!("block {n}: j = {j} not in A"));
            }
            for (l, img) in images.iter().enumerate() {
                if img.has(j) != (l < self.positive_count) {
                    breaches.push(format!("block {n}: j = {j} has wrong membership in σ_{l}[X]"));
                }
            }
        }
        Ok(breaches)
    }
}

/// A combination over `family ∪ {σ[X] : σ ∈ G}`; index `family.len() + g`
/// names `G[g][X]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrbitCombo {
    #[serde(flatten)]
    pub combo: BooleanCombo,
    /// Points the caller expects among the witnesses.
    #[serde(default)]
    pub certified: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtendRow {
    pub witnesses: Vec<usize>,
    pub count: usize,
    /// Some positive set equals some negative set.
    pub degenerate: bool,
    pub covers_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtendReport {
    pub rows: Vec<ExtendRow>,
}

impl ExtendReport {
    pub fn uncovered(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.covers_certified)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn extend_check(
    family: &FamilyFragment,
    group: &[FinSuppPermutation],
    x: &RealSet,
    combos: &[OrbitCombo],
) -> Result<ExtendReport> {
    family.universe().same_as(x.universe())?;
    let orbit = group.iter().map(|g| g.image(x)).collect::<Result<Vec<_>>>()?;
    let sets: Vec<&RealSet> = family.members().iter().chain(&orbit).collect();
    let rows = combos
        .par_iter()
        .map(|c| {
            let w = combo_over(family.universe(), &sets, &c.combo)?;
            let degenerate = c
                .combo
                .positives
                .iter()
                .any(|&p| c.combo.negatives.iter().any(|&q| sets[p] == sets[q]));
            Ok(ExtendRow {
                covers_certified: c.certified.iter().all(|&p| w.has(p)),
                count: w.len(),
                witnesses: w.to_vec(),
                degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtendReport { rows })
}

/// Family `{A_r}` over `polys`, duplicates dropped, with the rationals kept.
pub fn polynomial_fragment(polys: &[Polynomial], rationals: &[Rational]) -> Result<(FamilyFragment, Vec<Rational>)> {
    let universe = Universe::new(polys.len())?;
    let mut kept = Vec::new();
    let mut members = Vec::new();
    for r in rationals {
        let m = polynomial_member(r, polys)?;
        if !members.contains(&m) {
            members.push(m);
            kept.push(r.clone());
        }
    }
    Ok((FamilyFragment::new(universe, members)?, kept))
}

/// The permutation of indices induced by a map on polynomials, which must
/// send the list onto itself.
pub fn induced_permutation(
    polys: &[Polynomial],
    f: impl Fn(&Polynomial) -> Result<Polynomial>,
) -> Result<FinSuppPermutation> {
    let index = polynomial_index(polys);
    let targets = polys
        .iter()
        .map(|p| {
            let q = f(p)?;
            index
                .get(&q)
                .copied()
                .ok_or_else(|| Error::InvalidPermutation(format!("{q} is outside the enumerated list")))
        })
        .collect::<Result<Vec<_>>>()?;
    FinSuppPermutation::from_fn(polys.len(), |i| targets[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::is_automorphism;
    use crate::families::polynomial::polynomials_up_to_height;
    use crate::scalar::ratio;

    fn set(n: usize, m: &[usize]) -> RealSet {
        RealSet::from_members(Universe::new(n).unwrap(), m.iter().copied()).unwrap()
    }

    fn signed(r: Rational) -> [Rational; 2] {
        [r.clone(), -r]
    }

    #[test]
    fn single_identity_gives_singletons() {
        let f = FamilyFragment::new(Universe::new(8).unwrap(), vec![set(8, &[1, 3, 5])]).unwrap();
        let combo = BooleanCombo::new(vec![0], vec![], None).unwrap();
        let out = orbit_rule(&f, &combo, &[FinSuppPermutation::identity()], 1, None, 3).unwrap();
        assert_eq!(out.points, vec![1, 3, 5]);
        for (b, &j) in out.rule.blocks().iter().zip(&out.points) {
            assert_eq!(b.support(), &[j]);
            assert_eq!(b.selected(), &[j]);
        }
        assert!(matches!(
            orbit_rule(&f, &combo, &[FinSuppPermutation::identity()], 1, None, 4),
            Err(Error::Shortfall { found: 3, .. })
        ));
    }

    #[test]
    fn repeated_sigma_is_rejected() {
        let f = FamilyFragment::new(Universe::new(4).unwrap(), vec![set(4, &[0])]).unwrap();
        let id = FinSuppPermutation::identity();
        assert_eq!(
            orbit_rule(&f, &BooleanCombo::default(), &[id.clone(), id], 1, None, 1),
            Err(Error::IdentityPermutation)
        );
    }

    #[test]
    fn negation_pairs() {
        let polys = polynomials_up_to_height(3).unwrap();
        let rationals: Vec<Rational> = (1..=6u64)
            .flat_map(|a| (1..=4u64).map(move |b| ratio(a, b)))
            .flat_map(signed)
            .collect();
        let (family, _) = polynomial_fragment(&polys, &rationals).unwrap();
        let neg = induced_permutation(&polys, |p| Ok(p.negate_argument())).unwrap();
        assert!(is_automorphism(&neg, &family).unwrap().holds);

        let sigmas = [FinSuppPermutation::identity(), neg.clone()];
        let combo = BooleanCombo::new(vec![0], vec![], None).unwrap();
        let out = orbit_rule(&family, &combo, &sigmas, 1, None, 20).unwrap();
        assert!(out.audit(&sigmas).is_empty());
        for (b, &j) in out.rule.blocks().iter().zip(&out.points) {
            let mut expect = vec![j, neg.inverse().apply(j)];
            expect.sort_unstable();
            assert_eq!(b.support(), expect.as_slice());
            assert_eq!(b.selected(), &[j]);
        }
        let x =
            crate::constructions::diagonal_follower(family.universe(), std::slice::from_ref(&out.rule), 20).unwrap();
        assert_eq!(x.achieved, vec![20]);
        assert!(out.verify(&sigmas, &x.real).unwrap().is_empty());
    }

    #[test]
    fn extension_rows() {
        let f = FamilyFragment::new(Universe::new(6).unwrap(), vec![set(6, &[0, 1, 2]), set(6, &[2, 3])]).unwrap();
        let x = set(6, &[0, 1, 2]);
        let g = [FinSuppPermutation::identity()];
        let combos = [
            OrbitCombo {
                combo: BooleanCombo::new(vec![0], vec![2], None).unwrap(),
                certified: vec![],
            },
            OrbitCombo {
                combo: BooleanCombo::new(vec![2], vec![1], None).unwrap(),
                certified: vec![0],
            },
            OrbitCombo {
                combo: BooleanCombo::new(vec![2], vec![], None).unwrap(),
                certified: vec![4],
            },
        ];
        let rep = extend_check(&f, &g, &x, &combos).unwrap();
        assert!(rep.rows[0].degenerate);
        assert_eq!(rep.rows[0].count, 0);
        assert_eq!(rep.rows[1].witnesses, vec![0, 1]);
        assert!(!rep.rows[1].degenerate);
        assert_eq!(rep.uncovered(), vec![2]);
    }
}
