use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{RealSet, Universe};

/// A permutation of the naturals moving finitely many points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawPermutation", into = "RawPermutation")]
pub struct FinSuppPermutation {
    /// Moved points only.
    map: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPermutation {
    pairs: Vec<(usize, usize)>,
}

impl TryFrom<RawPermutation> for FinSuppPermutation {
    type Error = Error;

    fn try_from(raw: RawPermutation) -> Result<Self> {
        FinSuppPermutation::new(raw.pairs)
    }
}

impl From<FinSuppPermutation> for RawPermutation {
    fn from(p: FinSuppPermutation) -> Self {
        RawPermutation {
            pairs: p.map.into_iter().collect(),
        }
    }
}

impl FinSuppPermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Pairs `(from, to)`; fixed pairs are dropped. The listed sources and
    /// targets must coincide as sets.
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut targets = BTreeSet::new();
        for (from, to) in pairs {
            if map.insert(from, to).is_some() {
                return Err(Error::InvalidPermutation(format!("{from} mapped twice")));
            }
            if !targets.insert(to) {
                return Err(Error::InvalidPermutation(format!("{to} hit twice")));
            }
        }
        let sources: BTreeSet<usize> = map.keys().copied().collect();
        if let Some(&stray) = targets.symmetric_difference(&sources).next() {
            return Err(Error::InvalidPermutation(format!(
                "{stray} is not both a source and a target"
            )));
        }
        map.retain(|from, to| from != to);
        Ok(FinSuppPermutation { map })
    }

    /// Cycle notation, e.g. `cycle(&[0, 1, 2])` sends 0→1→2→0.
    pub fn cycle(points: &[usize]) -> Result<Self> {
        let n = points.len();
        Self::new((0..n).map(|i| (points[i], points[(i + 1) % n])))
    }

    /// Builds the permutation `i ↦ f(i)` on `[0, size)`.
    pub fn from_fn(size: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new((0..size).map(|i| (i, f(i))))
    }

    pub fn apply(&self, n: usize) -> usize {
        self.map.get(&n).copied().unwrap_or(n)
    }

    pub fn inverse(&self) -> Self {
        FinSuppPermutation {
            map: self.map.iter().map(|(&f, &t)| (t, f)).collect(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let points: BTreeSet<usize> = self.map.keys().chain(other.map.keys()).copied().collect();
        let map = points
            .into_iter()
            .map(|p| (p, self.apply(other.apply(p))))
            .filter(|(p, q)| p != q)
            .collect();
        FinSuppPermutation { map }
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.map.keys().copied().collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().map(|(&f, &t)| (f, t))
    }

    pub fn check_universe(&self, universe: Universe) -> Result<()> {
        match self.map.keys().next_back() {
            Some(&p) => universe.check(p),
            None => Ok(()),
        }
    }

    /// `σ[X] = {σ(x) : x ∈ X}`.
    pub fn image(&self, x: &RealSet) -> Result<RealSet> {
        self.check_universe(x.universe())?;
        let mut out = RealSet::empty(x.universe());
        for p in x.members() {
            out.insert(self.apply(p))?;
        }
        Ok(out)
    }
}

/// A finite indexed list of distinct subsets of one universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyFragment {
    universe: Universe,
    members: Vec<RealSet>,
    lookup: HashMap<RealSet, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawFamily {
    n: usize,
    members: Vec<Vec<usize>>,
}

impl Serialize for FamilyFragment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawFamily {
            n: self.universe.size(),
            members: self.members.iter().map(RealSet::to_vec).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FamilyFragment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFamily::deserialize(d)?;
        let universe = Universe::new(raw.n).map_err(serde::de::Error::custom)?;
        let members = raw
            .members
            .into_iter()
            .map(|m| RealSet::from_members(universe, m))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FamilyFragment::new(universe, members).map_err(serde::de::Error::custom)
    }
}

impl FamilyFragment {
    pub fn new(universe: Universe, members: Vec<RealSet>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            universe.same_as(m.universe())?;
            if let Some(first) = lookup.insert(m.clone(), i) {
                return Err(Error::DuplicateMember { first, second: i });
            }
        }
        Ok(FamilyFragment {
            universe,
            members,
            lookup,
        })
    }

    /// Keeps the first copy of each set.
    pub fn dedup(universe: Universe, members: impl IntoIterator<Item = RealSet>) -> Result<Self> {
        let mut seen = HashMap::new();
        let mut kept = Vec::new();
        for m in members {
            if !seen.contains_key(&m) {
                seen.insert(m.clone(), kept.len());
                kept.push(m);
            }
        }
        Self::new(universe, kept)
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn members(&self) -> &[RealSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> Result<&RealSet> {
        self.members.get(i).ok_or(Error::IndexOutOfRange {
            what: "family member",
            index: i,
            len: self.members.len(),
        })
    }

    pub fn index_of(&self, set: &RealSet) -> Option<usize> {
        self.lookup.get(set).copied()
    }
}

/// `⋂ positives ∩ ⋂ complements(negatives) ∩ extra`, by member index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BooleanCombo {
    #[serde(default)]
    pub positives: Vec<usize>,
    #[serde(default)]
    pub negatives: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<RealSet>,
}

impl BooleanCombo {
    pub fn new(positives: Vec<usize>, negatives: Vec<usize>, extra: Option<RealSet>) -> Result<Self> {
        let c = BooleanCombo {
            positives,
            negatives,
            extra,
        };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        match self.positives.iter().find(|i| self.negatives.contains(i)) {
            Some(&i) => Err(Error::OverlappingCombo(i)),
            None => Ok(()),
        }
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.positives.iter().chain(&self.negatives).copied()
    }
}

/// Evaluates a combination over an arbitrary indexed list of sets.
pub(crate) fn combo_over(universe: Universe, sets: &[&RealSet], combo: &BooleanCombo) -> Result<RealSet> {
    combo.check()?;
    let fetch = |i: usize| {
        sets.get(i).copied().ok_or(Error::IndexOutOfRange {
            what: "combination member",
            index: i,
            len: sets.len(),
        })
    };
    let mut out = match &combo.extra {
        Some(e) => {
            universe.same_as(e.universe())?;
            e.clone()
        }
        None => RealSet::full(universe),
    };
    for &i in &combo.positives {
        out = out.intersection(fetch(i)?)?;
    }
    for &i in &combo.negatives {
        out = out.difference(fetch(i)?)?;
    }
    Ok(out)
}

pub fn combo_witnesses(family: &FamilyFragment, combo: &BooleanCombo) -> Result<RealSet> {
    let sets: Vec<&RealSet> = family.members.iter().collect();
    combo_over(family.universe, &sets, combo)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityWitnesses {
    pub members: Vec<usize>,
    pub wanted: usize,
    /// True when fewer than `wanted` members qualified.
    pub shortfall: bool,
}

/// Members `C` with `inside ⊆ C` and `C ∩ outside = ∅`, lowest index first.
pub fn density_witnesses(
    family: &FamilyFragment,
    inside: &[usize],
    outside: &[usize],
    want: usize,
) -> Result<DensityWitnesses> {
    for &p in inside.iter().chain(outside) {
        family.universe.check(p)?;
    }
    if let Some(&p) = inside.iter().find(|p| outside.contains(p)) {
        return Err(Error::OverlappingWitnessSets(p));
    }
    let members: Vec<usize> = family
        .members
        .iter()
        .enumerate()
        .filter(|(_, c)| inside.iter().all(|&p| c.has(p)) && outside.iter().all(|&p| !c.has(p)))
        .map(|(i, _)| i)
        .take(want)
        .collect();
    Ok(DensityWitnesses {
        shortfall: members.len() < want,
        members,
        wanted: want,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutomorphismCheck {
    pub holds: bool,
    /// A member whose image is not a member.
    pub counterexample: Option<usize>,
    /// `images[i]` is the index of `σ[C_i]` when it holds.
    pub images: Vec<usize>,
}

/// Set-exact check that `σ` permutes the member list. Images of distinct
/// sets are distinct, so landing inside the list already forces a bijection.
pub fn is_automorphism(sigma: &FinSuppPermutation, family: &FamilyFragment) -> Result<AutomorphismCheck> {
    sigma.check_universe(family.universe)?;
    let mut images = Vec::with_capacity(family.len());
    for (i, c) in family.members.iter().enumerate() {
        match family.index_of(&sigma.image(c)?) {
            Some(j) => images.push(j),
            None => {
                return Ok(AutomorphismCheck {
                    holds: false,
                    counterexample: Some(i),
                    images: Vec::new(),
                })
            }
        }
    }
    Ok(AutomorphismCheck {
        holds: true,
        counterexample: None,
        images,
    })
}

/// Members `C_0, C_1, ...` with `C_{2n+1} = σ[C_{2n}]`, `k* ∈ C_{2n}` and
/// `σ(k*) ∉ C_{2n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportChain {
    pub k_star: usize,
    pub members: Vec<usize>,
}

impl SupportChain {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.chunks(2).map(|c| (c[0], c[1]))
    }

    /// `C_{2n} ∖ C_{2n+1}` for each pair.
    pub fn differences(&self, family: &FamilyFragment) -> Result<Vec<RealSet>> {
        self.pairs()
            .map(|(a, b)| family.member(a)?.difference(family.member(b)?))
            .collect()
    }

    /// Recomputes every claimed property from the sets themselves.
    pub fn audit(&self, family: &FamilyFragment, sigma: &FinSuppPermutation) -> Vec<String> {
        let mut breaches = Vec::new();
        let support: BTreeSet<usize> = sigma.support().into_iter().collect();
        let distinct: BTreeSet<usize> = self.members.iter().copied().collect();
        if distinct.len() != self.members.len() {
            breaches.push("chain repeats a member".into());
        }
        for (n, (a, b)) in self.pairs().enumerate() {
            let (Ok(ca), Ok(cb)) = (family.member(a), family.member(b)) else {
                breaches.push(format!("pair {n} names a missing member"));
                continue;
            };
            match sigma.image(ca) {
                Ok(img) if img == *cb => {}
                _ => breaches.push(format!("pair {n}: C_{} is not σ[C_{}]", 2 * n + 1, 2 * n)),
            }
            let diff: Vec<usize> = ca.members().filter(|&p| !cb.has(p)).collect();
            if !diff.contains(&self.k_star) {
                breaches.push(format!("pair {n}: k* = {} missing from the difference", self.k_star));
            }
            if let Some(p) = diff.iter().find(|p| !support.contains(p)) {
                breaches.push(format!("pair {n}: difference point {p} is fixed by σ"));
            }
        }
        breaches
    }
}

/// Picks `pairs` disjoint-in-index pairs `(C, σ[C])`, never reusing a member
/// or touching `excluded`. `k*` is the least moved point for which enough
/// pairs exist.
pub fn support_chain(
    family: &FamilyFragment,
    sigma: &FinSuppPermutation,
    pairs: usize,
    excluded: &[usize],
) -> Result<SupportChain> {
    if sigma.is_identity() {
        return Err(Error::IdentityPermutation);
    }
    let check = is_automorphism(sigma, family)?;
    if let Some(member) = check.counterexample {
        return Err(Error::NotAutomorphism { member });
    }
    let mut best = 0;
    for k in sigma.support() {
        let sk = sigma.apply(k);
        let mut used: BTreeSet<usize> = excluded.iter().copied().collect();
        let mut members = Vec::with_capacity(2 * pairs);
        for (i, c) in family.members.iter().enumerate() {
            if members.len() == 2 * pairs {
                break;
            }
            let j = check.images[i];
            if c.has(k) && !c.has(sk) && !used.contains(&i) && !used.contains(&j) {
                used.insert(i);
                used.insert(j);
                members.push(i);
                members.push(j);
            }
        }
        if members.len() == 2 * pairs {
            return Ok(SupportChain { k_star: k, members });
        }
        best = best.max(members.len() / 2);
    }
    Err(Error::Shortfall {
        what: "support-chain pairs",
        wanted: pairs,
        found: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: usize) -> Universe {
        Universe::new(n).unwrap()
    }

    fn set(n: usize, m: &[usize]) -> RealSet {
        RealSet::from_members(u(n), m.iter().copied()).unwrap()
    }

    #[test]
    fn permutation_basics() {
        let id = FinSuppPermutation::identity();
        assert!(id.support().is_empty());
        let t = FinSuppPermutation::cycle(&[0, 1]).unwrap();
        assert_eq!(t.support(), vec![0, 1]);
        let c = FinSuppPermutation::cycle(&[0, 1, 2]).unwrap();
        assert_eq!(c.support(), vec![0, 1, 2]);
        assert_eq!(c.apply(2), 0);
        assert_eq!(c.inverse().apply(0), 2);
        assert!(c.compose(&c.inverse()).is_identity());
        // (0 1 2) ∘ (0 1): 0 -> 1 -> 2
        assert_eq!(c.compose(&t).apply(0), 2);
        assert!(FinSuppPermutation::new([(0, 1), (1, 1)]).is_err());
        assert!(FinSuppPermutation::new([(0, 1)]).is_err());
        assert!(FinSuppPermutation::new([(3, 3)]).unwrap().is_identity());
    }

    #[test]
    fn permutation_json() {
        let c = FinSuppPermutation::cycle(&[2, 0]).unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"pairs":[[0,2],[2,0]]}"#);
        let back: FinSuppPermutation = serde_json::from_str(r#"{"pairs":[[5,6],[6,5]]}"#).unwrap();
        assert_eq!(back.apply(5), 6);
        assert!(serde_json::from_str::<FinSuppPermutation>(r#"{"pairs":[[5,6]]}"#).is_err());
    }

    #[test]
    fn family_invariants() {
        assert_eq!(
            FamilyFragment::new(u(4), vec![set(4, &[1]), set(4, &[2]), set(4, &[1])]),
            Err(Error::DuplicateMember { first: 0, second: 2 })
        );
        let f = FamilyFragment::dedup(u(4), vec![set(4, &[1]), set(4, &[1]), set(4, &[3])]).unwrap();
        assert_eq!(f.len(), 2);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"n":4,"members":[[1],[3]]}"#);
        let back: FamilyFragment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn combos() {
        let f = FamilyFragment::new(u(6), vec![set(6, &[0, 1, 2]), set(6, &[2, 3])]).unwrap();
        assert_eq!(
            combo_witnesses(&f, &BooleanCombo::default()).unwrap(),
            RealSet::full(u(6))
        );
        let c = BooleanCombo::new(vec![0], vec![1], None).unwrap();
        assert_eq!(combo_witnesses(&f, &c).unwrap().to_vec(), vec![0, 1]);
        let c = BooleanCombo::new(vec![0], vec![1], Some(set(6, &[1, 5]))).unwrap();
        assert_eq!(combo_witnesses(&f, &c).unwrap().to_vec(), vec![1]);
        assert_eq!(
            BooleanCombo::new(vec![1], vec![1], None),
            Err(Error::OverlappingCombo(1))
        );
        assert!(combo_witnesses(&f, &BooleanCombo::new(vec![7], vec![], None).unwrap()).is_err());
    }

    #[test]
    fn density() {
        let f = FamilyFragment::new(u(5), vec![set(5, &[0, 1]), set(5, &[0]), set(5, &[1, 2])]).unwrap();
        let d = density_witnesses(&f, &[], &[], 2).unwrap();
        assert_eq!(d.members, vec![0, 1]);
        assert!(!d.shortfall);
        let d = density_witnesses(&f, &[0], &[1], 3).unwrap();
        assert_eq!(d.members, vec![1]);
        assert!(d.shortfall);
        let d = density_witnesses(&f, &[4], &[], 1).unwrap();
        assert!(d.members.is_empty() && d.shortfall);
        assert_eq!(
            density_witnesses(&f, &[1], &[1], 1),
            Err(Error::OverlappingWitnessSets(1))
        );
    }

    #[test]
    fn automorphisms() {
        let f = FamilyFragment::new(u(4), vec![set(4, &[0, 2]), set(4, &[1, 2]), set(4, &[3])]).unwrap();
        let id = FinSuppPermutation::identity();
        assert!(is_automorphism(&id, &f).unwrap().holds);
        let t = FinSuppPermutation::cycle(&[0, 1]).unwrap();
        let check = is_automorphism(&t, &f).unwrap();
        assert!(check.holds);
        assert_eq!(check.images, vec![1, 0, 2]);
        let bad = FinSuppPermutation::cycle(&[2, 3]).unwrap();
        assert_eq!(is_automorphism(&bad, &f).unwrap().counterexample, Some(0));
    }

    #[test]
    fn chain_example() {
        let f = FamilyFragment::new(u(4), vec![set(4, &[0, 2]), set(4, &[1, 2])]).unwrap();
        let t = FinSuppPermutation::cycle(&[0, 1]).unwrap();
        let chain = support_chain(&f, &t, 1, &[]).unwrap();
        assert_eq!(chain.k_star, 0);
        assert_eq!(chain.members, vec![0, 1]);
        assert_eq!(chain.differences(&f).unwrap()[0].to_vec(), vec![0]);
        assert!(chain.audit(&f, &t).is_empty());

        assert_eq!(support_chain(&f, &t, 0, &[]).unwrap().members, Vec::<usize>::new());
        assert_eq!(
            support_chain(&f, &FinSuppPermutation::identity(), 1, &[]),
            Err(Error::IdentityPermutation)
        );
        assert!(matches!(
            support_chain(&f, &t, 2, &[]),
            Err(Error::Shortfall { found: 1, .. })
        ));
        assert!(matches!(
            support_chain(&f, &t, 1, &[1]),
            Err(Error::Shortfall { found: 0, .. })
        ));
    }
}
