//! The acceptance battery: randomized and exhaustive checks of every
//! construction against its guarantee, driven by a single seed.
//!
//! Criterion `c` draws from ChaCha8 stream `c` of the suite seed, so criteria
//! are independent of each other and of evaluation order.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::{
    diagonal_follower, majority_combine, splice_certify, tree_to_rule, SpliceFunction, TreeOracle,
};
use crate::error::{Error, Result};
use crate::families::{
    induced_permutation, is_automorphism, orbit_rule, polynomial_fragment, polynomials_up_to_height, support_chain,
    BooleanCombo, FamilyFragment, FinSuppPermutation,
};
use crate::laver::{avoiding_rule, block_encode, capture_check, coincident_pair, interval_ladder, BlockSlalom};
use crate::oracle;
use crate::prediction::{evasion_transfer, Side};
use crate::rule::{match_set, one_rule_witness, validate_rule, Block, Rule, WidthBound};
use crate::scalar::ratio;
use crate::scenario::{Report, Status, SCHEMA_VERSION};
use crate::set::{RealSet, Universe, Word};
use crate::stochastic::{exact_avoid_probability, mc_follow_estimate};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Full,
}

impl Scale {
    fn pick(self, small: usize, full: usize) -> usize {
        match self {
            Scale::Small => small,
            Scale::Full => full,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            other => Err(Error::Schema(format!("scale: expected small or full, got {other:?}"))),
        }
    }
}

const MAX_LISTED: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub checks: u64,
    pub exceptions: u64,
    /// The first few exception messages.
    pub examples: Vec<String>,
    pub details: Value,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({} checks, {} exceptions)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.checks,
            self.exceptions
        )
    }
}

/// Accumulates checks and exceptions for one criterion.
#[derive(Default)]
struct Tally {
    checks: u64,
    exceptions: u64,
    examples: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(what());
        }
    }

    fn fail(&mut self, msg: String) {
        self.exceptions += 1;
        if self.examples.len() < MAX_LISTED {
            self.examples.push(msg);
        }
    }

    fn breaches(&mut self, list: Vec<String>, ctx: &str) {
        self.checks += 1;
        for b in list {
            self.fail(format!("{ctx}: {b}"));
        }
    }

    fn absorb<T>(&mut self, r: Result<T>, ctx: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.fail(format!("{ctx}: {e}"));
                None
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.exceptions += other.exceptions;
        for e in other.examples {
            if self.examples.len() < MAX_LISTED {
                self.examples.push(e);
            }
        }
    }

    fn finish(self, id: u8, title: &'static str, details: Value) -> CriterionOutcome {
        CriterionOutcome {
            id,
            title,
            passed: self.exceptions == 0,
            checks: self.checks,
            exceptions: self.exceptions,
            examples: self.examples,
            details,
        }
    }
}

pub const TITLES: [&str; 11] = [
    "majority combiner certifies the shared indices",
    "counting dichotomy on certified blocks",
    "pigeonhole coincident pairs",
    "slalom avoidance",
    "evasion transfer",
    "empty/full witness for 1-rules",
    "tree-to-rule escapes the tree",
    "exact avoidance probability and sampling",
    "splice certification",
    "support chains",
    "orbit rules",
];

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Rng for sub-task `t` of criterion `id`, so parallel trials stay reproducible.
fn trial_rng(seed: u64, id: u64, t: usize) -> ChaCha8Rng {
    let mut base = stream(seed, id);
    ChaCha8Rng::seed_from_u64(base.gen::<u64>() ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_real(rng: &mut ChaCha8Rng, universe: Universe) -> RealSet {
    RealSet::from_fn(universe, |_| rng.gen())
}

/// `count` disjoint blocks whose widths come from `width`, on random points.
fn random_rule(
    rng: &mut ChaCha8Rng,
    universe: Universe,
    count: usize,
    mut width: impl FnMut(&mut ChaCha8Rng) -> usize,
    points: Option<Vec<usize>>,
) -> Result<Rule> {
    let widths: Vec<usize> = (0..count).map(|_| width(rng)).collect();
    let total: usize = widths.iter().sum();
    let pool = match points {
        Some(mut p) => {
            p.shuffle(rng);
            p
        }
        None => index::sample(rng, universe.size(), total.min(universe.size())).into_vec(),
    };
    if pool.len() < total {
        return Err(Error::Shortfall {
            what: "points for random blocks",
            wanted: total,
            found: pool.len(),
        });
    }
    let mut at = 0;
    let mut blocks = Vec::with_capacity(count);
    for w in widths {
        let b = &pool[at..at + w];
        at += w;
        let a: Vec<usize> = b.iter().copied().filter(|_| rng.gen()).collect();
        blocks.push(Block::new(a, b.iter().copied())?);
    }
    Rule::new(universe, blocks)
}

// ---- criteria 1 and 2 ----

fn majority_trial(seed: u64, t: usize) -> Result<(Tally, Tally)> {
    let mut rng = trial_rng(seed, 1, t);
    let k = 2 + t % 4;
    let width = k + 1;
    let universe = Universe::new(20_000)?;
    let rule = random_rule(&mut rng, universe, 500, |_| width, None)?;
    let shared_count = rng.gen_range(50..=80);
    let shared: BTreeSet<usize> = index::sample(&mut rng, 500, shared_count).into_iter().collect();
    let reals: Vec<RealSet> = (0..width)
        .map(|i| {
            let mut c = random_real(&mut rng, universe);
            for &n in &shared {
                let b = rule.block(n);
                for (pos, &p) in b.support().iter().enumerate() {
                    if pos != i {
                        c.set(p, b.selects(p)).expect("block inside universe");
                    }
                }
            }
            c
        })
        .collect();
    let cert = majority_combine(&rule, &reals)?;
    let mut one = Tally::default();
    let certified: BTreeSet<usize> = cert.certified.iter().copied().collect();
    one.check(shared.is_subset(&certified), || {
        format!(
            "trial {t}: E_(k+1) misses {:?}",
            shared.difference(&certified).collect::<Vec<_>>()
        )
    });
    let matched: BTreeSet<usize> = oracle::match_set_pointwise(&cert.combined, &rule)?
        .into_iter()
        .collect();
    for &n in &cert.certified {
        one.check(matched.contains(&n), || {
            format!("trial {t}: certified block {n} not matched by C")
        });
    }
    one.breaches(cert.audit(&rule), &format!("trial {t}"));

    let mut two = Tally::default();
    for (n, counts) in cert
        .certified
        .iter()
        .zip(oracle::membership_counts(&reals, &rule, &cert.certified)?)
    {
        for c in counts {
            two.check(c <= 1 || c >= k, || {
                format!("trial {t}: block {n} has a point in {c} of {width} reals")
            });
        }
    }
    Ok((one, two))
}

fn majority_criteria(seed: u64, scale: Scale) -> (CriterionOutcome, CriterionOutcome) {
    let trials = scale.pick(40, 200);
    let results: Vec<Result<(Tally, Tally)>> = (0..trials).into_par_iter().map(|t| majority_trial(seed, t)).collect();
    let (mut one, mut two) = (Tally::default(), Tally::default());
    for (t, r) in results.into_iter().enumerate() {
        if let Some((a, b)) = one.absorb(r, &format!("trial {t}")) {
            one.merge(a);
            two.merge(b);
        }
    }
    let details = json!({ "trials": trials, "universe": 20_000, "blocks": 500 });
    (
        one.finish(1, TITLES[0], details.clone()),
        two.finish(2, TITLES[1], details),
    )
}

// ---- criterion 3 ----

fn check_pair(tally: &mut Tally, words: &[Word], bound: usize, len: usize) {
    let ctx = || words.iter().map(Word::to_string).collect::<Vec<_>>().join(",");
    match coincident_pair(words, bound, len) {
        Ok(p) => {
            tally.check(p.guaranteed, || {
                format!("{{{}}}: existence not flagged as guaranteed", ctx())
            });
            tally.check(words.iter().all(|w| w.bit(p.i) == w.bit(p.j)), || {
                format!("{{{}}}: ({}, {}) is not coincident", ctx(), p.i, p.j)
            });
            tally.check(oracle::coincident_pair_scan(words, len) == Some((p.i, p.j)), || {
                format!("{{{}}}: pair scan disagrees with ({}, {})", ctx(), p.i, p.j)
            });
        }
        Err(e) => tally.fail(format!("{{{}}}: {e}", ctx())),
    }
}

fn word_of(code: usize, len: usize) -> Word {
    Word((0..len).map(|b| (code >> b) & 1 == 1).collect())
}

fn pigeonhole(seed: u64, scale: Scale) -> CriterionOutcome {
    let mut tally = Tally::default();
    let mut exhaustive = 0u64;
    for n in [1usize, 2] {
        let len = (1 << n) + 1;
        let all: Vec<Word> = (0..1usize << len).map(|c| word_of(c, len)).collect();
        // every set of 1..=n distinct words
        for size in 1..=n {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                let words: Vec<Word> = idx.iter().map(|&i| all[i].clone()).collect();
                check_pair(&mut tally, &words, n, len);
                exhaustive += 1;
                // next combination
                let mut p = size;
                while p > 0 && idx[p - 1] == all.len() - size + p - 1 {
                    p -= 1;
                }
                if p == 0 {
                    break;
                }
                idx[p - 1] += 1;
                for q in p..size {
                    idx[q] = idx[q - 1] + 1;
                }
            }
        }
    }
    let samples = scale.pick(20_000, 100_000);
    let chunks = 16;
    let partial: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, 3, c);
            let mut t = Tally::default();
            for _ in (c * samples / chunks)..((c + 1) * samples / chunks) {
                let codes = index::sample(&mut rng, 1 << 9, 3);
                let words: Vec<Word> = codes.iter().map(|c| word_of(c, 9)).collect();
                check_pair(&mut t, &words, 3, 9);
            }
            t
        })
        .collect();
    for t in partial {
        tally.merge(t);
    }
    tally.finish(
        3,
        TITLES[2],
        json!({ "exhaustive_sets": exhaustive, "random_sets": samples }),
    )
}

// ---- criterion 4 ----

fn slalom_trial(seed: u64, t: usize) -> Result<Tally> {
    let mut rng = trial_rng(seed, 4, t);
    let universe = Universe::new(4110)?;
    let ladder = interval_ladder(universe, 12)?;
    let x = random_real(&mut rng, universe);
    let words = block_encode(&x, &ladder)?;
    let sets: Vec<Vec<Word>> = (1..12)
        .map(|n| {
            let len = ladder.interval_len(n);
            let decoys = rng.gen_range(0..n);
            let mut s = vec![words[n].clone()];
            while s.len() < decoys + 1 {
                let w = Word((0..len).map(|_| rng.gen()).collect());
                if !s.contains(&w) {
                    s.push(w);
                }
            }
            s.shuffle(&mut rng);
            s
        })
        .collect();
    let slalom = BlockSlalom::new(ladder, sets)?;
    let out = avoiding_rule(&slalom)?;
    let mut tally = Tally::default();
    tally.check(capture_check(&slalom, &x)?.len() == 11, || {
        format!("trial {t}: X not captured")
    });
    let matches = oracle::match_set_pointwise(&x, &out.rule)?;
    tally.check(matches.is_empty(), || {
        format!("trial {t}: X matches blocks {matches:?}")
    });
    tally.check(match_set(&x, &out.rule)?.is_empty(), || {
        format!("trial {t}: match_set nonempty")
    });
    tally.breaches(out.audit(&slalom, &x), &format!("trial {t}"));
    Ok(tally)
}

fn slalom_avoidance(seed: u64, scale: Scale) -> CriterionOutcome {
    let trials = scale.pick(25, 100);
    let mut tally = Tally::default();
    let results: Vec<Result<Tally>> = (0..trials).into_par_iter().map(|t| slalom_trial(seed, t)).collect();
    for (t, r) in results.into_iter().enumerate() {
        if let Some(x) = tally.absorb(r, &format!("trial {t}")) {
            tally.merge(x);
        }
    }
    tally.finish(
        4,
        TITLES[3],
        json!({ "reals": trials, "universe": 4110, "intervals": 12 }),
    )
}

// ---- criterion 5 ----

fn transfer_rule(seed: u64, r: usize) -> Result<Tally> {
    let mut rng = trial_rng(seed, 5, r);
    let universe = Universe::new(12)?;
    let rule = random_rule(&mut rng, universe, 3, |_| 2, None)?;
    let mut tally = Tally::default();
    for code in 0u32..1 << 12 {
        let x = RealSet::from_fn(universe, |p| (code >> p) & 1 == 1);
        let report = match evasion_transfer(&x, &rule) {
            Ok(rep) => rep,
            Err(e) => {
                tally.fail(format!("rule {r}, X={code:#x}: {e}"));
                continue;
            }
        };
        tally.breaches(report.audit(&rule), &format!("rule {r}, X={code:#x}"));
        let direct = oracle::rule_evasions(&x, &rule)?;
        let points: Vec<usize> = report.entries.iter().map(|e| e.point).collect();
        tally.check(points == direct, || {
            format!("rule {r}, X={code:#x}: evasions {points:?} vs {direct:?}")
        });
        let complement = x.complement();
        for e in &report.entries {
            let target = match e.matched_by {
                Side::Real => &x,
                Side::Complement => &complement,
            };
            let b = rule.block(e.block);
            let ok = b.support().iter().all(|&p| target.has(p) == b.selects(p));
            tally.check(ok, || {
                format!(
                    "rule {r}, X={code:#x}: block {} not matched by {:?}",
                    e.block, e.matched_by
                )
            });
            let trace: Vec<usize> = b.support().iter().copied().filter(|&p| x.has(p)).collect();
            let selected = b.selected();
            let case_holds = if selected.len() == 1 {
                trace.len() == 1
            } else {
                trace.is_empty() || trace.len() == 2
            };
            let side = if trace == selected {
                Side::Real
            } else {
                Side::Complement
            };
            tally.check(case_holds && e.matched_by == side, || {
                format!("rule {r}, X={code:#x}: block {} took the wrong branch", e.block)
            });
        }
    }
    Ok(tally)
}

fn evasion_transfer_criterion(seed: u64, scale: Scale) -> CriterionOutcome {
    let rules = scale.pick(50, 50);
    let mut tally = Tally::default();
    let results: Vec<Result<Tally>> = (0..rules).into_par_iter().map(|r| transfer_rule(seed, r)).collect();
    for (r, res) in results.into_iter().enumerate() {
        if let Some(x) = tally.absorb(res, &format!("rule {r}")) {
            tally.merge(x);
        }
    }
    tally.finish(5, TITLES[4], json!({ "rules": rules, "reals_per_rule": 4096 }))
}

// ---- criterion 6 ----

fn one_rules(seed: u64, scale: Scale) -> CriterionOutcome {
    let rules = scale.pick(25, 100);
    let mut rng = stream(seed, 6);
    let mut tally = Tally::default();
    for r in 0..rules {
        let Some(rule) = tally.absorb(
            Universe::new(300).and_then(|u| random_rule(&mut rng, u, 101, |_| 1, None)),
            "rule generation",
        ) else {
            continue;
        };
        let Some(w) = tally.absorb(one_rule_witness(&rule), &format!("rule {r}")) else {
            continue;
        };
        tally.check(w.matches >= 51, || format!("rule {r}: only {} matches", w.matches));
        tally.check(w.empty_matches + w.full_matches == 101, || {
            format!("rule {r}: {} + {} != 101", w.empty_matches, w.full_matches)
        });
        let direct = oracle::match_set_pointwise(&w.real, &rule).map(|m| m.len());
        tally.check(direct.as_ref().ok() == Some(&w.matches), || {
            format!("rule {r}: recount {direct:?}")
        });
    }
    tally.finish(6, TITLES[5], json!({ "rules": rules, "blocks": 101 }))
}

// ---- criterion 7 ----

pub const TREES: [&str; 5] = [
    "avoid-substring:11",
    "avoid-substring:101",
    "avoid-substring:000",
    "avoid-substring:0110",
    "finite-antichain:0011,01,1",
];

fn tree_criterion(seed: u64, scale: Scale) -> CriterionOutcome {
    let wanted = scale.pick(200, 1000);
    let depth = 16;
    let mut tally = Tally::default();
    let mut per_tree = Vec::new();
    for (t, spec) in TREES.iter().enumerate() {
        let mut rng = trial_rng(seed, 7, t);
        let Some(tree) = tally.absorb(TreeOracle::parse(spec, depth), spec) else {
            continue;
        };
        let Some(out) = tally.absorb(Universe::new(depth).and_then(|u| tree_to_rule(&tree, u)), spec) else {
            continue;
        };
        let universe = out.rule.universe();
        let (mut accepted, mut attempts) = (0, 0);
        while accepted < wanted && attempts < 200 * wanted {
            attempts += 1;
            let x = random_real(&mut rng, universe);
            let matched = match_set(&x, &out.rule).unwrap_or_default();
            if matched.is_empty() {
                continue;
            }
            accepted += 1;
            for i in matched {
                let cut = out.cuts[i + 1];
                let prefix = Word((0..cut).map(|p| x.has(p)).collect());
                tally.check(!tree.contains(&prefix), || {
                    format!("{spec}: block {i} matched but prefix {prefix} in tree")
                });
            }
        }
        tally.check(accepted == wanted, || {
            format!("{spec}: only {accepted} reals matched a block")
        });
        per_tree.push(json!({ "tree": spec, "blocks": out.rule.len(), "reals": accepted }));
    }
    tally.finish(7, TITLES[6], json!({ "trees": per_tree, "depth": depth }))
}

// ---- criterion 8 ----

/// Rules whose blocks cover at most 20 points in total.
pub fn probability_fixtures(seed: u64) -> Result<Vec<Rule>> {
    let mut rng = stream(seed, 80);
    let u = Universe::new(24)?;
    let mut rules = vec![
        Rule::new(
            Universe::new(4)?,
            vec![Block::new([0], [0, 1])?, Block::new([2], [2, 3])?],
        )?,
        Rule::new(Universe::new(3)?, vec![Block::new([], [1])?])?,
        Rule::new(
            u,
            (0..10)
                .map(|n| Block::new([2 * n], [2 * n, 2 * n + 1]))
                .collect::<Result<_>>()?,
        )?,
    ];
    for r in 0..40 {
        let max_width = 1 + r % 5;
        let mut budget = 20;
        let mut widths = Vec::new();
        while budget > 0 {
            let w = rng.gen_range(1..=max_width.min(budget));
            if widths.len() >= 2 && rng.gen_bool(0.2) {
                break;
            }
            widths.push(w);
            budget -= w;
        }
        let mut it = widths.into_iter();
        rules.push(random_rule(&mut rng, u, it.len(), |_| it.next().unwrap_or(1), None)?);
    }
    Ok(rules)
}

pub fn mc_rule() -> Result<Rule> {
    Rule::new(
        Universe::new(32)?,
        (0..16)
            .map(|n| Block::new([2 * n + n % 2], [2 * n, 2 * n + 1]))
            .collect::<Result<_>>()?,
    )
}

fn probability_criterion(seed: u64, scale: Scale) -> CriterionOutcome {
    let mut tally = Tally::default();
    let Some(fixtures) = tally.absorb(probability_fixtures(seed), "fixtures") else {
        return tally.finish(8, TITLES[7], Value::Null);
    };
    let mut prefixes = 0;
    for (r, rule) in fixtures.iter().enumerate() {
        for first in 0..=rule.len() {
            prefixes += 1;
            let exact = exact_avoid_probability::<Rational>(rule, first).map(|p| p.exact);
            let brute = oracle::enumerated_avoid_probability(rule, first);
            tally.check(matches!((&exact, &brute), (Ok(a), Ok(b)) if a == b), || {
                format!("fixture {r}, first {first}: {exact:?} vs enumeration {brute:?}")
            });
        }
    }
    let samples = scale.pick(4000, 20_000) as u64;
    let Some(rule) = tally.absorb(mc_rule(), "sampling rule") else {
        return tally.finish(8, TITLES[7], Value::Null);
    };
    let exact = ratio(1, 1) - Rational::new(3u64.pow(16).into(), 4u64.pow(16).into());
    let seeds: Vec<u64> = (0..50).map(|s| seed.wrapping_mul(1000).wrapping_add(s)).collect();
    let within = seeds
        .iter()
        .filter(|&&s| mc_follow_estimate(&rule, 16, samples, s).is_ok_and(|rep| rep.within(&exact, 3.0)))
        .count();
    tally.check(within >= 47, || format!("only {within}/50 seeds within 3 stderr"));
    tally.finish(
        8,
        TITLES[7],
        json!({ "fixtures": fixtures.len(), "prefixes": prefixes, "samples_per_seed": samples, "seeds_within": within }),
    )
}

// ---- criterion 9 ----

fn splice_trial(seed: u64, t: usize) -> Result<Tally> {
    let mut rng = trial_rng(seed, 9, t);
    let k = 2 + t % 3;
    let span = 4;
    let last = k + span - 1;
    let universe = Universe::new(4000)?;
    // f(i) = 200 (i + 1) + jitter keeps f strictly increasing
    let values: Vec<usize> = (0..=last).map(|i| 300 * (i + 1) + rng.gen_range(0..100)).collect();
    let f = SpliceFunction::new(universe, values)?;
    let low = f.at(k) + 1;
    let high = f.at(last);
    let pool: Vec<usize> = (low..high).collect();
    let rule = random_rule(&mut rng, universe, 60, |r| r.gen_range(1..=k), Some(pool))?;
    let mut chain: Vec<usize> = (0..rule.len()).collect();
    let mut reals = Vec::new();
    let mut chains = Vec::new();
    for _ in k..=last {
        let keep: Vec<usize> = chain.iter().copied().filter(|_| rng.gen_bool(0.85)).collect();
        let sub = rule.restrict_to(&keep)?;
        let follower = diagonal_follower(universe, std::slice::from_ref(&sub), keep.len())?;
        let mut x = follower.real;
        // fill undecided points at random outside the kept blocks
        let fixed: BTreeSet<usize> = sub.union_points().into_iter().collect();
        for p in 0..universe.size() {
            if !fixed.contains(&p) {
                x.set(p, rng.gen())?;
            }
        }
        let matched: BTreeSet<usize> = match_set(&x, &rule)?.into_iter().collect();
        chain.retain(|n| matched.contains(n));
        chains.push(chain.clone());
        reals.push(x);
    }
    let cert = splice_certify(&rule, &f, k, &reals, &chains)?;
    let mut tally = Tally::default();
    let direct: BTreeSet<usize> = oracle::match_set_pointwise(&cert.spliced, &rule)?.into_iter().collect();
    for &n in &cert.certified {
        tally.check(direct.contains(&n), || {
            format!("trial {t}: certified {n} not matched by the splice")
        });
    }
    tally.check(!cert.certified.is_empty(), || format!("trial {t}: nothing certified"));
    tally.breaches(cert.audit(&rule), &format!("trial {t}"));
    Ok(tally)
}

fn splice_criterion(seed: u64, scale: Scale) -> CriterionOutcome {
    let trials = scale.pick(15, 60);
    let mut tally = Tally::default();
    let results: Vec<Result<Tally>> = (0..trials).into_par_iter().map(|t| splice_trial(seed, t)).collect();
    for (t, r) in results.into_iter().enumerate() {
        if let Some(x) = tally.absorb(r, &format!("trial {t}")) {
            tally.merge(x);
        }
    }
    tally.finish(9, TITLES[8], json!({ "trials": trials, "k": [2, 3, 4] }))
}

// ---- criteria 10 and 11 ----

/// A polynomial-derived family closed under the listed generators.
pub struct PolyFixture {
    pub name: &'static str,
    pub family: FamilyFragment,
    pub generators: Vec<(&'static str, FinSuppPermutation)>,
}

fn coprime(a: u64, b: u64) -> bool {
    num_integer::gcd(a, b) == 1
}

/// Height ≤ 3 polynomials, `A_r` for `r = 0, ±a/b`, closed under `p(x) ↦ p(-x)`.
pub fn negation_fixture() -> Result<PolyFixture> {
    let polys = polynomials_up_to_height(3)?;
    let mut rs = vec![ratio(0, 1)];
    for a in 1..=16u64 {
        for b in 1..=6u64 {
            if coprime(a, b) {
                rs.push(ratio(a, b));
                rs.push(-ratio(a, b));
            }
        }
    }
    let (family, _) = polynomial_fragment(&polys, &rs)?;
    let neg = induced_permutation(&polys, |p| Ok(p.negate_argument()))?;
    Ok(PolyFixture {
        name: "height<=3, p(-x)",
        family,
        generators: vec![("p(-x)", neg)],
    })
}

/// Height ≤ 4 polynomials, `A_r` for `r = ±a/b`, closed under `p(-x)` and `x^4 p(1/x)`.
pub fn reciprocal_fixture() -> Result<PolyFixture> {
    let polys = polynomials_up_to_height(4)?;
    let mut rs = Vec::new();
    for a in 1..=9u64 {
        for b in 1..=9u64 {
            if coprime(a, b) {
                rs.push(ratio(a, b));
                rs.push(-ratio(a, b));
            }
        }
    }
    let (family, _) = polynomial_fragment(&polys, &rs)?;
    let neg = induced_permutation(&polys, |p| Ok(p.negate_argument()))?;
    let rev = induced_permutation(&polys, |p| p.reciprocal(4))?;
    Ok(PolyFixture {
        name: "height<=4, p(-x) and x^4 p(1/x)",
        family,
        generators: vec![("p(-x)", neg), ("x^4 p(1/x)", rev)],
    })
}

fn chain_checks(tally: &mut Tally, fixture: &PolyFixture, label: &str, sigma: &FinSuppPermutation) -> Value {
    let family = &fixture.family;
    let Some(chain) = tally.absorb(support_chain(family, sigma, 6, &[]), label) else {
        return Value::Null;
    };
    tally.check(chain.members.len() == 12, || {
        format!("{label}: {} members", chain.members.len())
    });
    let support: BTreeSet<usize> = sigma.support().into_iter().collect();
    let distinct: BTreeSet<usize> = chain.members.iter().copied().collect();
    tally.check(distinct.len() == chain.members.len(), || {
        format!("{label}: repeated member")
    });
    for (n, pair) in chain.members.chunks(2).enumerate() {
        let (c0, c1) = (&family.members()[pair[0]], &family.members()[pair[1]]);
        let diff: Vec<usize> = c0.members().filter(|&p| !c1.has(p)).collect();
        tally.check(!diff.is_empty(), || format!("{label}: pair {n} has empty difference"));
        tally.check(diff.contains(&chain.k_star), || format!("{label}: pair {n} misses k*"));
        tally.check(diff.iter().all(|p| support.contains(p)), || {
            format!("{label}: pair {n} leaves supp σ")
        });
        let image = sigma.image(c0).map(|img| img == *c1);
        tally.check(image.is_ok_and(|b| b), || format!("{label}: pair {n} is not (C, σ[C])"));
    }
    tally.breaches(chain.audit(family, sigma), label);
    json!({ "fixture": fixture.name, "sigma": label, "k_star": chain.k_star, "members": chain.members })
}

fn chain_criterion(_seed: u64, _scale: Scale) -> CriterionOutcome {
    let mut tally = Tally::default();
    let mut details = Vec::new();
    for fixture in [negation_fixture(), reciprocal_fixture()] {
        let Some(fixture) = tally.absorb(fixture, "fixture") else {
            continue;
        };
        tally.check(fixture.family.len() >= 64, || {
            format!("{}: {} members", fixture.name, fixture.family.len())
        });
        let mut sigmas: Vec<(String, FinSuppPermutation)> = fixture
            .generators
            .iter()
            .map(|(n, s)| (n.to_string(), s.clone()))
            .collect();
        if let [(a, s), (b, t)] = &fixture.generators[..] {
            sigmas.push((format!("{a} then {b}"), t.compose(s)));
        }
        for (label, sigma) in &sigmas {
            let closed = is_automorphism(sigma, &fixture.family).is_ok_and(|c| c.holds);
            tally.check(closed, || format!("{}: {label} is not an automorphism", fixture.name));
            details.push(chain_checks(&mut tally, &fixture, label, sigma));
        }
    }
    tally.finish(10, TITLES[9], json!({ "chains": details }))
}

fn orbit_case(
    tally: &mut Tally,
    fixture: &PolyFixture,
    sigmas: &[FinSuppPermutation],
    positive_count: usize,
    combo: BooleanCombo,
    label: &str,
) -> Value {
    let family = &fixture.family;
    let Some(out) = tally.absorb(orbit_rule(family, &combo, sigmas, positive_count, None, 24), label) else {
        return Value::Null;
    };
    let m = sigmas.len();
    tally.check(out.rule.len() >= 20, || format!("{label}: {} blocks", out.rule.len()));
    let v = validate_rule(&out.rule.to_candidate(), Some(&WidthBound::Constant(m)));
    tally.check(v.is_ok(), || format!("{label}: {v}"));
    tally.breaches(out.audit(sigmas), label);
    let Some(x) = tally.absorb(
        diagonal_follower(family.universe(), std::slice::from_ref(&out.rule), out.rule.len()),
        label,
    ) else {
        return Value::Null;
    };
    let images: Vec<RealSet> = sigmas.iter().filter_map(|s| s.image(&x.real).ok()).collect();
    tally.check(images.len() == m, || format!("{label}: image failed"));
    let a = crate::families::combo_witnesses(family, &combo).unwrap_or_else(|_| RealSet::empty(family.universe()));
    let mut followed = 0;
    for (n, (block, &j)) in out.rule.blocks().iter().zip(&out.points).enumerate() {
        if !block.matched_by(&x.real) {
            continue;
        }
        followed += 1;
        tally.check(a.has(j), || format!("{label}: j_{n} = {j} outside A"));
        for (l, img) in images.iter().enumerate() {
            tally.check(img.has(j) == (l < positive_count), || {
                format!("{label}: j_{n} = {j} wrong side of σ_{l}[X]")
            });
        }
    }
    tally.check(followed == out.rule.len(), || {
        format!("{label}: follower matched {followed} blocks")
    });
    json!({ "case": label, "m": m, "positive_count": positive_count, "blocks": out.rule.len(), "followed": followed, "E_size": out.e_set.len() })
}

fn orbit_criterion(_seed: u64, _scale: Scale) -> CriterionOutcome {
    let mut tally = Tally::default();
    let mut details = Vec::new();
    let id = FinSuppPermutation::identity();
    if let Some(fx) = tally.absorb(negation_fixture(), "negation fixture") {
        let neg = fx.generators[0].1.clone();
        let sigmas = [id.clone(), neg];
        for pc in 0..=2 {
            let combo = BooleanCombo::new(vec![1], vec![2], None).expect("disjoint");
            details.push(orbit_case(
                &mut tally,
                &fx,
                &sigmas,
                pc,
                combo,
                &format!("m=2 p(-x) pc={pc}"),
            ));
        }
    }
    if let Some(fx) = tally.absorb(reciprocal_fixture(), "reciprocal fixture") {
        let (neg, rev) = (fx.generators[0].1.clone(), fx.generators[1].1.clone());
        let sigmas = [id, neg.clone(), rev.clone()];
        for pc in 1..=2 {
            let combo = BooleanCombo::new(vec![1], vec![2], None).expect("disjoint");
            details.push(orbit_case(
                &mut tally,
                &fx,
                &sigmas,
                pc,
                combo,
                &format!("m=3 id,p(-x),rev pc={pc}"),
            ));
        }
        let sigmas = [neg.clone(), rev.clone(), rev.compose(&neg)];
        let combo = BooleanCombo::new(vec![2], vec![], None).expect("disjoint");
        details.push(orbit_case(
            &mut tally,
            &fx,
            &sigmas,
            2,
            combo,
            "m=3 p(-x),rev,both pc=2",
        ));
    }
    tally.finish(11, TITLES[10], json!({ "cases": details }))
}

/// Runs criterion `id` (1..=11).
pub fn criterion(id: u8, seed: u64, scale: Scale) -> Option<CriterionOutcome> {
    Some(match id {
        1 => majority_criteria(seed, scale).0,
        2 => majority_criteria(seed, scale).1,
        3 => pigeonhole(seed, scale),
        4 => slalom_avoidance(seed, scale),
        5 => evasion_transfer_criterion(seed, scale),
        6 => one_rules(seed, scale),
        7 => tree_criterion(seed, scale),
        8 => probability_criterion(seed, scale),
        9 => splice_criterion(seed, scale),
        10 => chain_criterion(seed, scale),
        11 => orbit_criterion(seed, scale),
        _ => return None,
    })
}

/// Criteria 1 and 2 share their trials.
pub fn majority_pair(seed: u64, scale: Scale) -> (CriterionOutcome, CriterionOutcome) {
    majority_criteria(seed, scale)
}

/// The selected criteria (all when `only` is empty), in order.
pub fn run_selected(seed: u64, scale: Scale, only: &[u8]) -> Vec<CriterionOutcome> {
    let wanted = |id: u8| only.is_empty() || only.contains(&id);
    let mut out = Vec::new();
    if wanted(1) || wanted(2) {
        let (one, two) = majority_criteria(seed, scale);
        out.extend([one, two].into_iter().filter(|o| wanted(o.id)));
    }
    for id in 3..=11u8 {
        if wanted(id) {
            out.push(criterion(id, seed, scale).expect("known criterion"));
        }
    }
    out
}

/// The aggregate report: deterministic in `(seed, scale, only)`.
pub fn suite(seed: u64, scale: Scale, only: &[u8]) -> Report {
    let outcomes = run_selected(seed, scale, only);
    let passed = outcomes.iter().all(|o| o.passed);
    Report {
        v: SCHEMA_VERSION,
        scenario: format!("suite-{}", if scale == Scale::Small { "small" } else { "full" }),
        operation: "suite".into(),
        status: if passed { Status::Ok } else { Status::Violated },
        seed,
        certificates: json!({
            "scale": scale,
            "passed": outcomes.iter().filter(|o| o.passed).count(),
            "total": outcomes.len(),
            "criteria": outcomes,
        }),
        violations: outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| format!("criterion {} failed with {} exceptions", o.id, o.exceptions))
            .collect(),
        error: None,
        timing_ms: None,
    }
}
