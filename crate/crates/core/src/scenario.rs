//! JSON scenarios: one named operation, its inputs, and a report with
//! certificates.
//!
//! Every operation re-checks its own guarantee with the independent code in
//! [`crate::oracle`] or the construction's audit; a failed check yields
//! status `violated`, while bad input yields `error`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::{
    derived_subrule, diagonal_follower, e_chain, majority_combine, majority_real, splice_certify, splice_from,
    tree_to_rule, SpliceFunction, TreeOracle,
};
use crate::error::{Error, Result};
use crate::families::{
    combo_witnesses, density_witnesses, enumerate_polynomials, extend_check, is_automorphism, orbit_rule,
    polynomial_member, support_chain, BooleanCombo, FamilyFragment, FinSuppPermutation, OrbitCombo, Polynomial,
};
use crate::laver::{avoiding_rule, block_encode, capture_check, coincident_pair, interval_ladder, BlockSlalom};
use crate::oracle;
use crate::prediction::{evades_set, evasion_transfer, rule_to_predictor, Predictor};
use crate::rule::{match_set, one_rule_witness, slow_report, validate_rule, Rule, RuleCandidate, WidthBound};
use crate::scalar::rational_string;
use crate::set::{RealSet, Universe, Word};
use crate::stochastic::{exact_avoid_probability, mc_follow_estimate, sample_csv, slow_vs_fast_sweep, sweep_csv};
use crate::Rational;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub v: u32,
    pub name: String,
    /// May be omitted when the operation is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(default)]
    pub inputs: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| schema_error("", e))?;
        if s.v != SCHEMA_VERSION {
            return Err(Error::Schema(format!("v: unsupported schema version {}", s.v)));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violated,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violated => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub v: u32,
    pub scenario: String,
    pub operation: String,
    pub status: Status,
    pub seed: u64,
    pub certificates: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Certificates plus the breaches found by re-checking them.
pub struct Outcome {
    pub certificates: Value,
    pub violations: Vec<String>,
}

impl Outcome {
    fn ok(certificates: Value) -> Self {
        Outcome {
            certificates,
            violations: Vec::new(),
        }
    }

    fn checked(certificates: Value, violations: Vec<String>) -> Self {
        Outcome {
            certificates,
            violations,
        }
    }
}

type Runner = fn(&Value, u64) -> Result<Outcome>;

pub struct Operation {
    pub name: &'static str,
    pub module: &'static str,
    pub anchor: &'static str,
    pub inputs: &'static str,
    run: Runner,
}

macro_rules! ops {
    ($( $name:ident, $module:literal, $anchor:literal, $inputs:literal; )*) => {
        pub static OPERATIONS: &[Operation] = &[
            $( Operation { name: stringify!($name), module: $module, anchor: $anchor, inputs: $inputs, run: $name }, )*
        ];
    };
}

ops! {
    validate_rule_op, "core", "Definition 1.1", "rule, bound?";
    match_set_op, "core", "Definition 1.1(2)", "X, rule";
    slow_report_op, "core", "Definition 1.1(4)", "f, horizon";
    one_rule_witness_op, "core", "Fact 1.4", "rule";
    derived_subrule_op, "constructions", "Theorem 1.6", "rule, width, i";
    majority_real_op, "constructions", "Theorem 1.6", "reals";
    e_chain_op, "constructions", "Theorem 1.6", "rule, reals";
    majority_combine_op, "constructions", "Theorem 1.6", "rule, reals";
    splice_op, "constructions", "Theorem 1.7", "f, reals, first?";
    splice_certify_op, "constructions", "Theorem 1.7", "rule, f, first, reals, chains";
    tree_to_rule_op, "constructions", "Theorem 1.5(a)", "tree, depth, n?";
    diagonal_follower_op, "constructions", "Theorem 1.5(a)", "n, rules, multiplicity";
    rule_to_predictor_op, "prediction", "Definition (predictors)", "rule";
    evades_set_op, "prediction", "Definition (evasion)", "X, predictor";
    evasion_transfer_op, "prediction", "Lemma (evasion transfer)", "X, rule";
    interval_ladder_op, "laver", "Lemma 2.3", "n, count";
    coincident_pair_op, "laver", "Claim (pigeonhole)", "words, bound, len?";
    block_encode_op, "laver", "Lemma 2.3", "X, ladder";
    capture_check_op, "laver", "Slalom definition", "slalom, X";
    avoiding_rule_op, "laver", "Lemma 2.3", "slalom, X?";
    exact_avoid_probability_op, "stochastic", "Theorem 1.5(b)", "rule, first";
    mc_follow_estimate_op, "stochastic", "Theorem 1.5(b)", "rule, first, samples";
    slow_vs_fast_sweep_op, "stochastic", "Theorem 1.5(b)", "profiles, horizon";
    enumerate_polynomials_op, "families", "Independent families (Z[X] example)", "count";
    polynomial_member_op, "families", "Independent families (Z[X] example)", "r, count | polys";
    combo_witnesses_op, "families", "Independent families", "family, combo";
    density_witnesses_op, "families", "Dense families", "family, inside, outside, want";
    support_op, "families", "Automorphism support", "sigma";
    is_automorphism_op, "families", "Automorphism support", "sigma, family";
    support_chain_op, "families", "Lemma 3.3", "family, sigma, pairs, excluded?";
    orbit_rule_op, "families", "Theorem 3.1", "family, combo, sigmas, positive_count, A?, blocks_wanted";
    extend_check_op, "families", "Theorem 3.1", "family, group, X, combos";
}

impl Operation {
    /// Public name, without the internal `_op` suffix.
    pub fn public_name(&self) -> &'static str {
        self.name.strip_suffix("_op").unwrap_or(self.name)
    }
}

pub fn list_operations() -> &'static [Operation] {
    OPERATIONS
}

pub fn find_operation(name: &str) -> Option<&'static Operation> {
    OPERATIONS.iter().find(|op| op.public_name() == name)
}

/// Runs a scenario. `operation` and `seed` override the file's values.
pub fn run_scenario(scenario: &Scenario, operation: Option<&str>, seed: Option<u64>) -> Report {
    let seed = seed.or(scenario.seed).unwrap_or(0);
    let name = operation.or(scenario.operation.as_deref()).unwrap_or("");
    let mut report = Report {
        v: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        operation: name.to_string(),
        status: Status::Ok,
        seed,
        certificates: Value::Null,
        violations: Vec::new(),
        error: None,
        timing_ms: None,
    };
    let result = match (operation, scenario.operation.as_deref()) {
        (Some(cli), Some(file)) if cli != file => Err(Error::Schema(format!(
            "operation: scenario names {file:?} but {cli:?} was requested"
        ))),
        _ if name.is_empty() => Err(Error::Schema("operation: missing".into())),
        _ => match find_operation(name) {
            Some(op) => (op.run)(&scenario.inputs, seed),
            None => Err(Error::Schema(format!("operation: unknown operation {name:?}"))),
        },
    };
    match result {
        Ok(outcome) => {
            report.status = if outcome.violations.is_empty() {
                Status::Ok
            } else {
                Status::Violated
            };
            report.certificates = outcome.certificates;
            report.violations = outcome.violations;
        }
        Err(e) => {
            report.status = Status::Error;
            report.error = Some(e.to_string());
        }
    }
    report
}

fn schema_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> Error {
    let path = e.path().to_string();
    let field = match (prefix.is_empty(), path == ".") {
        (true, _) => path,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{path}"),
    };
    Error::Schema(format!("{field}: {}", e.into_inner()))
}

fn parse<T: DeserializeOwned>(inputs: &Value) -> Result<T> {
    serde_path_to_error::deserialize(inputs.clone()).map_err(|e| schema_error("inputs", e))
}

/// Fails with a diagnostic naming both fields when universes differ.
fn same_universe(items: &[(&str, Universe)]) -> Result<()> {
    if let Some(((f0, u0), (f1, u1))) = items
        .iter()
        .flat_map(|a| items.iter().map(move |b| (a, b)))
        .find(|((_, a), (_, b))| a != b)
    {
        return Err(Error::Schema(format!(
            "inputs.{f1}: universe {} does not match inputs.{f0} universe {}",
            u1.size(),
            u0.size()
        )));
    }
    Ok(())
}

fn rationals(values: &[Rational]) -> Vec<String> {
    values.iter().map(rational_string).collect()
}

fn sets(values: &[RealSet]) -> Vec<Vec<usize>> {
    values.iter().map(RealSet::to_vec).collect()
}

// ---- core ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleInput {
    rule: Rule,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RealRuleInput {
    #[serde(rename = "X")]
    x: RealSet,
    rule: Rule,
}

fn validate_rule_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        rule: RuleCandidate,
        #[serde(default)]
        bound: Option<WidthBound>,
    }
    let i: In = parse(inputs)?;
    let report = validate_rule(&i.rule, i.bound.as_ref());
    // pairwise scan as a cross-check on the disjointness clause
    let slow = oracle::overlapping_blocks(&i.rule);
    let fast = report
        .violations
        .iter()
        .filter(|v| matches!(v, crate::rule::Violation::Intersect { .. }))
        .count();
    let mut violations = Vec::new();
    let pairs: BTreeSet<(usize, usize)> = slow.iter().map(|&(a, b, _)| (a, b)).collect();
    if pairs.len() != fast {
        violations.push(format!(
            "pairwise scan finds {} intersecting pairs, validator {fast}",
            pairs.len()
        ));
    }
    Ok(Outcome::checked(
        json!({ "ok": report.is_ok(), "violations": report.violations, "messages": report.messages() }),
        violations,
    ))
}

fn match_set_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RealRuleInput = parse(inputs)?;
    same_universe(&[("rule", i.rule.universe()), ("X", i.x.universe())])?;
    let fast = match_set(&i.x, &i.rule)?;
    let slow = oracle::match_set_pointwise(&i.x, &i.rule)?;
    let violations = if fast == slow {
        vec![]
    } else {
        vec![format!("pointwise scan gives {slow:?}")]
    };
    Ok(Outcome::checked(
        json!({ "matches": fast, "count": fast.len() }),
        violations,
    ))
}

fn slow_report_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        f: Vec<usize>,
        horizon: usize,
    }
    let i: In = parse(inputs)?;
    let r = slow_report::<Rational>(&i.f, i.horizon)?;
    Ok(Outcome::ok(json!({
        "partial_sums": rationals(&r.partial_sums),
        "sum_at_horizon": rational_string(&r.sum_at_horizon),
    })))
}

fn one_rule_witness_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RuleInput = parse(inputs)?;
    let w = one_rule_witness(&i.rule)?;
    let mut violations = Vec::new();
    if w.empty_matches + w.full_matches != i.rule.len() {
        violations.push(format!(
            "∅ and full match {} + {} of {} blocks",
            w.empty_matches,
            w.full_matches,
            i.rule.len()
        ));
    }
    if 2 * w.matches < i.rule.len() {
        violations.push(format!("winner matches only {} of {}", w.matches, i.rule.len()));
    }
    Ok(Outcome::checked(
        json!({
            "winner": w.winner,
            "real": w.real,
            "matches": w.matches,
            "empty_matches": w.empty_matches,
            "full_matches": w.full_matches,
        }),
        violations,
    ))
}

// ---- constructions ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRealsInput {
    rule: Rule,
    reals: Vec<RealSet>,
}

impl RuleRealsInput {
    fn check(&self) -> Result<()> {
        let mut items = vec![("rule".to_string(), self.rule.universe())];
        items.extend(
            self.reals
                .iter()
                .enumerate()
                .map(|(t, r)| (format!("reals[{t}]"), r.universe())),
        );
        let refs: Vec<(&str, Universe)> = items.iter().map(|(s, u)| (s.as_str(), *u)).collect();
        same_universe(&refs)
    }
}

fn reals_universe(reals: &[RealSet]) -> Result<Universe> {
    let first = reals.first().ok_or(Error::Schema("inputs.reals: empty".into()))?;
    let items: Vec<(String, Universe)> = reals
        .iter()
        .enumerate()
        .map(|(t, r)| (format!("reals[{t}]"), r.universe()))
        .collect();
    let refs: Vec<(&str, Universe)> = items.iter().map(|(s, u)| (s.as_str(), *u)).collect();
    same_universe(&refs)?;
    Ok(first.universe())
}

fn derived_subrule_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        rule: Rule,
        width: usize,
        i: usize,
    }
    let i: In = parse(inputs)?;
    let d = derived_subrule(&i.rule, i.width, i.i)?;
    Ok(Outcome::ok(json!({ "rule": d })))
}

fn majority_real_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        reals: Vec<RealSet>,
    }
    let i: In = parse(inputs)?;
    reals_universe(&i.reals)?;
    Ok(Outcome::ok(json!({ "C": majority_real(&i.reals)? })))
}

fn e_chain_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RuleRealsInput = parse(inputs)?;
    i.check()?;
    let chain = e_chain(&i.rule, &i.reals)?;
    let nested = chain.sets.windows(2).all(|w| w[1].iter().all(|n| w[0].contains(n)));
    let violations = if nested {
        vec![]
    } else {
        vec!["chain is not nested".into()]
    };
    Ok(Outcome::checked(json!({ "sets": chain.sets }), violations))
}

fn majority_combine_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RuleRealsInput = parse(inputs)?;
    i.check()?;
    let cert = majority_combine(&i.rule, &i.reals)?;
    let mut violations = cert.audit(&i.rule);
    let matched = match_set(&cert.combined, &i.rule)?;
    if let Some(n) = cert.certified.iter().find(|n| !matched.contains(n)) {
        violations.push(format!("certified block {n} not matched by the majority real"));
    }
    Ok(Outcome::checked(
        json!({
            "combined": cert.combined,
            "certified": cert.certified,
            "chain": cert.chain.sets,
        }),
        violations,
    ))
}

fn splice_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        f: Vec<usize>,
        reals: Vec<RealSet>,
        #[serde(default)]
        first: usize,
    }
    let i: In = parse(inputs)?;
    let universe = reals_universe(&i.reals)?;
    let f = SpliceFunction::new(universe, i.f)?;
    Ok(Outcome::ok(json!({ "spliced": splice_from(&f, i.first, &i.reals)? })))
}

fn splice_certify_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        rule: Rule,
        f: Vec<usize>,
        first: usize,
        reals: Vec<RealSet>,
        chains: Vec<Vec<usize>>,
    }
    let i: In = parse(inputs)?;
    let universe = reals_universe(&i.reals)?;
    same_universe(&[("rule", i.rule.universe()), ("reals", universe)])?;
    let f = SpliceFunction::new(universe, i.f)?;
    let cert = splice_certify(&i.rule, &f, i.first, &i.reals, &i.chains)?;
    let violations = cert.audit(&i.rule);
    Ok(Outcome::checked(
        json!({
            "spliced": cert.spliced,
            "certified": cert.certified,
            "last_segment": cert.last_segment,
        }),
        violations,
    ))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TreeInput {
    Builtin(String),
    Words { words: Vec<Word> },
}

/// Number of random reals used to spot-check a tree rule.
const TREE_AUDIT_SAMPLES: usize = 256;

fn tree_to_rule_op(inputs: &Value, seed: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        tree: TreeInput,
        depth: usize,
        #[serde(default)]
        n: Option<usize>,
    }
    let i: In = parse(inputs)?;
    let tree = match i.tree {
        TreeInput::Builtin(s) => TreeOracle::parse(&s, i.depth)?,
        TreeInput::Words { words } => TreeOracle::explicit(words, i.depth)?,
    };
    let universe = Universe::new(i.n.unwrap_or(i.depth))?;
    let out = tree_to_rule(&tree, universe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for _ in 0..TREE_AUDIT_SAMPLES {
        let x = RealSet::from_fn(universe, |_| rng.gen());
        violations.extend(out.audit(&tree, &x));
    }
    violations.dedup();
    Ok(Outcome::checked(
        json!({
            "rule": out.rule,
            "cuts": out.cuts,
            "witnesses": out.witnesses,
            "audited_reals": TREE_AUDIT_SAMPLES,
        }),
        violations,
    ))
}

fn diagonal_follower_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        n: usize,
        rules: Vec<Rule>,
        multiplicity: usize,
    }
    let i: In = parse(inputs)?;
    let universe = Universe::new(i.n)?;
    let items: Vec<(String, Universe)> = std::iter::once(("n".to_string(), universe))
        .chain(
            i.rules
                .iter()
                .enumerate()
                .map(|(t, r)| (format!("rules[{t}]"), r.universe())),
        )
        .collect();
    let refs: Vec<(&str, Universe)> = items.iter().map(|(s, u)| (s.as_str(), *u)).collect();
    same_universe(&refs)?;
    let f = diagonal_follower(universe, &i.rules, i.multiplicity)?;
    let violations = f.audit(&i.rules);
    Ok(Outcome::checked(
        json!({ "real": f.real, "achieved": f.achieved, "committed": f.committed }),
        violations,
    ))
}

// ---- prediction ----

fn rule_to_predictor_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RuleInput = parse(inputs)?;
    let p = rule_to_predictor(&i.rule)?;
    Ok(Outcome::ok(json!({ "predictor": p.predictor, "skipped": p.skipped })))
}

fn evades_set_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        #[serde(rename = "X")]
        x: RealSet,
        predictor: Predictor,
    }
    let i: In = parse(inputs)?;
    Ok(Outcome::ok(json!({ "evasions": evades_set(&i.x, &i.predictor)? })))
}

fn evasion_transfer_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: RealRuleInput = parse(inputs)?;
    same_universe(&[("rule", i.rule.universe()), ("X", i.x.universe())])?;
    let report = evasion_transfer(&i.x, &i.rule)?;
    let mut violations = report.audit(&i.rule);
    let points: Vec<usize> = report.entries.iter().map(|e| e.point).collect();
    let direct = oracle::rule_evasions(&i.x, &i.rule)?;
    if points != direct {
        violations.push(format!("direct evasion scan gives {direct:?}"));
    }
    Ok(Outcome::checked(
        json!({ "entries": report.entries, "skipped": report.skipped }),
        violations,
    ))
}

// ---- laver ----

fn interval_ladder_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        n: usize,
        count: usize,
    }
    let i: In = parse(inputs)?;
    let ladder = interval_ladder(Universe::new(i.n)?, i.count)?;
    Ok(Outcome::ok(json!({ "points": ladder.points() })))
}

fn coincident_pair_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        words: Vec<Word>,
        bound: usize,
        #[serde(default)]
        len: Option<usize>,
    }
    let i: In = parse(inputs)?;
    let len = i
        .len
        .or_else(|| i.words.first().map(Word::len))
        .ok_or(Error::Schema("inputs.len: required when words is empty".into()))?;
    let pair = coincident_pair(&i.words, i.bound, len)?;
    let mut violations = Vec::new();
    if oracle::coincident_pair_scan(&i.words, len) != Some((pair.i, pair.j)) {
        violations.push("pairwise scan disagrees on the least pair".into());
    }
    Ok(Outcome::checked(json!(pair), violations))
}

fn block_encode_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        #[serde(rename = "X")]
        x: RealSet,
        ladder: usize,
    }
    let i: In = parse(inputs)?;
    let ladder = interval_ladder(i.x.universe(), i.ladder)?;
    Ok(Outcome::ok(json!({ "words": block_encode(&i.x, &ladder)? })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlalomInput {
    slalom: BlockSlalom,
    #[serde(rename = "X", default)]
    x: Option<RealSet>,
}

fn capture_check_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: SlalomInput = parse(inputs)?;
    let x = i.x.ok_or(Error::Schema("inputs.X: missing field".into()))?;
    same_universe(&[("slalom", i.slalom.ladder().universe()), ("X", x.universe())])?;
    Ok(Outcome::ok(json!({ "captured": capture_check(&i.slalom, &x)? })))
}

fn avoiding_rule_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: SlalomInput = parse(inputs)?;
    let out = avoiding_rule(&i.slalom)?;
    let mut certificates = json!({ "rule": out.rule, "pairs": out.pairs });
    let mut violations = Vec::new();
    if let Some(x) = &i.x {
        same_universe(&[("slalom", i.slalom.ladder().universe()), ("X", x.universe())])?;
        violations = out.audit(&i.slalom, x);
        certificates["matches"] = json!(match_set(x, &out.rule)?);
        certificates["captured"] = json!(capture_check(&i.slalom, x)?);
    }
    Ok(Outcome::checked(certificates, violations))
}

// ---- stochastic ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrefixInput {
    rule: Rule,
    first: usize,
    #[serde(default)]
    samples: Option<u64>,
}

fn exact_avoid_probability_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: PrefixInput = parse(inputs)?;
    let p = exact_avoid_probability::<Rational>(&i.rule, i.first)?;
    let bits: usize = i.rule.blocks()[..i.first].iter().map(|b| b.width()).sum();
    let mut violations = Vec::new();
    let mut certificates = json!({
        "avoid": rational_string(&p.exact),
        "follow": rational_string(&p.follow()),
        "per_block": rationals(&p.per_block),
    });
    if bits <= 20 {
        let brute = oracle::enumerated_avoid_probability(&i.rule, i.first)?;
        if brute != p.exact {
            violations.push(format!("enumeration gives {}", rational_string(&brute)));
        }
        certificates["enumerated"] = json!(true);
    }
    Ok(Outcome::checked(certificates, violations))
}

fn mc_follow_estimate_op(inputs: &Value, seed: u64) -> Result<Outcome> {
    let i: PrefixInput = parse(inputs)?;
    let samples = i.samples.ok_or(Error::Schema("inputs.samples: missing field".into()))?;
    let exact = exact_avoid_probability::<Rational>(&i.rule, i.first)?.follow();
    let report = mc_follow_estimate(&i.rule, i.first, samples, seed)?;
    Ok(Outcome::ok(json!({
        "samples": report.samples,
        "hits": report.hits,
        "estimate": rational_string(&report.estimate),
        "stderr": report.stderr,
        "seed": report.seed,
        "exact_follow": rational_string(&exact),
        "within_3_stderr": report.within(&exact, 3.0),
        "csv": sample_csv("rule", i.first, &exact, &report)?,
    })))
}

fn slow_vs_fast_sweep_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        profiles: Vec<Vec<usize>>,
        horizon: usize,
    }
    let i: In = parse(inputs)?;
    let t = slow_vs_fast_sweep::<Rational>(&i.profiles, i.horizon)?;
    Ok(Outcome::ok(json!({
        "trajectories": t.iter().map(|x| rationals(x)).collect::<Vec<_>>(),
        "csv": sweep_csv(&t)?,
    })))
}

// ---- families ----

fn enumerate_polynomials_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        count: usize,
    }
    let i: In = parse(inputs)?;
    Ok(Outcome::ok(json!({ "polys": enumerate_polynomials(i.count)? })))
}

/// Accepts `"a/b"`, `"a"` or a JSON integer.
#[derive(Deserialize)]
#[serde(untagged)]
enum RationalInput {
    Int(i64),
    Text(String),
}

impl RationalInput {
    fn value(&self) -> Result<Rational> {
        match self {
            RationalInput::Int(n) => Ok(Rational::from_integer((*n).into())),
            RationalInput::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("inputs.r: {s:?} is not a rational"))),
        }
    }
}

fn polynomial_member_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        r: RationalInput,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        polys: Option<Vec<Polynomial>>,
    }
    let i: In = parse(inputs)?;
    let polys = match (i.polys, i.count) {
        (Some(p), None) => p,
        (None, Some(c)) => enumerate_polynomials(c)?,
        _ => return Err(Error::Schema("inputs: give exactly one of count, polys".into())),
    };
    let r = i.r.value()?;
    let member = polynomial_member(&r, &polys)?;
    let violations: Vec<String> = polys
        .iter()
        .enumerate()
        .filter(|(t, p)| {
            let v: Rational = p.eval(&r);
            member.has(*t) != (v > Rational::from_integer(0.into()))
        })
        .map(|(t, p)| format!("index {t} ({p}) disagrees with rational evaluation"))
        .collect();
    Ok(Outcome::checked(json!({ "member": member }), violations))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComboInput {
    family: FamilyFragment,
    combo: BooleanCombo,
}

fn combo_witnesses_op(inputs: &Value, _: u64) -> Result<Outcome> {
    let i: ComboInput = parse(inputs)?;
    let w = combo_witnesses(&i.family, &i.combo)?;
    let slow = oracle::combo_pointwise(&i.family, &i.combo)?;
    let violations = if slow == w.to_vec() {
        vec![]
    } else {
        vec![format!("pointwise scan gives {slow:?}")]
    };
    Ok(Outcome::checked(
        json!({ "witnesses": w.to_vec(), "count": w.len() }),
        violations,
    ))
}

fn density_witnesses_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        family: FamilyFragment,
        #[serde(default)]
        inside: Vec<usize>,
        #[serde(default)]
        outside: Vec<usize>,
        want: usize,
    }
    let i: In = parse(inputs)?;
    Ok(Outcome::ok(json!(density_witnesses(
        &i.family, &i.inside, &i.outside, i.want
    )?)))
}

fn support_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        sigma: FinSuppPermutation,
    }
    let i: In = parse(inputs)?;
    Ok(Outcome::ok(json!({ "support": i.sigma.support() })))
}

fn is_automorphism_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        sigma: FinSuppPermutation,
        family: FamilyFragment,
    }
    let i: In = parse(inputs)?;
    Ok(Outcome::ok(json!(is_automorphism(&i.sigma, &i.family)?)))
}

fn support_chain_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        family: FamilyFragment,
        sigma: FinSuppPermutation,
        pairs: usize,
        #[serde(default)]
        excluded: Vec<usize>,
    }
    let i: In = parse(inputs)?;
    let chain = support_chain(&i.family, &i.sigma, i.pairs, &i.excluded)?;
    let violations = chain.audit(&i.family, &i.sigma);
    Ok(Outcome::checked(
        json!({
            "k_star": chain.k_star,
            "members": chain.members,
            "differences": sets(&chain.differences(&i.family)?),
        }),
        violations,
    ))
}

fn orbit_rule_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        family: FamilyFragment,
        #[serde(default)]
        combo: BooleanCombo,
        sigmas: Vec<FinSuppPermutation>,
        positive_count: usize,
        #[serde(rename = "A", default)]
        a: Option<RealSet>,
        blocks_wanted: usize,
    }
    let i: In = parse(inputs)?;
    let out = orbit_rule(
        &i.family,
        &i.combo,
        &i.sigmas,
        i.positive_count,
        i.a.as_ref(),
        i.blocks_wanted,
    )?;
    let mut violations = out.audit(&i.sigmas);
    // replay the certificate on a real that follows every emitted block
    let x = diagonal_follower(i.family.universe(), std::slice::from_ref(&out.rule), out.rule.len())?;
    violations.extend(out.verify(&i.sigmas, &x.real)?);
    Ok(Outcome::checked(
        json!({
            "rule": out.rule,
            "points": out.points,
            "chains": out.chains,
            "E_size": out.e_set.len(),
            "follower": x.real,
            "followed": x.achieved[0],
        }),
        violations,
    ))
}

fn extend_check_op(inputs: &Value, _: u64) -> Result<Outcome> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct In {
        family: FamilyFragment,
        group: Vec<FinSuppPermutation>,
        #[serde(rename = "X")]
        x: RealSet,
        combos: Vec<OrbitCombo>,
    }
    let i: In = parse(inputs)?;
    same_universe(&[("family", i.family.universe()), ("X", i.x.universe())])?;
    let report = extend_check(&i.family, &i.group, &i.x, &i.combos)?;
    let violations = report
        .uncovered()
        .into_iter()
        .map(|c| format!("combination {c} misses certified witnesses"))
        .collect();
    Ok(Outcome::checked(json!(report), violations))
}
