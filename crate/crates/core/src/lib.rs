//! Finite-universe laboratory for rules and their followers.

pub mod battery;
pub mod constructions;
pub mod error;
pub mod families;
pub mod laver;
pub mod oracle;
pub mod prediction;
pub mod rule;
pub mod scalar;
pub mod scenario;
pub mod set;
pub mod stochastic;

pub use error::{Error, Result};
pub use rule::{match_set, one_rule_witness, slow_report, validate_rule, Block, Rule, WidthBound};
pub use scalar::Scalar;
pub use set::{RealSet, Universe, Word};
pub use stochastic::{
    exact_avoid_probability, mc_follow_estimate, slow_vs_fast_sweep, AvoidanceProbability, SampleReport,
};

/// Exact rational scalar used for every reported probability and series value.
pub type Rational = num_rational::BigRational;

pub type ExactAvoidance = AvoidanceProbability<Rational>;
pub type ExactSlowReport = rule::SlowReport<Rational>;
