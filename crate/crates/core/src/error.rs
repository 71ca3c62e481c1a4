use thiserror::Error;

use crate::rule::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("universe size must be at least 1")]
    EmptyUniverse,

    #[error("point {point} lies outside the universe [0, {size})")]
    OutOfUniverse { point: usize, size: usize },

    #[error("universe mismatch: {left} vs {right}")]
    UniverseMismatch { left: usize, right: usize },

    #[error("invalid rule: {0}")]
    InvalidRule(ValidationReport),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("{what} index {index} out of range (length {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("block {block} has size {size}, expected exactly {expected}")]
    RaggedBlock { block: usize, size: usize, expected: usize },

    #[error("block {block} has width {width}, exceeding the bound {bound}")]
    TooWide { block: usize, width: usize, bound: usize },

    #[error("majority combining needs k >= 2 (got {reals} reals, i.e. k = {k})", k = .reals.saturating_sub(1))]
    MajorityTooNarrow { reals: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("horizon {horizon} exceeds the {available} available values")]
    HorizonTooLong { horizon: usize, available: usize },

    #[error("sequence is not strictly increasing at position {position}")]
    NotIncreasing { position: usize },

    #[error("splice needs {needed} cut points, only {available} given")]
    SpliceTooShort { needed: usize, available: usize },

    #[error("chain step {step} is not contained in step {prev}", prev = .step - 1)]
    ChainNotNested { step: usize },

    #[error("chain step {step}: real does not match block {block}")]
    ChainMismatch { step: usize, block: usize },

    #[error("least block point {min_point} is not above the splice floor {floor}")]
    SpliceFloor { min_point: usize, floor: usize },

    #[error("tree is not downward closed: {word} is present but its parent is not")]
    NotDownwardClosed { word: String },

    #[error("no witness within depth {depth}")]
    NoTreeWitness { depth: usize },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid tree spec: {0}")]
    InvalidTree(String),

    #[error("invalid predictor: {0}")]
    InvalidPredictor(String),

    #[error("evasion transfer failed at block {block}: neither X nor its complement matches")]
    TransferFailure { block: usize },

    #[error("ladder needs {needed} points but the universe has {size}")]
    LadderExceedsUniverse { needed: usize, size: usize },

    #[error("no coincident pair among {len} positions")]
    NoCoincidentPair { len: usize },

    #[error("invalid slalom: {0}")]
    InvalidSlalom(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("permutation is the identity")]
    IdentityPermutation,

    #[error("permutation is not an automorphism: image of member {member} is not a member")]
    NotAutomorphism { member: usize },

    #[error("family members {first} and {second} coincide")]
    DuplicateMember { first: usize, second: usize },

    #[error("positive and negative parts overlap at {0}")]
    OverlappingCombo(usize),

    #[error("inside and outside sets overlap at {0}")]
    OverlappingWitnessSets(usize),

    #[error("shortfall: wanted {wanted} {what}, found {found}")]
    Shortfall {
        what: &'static str,
        wanted: usize,
        found: usize,
    },

    #[error("{0}")]
    Schema(String),
}
