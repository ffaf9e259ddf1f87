use thiserror::Error;

use crate::span::Valuation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("level k must be at least 1 (got {0})")]
    InvalidLevel(u32),

    #[error("value {value} at position {position} is outside 0..={k}")]
    ValueOutOfRange { position: usize, value: u32, k: u8 },

    #[error("mismatched levels: k={left} vs k={right}")]
    MismatchedLevel { left: u8, right: u8 },

    #[error("supports overlap at position {position}")]
    OverlappingSupport { position: usize },

    #[error("not a block: value k={k} is never attained")]
    NotABlock { k: u8 },

    #[error("generator index {index} out of range for a sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid combination: {0}")]
    InvalidCombination(String),

    #[error("invalid block sequence: block {index} does not lie strictly after its predecessor")]
    InvalidSequence { index: usize },

    #[error("enumeration of {generators} generators at k={k} exceeds the cap of 2^{cap_bits} assignments")]
    EnumerationCapExceeded { generators: usize, k: u8, cap_bits: u32 },

    #[error("index {index} is past the end of an explicit stream of length {len}")]
    PastEnd { index: usize, len: usize },

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("witness does not evaluate to the given block")]
    WitnessMismatch,

    #[error("block is not intertwined")]
    NotIntertwined,

    #[error("star-split claim violated at position {position}: (p*q)={star_value}, p={block_value}")]
    ClaimViolation { position: usize, star_value: u8, block_value: u8 },

    #[error("extraction discarded a left part that attains k (prefix length {prefix_len} is not minimal)")]
    MinimalityViolation { prefix_len: usize },

    #[error("the component of the last generator is not upward-closed")]
    ComponentNotUpwardClosed,

    #[error("split part `{part}` is not in both starred spans")]
    SplitOutsideSpans { part: char },

    #[error("members {0} and {1} are not almost disjoint at the configured horizon")]
    NotAlmostDisjoint(usize, usize),

    #[error("a family needs at least one member")]
    EmptyFamily,

    #[error("no admissible block for step {step} within horizon {horizon}")]
    HorizonExhausted { step: usize, horizon: usize },

    #[error("valuation changed at step {step} against member {member}: {before} -> {after}")]
    DiagonalClaimViolation { step: usize, member: usize, before: Valuation, after: Valuation },

    #[error("step {step}: an element of the intersection with member {member} uses the new block untetrised")]
    UntetrisedNewBlock { step: usize, member: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Stable machine-readable code, used by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidLevel(_) => "E_LEVEL",
            Error::ValueOutOfRange { .. } => "E_VALUE",
            Error::MismatchedLevel { .. } => "E_MISMATCHED_LEVEL",
            Error::OverlappingSupport { .. } => "E_OVERLAP",
            Error::NotABlock { .. } => "E_NOT_A_BLOCK",
            Error::IndexOutOfRange { .. } => "E_INDEX",
            Error::InvalidCombination(_) => "E_COMBINATION",
            Error::InvalidSequence { .. } => "E_SEQUENCE",
            Error::EnumerationCapExceeded { .. } => "E_CAP",
            Error::PastEnd { .. } => "E_PAST_END",
            Error::InvalidStream(_) => "E_STREAM",
            Error::WitnessMismatch => "E_WITNESS",
            Error::NotIntertwined => "E_NOT_INTERTWINED",
            Error::ClaimViolation { .. } => "E_CLAIM",
            Error::MinimalityViolation { .. } => "E_MINIMALITY",
            Error::ComponentNotUpwardClosed => "E_UPWARD_CLOSURE",
            Error::SplitOutsideSpans { .. } => "E_SPLIT_SPANS",
            Error::NotAlmostDisjoint(..) => "E_NOT_AD",
            Error::EmptyFamily => "E_EMPTY_FAMILY",
            Error::HorizonExhausted { .. } => "E_HORIZON",
            Error::DiagonalClaimViolation { .. } => "E_DIAGONAL_CLAIM",
            Error::UntetrisedNewBlock { .. } => "E_UNTETRISED",
            Error::Parse { .. } => "E_PARSE",
            Error::Io { .. } => "E_IO",
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, column, message: message.into() }
    }
}
