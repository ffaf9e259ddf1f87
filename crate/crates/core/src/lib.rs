//! Exact computation in the partial semigroup FIN_k of finitely supported
//! maps `ω → {0, …, k}`: block algebra, span membership with witnesses, the
//! valuation `F`, intertwined-block extraction, star-splitting, and a finite
//! diagonalization against an almost disjoint family of block sequences.

pub mod blocks;
pub mod diagonal;
pub mod error;
pub mod span;
pub mod streams;
pub mod structure;

pub use blocks::Subblock;
pub use diagonal::{
    choose_next, run_diagonalization, validate_family, ADFamily, Choice, DiagonalStep, DiagonalTrace, StabilityCheck,
};
pub use error::{Error, Result};
pub use span::{
    big_f, enumerate_span, evaluate, intersect_spans, is_member, Combination, CommonElement, EnumerationCap,
    FiniteBlockSeq, HorizonValuation, SpanEnumeration, Term, Valuation,
};
pub use streams::{Builtin, SequenceStream, StreamKind};
pub use structure::{
    build_graph, extract_from, extract_intertwined, is_intertwined, minimal_prefix_intersection, smallness_check,
    star_split, DecompositionGraph, Extraction, SmallnessCertificate, StarSplit, Verdict,
};
