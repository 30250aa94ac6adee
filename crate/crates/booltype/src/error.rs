//! Crate-wide error type.
//!
//! Errors fall into three rough groups that the CLI maps to distinct
//! message prefixes: usage problems (bad syntax, unknown names), domain
//! problems (invariant violations, values out of range), and guard
//! violations (a requested computation exceeds the declared finite
//! envelope).

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error("algebra must have at least one atom")]
    DegenerateAlgebra,

    #[error("algebra supports at most {limit} atoms, got {actual}")]
    TooManyAtoms { limit: usize, actual: usize },

    #[error("atom index {index} out of range for algebra with {atom_count} atoms")]
    AtomOutOfRange { index: usize, atom_count: usize },

    #[error("elements belong to different algebras")]
    MixedAlgebra,

    #[error("element does not belong to this algebra")]
    ForeignElement,

    #[error("relative algebra over zero has no unit")]
    RelativeOverZero,

    #[error("blocks do not partition the atom set: {reason}")]
    BadPartition { reason: String },

    #[error("element is not a union of subalgebra blocks")]
    NotInSubalgebra,

    #[error("atom images {first} and {second} overlap")]
    ImagesOverlap { first: usize, second: usize },

    #[error("atom images do not cover the codomain; missing {missing}")]
    ImagesMissCover { missing: String },

    #[error("wrong number of atom images: expected {expected}, got {actual}")]
    ImageCountMismatch { expected: usize, actual: usize },

    #[error("value {value} below the lower bound {bound} of the extension interval")]
    BelowInterval { value: String, bound: String },

    #[error("value {value} above the upper bound {bound} of the extension interval")]
    AboveInterval { value: String, bound: String },

    #[error("measure-preserving search requested without measures")]
    MissingMeasures,

    #[error("atom weight must be positive, got {weight} at atom {index}")]
    NonPositiveWeight { weight: String, index: usize },

    #[error("weight must be nonnegative, got {weight} at atom {index}")]
    NegativeWeight { weight: String, index: usize },

    #[error("weights sum to {sum}, expected 1")]
    WeightSumNotOne { sum: String },

    #[error("universe element {element} out of range for universe of size {size}")]
    UniverseOutOfRange { element: usize, size: usize },

    #[error("tuple {tuple} has arity {actual}, relation {symbol} expects {expected}")]
    ArityMismatch {
        symbol: String,
        tuple: String,
        expected: usize,
        actual: usize,
    },

    #[error("unknown relation symbol {symbol}")]
    UnknownRelation { symbol: String },

    #[error("duplicate relation symbol {symbol}")]
    DuplicateRelation { symbol: String },

    #[error("unbound variable {name}")]
    UnboundVariable { name: String },

    #[error("parameter constant c{index} out of range for universe of size {size}")]
    ParameterOutOfRange { index: usize, size: usize },

    #[error("parameter constant c{index} not in the declared parameter set")]
    ParameterOutsideSet { index: usize },

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("variable split invalid: {reason}")]
    BadVariableSplit { reason: String },

    #[error("parameter sets are not nested: extension requires a superset")]
    NotASuperset,

    #[error("types have mismatched domains or codomains")]
    MismatchedTypes,

    #[error("structure mismatch: operation requires objects over one structure")]
    MixedStructures,

    #[error("insufficient shattering: need a shattered set of size {needed}, found {found}")]
    InsufficientShattering { needed: usize, found: usize },

    #[error("value {value} is not exactly representable as a rational")]
    NotRational { value: String },

    #[error("guard exceeded: {what} needs {actual}, limit {limit}")]
    GuardExceeded {
        what: String,
        limit: u64,
        actual: u64,
    },

    #[error("unknown name {name}")]
    UnknownName { name: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn guard(what: impl Into<String>, limit: u64, actual: u64) -> Error {
        Error::GuardExceeded {
            what: what.into(),
            limit,
            actual,
        }
    }

    /// Exit status the CLI reports for this error: 2 for usage, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Syntax { .. } | Error::UnknownName { .. } => 2,
            _ => 1,
        }
    }
}
