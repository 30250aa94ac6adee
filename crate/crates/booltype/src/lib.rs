//! Boolean-algebra-valued types over finite first-order structures.
//!
//! The crate builds formula algebras (algebras of parameter-definable
//! subsets of a finite structure), manipulates Boolean types and Keisler
//! measures as homomorphisms and measures on those algebras, and verifies
//! the structural facts relating them (extension criteria, smoothness,
//! image bounds, decomposition into complete types) by exhaustive
//! computation at small scale. A `booltype` binary exposes every operation.

pub mod algebra;
pub mod automorphism;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod formula;
pub mod formula_algebra;
pub mod literal;
pub mod local;
pub mod measure;
pub mod ratio;
pub mod structure;
pub mod types;

pub use error::{Error, Result};
