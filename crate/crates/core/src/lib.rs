//! Exact-arithmetic toolkit for measure-once quantum finite automata.
//!
//! * [`exactmath`]: rationals, row vectors, dense matrices, nullspaces.
//! * [`qfa`]: the automaton model, exact word values, bounded search.
//! * [`pcp`]: Post correspondence reductions and the free-rotation certificate.
//! * [`shift`]: affine rescaling of values with rational four-square embeddings.
//! * [`invariant`]: invariant polynomials of the generated group and finite closures.
//! * [`decision`]: dovetailed procedures for strict-threshold emptiness.
//! * [`selftest`]: the end-to-end checks run by `qfa selftest`.

pub mod decision;
pub mod error;
pub mod exactmath;
pub mod invariant;
pub mod pcp;
pub mod qfa;
pub mod selftest;
pub mod shift;

pub use error::{Error, Result};
pub use exactmath::{Rational, RationalMatrix, RationalVector};
pub use qfa::{Qfa, Relation, ThresholdSpec, Word};

/// Version tag stamped into every JSON document the toolkit writes.
pub const SCHEMA: &str = "qfa-toolkit/1";
