//! Exact computation of idele class groups of curves over finite fields and
//! of two-dimensional local rings, mod n prime to the characteristic.
//!
//! The building blocks, bottom up:
//!
//! * [`abgroup`]: integer matrices, Smith normal form, finitely presented
//!   abelian groups and their invariant factors.
//! * [`fields`]: the field tower F_q, F_q((t)), F_q((s))((t)) with exact
//!   arithmetic and explicit precision tracking.
//! * [`milnor`]: Milnor K-symbols, Steinberg normalization, the tame residue
//!   symbol, unit filtration, and finite presentations of K^M_r/n.
//! * [`chains`]: the two scheme models (projective line, local surface
//!   spectrum), dimension functions, and chain enumeration/classification.
//! * [`ideles`]: idele groups, the Q-map, class-group cokernels, the
//!   ray-class brute-force oracle, and reciprocity checks.
//! * [`katocx`]: nerve complexes of normal-crossing configurations and their
//!   homology over Z/n.
//! * [`report`]: job dispatch, deterministic seeded RNG, JSON reports and the
//!   golden regression store shared by the CLI and the Python bindings.

pub mod abgroup;
pub mod chains;
pub mod error;
pub mod fields;
pub mod ideles;
pub mod katocx;
pub mod milnor;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
