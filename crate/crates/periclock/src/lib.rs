//! Relational classical and quantum dynamics with periodic clocks.
//!
//! All Hamiltonians are diagonal in their declared eigenbasis, so every
//! clock-cycle integral is evaluated in closed form.

pub mod classical_dynamics;
pub mod clock_changes;
pub mod clock_povm;
pub mod dirac_quantization;
pub mod error;
pub mod hilbert_core;
pub mod models;
pub mod relational_observables;
pub mod rng;
pub mod trinity;
pub mod verify;

pub use error::{Error, Result};
pub use hilbert_core::{Basis, Operator, StateVector, C64};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
