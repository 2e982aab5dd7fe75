//! Seeded random inputs for property checks and reports.
//!
//! The generator is SplitMix64. A real is `(x >> 11) · 2⁻⁵³`, uniform on
//! `[0, 1)`; complex components are mapped to `[−1, 1)` independently.

use nalgebra::DMatrix;
use rand_core::RngCore;
use rand_xoshiro::SplitMix64;

use crate::hilbert_core::{Basis, Operator, StateVector, Vector, C64};

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(rand_core::SeedableRng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0))
    }

    pub fn vector(&mut self, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| self.complex())
    }

    /// Unit-norm state with uniform complex components before normalisation.
    pub fn state(&mut self, dim: usize, basis: Basis) -> StateVector {
        StateVector::new(self.vector(dim), basis).normalized()
    }

    /// `(A + A†)/2` for a matrix with uniform complex entries.
    pub fn hermitian(&mut self, dim: usize, basis: Basis) -> Operator {
        let a = DMatrix::from_fn(dim, dim, |_, _| self.complex());
        Operator { mat: (&a + a.adjoint()) * C64::new(0.5, 0.0), basis }
    }
}
