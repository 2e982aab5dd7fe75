//! Periodic clocks with rational spectra and their covariant time POVMs.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hilbert_core::{
    commutator, evolve_diag, max_abs, moment_integral, phase, segment_integral, Basis, Mat,
    Operator, StateVector, C64, I,
};

/// Tolerance for the moment commutator defect.
pub const DEFECT_TOL: f64 = 1e-10;
/// Tolerance between the direct and floor-law forms of `⟨φ̂(s)⟩`.
pub const FLOOR_LAW_TOL: f64 = 1e-8;

/// A nondegenerate clock with energies `ε_j = ω_t (n_j + varphi/2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub n_set: Vec<i64>,
    pub omega_t: f64,
    pub varphi: f64,
    /// Phase convention `g(ε_j)`, one entry per level.
    pub g: Vec<f64>,
}

/// Validated constructor. `g = None` means `g ≡ 0`.
pub fn make_clock(n_set: &[i64], omega_t: f64, varphi: f64, g: Option<Vec<f64>>) -> Result<ClockSpec> {
    if n_set.is_empty() {
        return Err(Error::InvalidParameter { name: "n_set", reason: "empty".into() });
    }
    if !(omega_t > 0.0) || !omega_t.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_t", reason: format!("{omega_t} is not positive") });
    }
    if !(0.0..2.0 * PI).contains(&varphi) {
        return Err(Error::InvalidParameter { name: "varphi", reason: format!("{varphi} outside [0, 2π)") });
    }
    let mut seen = BTreeSet::new();
    for &n in n_set {
        if !seen.insert(n) {
            return Err(Error::DuplicateLevel(n));
        }
    }
    let g = match g {
        None => vec![0.0; n_set.len()],
        Some(g) if g.len() == n_set.len() => g,
        Some(g) => return Err(Error::DimensionMismatch(n_set.len(), g.len())),
    };
    Ok(ClockSpec { n_set: n_set.to_vec(), omega_t, varphi, g })
}

impl ClockSpec {
    /// Truncated oscillator clock, levels `ω_t (n + ½)` for `n = 0..d`.
    pub fn oscillator(d: usize, omega_t: f64) -> Result<Self> {
        let n: Vec<i64> = (0..d as i64).collect();
        make_clock(&n, omega_t, PI, None)
    }

    /// Two-level clock with energies `∓ω/2`, ordered `(ε₋, ε₊)`.
    pub fn qubit(omega: f64) -> Result<Self> {
        make_clock(&[-1, 0], omega, PI, None)
    }

    pub fn dim(&self) -> usize {
        self.n_set.len()
    }

    pub fn t_max(&self) -> f64 {
        2.0 * PI / self.omega_t
    }

    pub fn energies(&self) -> Vec<f64> {
        let shift = self.varphi / (2.0 * PI);
        self.n_set.iter().map(|&n| self.omega_t * (n as f64 + shift)).collect()
    }

    pub fn hamiltonian(&self) -> Operator {
        Operator::diagonal(&self.energies(), Basis::Clock)
    }

    pub fn evolve(&self, t: f64) -> Operator {
        evolve_diag(&self.energies(), t, Basis::Clock)
    }

    /// Index of level `n`, if present.
    pub fn level_index(&self, n: i64) -> Option<usize> {
        self.n_set.iter().position(|&m| m == n)
    }

    /// Index of the level whose energy equals `eps` within `tol`.
    pub fn energy_index(&self, eps: f64, tol: f64) -> Option<usize> {
        self.energies().iter().position(|&e| (e - eps).abs() <= tol)
    }

    /// Matrix `e^{i(g_j − g_k)} · w(ε_j − ε_k)` for a scalar kernel `w`.
    fn kernel(&self, w: impl Fn(f64) -> C64) -> Operator {
        let e = self.energies();
        let d = self.dim();
        let mat = Mat::from_fn(d, d, |j, k| phase(self.g[j] - self.g[k]) * w(e[j] - e[k]));
        Operator { mat, basis: Basis::Clock }
    }
}

/// Splits a reading into `(φ_C, z)` with `φ = φ_C + z·t_max` and `φ_C ∈ [0, t_max)`.
pub fn wrap_reading(spec: &ClockSpec, phi: f64) -> (f64, i64) {
    let t = spec.t_max();
    let z = (phi / t).floor();
    let mut r = phi - z * t;
    // Guard against r == t after rounding.
    if r >= t {
        r -= t;
        return (r, z as i64 + 1);
    }
    (r, z as i64)
}

/// Clock state `|φ⟩` with amplitudes `e^{i g_j} e^{−i ε_j φ}`.
///
/// Readings outside one cycle are evaluated directly, so
/// `|φ_C + z t_max⟩ = e^{−i z varphi} |φ_C⟩` and projectors are exactly periodic.
pub fn clock_state(spec: &ClockSpec, phi: f64) -> StateVector {
    let amps: Vec<C64> = spec
        .energies()
        .iter()
        .zip(&spec.g)
        .map(|(&e, &g)| phase(g - e * phi))
        .collect();
    StateVector::from_slice(&amps, Basis::Clock)
}

/// Effect operator `(1/t_max) ∫_a^b |φ⟩⟨φ| dφ`.
pub fn effect_operator(spec: &ClockSpec, a: f64, b: f64) -> Result<Operator> {
    let t = spec.t_max();
    if !(0.0 <= a && a <= b && b <= t) {
        return Err(Error::IntervalOutOfRange { a, b, t_max: t });
    }
    Ok(spec.kernel(|delta| segment_integral(0, delta, a, b) / t))
}

/// `n`th moment operator `(1/t_max) ∫₀^{t_max} φⁿ |φ⟩⟨φ| dφ`.
pub fn moment(spec: &ClockSpec, n: u32) -> Operator {
    let t = spec.t_max();
    spec.kernel(|delta| moment_integral(n, delta, t).expect("t_max > 0"))
}

/// Result of a computed-vs-predicted operator identity.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub computed: Operator,
    pub predicted: Operator,
    pub residual: f64,
}

/// `[φ̂⁽ⁿ⁾, Ĥ_C] − i n φ̂⁽ⁿ⁻¹⁾`, checked against `−i t_maxⁿ⁻¹ |0⟩⟨0|`.
pub fn moment_commutator_defect(spec: &ClockSpec, n: u32) -> Result<IdentityCheck> {
    if n == 0 {
        return Err(Error::ZerothMomentDefect);
    }
    let h = spec.hamiltonian();
    let comm = commutator(&moment(spec, n), &h)?;
    let computed = &comm - &moment(spec, n - 1).scale(I * n as f64);
    let zero = clock_state(spec, 0.0);
    let predicted = Operator::outer(&zero, &zero).scale(-I * spec.t_max().powi(n as i32 - 1));
    let residual = (&computed - &predicted).max_abs();
    ensure("moment commutator defect", residual, DEFECT_TOL)?;
    Ok(IdentityCheck { computed, predicted, residual })
}

/// Winding operator `(1/t_max) ∫₀^{t_max} ⌊(s+φ)/t_max⌋ |φ⟩⟨φ| dφ`.
///
/// With `s = z t_max + r` this is `z·I + E[t_max − r, t_max)`.
pub fn z_operator(spec: &ClockSpec, s: f64) -> Operator {
    let t = spec.t_max();
    let (r, z) = wrap_reading(spec, s);
    let d = spec.dim();
    let tail = effect_operator(spec, t - r, t).expect("interval inside cycle");
    &Operator::identity(d, Basis::Clock).scale(C64::new(z as f64, 0.0)) + &tail
}

/// Floor-law form of the evolved first moment:
/// `U_C†(s) φ̂ U_C(s) = (1/t_max) ∫ (s + φ − t_max⌊(s+φ)/t_max⌋) |φ⟩⟨φ| dφ`.
pub fn evolved_moment_floor_law(spec: &ClockSpec, s: f64) -> Operator {
    let t = spec.t_max();
    let (r, _) = wrap_reading(spec, s);
    let cut = t - r;
    // On [0, cut) the integrand is φ + r, on [cut, t) it is φ + r − t.
    spec.kernel(|delta| {
        let lower = segment_integral(1, delta, 0.0, cut) + segment_integral(0, delta, 0.0, cut) * r;
        let upper = segment_integral(1, delta, cut, t) + segment_integral(0, delta, cut, t) * (r - t);
        (lower + upper) / t
    })
}

/// `⟨ψ₂| U_C†(s) φ̂ U_C(s) |ψ₁⟩` by direct matrices, checked against the floor law.
pub fn heisenberg_phase_expectation(
    spec: &ClockSpec,
    psi1: &StateVector,
    psi2: &StateVector,
    s: f64,
) -> Result<C64> {
    let d = spec.dim();
    if psi1.dim() != d {
        return Err(Error::DimensionMismatch(d, psi1.dim()));
    }
    if psi2.dim() != d {
        return Err(Error::DimensionMismatch(d, psi2.dim()));
    }
    let u = spec.evolve(s);
    let evolved = &(&u.adjoint() * &moment(spec, 1)) * &u;
    let direct = evolved.sandwich(psi2, psi1);
    let floor = evolved_moment_floor_law(spec, s).sandwich(psi2, psi1);
    let scale = psi1.norm() * psi2.norm();
    ensure("evolved clock moment vs floor law", (direct - floor).norm(), FLOOR_LAW_TOL * scale.max(1.0))?;
    Ok(direct)
}

/// `U_C(t_max)` as the scalar `e^{−i varphi}` read off the first diagonal entry.
pub fn projective_phase(spec: &ClockSpec) -> Complex64 {
    spec.evolve(spec.t_max()).mat[(0, 0)]
}

/// Largest deviation of `U_C(t_max)` from `e^{−i varphi} I`.
pub fn projective_defect(spec: &ClockSpec) -> f64 {
    let d = spec.dim();
    let u = spec.evolve(spec.t_max());
    max_abs(&(&u.mat - Mat::identity(d, d) * phase(-spec.varphi)))
}
