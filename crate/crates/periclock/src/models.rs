//! Canonical clock-system pairs and their standard observables.

use std::f64::consts::{E, PI, SQRT_2};

use crate::clock_povm::ClockSpec;
use crate::dirac_quantization::{build_constraint, solve_constraint, ConstraintSystem, PhysicalSpace, SystemSpec};
use crate::error::Result;
use crate::hilbert_core::{phase, Basis, Mat, Operator, C64, ZERO};

/// Annihilation operator on `d` oscillator levels.
pub fn ladder(d: usize) -> Mat {
    Mat::from_fn(d, d, |r, c| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { ZERO })
}

/// `√(1/2mω) (a + a†)`.
pub fn oscillator_position(d: usize, mass: f64, omega: f64) -> Operator {
    let a = ladder(d);
    let s = (1.0 / (2.0 * mass * omega)).sqrt();
    Operator { mat: (&a + a.adjoint()) * C64::new(s, 0.0), basis: Basis::System }
}

/// `i √(mω/2) (a† − a)`.
pub fn oscillator_momentum(d: usize, mass: f64, omega: f64) -> Operator {
    let a = ladder(d);
    let s = (mass * omega / 2.0).sqrt();
    Operator { mat: (a.adjoint() - &a) * C64::new(0.0, s), basis: Basis::System }
}

/// Diagonal momentum on a grid.
pub fn grid_momentum(momenta: &[f64]) -> Operator {
    Operator::diagonal(momenta, Basis::System)
}

/// Position on an arbitrary momentum grid: `q_kl = i(−1)^{k−l}/(p_k − p_l)`, zero diagonal.
pub fn grid_position(momenta: &[f64]) -> Operator {
    let n = momenta.len();
    let mat = Mat::from_fn(n, n, |k, l| {
        if k == l {
            ZERO
        } else {
            let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(0.0, sign / (momenta[k] - momenta[l]))
        }
    });
    Operator { mat, basis: Basis::System }
}

/// Uniform grid `p_k = (k − (n−1)/2) Δ`.
pub fn uniform_grid(n: usize, delta: f64) -> Vec<f64> {
    (0..n).map(|k| (k as f64 - (n as f64 - 1.0) / 2.0) * delta).collect()
}

/// Position conjugate to a uniform momentum grid via the discrete Fourier transform.
pub fn dvr_position(n: usize, delta: f64) -> Operator {
    let length = 2.0 * PI / delta;
    let x: Vec<f64> = (0..n).map(|j| (j as f64 - (n as f64 - 1.0) / 2.0) * length / n as f64).collect();
    let p = uniform_grid(n, delta);
    let norm = 1.0 / n as f64;
    // ⟨p_k|x_j⟩ = e^{−i p_k x_j}/√n
    let mat = Mat::from_fn(n, n, |k, l| {
        let mut acc = ZERO;
        for &xj in &x {
            acc += phase(-(p[k] - p[l]) * xj) * xj;
        }
        acc * norm
    });
    Operator { mat, basis: Basis::System }
}

/// A clock-system pair with the system's position, momentum and mass.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub cs: ConstraintSystem,
    pub ps: PhysicalSpace,
    pub q: Operator,
    pub p: Operator,
    pub mass: f64,
}

impl Model {
    fn assemble(name: String, clock: ClockSpec, system: SystemSpec, q: Operator, p: Operator, mass: f64) -> Result<Self> {
        let cs = build_constraint(clock, system)?;
        let ps = solve_constraint(&cs, cs.tol_energy)?;
        Ok(Model { name, cs, ps, q, p, mass })
    }
}

/// Oscillator clock `ω_t = 1` and oscillator system `ω = m₂/m₁`, each truncated to `d` levels,
/// with energy chosen so that `m₁n₁ + m₂n₂ = Ẽ` on solutions.
pub fn commensurate_oscillators(m1: u32, m2: u32, e_tilde: u32, d: usize) -> Result<Model> {
    let omega = m2 as f64 / m1 as f64;
    let energy = (e_tilde as f64 + (m1 + m2) as f64 / 2.0) / m1 as f64;
    Model::assemble(
        format!("commensurate oscillators {m1}:{m2}"),
        ClockSpec::oscillator(d, 1.0)?,
        SystemSpec::oscillator(d, omega, energy)?,
        oscillator_position(d, 1.0, omega),
        oscillator_momentum(d, 1.0, omega),
        1.0,
    )
}

/// `ω_t = 1`, `ω = √2` and `E = ½ + (3/2)√2`, which admits exactly one solution.
pub fn incommensurate_oscillators(d: usize) -> Result<Model> {
    Model::assemble(
        "incommensurate oscillators".into(),
        ClockSpec::oscillator(d, 1.0)?,
        SystemSpec::oscillator(d, SQRT_2, 0.5 + 1.5 * SQRT_2)?,
        oscillator_position(d, 1.0, SQRT_2),
        oscillator_momentum(d, 1.0, SQRT_2),
        1.0,
    )
}

fn symmetric_sorted(positive: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = positive.iter().flat_map(|&p| [p, -p]).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Qubit clock `ω = 1` and a particle `H_S = −p²/2` on a nonuniform grid containing `±1`.
pub fn qubit_particle() -> Result<Model> {
    let momenta = symmetric_sorted(&[0.5, 1.0, SQRT_2, PI / 2.0]);
    Model::assemble(
        "qubit clock and particle".into(),
        ClockSpec::qubit(1.0)?,
        SystemSpec::particle_grid(&momenta, 1.0, -1.0)?,
        grid_position(&momenta),
        grid_momentum(&momenta),
        1.0,
    )
}

/// Oscillator clock (`d` levels, `ω_t = 1`) and a particle `H_S = −p²/2` whose grid holds
/// every matching momentum `±√(2n+1)` plus generic extras.
pub fn oscillator_particle(d: usize) -> Result<Model> {
    let mut positive: Vec<f64> = (0..d).map(|n| (2.0 * n as f64 + 1.0).sqrt()).collect();
    positive.extend([E / 2.0, PI / 3.0]);
    let momenta = symmetric_sorted(&positive);
    Model::assemble(
        "oscillator clock and particle".into(),
        ClockSpec::oscillator(d, 1.0)?,
        SystemSpec::particle_grid(&momenta, 1.0, -1.0)?,
        grid_position(&momenta),
        grid_momentum(&momenta),
        1.0,
    )
}
