//! Kinematical clock-system products, constraint classification, and the
//! physical Hilbert space of constraint solutions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clock_povm::ClockSpec;
use crate::error::{Error, Result};
use crate::hilbert_core::{
    cycle_integral, evolve_diag, max_abs, max_abs_vec, phase, Basis, Mat, Operator, StateVector,
    Vector, C64, ONE,
};

/// Default guard on the kinematical dimension.
pub const MAX_PRODUCT_DIM: usize = 4096;
/// Relative tolerance when testing a gap ratio for rationality.
const RATIONAL_TOL: f64 = 1e-10;
/// Largest denominator accepted when classifying gap ratios.
const MAX_DENOMINATOR: i64 = 10_000;
/// Threshold for `[f, H_S] = 0`.
const COMMUTING_TOL: f64 = 1e-12;

/// Diagonal system Hamiltonian with degeneracy labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub energies: Vec<f64>,
    pub labels: Vec<i32>,
    /// Momentum value per basis state for grid-regularised particles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momenta: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>, labels: Vec<i32>) -> Result<Self> {
        if energies.len() != labels.len() {
            return Err(Error::DimensionMismatch(energies.len(), labels.len()));
        }
        if energies.is_empty() {
            return Err(Error::InvalidParameter { name: "energies", reason: "empty".into() });
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter { name: "energies", reason: format!("{e} is not finite") });
        }
        let scale = energies.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
        for a in 0..energies.len() {
            for b in a + 1..energies.len() {
                if (energies[a] - energies[b]).abs() <= 1e-12 * scale && labels[a] == labels[b] {
                    return Err(Error::InvalidParameter {
                        name: "labels",
                        reason: format!("label {} repeated at energy {}", labels[a], energies[a]),
                    });
                }
            }
        }
        Ok(SystemSpec { energies, labels, momenta: None })
    }

    /// Truncated oscillator `ω(n + ½) − shift`, `n = 0..d`.
    pub fn oscillator(d: usize, omega: f64, shift: f64) -> Result<Self> {
        let e = (0..d).map(|n| omega * (n as f64 + 0.5) - shift).collect();
        SystemSpec::new(e, vec![0; d])
    }

    /// Particle on a momentum grid with `H = sign · p²/2m`, labelled by `sgn p`.
    pub fn particle_grid(momenta: &[f64], mass: f64, sign: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter { name: "mass", reason: format!("{mass} is not positive") });
        }
        let e = momenta.iter().map(|p| sign * p * p / (2.0 * mass)).collect();
        let l = momenta.iter().map(|&p| if p < 0.0 { -1 } else { 1 }).collect();
        let mut s = SystemSpec::new(e, l)?;
        s.momenta = Some(momenta.to_vec());
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn hamiltonian(&self) -> Operator {
        Operator::diagonal(&self.energies, Basis::System)
    }

    pub fn evolve(&self, t: f64) -> Operator {
        evolve_diag(&self.energies, t, Basis::System)
    }

    /// Product system `A ⊗ B` with additive energies, row-major index `a·d_B + b`.
    pub fn combine(a: &SystemSpec, b: &SystemSpec) -> Result<Self> {
        let mut e = Vec::with_capacity(a.dim() * b.dim());
        let mut l = Vec::with_capacity(a.dim() * b.dim());
        for (ea, la) in a.energies.iter().zip(&a.labels) {
            for (eb, lb) in b.energies.iter().zip(&b.labels) {
                e.push(ea + eb);
                l.push(la * 1000 + lb);
            }
        }
        SystemSpec::new(e, l)
    }
}

/// Group generated by the constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Group {
    /// Projectively periodic with period `t_tilde`; `isotropy_order = t_tilde / t_max`.
    CompactU1 { t_tilde: f64, isotropy_order: usize },
    Line,
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub clock: ClockSpec,
    pub system: SystemSpec,
    /// Eigenvalues of `C_H = H_C ⊗ I + I ⊗ H_S` in row-major product order.
    pub c_h: Vec<f64>,
    pub group: Group,
    pub tol_energy: f64,
}

pub fn build_constraint(clock: ClockSpec, system: SystemSpec) -> Result<ConstraintSystem> {
    build_constraint_with_guard(clock, system, MAX_PRODUCT_DIM)
}

pub fn build_constraint_with_guard(clock: ClockSpec, system: SystemSpec, guard: usize) -> Result<ConstraintSystem> {
    let dim = clock.dim() * system.dim();
    if dim > guard {
        return Err(Error::DimensionOverflow { dim, guard });
    }
    let ec = clock.energies();
    let mut c_h = Vec::with_capacity(dim);
    for e in &ec {
        for s in &system.energies {
            c_h.push(e + s);
        }
    }
    let scale = ec.iter().chain(&system.energies).fold(0.0_f64, |a, e| a.max(e.abs()));
    let tol_energy = 1e-9 * scale.max(1.0);
    let group = classify_group(&c_h, clock.t_max(), tol_energy);
    Ok(ConstraintSystem { clock, system, c_h, group, tol_energy })
}

/// Best rational approximation `p/q` of `x` with `q ≤ MAX_DENOMINATOR`, if within tolerance.
fn rationalize(x: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= RATIONAL_TOL * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = y - y.floor();
        if frac < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    if k1 > 0 && (h1 as f64 / k1 as f64 - x).abs() <= RATIONAL_TOL * x.abs().max(1.0) {
        Some((h1, k1))
    } else {
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn distinct(values: &[f64], tol: f64) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().map_or(true, |&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

/// Commensurability test on the constraint spectrum.
fn classify_group(c_h: &[f64], t_max: f64, tol: f64) -> Group {
    let levels = distinct(c_h, tol);
    let mut gaps: Vec<f64> = Vec::new();
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            gaps.push(b - a);
        }
    }
    let gaps = distinct(&gaps, tol);
    let Some(&g0) = gaps.first() else {
        return Group::CompactU1 { t_tilde: t_max, isotropy_order: 1 };
    };
    let mut ratios = Vec::with_capacity(gaps.len());
    for g in &gaps {
        match rationalize(g / g0) {
            Some(r) => ratios.push(r),
            None => return Group::Line,
        }
    }
    // Every gap is g0·p/q; the common frequency is g0·G/L.
    let mut l = 1i64;
    for &(_, q) in &ratios {
        l = l / gcd(l, q) * q;
        if l > MAX_DENOMINATOR * MAX_DENOMINATOR {
            return Group::Line;
        }
    }
    let mut g = 0i64;
    for &(p, q) in &ratios {
        g = gcd(g, p * (l / q));
    }
    let freq = g0 * g as f64 / l as f64;
    let t_tilde = 2.0 * PI / freq;
    let ratio = t_tilde / t_max;
    let order = ratio.round();
    if order < 1.0 || (ratio - order).abs() > 1e-8 * ratio {
        return Group::Line;
    }
    Group::CompactU1 { t_tilde: order * t_max, isotropy_order: order as usize }
}

impl ConstraintSystem {
    pub fn dim(&self) -> usize {
        self.c_h.len()
    }

    pub fn d_c(&self) -> usize {
        self.clock.dim()
    }

    pub fn d_s(&self) -> usize {
        self.system.dim()
    }

    pub fn t_max(&self) -> f64 {
        self.clock.t_max()
    }

    /// Product index of `(clock j, system k)`.
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.d_s() + k
    }

    /// Dense constraint operator.
    pub fn constraint_operator(&self) -> Operator {
        Operator::diagonal(&self.c_h, Basis::kinematical())
    }

    /// `U_CS(s) = e^{−i s C_H}`.
    pub fn evolve(&self, s: f64) -> Operator {
        evolve_diag(&self.c_h, s, Basis::kinematical())
    }

    /// `C_H |ψ⟩`, using the diagonal form.
    pub fn apply_constraint(&self, psi: &StateVector) -> Vector {
        Vector::from_fn(self.dim(), |r, _| psi.amps[r] * self.c_h[r])
    }

    /// `U_CS(s) ψ`.
    pub fn apply_evolution(&self, s: f64, psi: &StateVector) -> StateVector {
        let amps = Vector::from_fn(self.dim(), |r, _| psi.amps[r] * phase(-self.c_h[r] * s));
        StateVector::new(amps, psi.basis.clone())
    }

    /// `[A, C_H]` with diagonal `C_H`.
    pub fn commutator_with_constraint(&self, a: &Operator) -> Operator {
        let n = self.dim();
        let mat = Mat::from_fn(n, n, |r, c| a.mat[(r, c)] * (self.c_h[c] - self.c_h[r]));
        Operator { mat, basis: a.basis.clone() }
    }

    /// Diagonal of `(1/t̃) ∫₀^{t̃} U_CS(s) ds`; the kernel projector for a compact group.
    pub fn group_average_diagonal(&self) -> Result<Vec<f64>> {
        match self.group {
            Group::CompactU1 { t_tilde, .. } => self
                .c_h
                .iter()
                .map(|&l| cycle_integral(l, t_tilde).map(|z| z.re))
                .collect(),
            Group::Line => Err(Error::NoncompactGroup),
        }
    }

    /// Constraint residual `‖C_H ψ‖ / ‖ψ‖`.
    pub fn constraint_residual(&self, psi: &StateVector) -> f64 {
        let n = psi.norm();
        if n == 0.0 {
            return 0.0;
        }
        self.apply_constraint(psi).norm() / n
    }
}

/// Whether the constraint spectrum is discrete at zero or grid-regularised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumCase {
    A,
    BRegularized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBasisEntry {
    pub clock_index: usize,
    pub system_index: usize,
    pub epsilon: f64,
    pub energy: f64,
    pub sigma: i32,
    pub kin_index: usize,
}

/// Span of the kinematical basis vectors annihilated by `C_H`.
#[derive(Clone, Debug)]
pub struct PhysicalSpace {
    pub basis: Vec<PhysicalBasisEntry>,
    pub kin_dim: usize,
    pub d_s: usize,
    pub case: SpectrumCase,
}

pub fn solve_constraint(cs: &ConstraintSystem, tol: f64) -> Result<PhysicalSpace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol", reason: format!("{tol} is not positive") });
    }
    let ec = cs.clock.energies();
    let mut basis = Vec::new();
    for (j, &e) in ec.iter().enumerate() {
        for (k, &es) in cs.system.energies.iter().enumerate() {
            if (e + es).abs() <= tol {
                basis.push(PhysicalBasisEntry {
                    clock_index: j,
                    system_index: k,
                    epsilon: e,
                    energy: es,
                    sigma: cs.system.labels[k],
                    kin_index: cs.index(j, k),
                });
            }
        }
    }
    let case = if cs.system.momenta.is_some() { SpectrumCase::BRegularized } else { SpectrumCase::A };
    Ok(PhysicalSpace { basis, kin_dim: cs.dim(), d_s: cs.d_s(), case })
}

impl PhysicalSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn embed(&self, coeffs: &Vector) -> Result<StateVector> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), coeffs.len()));
        }
        let mut amps = Vector::zeros(self.kin_dim);
        for (b, c) in self.basis.iter().zip(coeffs.iter()) {
            amps[b.kin_index] = *c;
        }
        Ok(StateVector::new(amps, Basis::kinematical()))
    }

    /// Coefficients `ψ_kin(−E, E, σ)` on the physical basis.
    pub fn project(&self, psi_kin: &StateVector) -> Result<Vector> {
        if psi_kin.dim() != self.kin_dim {
            return Err(Error::DimensionMismatch(self.kin_dim, psi_kin.dim()));
        }
        Ok(Vector::from_iterator(self.dim(), self.basis.iter().map(|b| psi_kin.amps[b.kin_index])))
    }

    /// Embedded physical basis vector `a`.
    pub fn basis_vector(&self, a: usize) -> StateVector {
        StateVector::basis_vector(self.kin_dim, self.basis[a].kin_index, Basis::kinematical())
    }

    /// System indices spanning the physical system space, in physical-basis order.
    pub fn system_indices(&self) -> Vec<usize> {
        self.basis.iter().map(|b| b.system_index).collect()
    }

    pub fn system_energies(&self) -> Vec<f64> {
        self.basis.iter().map(|b| b.energy).collect()
    }

    /// Projector `Π_{σ_S|C}` on the full system space.
    pub fn system_projector(&self) -> Operator {
        let mut m = Mat::zeros(self.d_s, self.d_s);
        for k in self.system_indices() {
            m[(k, k)] = ONE;
        }
        Operator { mat: m, basis: Basis::System }
    }

    /// Restriction of a system operator to the physical system space.
    pub fn restrict(&self, f: &Operator) -> Result<Operator> {
        if f.dim() != self.d_s {
            return Err(Error::DimensionMismatch(self.d_s, f.dim()));
        }
        let idx = self.system_indices();
        let n = idx.len();
        Ok(Operator { mat: Mat::from_fn(n, n, |a, b| f.mat[(idx[a], idx[b])]), basis: Basis::System })
    }

    /// Extension by zero of a physical system operator to the full system space.
    pub fn extend(&self, f: &Operator) -> Result<Operator> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), f.dim()));
        }
        let idx = self.system_indices();
        let mut m = Mat::zeros(self.d_s, self.d_s);
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                m[(idx[a], idx[b])] = f.mat[(a, b)];
            }
        }
        Ok(Operator { mat: m, basis: Basis::System })
    }

    /// Physical system vector lifted to the full system space.
    pub fn extend_state(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), psi.dim()));
        }
        let mut amps = Vector::zeros(self.d_s);
        for (k, c) in self.system_indices().into_iter().zip(psi.amps.iter()) {
            amps[k] = *c;
        }
        Ok(StateVector::new(amps, Basis::System))
    }

    /// `U_S(t)` restricted to the physical system space.
    pub fn evolve_system(&self, t: f64) -> Operator {
        evolve_diag(&self.system_energies(), t, Basis::System)
    }
}

/// `⟨ψ|φ⟩_phys` on physical coefficients.
pub fn physical_inner(ps: &PhysicalSpace, psi: &Vector, phi: &Vector) -> Result<C64> {
    if psi.len() != ps.dim() {
        return Err(Error::DimensionMismatch(ps.dim(), psi.len()));
    }
    if phi.len() != ps.dim() {
        return Err(Error::DimensionMismatch(ps.dim(), phi.len()));
    }
    Ok(psi.dotc(phi))
}

pub fn project_physical(ps: &PhysicalSpace, psi_kin: &StateVector) -> Result<Vector> {
    ps.project(psi_kin)
}

/// Physical system observable on the physical system space.
///
/// A constant of motion is restricted directly; otherwise `Π f Π` is formed
/// first. Both give the same block, the branch only records which case applied.
pub fn physicalize_observable(ps: &PhysicalSpace, cs: &ConstraintSystem, f: &Operator) -> Result<Operator> {
    if f.dim() != cs.d_s() {
        return Err(Error::DimensionMismatch(cs.d_s(), f.dim()));
    }
    let h = cs.system.hamiltonian();
    let comm = &(&f.mat * &h.mat) - &(&h.mat * &f.mat);
    if max_abs(&comm) <= COMMUTING_TOL {
        return ps.restrict(f);
    }
    let p = ps.system_projector();
    let sandwiched = &(&p * f) * &p;
    ps.restrict(&sandwiched)
}

/// `‖U_S(t_max) f U_S†(t_max) − f‖_max`.
///
/// Accepts an operator on the physical system space or on the full system space.
pub fn weak_periodicity_check(ps: &PhysicalSpace, cs: &ConstraintSystem, f: &Operator) -> Result<f64> {
    let t = cs.t_max();
    let energies = if f.dim() == ps.dim() {
        ps.system_energies()
    } else if f.dim() == cs.d_s() {
        cs.system.energies.clone()
    } else {
        return Err(Error::DimensionMismatch(ps.dim(), f.dim()));
    };
    let n = f.dim();
    let diff = Mat::from_fn(n, n, |a, b| f.mat[(a, b)] * (phase(-(energies[a] - energies[b]) * t) - ONE));
    Ok(max_abs(&diff))
}

/// Largest deviation of `U_S(z t_max)` from `e^{i z varphi}` on the physical system space.
pub fn physical_periodicity_defect(ps: &PhysicalSpace, cs: &ConstraintSystem, z: i64) -> f64 {
    let u = ps.evolve_system(z as f64 * cs.t_max());
    let expected = phase(z as f64 * cs.clock.varphi);
    let d = ps.dim();
    max_abs_vec(&Vector::from_fn(d, |a, _| u.mat[(a, a)] - expected))
}

/// Dump of the physical basis as `(ε, E, σ, index)` rows.
pub fn physical_basis_rows(ps: &PhysicalSpace) -> Vec<(f64, f64, i32, usize)> {
    ps.basis.iter().map(|b| (b.epsilon, b.energy, b.sigma, b.kin_index)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_simple() {
        assert_eq!(rationalize(1.5), Some((3, 2)));
        assert_eq!(rationalize(2.0), Some((2, 1)));
        assert_eq!(rationalize(std::f64::consts::SQRT_2), None);
    }

    #[test]
    fn qubit_clock_alone_is_compact() {
        let c = ClockSpec::qubit(1.0).unwrap();
        let s = SystemSpec::new(vec![0.0], vec![0]).unwrap();
        let cs = build_constraint(c, s).unwrap();
        assert!(matches!(cs.group, Group::CompactU1 { isotropy_order: 1, .. }));
    }

    #[test]
    fn dimension_guard() {
        let c = ClockSpec::oscillator(70, 1.0).unwrap();
        let s = SystemSpec::oscillator(70, 1.0, 0.0).unwrap();
        assert!(matches!(build_constraint(c, s), Err(Error::DimensionOverflow { dim: 4900, guard: 4096 })));
    }

    #[test]
    fn repeated_label_rejected() {
        assert!(SystemSpec::new(vec![1.0, 1.0], vec![1, 1]).is_err());
        assert!(SystemSpec::new(vec![1.0, 1.0], vec![1, -1]).is_ok());
    }
}
