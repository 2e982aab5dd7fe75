//! Relational observables from the partial twirl over one clock cycle.
//!
//! Convention: `f(t) = U_S†(t) f U_S(t) = e^{itH_S} f e^{−itH_S}` and
//! `F_f(τ) = (1/t_max) ∫₀^{t_max} |φ⟩⟨φ| ⊗ f(τ − φ) dφ`.

use serde::{Deserialize, Serialize};

use crate::dirac_quantization::{ConstraintSystem, Group, PhysicalSpace};
use crate::error::{ensure, Error, Result};
use crate::hilbert_core::{
    cycle_integral, max_abs_vec, phase, segment_integral, Basis, Mat, Operator, StateVector, C64, I,
};

/// Tolerance for the commutator identity and for weak annihilation.
pub const COMMUTATOR_TOL: f64 = 1e-9;
/// Relative threshold for a strong Dirac observable.
pub const STRONG_REL_TOL: f64 = 1e-10;
/// Tolerance for the transient flow identity.
pub const TRANSIENT_TOL: f64 = 1e-8;
/// Tolerance for the physicality precondition.
pub const PHYSICAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct RelationalObservable {
    pub tau: f64,
    pub f_s: Operator,
    pub matrix: Operator,
}

fn check_system_operator(cs: &ConstraintSystem, f: &Operator) -> Result<()> {
    if f.dim() != cs.d_s() {
        return Err(Error::DimensionMismatch(cs.d_s(), f.dim()));
    }
    Ok(())
}

/// Kinematical matrix with element
/// `e^{i(g_j−g_l)} f_km e^{i(E_k−E_m)τ'} · w(ε_j − ε_l + E_k − E_m)`.
fn twirl_kernel(cs: &ConstraintSystem, tau: f64, f: &Operator, w: impl Fn(f64) -> C64) -> Operator {
    let ec = cs.clock.energies();
    let es = &cs.system.energies;
    let g = &cs.clock.g;
    let (dc, ds) = (cs.d_c(), cs.d_s());
    let n = dc * ds;
    let mut mat = Mat::zeros(n, n);
    for j in 0..dc {
        for l in 0..dc {
            let gp = phase(g[j] - g[l]);
            for k in 0..ds {
                for m in 0..ds {
                    let f_km = f.mat[(k, m)];
                    if f_km == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let de = es[k] - es[m];
                    mat[(j * ds + k, l * ds + m)] = gp * f_km * phase(de * tau) * w(ec[j] - ec[l] + de);
                }
            }
        }
    }
    Operator { mat, basis: Basis::kinematical() }
}

/// `F_f(τ)` with every φ-integral in closed form.
pub fn partial_twirl(cs: &ConstraintSystem, tau: f64, f_s: &Operator) -> Result<RelationalObservable> {
    check_system_operator(cs, f_s)?;
    let t = cs.t_max();
    let matrix = twirl_kernel(cs, tau, f_s, |delta| cycle_integral(delta, t).expect("t_max > 0"));
    Ok(RelationalObservable { tau, f_s: f_s.clone(), matrix })
}

/// `(1/t_max) ∫_a^b |φ⟩⟨φ| ⊗ f(τ − φ) dφ`, a piece of the twirl over part of a cycle.
pub fn partial_twirl_segment(cs: &ConstraintSystem, tau: f64, f_s: &Operator, a: f64, b: f64) -> Result<Operator> {
    check_system_operator(cs, f_s)?;
    let t = cs.t_max();
    Ok(twirl_kernel(cs, tau, f_s, |delta| segment_integral(0, delta, a, b) / t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiracClass {
    Strong,
    Weak,
    Neither,
}

#[derive(Clone, Debug)]
pub struct CommutatorDefect {
    pub commutator: Operator,
    pub predicted: Operator,
    pub residual: f64,
    /// `max_a ‖[F, C_H] v_a‖` over physical basis vectors.
    pub physical_action: f64,
    pub class: DiracClass,
}

/// `−(i/t_max) |0⟩⟨0| ⊗ U_S†(τ)[U_S(t_max) f U_S†(t_max) − f]U_S(τ)`.
pub fn predicted_defect(cs: &ConstraintSystem, tau: f64, f_s: &Operator) -> Result<Operator> {
    check_system_operator(cs, f_s)?;
    let t = cs.t_max();
    let es = &cs.system.energies;
    let g = &cs.clock.g;
    let (dc, ds) = (cs.d_c(), cs.d_s());
    let n = dc * ds;
    let mut mat = Mat::zeros(n, n);
    for k in 0..ds {
        for m in 0..ds {
            let de = es[k] - es[m];
            let core = f_s.mat[(k, m)] * (phase(-de * t) - C64::new(1.0, 0.0)) * phase(de * tau);
            if core == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dc {
                for l in 0..dc {
                    mat[(j * ds + k, l * ds + m)] = -I / t * phase(g[j] - g[l]) * core;
                }
            }
        }
    }
    Ok(Operator { mat, basis: Basis::kinematical() })
}

/// `max_a ‖A v_a‖` over the embedded physical basis.
pub fn physical_action(ps: &PhysicalSpace, a: &Operator) -> f64 {
    ps.basis
        .iter()
        .map(|b| a.mat.column(b.kin_index).norm())
        .fold(0.0, f64::max)
}

/// `[F, C_H]` against its closed-form prediction, plus the Dirac classification.
pub fn constraint_commutator_defect(
    cs: &ConstraintSystem,
    ps: &PhysicalSpace,
    obs: &RelationalObservable,
) -> Result<CommutatorDefect> {
    let commutator = cs.commutator_with_constraint(&obs.matrix);
    let predicted = predicted_defect(cs, obs.tau, &obs.f_s)?;
    let residual = (&commutator - &predicted).max_abs();
    ensure("constraint commutator vs prediction", residual, COMMUTATOR_TOL)?;
    let norm = commutator.max_abs();
    let action = physical_action(ps, &commutator);
    let class = if norm <= STRONG_REL_TOL * obs.matrix.max_abs() {
        DiracClass::Strong
    } else if action <= COMMUTATOR_TOL {
        DiracClass::Weak
    } else {
        DiracClass::Neither
    };
    Ok(CommutatorDefect { commutator, predicted, residual, physical_action: action, class })
}

/// `(1/|Z|) Σ_z U_S(z t_max) f U_S†(z t_max)`.
pub fn isotropy_average(cs: &ConstraintSystem, f_s: &Operator, z_set: &[i64]) -> Result<Operator> {
    check_system_operator(cs, f_s)?;
    if z_set.is_empty() {
        return Err(Error::EmptyIsotropySet);
    }
    if let Group::CompactU1 { isotropy_order, .. } = cs.group {
        let mut sorted = z_set.to_vec();
        sorted.sort_unstable();
        if sorted != (0..isotropy_order as i64).collect::<Vec<_>>() {
            return Err(Error::IsotropySetMismatch { expected: isotropy_order });
        }
    }
    let t = cs.t_max();
    let es = &cs.system.energies;
    let ds = cs.d_s();
    let norm = 1.0 / z_set.len() as f64;
    let mat = Mat::from_fn(ds, ds, |k, m| {
        let de = es[k] - es[m];
        let avg: C64 = z_set.iter().map(|&z| phase(-de * z as f64 * t)).sum();
        f_s.mat[(k, m)] * avg * norm
    });
    Ok(Operator { mat, basis: Basis::System })
}

/// Isotropy group `{0, …, |H|−1}` of a compact constraint group.
pub fn isotropy_set(cs: &ConstraintSystem) -> Result<Vec<i64>> {
    match cs.group {
        Group::CompactU1 { isotropy_order, .. } => Ok((0..isotropy_order as i64).collect()),
        Group::Line => Err(Error::NoncompactGroup),
    }
}

#[derive(Clone, Debug)]
pub struct FullTwirl {
    pub matrix: Operator,
    /// `‖G(|τ⟩⟨τ| ⊗ f) − |H|(t_max/t̃) F_{f̄}(τ)‖_max`.
    pub partial_residual: f64,
    /// `‖[G(…), C_H]‖_max`.
    pub commutator_norm: f64,
}

/// `(1/t̃) ∫₀^{t̃} U_CS(φ)(|τ⟩⟨τ| ⊗ f)U_CS†(φ) dφ` for a compact group.
pub fn full_twirl_u1(cs: &ConstraintSystem, tau: f64, f_s: &Operator) -> Result<FullTwirl> {
    check_system_operator(cs, f_s)?;
    let Group::CompactU1 { t_tilde, isotropy_order } = cs.group else {
        return Err(Error::NoncompactGroup);
    };
    let ec = cs.clock.energies();
    let es = &cs.system.energies;
    let g = &cs.clock.g;
    let (dc, ds) = (cs.d_c(), cs.d_s());
    let n = dc * ds;
    let mut mat = Mat::zeros(n, n);
    for j in 0..dc {
        for l in 0..dc {
            let pre = phase(g[j] - g[l] - (ec[j] - ec[l]) * tau);
            for k in 0..ds {
                for m in 0..ds {
                    let delta = ec[j] + es[k] - ec[l] - es[m];
                    mat[(j * ds + k, l * ds + m)] = pre * f_s.mat[(k, m)] * cycle_integral(delta, t_tilde)?;
                }
            }
        }
    }
    let matrix = Operator { mat, basis: Basis::kinematical() };
    let averaged = isotropy_average(cs, f_s, &isotropy_set(cs)?)?;
    let coeff = isotropy_order as f64 * cs.t_max() / t_tilde;
    let pt = partial_twirl(cs, tau, &averaged)?;
    let partial_residual = (&matrix - &pt.matrix.scale(C64::new(coeff, 0.0))).max_abs();
    let commutator_norm = cs.commutator_with_constraint(&matrix).max_abs();
    ensure("full twirl vs averaged partial twirl", partial_residual, COMMUTATOR_TOL)?;
    ensure("full twirl commutes with constraint", commutator_norm, 1e-10)?;
    Ok(FullTwirl { matrix, partial_residual, commutator_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientElement {
    pub lhs: C64,
    pub rhs: C64,
}

/// `⟨ψ₂|U_CS†(s) F_f(τ) U_CS(s)|ψ₁⟩` against the floor-split integral
/// `⟨ψ₂|(1/t_max)∫ |φ⟩⟨φ| ⊗ f(τ + t_max⌊(s+φ)/t_max⌋ − φ) dφ|ψ₁⟩`.
pub fn transient_flow_element(
    cs: &ConstraintSystem,
    s: f64,
    tau: f64,
    f_s: &Operator,
    psi1_phys: &StateVector,
    psi2_kin: &StateVector,
) -> Result<TransientElement> {
    let residual = cs.constraint_residual(psi1_phys);
    if residual > PHYSICAL_TOL {
        return Err(Error::NotPhysical(residual));
    }
    let f = partial_twirl(cs, tau, f_s)?;
    // ⟨ψ₂|U†F U|ψ₁⟩ = ⟨Uψ₂|F|Uψ₁⟩
    let u1 = cs.apply_evolution(s, psi1_phys);
    let u2 = cs.apply_evolution(s, psi2_kin);
    let lhs = u2.inner(&f.matrix.apply(&u1)?);
    let t = cs.t_max();
    let z = (s / t).floor();
    let r = s - z * t;
    let cut = (t - r).clamp(0.0, t);
    let early = partial_twirl_segment(cs, tau + z * t, f_s, 0.0, cut)?;
    let late = partial_twirl_segment(cs, tau + (z + 1.0) * t, f_s, cut, t)?;
    let rhs = (&early + &late).sandwich(psi2_kin, psi1_phys);
    let scale = psi1_phys.norm() * psi2_kin.norm();
    ensure("transient flow identity", (lhs - rhs).norm(), TRANSIENT_TOL * scale.max(1.0))?;
    Ok(TransientElement { lhs, rhs })
}

/// `max_a ‖(A − B) v_a‖` over the physical basis.
pub fn weak_difference(ps: &PhysicalSpace, a: &Operator, b: &Operator) -> f64 {
    physical_action(ps, &(a - b))
}

/// Largest deviation of `F(τ + z t_max)` from `U_CS†(z t_max) F(τ) U_CS(z t_max)`.
pub fn cycle_shift_defect(cs: &ConstraintSystem, tau: f64, f_s: &Operator, z: i64) -> Result<f64> {
    let t = cs.t_max();
    let base = partial_twirl(cs, tau, f_s)?.matrix;
    let shifted = partial_twirl(cs, tau + z as f64 * t, f_s)?.matrix;
    let u = cs.evolve(z as f64 * t);
    let conj = &(&u.adjoint() * &base) * &u;
    Ok((&shifted - &conj).max_abs())
}

/// `‖[A, C_H] v‖` for a kinematical vector.
pub fn commutator_action(cs: &ConstraintSystem, a: &Operator, v: &StateVector) -> f64 {
    max_abs_vec(&(&cs.commutator_with_constraint(a).mat * &v.amps))
}
