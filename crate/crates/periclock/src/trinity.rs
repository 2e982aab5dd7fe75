//! Page-Wootters reduction, constraint trivialisation, and the relational
//! Heisenberg picture, with their mutual equivalences.
//!
//! Physical system states live on the physical system space: one amplitude per
//! physical basis entry, in physical-basis order.

use serde::{Deserialize, Serialize};

use crate::clock_povm::{clock_state, projective_phase};
use crate::dirac_quantization::{ConstraintSystem, Group, PhysicalSpace};
use crate::error::{ensure, Error, Result};
use crate::hilbert_core::{
    cycle_integral, kron_state, max_abs, max_abs_vec, phase, Basis, Mat, Operator, StateVector, Vector, C64, I, ONE,
};
use crate::relational_observables::{partial_twirl, weak_difference, PHYSICAL_TOL};
use crate::rng::Rng;

/// Tolerance for the equivalence identities.
pub const TRINITY_TOL: f64 = 1e-9;
/// Tolerance for exact periodicity and τ-independence.
pub const PERIODICITY_TOL: f64 = 1e-10;
/// Finite-difference step and tolerance for the Schrödinger check.
pub const SCHRODINGER_STEP: f64 = 1e-5;
pub const SCHRODINGER_TOL: f64 = 1e-6;
/// Relative tolerance on linear cutoff scaling.
pub const SCALING_TOL: f64 = 0.01;
/// Cutoffs used for the line-group conditional probability tables.
pub const NAIVE_CUTOFFS: [i64; 3] = [1, 5, 25];

#[derive(Clone, Debug)]
pub struct ReductionContext {
    pub cs: ConstraintSystem,
    pub ps: PhysicalSpace,
    pub epsilon_star: f64,
    /// Clock level index of `ε_*`.
    pub star_index: usize,
    /// Phase with `U_C(t_max) = e^{−i varphi}`.
    pub varphi: f64,
}

impl ReductionContext {
    /// Uses the lowest clock energy in the physical basis when `epsilon_star` is `None`.
    pub fn new(cs: ConstraintSystem, ps: PhysicalSpace, epsilon_star: Option<f64>) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::EmptyPhysicalSpace);
        }
        let eps = match epsilon_star {
            Some(e) => e,
            None => ps.basis.iter().map(|b| b.epsilon).fold(f64::INFINITY, f64::min),
        };
        let tol = cs.tol_energy;
        let star_index = cs.clock.energy_index(eps, tol).ok_or(Error::InvalidEpsilonStar(eps))?;
        if !ps.basis.iter().any(|b| (b.energy + eps).abs() <= tol) {
            return Err(Error::InvalidEpsilonStar(eps));
        }
        let varphi = -projective_phase(&cs.clock).arg();
        Ok(ReductionContext { cs, ps, epsilon_star: eps, star_index, varphi })
    }

    pub fn d_phys(&self) -> usize {
        self.ps.dim()
    }

    fn require_physical(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.cs.dim() {
            return Err(Error::DimensionMismatch(self.cs.dim(), psi.dim()));
        }
        let r = self.cs.constraint_residual(psi);
        if r > PHYSICAL_TOL {
            return Err(Error::NotPhysical(r));
        }
        Ok(())
    }

    fn require_phys_system(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.d_phys() {
            return Err(Error::DimensionMismatch(self.d_phys(), psi.dim()));
        }
        Ok(())
    }

    fn require_phys_operator(&self, f: &Operator) -> Result<()> {
        if f.dim() != self.d_phys() {
            return Err(Error::DimensionMismatch(self.d_phys(), f.dim()));
        }
        Ok(())
    }

    /// Random normalised physical state.
    pub fn random_physical(&self, rng: &mut Rng) -> StateVector {
        let c = rng.vector(self.d_phys());
        let c = &c / C64::new(c.norm(), 0.0);
        self.ps.embed(&c).expect("matching dimension")
    }
}

/// `R_S(τ) = ⟨τ| ⊗ I` restricted to the physical system space, as a `d_phys × d_kin` matrix.
pub fn reduction_matrix(ctx: &ReductionContext, tau: f64) -> Mat {
    let cs = &ctx.cs;
    let bra = clock_state(&cs.clock, tau);
    let ds = cs.d_s();
    let idx = ctx.ps.system_indices();
    let mut m = Mat::zeros(idx.len(), cs.dim());
    for (a, &k) in idx.iter().enumerate() {
        for j in 0..cs.d_c() {
            m[(a, j * ds + k)] = bra.amps[j].conj();
        }
    }
    m
}

/// `R_S⁻¹(τ) = (1/t_max) ∫ dφ |φ⟩ ⊗ U_S(φ − τ)` on the physical system space.
pub fn inverse_matrix(ctx: &ReductionContext, tau: f64) -> Mat {
    let cs = &ctx.cs;
    let t = cs.t_max();
    let ec = cs.clock.energies();
    let ds = cs.d_s();
    let mut m = Mat::zeros(cs.dim(), ctx.d_phys());
    for (a, b) in ctx.ps.basis.iter().enumerate() {
        let k = b.system_index;
        for j in 0..cs.d_c() {
            let w = cycle_integral(ec[j] + b.energy, t).expect("t_max > 0");
            m[(j * ds + k, a)] = phase(cs.clock.g[j] + b.energy * tau) * w;
        }
    }
    m
}

/// `|ψ_S(τ)⟩ = (⟨τ| ⊗ I)|ψ_phys⟩`.
pub fn pw_reduce(ctx: &ReductionContext, tau: f64, psi_phys: &StateVector) -> Result<StateVector> {
    ctx.require_physical(psi_phys)?;
    Ok(StateVector::new(reduction_matrix(ctx, tau) * &psi_phys.amps, Basis::System))
}

/// Embedded physical state `(1/t_max) ∫ dφ |φ⟩ ⊗ U_S(φ − τ)|ψ_S⟩`.
pub fn pw_inverse(ctx: &ReductionContext, tau: f64, psi_s: &StateVector) -> Result<StateVector> {
    ctx.require_phys_system(psi_s)?;
    Ok(StateVector::new(inverse_matrix(ctx, tau) * &psi_s.amps, Basis::kinematical()))
}

#[derive(Clone, Debug)]
pub struct EmbeddedObservable {
    pub matrix: Operator,
    /// `max_a ‖(R⁻¹ f R − F_f(τ)) v_a‖` over physical basis vectors.
    pub twirl_residual: f64,
    /// `‖R F_f(τ) R⁻¹ − f‖_max`.
    pub reduction_residual: f64,
}

/// `R_S⁻¹(τ) f R_S(τ)`, checked weakly against the partial twirl of the extended `f`.
pub fn embed_observable(ctx: &ReductionContext, tau: f64, f_phys: &Operator) -> Result<EmbeddedObservable> {
    ctx.require_phys_operator(f_phys)?;
    let r = reduction_matrix(ctx, tau);
    let rinv = inverse_matrix(ctx, tau);
    let matrix = Operator { mat: &rinv * &f_phys.mat * &r, basis: Basis::kinematical() };
    let twirl = partial_twirl(&ctx.cs, tau, &ctx.ps.extend(f_phys)?)?.matrix;
    let twirl_residual = weak_difference(&ctx.ps, &matrix, &twirl);
    let reduced = &r * &twirl.mat * &rinv;
    let reduction_residual = max_abs(&(reduced - &f_phys.mat));
    ensure("embedding vs partial twirl", twirl_residual, TRINITY_TOL)?;
    ensure("reduced twirl vs observable", reduction_residual, TRINITY_TOL)?;
    Ok(EmbeddedObservable { matrix, twirl_residual, reduction_residual })
}

/// Dense `T_C = (1/t_max) ∫ dφ |φ⟩⟨φ| ⊗ e^{iφ(H_S + ε_*)}`.
pub fn trivialization_matrix(ctx: &ReductionContext) -> Operator {
    trivialization_kernel(ctx, -1.0)
}

/// Dense `T_C⁻¹ = (1/t_max) ∫ dφ |φ⟩⟨φ| ⊗ e^{−iφ(H_S + ε_*)}`.
pub fn trivialization_inverse_matrix(ctx: &ReductionContext) -> Operator {
    trivialization_kernel(ctx, 1.0)
}

fn trivialization_kernel(ctx: &ReductionContext, sign: f64) -> Operator {
    let cs = &ctx.cs;
    let t = cs.t_max();
    let ec = cs.clock.energies();
    let g = &cs.clock.g;
    let (dc, ds) = (cs.d_c(), cs.d_s());
    let mut m = Mat::zeros(cs.dim(), cs.dim());
    for j in 0..dc {
        for l in 0..dc {
            for k in 0..ds {
                let delta = ec[j] - ec[l] + sign * (cs.system.energies[k] + ctx.epsilon_star);
                let w = cycle_integral(delta, t).expect("t_max > 0");
                m[(j * ds + k, l * ds + k)] = phase(g[j] - g[l]) * w;
            }
        }
    }
    Operator { mat: m, basis: Basis::kinematical() }
}

#[derive(Clone, Debug)]
pub struct Trivialized {
    pub clock_factor: StateVector,
    /// `|ψ_S^phys⟩` on the physical system space.
    pub system_factor: StateVector,
    /// Second-largest over largest Schmidt coefficient.
    pub schmidt_ratio: f64,
    /// `‖T_C ψ − e^{ig_*}|ε_*⟩ ⊗ |ψ_S^phys⟩‖_max`.
    pub residual: f64,
}

/// `T_C |ψ_phys⟩ = e^{i g_*} |ε_*⟩ ⊗ |ψ_S^phys⟩`.
pub fn trivialize(ctx: &ReductionContext, psi_phys: &StateVector) -> Result<Trivialized> {
    ctx.require_physical(psi_phys)?;
    let cs = &ctx.cs;
    let out = trivialization_matrix(ctx).apply(psi_phys)?;
    let (dc, ds) = (cs.d_c(), cs.d_s());
    // Row-major reshape: rows are clock levels.
    let block = Mat::from_fn(dc, ds, |j, k| out.amps[j * ds + k]);
    let sv = block.clone().svd(false, false).singular_values;
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let schmidt_ratio = if s[0] > 0.0 { s.get(1).copied().unwrap_or(0.0) / s[0] } else { 0.0 };

    let system_factor = pw_reduce(ctx, 0.0, psi_phys)?;
    let mut clock = Vector::zeros(dc);
    clock[ctx.star_index] = phase(cs.clock.g[ctx.star_index]);
    let clock_factor = StateVector::new(clock, Basis::Clock);
    let expected = kron_state(&clock_factor, &ctx.ps.extend_state(&system_factor)?);
    let residual = out.max_abs_diff(&expected);
    ensure("trivialised state is a product", schmidt_ratio, TRINITY_TOL)?;
    ensure("trivialised state factors", residual, TRINITY_TOL)?;
    Ok(Trivialized { clock_factor, system_factor, schmidt_ratio, residual })
}

/// `T_C⁻¹` applied to a kinematical vector.
pub fn trivialize_inverse(ctx: &ReductionContext, chi: &StateVector) -> Result<StateVector> {
    let mut v = trivialization_inverse_matrix(ctx).apply(chi)?;
    v.basis = Basis::kinematical();
    Ok(v)
}

/// Clock levels `j` on which `T_C C_H T_C⁻¹ = (H_C − ε_*) ⊗ I` holds for every
/// physical system state: those whose shifted level stays inside the truncation.
pub fn trivializable_levels(ctx: &ReductionContext) -> Vec<usize> {
    let clock = &ctx.cs.clock;
    let n_star = clock.n_set[ctx.star_index];
    (0..clock.dim())
        .filter(|&j| {
            ctx.ps.basis.iter().all(|b| {
                let target = clock.n_set[j] + clock.n_set[b.clock_index] - n_star;
                clock.level_index(target).is_some()
            })
        })
        .collect()
}

/// `‖T_C C_H T_C⁻¹ (χ ⊗ ψ_S) − ((H_C − ε_*)χ) ⊗ ψ_S‖`.
pub fn trivialized_constraint_residual(ctx: &ReductionContext, chi: &StateVector, psi_s: &StateVector) -> Result<f64> {
    ctx.require_phys_system(psi_s)?;
    let cs = &ctx.cs;
    let lifted = ctx.ps.extend_state(psi_s)?;
    let input = kron_state(chi, &lifted);
    let mid = trivialize_inverse(ctx, &input)?;
    let mid = StateVector::new(cs.apply_constraint(&mid), Basis::kinematical());
    let out = trivialization_matrix(ctx).apply(&mid)?;
    let ec = cs.clock.energies();
    let shifted = Vector::from_fn(cs.d_c(), |j, _| chi.amps[j] * (ec[j] - ctx.epsilon_star));
    let expected = kron_state(&StateVector::new(shifted, Basis::Clock), &lifted);
    Ok((&out.amps - &expected.amps).norm())
}

/// `R_H = (e^{−iε_*τ}⟨τ| ⊗ I) T_C` at reading `tau`, as a `d_phys × d_kin` matrix.
pub fn heisenberg_matrix(ctx: &ReductionContext, tau: f64) -> Mat {
    let r = reduction_matrix(ctx, tau);
    (r * &trivialization_matrix(ctx).mat) * phase(-ctx.epsilon_star * tau)
}

/// `R_H⁻¹ = e^{ig_*} T_C⁻¹ (|ε_*⟩ ⊗ I)`, as a `d_kin × d_phys` matrix.
pub fn heisenberg_inverse_matrix(ctx: &ReductionContext) -> Mat {
    let cs = &ctx.cs;
    let ds = cs.d_s();
    let mut embed = Mat::zeros(cs.dim(), ctx.d_phys());
    for (a, k) in ctx.ps.system_indices().into_iter().enumerate() {
        embed[(ctx.star_index * ds + k, a)] = ONE;
    }
    (&trivialization_inverse_matrix(ctx).mat * embed) * phase(cs.clock.g[ctx.star_index])
}

/// Readings at which τ-independence of `R_H` is checked, in units of `t_max`.
pub const HEISENBERG_READINGS: [f64; 3] = [0.0, 0.3, 1.7];

/// `|ψ_S^phys⟩ = R_H |ψ_phys⟩`, checked to be independent of the reading.
pub fn heisenberg_reduce(ctx: &ReductionContext, psi_phys: &StateVector) -> Result<StateVector> {
    ctx.require_physical(psi_phys)?;
    let t = ctx.cs.t_max();
    let base = heisenberg_matrix(ctx, 0.0) * &psi_phys.amps;
    let mut dev: f64 = 0.0;
    for x in &HEISENBERG_READINGS[1..] {
        let v = heisenberg_matrix(ctx, x * t) * &psi_phys.amps;
        dev = dev.max(max_abs_vec(&(v - &base)));
    }
    ensure("Heisenberg reduction independent of reading", dev, PERIODICITY_TOL)?;
    Ok(StateVector::new(base, Basis::System))
}

pub fn heisenberg_inverse(ctx: &ReductionContext, psi_s: &StateVector) -> Result<StateVector> {
    ctx.require_phys_system(psi_s)?;
    Ok(StateVector::new(heisenberg_inverse_matrix(ctx) * &psi_s.amps, Basis::kinematical()))
}

/// `f(τ) = U_S†(τ) f U_S(τ)` on the physical system space.
pub fn heisenberg_observable(ctx: &ReductionContext, tau: f64, f_phys: &Operator) -> Operator {
    let u = ctx.ps.evolve_system(tau);
    &(&u.adjoint() * f_phys) * &u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityMode {
    Physical,
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub z: i64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub numerator_over_denominator_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProbabilityReport {
    pub mode: ProbabilityMode,
    pub tau: f64,
    pub outcome: String,
    pub value: Option<f64>,
    pub table: Vec<CutoffRow>,
    /// Group-averaging normalisation, reported symbolically for the line group.
    pub normalization: Option<String>,
}

fn projector_defect(p: &Operator) -> f64 {
    let idem = max_abs(&(&p.mat * &p.mat - &p.mat));
    idem.max(p.hermiticity_defect())
}

/// Conditional probability of `outcome` given reading `tau`.
pub fn conditional_probability(
    ctx: &ReductionContext,
    tau: f64,
    outcome: &Operator,
    label: &str,
    psi_phys: &StateVector,
    mode: ProbabilityMode,
    cutoffs: Option<&[i64]>,
) -> Result<ConditionalProbabilityReport> {
    ctx.require_phys_operator(outcome)?;
    ctx.require_physical(psi_phys)?;
    let defect = projector_defect(outcome);
    if defect > TRINITY_TOL {
        return Err(Error::NotProjector(defect));
    }
    let cs = &ctx.cs;
    let extended = ctx.ps.extend(outcome)?;

    // Physical value, cross-checked against the Born rule on the reduced state.
    let twirl = partial_twirl(cs, tau, &extended)?.matrix;
    let norm_sq = psi_phys.inner(psi_phys).re;
    let physical = twirl.sandwich(psi_phys, psi_phys).re / norm_sq;
    let reduced = pw_reduce(ctx, tau, psi_phys)?;
    let born = outcome.sandwich(&reduced, &reduced).re / reduced.inner(&reduced).re;
    ensure("physical probability vs Born rule", (physical - born).abs(), TRINITY_TOL)?;

    let report = |value, table, normalization| ConditionalProbabilityReport {
        mode,
        tau,
        outcome: label.to_string(),
        value,
        table,
        normalization,
    };
    if mode == ProbabilityMode::Physical {
        return Ok(report(Some(physical), Vec::new(), None));
    }

    // Kinematical |τ⟩⟨τ| ⊗ X applied to ψ.
    let tau_state = clock_state(&cs.clock, tau);
    let proj_tau = Operator::outer(&tau_state, &tau_state);
    let numerator_op = crate::hilbert_core::kron(&proj_tau, &extended);
    let denominator_op = crate::hilbert_core::kron(&proj_tau, &Operator::identity(cs.d_s(), Basis::System));
    let num_vec = numerator_op.apply(psi_phys)?;
    let den_vec = denominator_op.apply(psi_phys)?;

    match cs.group {
        Group::CompactU1 { .. } => {
            let num = psi_phys.inner(&num_vec).re;
            let den = psi_phys.inner(&den_vec).re;
            ensure("conditional vs physical inner product", (den - norm_sq).abs(), TRINITY_TOL)?;
            let value = num / den;
            ensure("naive vs physical probability", (value - physical).abs(), TRINITY_TOL)?;
            Ok(report(Some(value), Vec::new(), Some(format!("N_G = t̃ = {}", cs_t_tilde(cs)))))
        }
        Group::Line => {
            let zs = cutoffs.ok_or(Error::MissingCutoff)?;
            if zs.is_empty() {
                return Err(Error::MissingCutoff);
            }
            let t = cs.t_max();
            let mut table = Vec::with_capacity(zs.len());
            for &z in zs {
                // Π_Z = (1/2π) ∫_{−Z t}^{(Z+1) t} U_CS(s) ds, diagonal in the product basis.
                let left = Vector::from_fn(cs.dim(), |r, _| {
                    let lam = cs.c_h[r];
                    let sum: C64 = (-z..=z).map(|k| phase(-lam * k as f64 * t)).sum();
                    let w = cycle_integral(lam, t).expect("t_max > 0") * sum * (t / (2.0 * std::f64::consts::PI));
                    // Π_Z† ψ
                    w.conj() * psi_phys.amps[r]
                });
                let numerator = left.dotc(&num_vec.amps).re;
                let denominator = left.dotc(&den_vec.amps).re;
                table.push(CutoffRow {
                    z,
                    numerator,
                    denominator,
                    ratio: numerator / denominator,
                    numerator_over_denominator_sq: numerator / (denominator * denominator),
                });
            }
            let first = &table[0];
            let per_num = first.numerator / (2 * first.z + 1) as f64;
            let per_den = first.denominator / (2 * first.z + 1) as f64;
            let mut worst: f64 = 0.0;
            for row in &table {
                let w = (2 * row.z + 1) as f64;
                if per_num.abs() > 0.0 {
                    worst = worst.max((row.numerator / w - per_num).abs() / per_num.abs());
                }
                worst = worst.max((row.denominator / w - per_den).abs() / per_den.abs());
                ensure("cutoff ratio vs physical probability", (row.ratio - physical).abs(), TRINITY_TOL)?;
            }
            ensure("linear cutoff scaling", worst, SCALING_TOL)?;
            Ok(report(None, table, Some("N_G = 2π (symbolic)".into())))
        }
    }
}

fn cs_t_tilde(cs: &ConstraintSystem) -> f64 {
    match cs.group {
        Group::CompactU1 { t_tilde, .. } => t_tilde,
        Group::Line => f64::INFINITY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equality {
    pub name: String,
    pub max_residual: f64,
    pub tol: f64,
}

impl Equality {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrinityReport {
    pub system: String,
    pub tau_grid: Vec<f64>,
    pub equalities: Vec<Equality>,
    pub conditional_probability_tables: Vec<ConditionalProbabilityReport>,
}

fn track(eqs: &mut Vec<Equality>, name: &str, tol: f64, value: f64) {
    match eqs.iter_mut().find(|e| e.name == name) {
        Some(e) => e.max_residual = e.max_residual.max(value),
        None => eqs.push(Equality { name: name.to_string(), max_residual: value, tol }),
    }
}

/// Residual of an op that itself asserts, or infinity if it failed.
fn residual_of<T>(r: Result<T>, f: impl FnOnce(&T) -> f64) -> f64 {
    match r {
        Ok(v) => f(&v),
        Err(Error::Assertion { residual, .. }) => residual,
        Err(_) => f64::INFINITY,
    }
}

/// All picture equivalences on `n_states` random physical states, every reading
/// in `taus`, and every physical system observable in `observables`.
pub fn trinity_report(
    ctx: &ReductionContext,
    system: &str,
    observables: &[Operator],
    taus: &[f64],
    n_states: usize,
    rng: &mut Rng,
) -> Result<TrinityReport> {
    let cs = &ctx.cs;
    let t = cs.t_max();
    let mut eqs = Vec::new();
    let states: Vec<StateVector> = (0..n_states).map(|_| ctx.random_physical(rng)).collect();
    let h_s = Operator::diagonal(&ctx.ps.system_energies(), Basis::System);

    for psi in &states {
        let heis = match heisenberg_reduce(ctx, psi) {
            Ok(h) => {
                track(&mut eqs, "Heisenberg reduction independent of reading", PERIODICITY_TOL, 0.0);
                h
            }
            Err(Error::Assertion { residual, .. }) => {
                track(&mut eqs, "Heisenberg reduction independent of reading", PERIODICITY_TOL, residual);
                StateVector::new(heisenberg_matrix(ctx, 0.0) * &psi.amps, Basis::System)
            }
            Err(e) => return Err(e),
        };
        let back = heisenberg_inverse(ctx, &heis)?;
        track(&mut eqs, "R_H⁻¹ R_H = id", TRINITY_TOL, back.max_abs_diff(psi));
        let triv = trivialize(ctx, psi);
        track(&mut eqs, "trivialised state is a product", TRINITY_TOL, residual_of(triv.clone(), |v| v.schmidt_ratio.max(v.residual)));
        let round = trivialize_inverse(ctx, &trivialization_matrix(ctx).apply(psi)?)?;
        track(&mut eqs, "T_C⁻¹ T_C = id", TRINITY_TOL, round.max_abs_diff(psi));
        let triv_norm = trivialization_matrix(ctx).apply(psi)?.norm();
        track(&mut eqs, "trivialisation isometry", TRINITY_TOL, (triv_norm - psi.norm()).abs());

        for &tau in taus {
            let red = pw_reduce(ctx, tau, psi)?;
            let back = pw_inverse(ctx, tau, &red)?;
            track(&mut eqs, "R⁻¹ R = id on physical states", TRINITY_TOL, back.max_abs_diff(psi));
            let again = pw_reduce(ctx, tau, &back)?;
            track(&mut eqs, "R R⁻¹ = id on physical system states", TRINITY_TOL, again.max_abs_diff(&red));
            track(&mut eqs, "R⁻¹ output solves the constraint", TRINITY_TOL, cs.constraint_residual(&back));
            for z in 1..=3i64 {
                let later = pw_reduce(ctx, tau + z as f64 * t, psi)?;
                let expected = red.scale(phase(z as f64 * ctx.varphi));
                track(&mut eqs, "reduced state periodic up to phase", PERIODICITY_TOL, later.max_abs_diff(&expected));
                let inv_later = pw_inverse(ctx, tau + z as f64 * t, &red)?;
                let inv_expected = back.scale(phase(-(z as f64) * ctx.varphi));
                track(&mut eqs, "R⁻¹(τ + z t_max) = e^{−iz varphi} R⁻¹(τ)", PERIODICITY_TOL, inv_later.max_abs_diff(&inv_expected));
            }
            let via_schrodinger = ctx.ps.evolve_system(tau).adjoint().apply(&red)?;
            track(&mut eqs, "R_H = U_S†(τ) R_S(τ)", TRINITY_TOL, via_schrodinger.max_abs_diff(&heis));
            let inv10 = pw_inverse(ctx, tau, &ctx.ps.evolve_system(tau).apply(&heis)?)?;
            track(&mut eqs, "R_H⁻¹ = R_S⁻¹(τ) U_S(τ)", TRINITY_TOL, inv10.max_abs_diff(&back));

            for f in observables {
                let twirl = partial_twirl(cs, tau, &ctx.ps.extend(f)?)?.matrix;
                let dirac = twirl.sandwich(psi, psi);
                let schr = f.sandwich(&red, &red);
                let heis_val = heisenberg_observable(ctx, tau, f).sandwich(&heis, &heis);
                track(&mut eqs, "Dirac vs Schrödinger expectation", TRINITY_TOL, (dirac - schr).norm());
                track(&mut eqs, "Dirac vs Heisenberg expectation", TRINITY_TOL, (dirac - heis_val).norm());
                track(&mut eqs, "Schrödinger vs Heisenberg expectation", TRINITY_TOL, (schr - heis_val).norm());
            }
        }
    }

    // Inner products on pairs.
    for pair in states.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let phys = a.inner(b);
        for &tau in taus {
            let (ra, rb) = (pw_reduce(ctx, tau, a)?, pw_reduce(ctx, tau, b)?);
            track(&mut eqs, "reduction preserves inner products", TRINITY_TOL, (ra.inner(&rb) - phys).norm());
            for f in observables {
                let twirl = partial_twirl(cs, tau, &ctx.ps.extend(f)?)?.matrix;
                let lhs = twirl.sandwich(a, b);
                let rhs = f.sandwich(&ra, &rb);
                track(&mut eqs, "transition amplitudes agree", TRINITY_TOL, (lhs - rhs).norm());
            }
        }
    }

    // Observable identities.
    for &tau in taus {
        for f in observables {
            let emb = embed_observable(ctx, tau, f);
            track(&mut eqs, "embedding weakly equals partial twirl", TRINITY_TOL, residual_of(emb.clone(), |e| e.twirl_residual));
            track(&mut eqs, "reduced twirl equals observable", TRINITY_TOL, residual_of(emb, |e| e.reduction_residual));
            let hinv = heisenberg_inverse_matrix(ctx);
            let h = heisenberg_matrix(ctx, 0.0);
            let heis_embed = Operator { mat: &hinv * &heisenberg_observable(ctx, tau, f).mat * &h, basis: Basis::kinematical() };
            let twirl = partial_twirl(cs, tau, &ctx.ps.extend(f)?)?.matrix;
            track(&mut eqs, "Heisenberg embedding weakly equals partial twirl", TRINITY_TOL, weak_difference(&ctx.ps, &heis_embed, &twirl));
        }
    }

    // Constraint trivialisation on product inputs.
    let levels = trivializable_levels(ctx);
    if !levels.is_empty() {
        for _ in 0..n_states.min(10) {
            let mut chi = Vector::zeros(cs.d_c());
            for &j in &levels {
                chi[j] = rng.complex();
            }
            let chi = StateVector::new(chi, Basis::Clock).normalized();
            let psi_s = rng.state(ctx.d_phys(), Basis::System);
            let r = trivialized_constraint_residual(ctx, &chi, &psi_s)?;
            track(&mut eqs, "trivialised constraint acts on the clock", TRINITY_TOL, r);
        }
    }

    // Probability conservation over the physical system basis.
    let d = ctx.d_phys();
    for psi in states.iter().take(3) {
        for &tau in taus {
            let mut total = 0.0;
            for a in 0..d {
                let mut p = Mat::zeros(d, d);
                p[(a, a)] = ONE;
                let proj = Operator { mat: p, basis: Basis::System };
                let rep = conditional_probability(ctx, tau, &proj, "basis", psi, ProbabilityMode::Physical, None)?;
                total += rep.value.unwrap_or(f64::NAN);
            }
            track(&mut eqs, "probabilities sum to one", TRINITY_TOL, (total - 1.0).abs());
        }
    }

    // Schrödinger equation by central differences.
    for psi in states.iter().take(3) {
        let tau = 0.3;
        let h = SCHRODINGER_STEP;
        let plus = pw_reduce(ctx, tau + h, psi)?;
        let minus = pw_reduce(ctx, tau - h, psi)?;
        let deriv = (&plus.amps - &minus.amps) / C64::new(2.0 * h, 0.0);
        let red = pw_reduce(ctx, tau, psi)?;
        let expected = (&h_s.mat * &red.amps) * (-I);
        track(&mut eqs, "Schrödinger equation", SCHRODINGER_TOL, max_abs_vec(&(deriv - expected)));
    }

    // Naive conditional probability of the first physical level, one state per reading.
    let mut tables = Vec::new();
    if let Some(psi) = states.first() {
        let mut p = Mat::zeros(d, d);
        p[(0, 0)] = ONE;
        let proj = Operator { mat: p, basis: Basis::System };
        for &tau in taus {
            let rep = conditional_probability(ctx, tau, &proj, "level 0", psi, ProbabilityMode::Naive, Some(&NAIVE_CUTOFFS));
            let residual = residual_of(rep.clone(), |_| 0.0);
            track(&mut eqs, "naive conditional probability", TRINITY_TOL, residual);
            if let Ok(r) = rep {
                tables.push(r);
            }
        }
    }

    Ok(TrinityReport { system: system.to_string(), tau_grid: taus.to_vec(), equalities: eqs, conditional_probability_tables: tables })
}
