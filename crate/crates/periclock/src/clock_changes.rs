//! Tripartite systems: an aperiodic grid clock A, a periodic clock B and a system S.
//!
//! A is the ideal clock `H_A = −p` on a uniform grid of spacing `δ`, written as a
//! clock with `ω_t = δ` and levels `n = −k`. Its period `2π/δ` is taken much longer
//! than any reading used, so on that window it behaves as an aperiodic clock.
//! The constraint is assembled with A as the clock and `B ⊗ S` as the system, so
//! the kinematical index is `a·d_B·d_S + b·d_S + s`.

use serde::{Deserialize, Serialize};

use crate::clock_povm::{clock_state, moment, z_operator, ClockSpec};
use crate::dirac_quantization::{build_constraint, solve_constraint, ConstraintSystem, PhysicalSpace, SystemSpec};
use crate::error::{ensure, Error, Result};
use crate::hilbert_core::{
    cycle_integral, kron, max_abs, max_abs_vec, phase, Basis, Mat, Operator, StateVector, Vector, C64,
};

/// Tolerance for frame-change identities and τ_B dependence.
pub const FRAME_TOL: f64 = 1e-9;
/// Tolerance for the unwinding law.
pub const UNWINDING_TOL: f64 = 1e-8;
/// Number of equally spaced τ_B readings in one B cycle used for dependence tests.
pub const TAU_B_GRID: usize = 8;

/// Ideal clock `H_A = −p` on `p = kδ`, `k = −half..=half`.
pub fn ideal_grid_clock(half: i64, delta: f64) -> Result<ClockSpec> {
    let n: Vec<i64> = (-half..=half).map(|k| -k).collect();
    crate::clock_povm::make_clock(&n, delta, 0.0, None)
}

#[derive(Clone, Debug)]
pub struct TripartiteSystem {
    pub a: ClockSpec,
    pub b: ClockSpec,
    pub s: SystemSpec,
    /// Constraint with A as the clock and `B ⊗ S` as the system.
    pub cs: ConstraintSystem,
    pub ps: PhysicalSpace,
}

pub fn build_tripartite(a: ClockSpec, b: ClockSpec, s: SystemSpec) -> Result<TripartiteSystem> {
    let b_sys = SystemSpec::new(b.energies(), b.n_set.iter().map(|&n| n as i32).collect())?;
    let bs = SystemSpec::combine(&b_sys, &s)?;
    let cs = build_constraint(a.clone(), bs)?;
    let ps = solve_constraint(&cs, cs.tol_energy)?;
    if ps.is_empty() {
        return Err(Error::EmptyPhysicalSpace);
    }
    Ok(TripartiteSystem { a, b, s, cs, ps })
}

/// One physical triple `(ε_A, ε_B, E_S)` with its factor indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub a: usize,
    pub b: usize,
    pub s: usize,
    pub eps_a: f64,
    pub eps_b: f64,
    pub e_s: f64,
}

impl TripartiteSystem {
    pub fn d_a(&self) -> usize {
        self.a.dim()
    }
    pub fn d_b(&self) -> usize {
        self.b.dim()
    }
    pub fn d_s(&self) -> usize {
        self.s.dim()
    }
    pub fn dim(&self) -> usize {
        self.cs.dim()
    }

    pub fn index(&self, a: usize, b: usize, s: usize) -> usize {
        (a * self.d_b() + b) * self.d_s() + s
    }

    pub fn triples(&self) -> Vec<Triple> {
        let ea = self.a.energies();
        let eb = self.b.energies();
        self.ps
            .basis
            .iter()
            .map(|e| {
                let (b, s) = (e.system_index / self.d_s(), e.system_index % self.d_s());
                Triple { a: e.clock_index, b, s, eps_a: ea[e.clock_index], eps_b: eb[b], e_s: self.s.energies[s] }
            })
            .collect()
    }

    /// `E_A + E_S` for every `(a, s)`, in `a·d_S + s` order.
    fn as_energies(&self) -> Vec<f64> {
        let ea = self.a.energies();
        let mut out = Vec::with_capacity(self.d_a() * self.d_s());
        for e in &ea {
            for s in &self.s.energies {
                out.push(e + s);
            }
        }
        out
    }

    /// `R^A(τ_A) = ⟨τ_A| ⊗ I_BS`, a `(d_B d_S) × d_kin` matrix.
    pub fn reduce_a_matrix(&self, tau_a: f64) -> Mat {
        let bra = clock_state(&self.a, tau_a);
        let dbs = self.d_b() * self.d_s();
        let mut m = Mat::zeros(dbs, self.dim());
        for a in 0..self.d_a() {
            for bs in 0..dbs {
                m[(bs, a * dbs + bs)] = bra.amps[a].conj();
            }
        }
        m
    }

    /// `(R^A)⁻¹(τ_A)`, a `d_kin × (d_B d_S)` matrix.
    pub fn inverse_a_matrix(&self, tau_a: f64) -> Mat {
        let ea = self.a.energies();
        let ebs = &self.cs.system.energies;
        let t = self.a.t_max();
        let dbs = ebs.len();
        let mut m = Mat::zeros(self.dim(), dbs);
        for a in 0..self.d_a() {
            for bs in 0..dbs {
                let w = cycle_integral(ea[a] + ebs[bs], t).expect("t_max > 0");
                if w != C64::new(0.0, 0.0) {
                    m[(a * dbs + bs, bs)] = phase(self.a.g[a] + ebs[bs] * tau_a) * w;
                }
            }
        }
        m
    }

    /// `R^B(τ_B) = ⟨τ_B| ⊗ I_AS`, a `(d_A d_S) × d_kin` matrix.
    pub fn reduce_b_matrix(&self, tau_b: f64) -> Mat {
        let bra = clock_state(&self.b, tau_b);
        let ds = self.d_s();
        let mut m = Mat::zeros(self.d_a() * ds, self.dim());
        for a in 0..self.d_a() {
            for b in 0..self.d_b() {
                for s in 0..ds {
                    m[(a * ds + s, self.index(a, b, s))] = bra.amps[b].conj();
                }
            }
        }
        m
    }

    /// `(R^B)⁻¹(τ_B)`, a `d_kin × (d_A d_S)` matrix.
    pub fn inverse_b_matrix(&self, tau_b: f64) -> Mat {
        let eb = self.b.energies();
        let eas = self.as_energies();
        let t = self.b.t_max();
        let ds = self.d_s();
        let mut m = Mat::zeros(self.dim(), eas.len());
        for a in 0..self.d_a() {
            for s in 0..ds {
                let col = a * ds + s;
                for b in 0..self.d_b() {
                    let w = cycle_integral(eb[b] + eas[col], t).expect("t_max > 0");
                    if w != C64::new(0.0, 0.0) {
                        m[(self.index(a, b, s), col)] = phase(self.b.g[b] + eas[col] * tau_b) * w;
                    }
                }
            }
        }
        m
    }

    /// `Λ^{A→B} = R^B(τ_B) (R^A)⁻¹(τ_A)`, contracted using the sparsity of both factors.
    pub fn lambda_ab(&self, tau_a: f64, tau_b: f64) -> Mat {
        let bra = clock_state(&self.b, tau_b);
        let inv = self.inverse_a_matrix(tau_a);
        let ds = self.d_s();
        let mut m = Mat::zeros(self.d_a() * ds, self.d_b() * ds);
        for a in 0..self.d_a() {
            for b in 0..self.d_b() {
                for s in 0..ds {
                    // (R^A)⁻¹ maps bs only onto kinematical rows with the same bs.
                    let bs = b * ds + s;
                    m[(a * ds + s, bs)] += bra.amps[b].conj() * inv[(self.index(a, b, s), bs)];
                }
            }
        }
        m
    }

    /// `Λ^{B→A} = R^A(τ_A) (R^B)⁻¹(τ_B)`.
    pub fn lambda_ba(&self, tau_a: f64, tau_b: f64) -> Mat {
        let bra = clock_state(&self.a, tau_a);
        let inv = self.inverse_b_matrix(tau_b);
        let ds = self.d_s();
        let mut m = Mat::zeros(self.d_b() * ds, self.d_a() * ds);
        for a in 0..self.d_a() {
            for b in 0..self.d_b() {
                for s in 0..ds {
                    let as_ = a * ds + s;
                    m[(b * ds + s, as_)] += bra.amps[a].conj() * inv[(self.index(a, b, s), as_)];
                }
            }
        }
        m
    }

    /// `B ⊗ S` indices reached by reducing physical states in A's perspective.
    pub fn physical_bs(&self) -> Vec<usize> {
        self.ps.basis.iter().map(|e| e.system_index).collect()
    }

    /// `A ⊗ S` indices reached by reducing physical states in B's perspective.
    pub fn physical_as(&self) -> Vec<usize> {
        self.triples().iter().map(|t| t.a * self.d_s() + t.s).collect()
    }

    /// Random normalised physical state.
    pub fn random_physical(&self, rng: &mut crate::rng::Rng) -> StateVector {
        let c = rng.vector(self.ps.dim());
        let c = &c / C64::new(c.norm(), 0.0);
        self.ps.embed(&c).expect("matching dimension")
    }

    /// Gaussian packet of A centred at reading `center` with reading width `width`.
    pub fn a_packet(&self, center: f64, width: f64) -> StateVector {
        let ea = self.a.energies();
        let amps: Vec<C64> = ea
            .iter()
            .zip(&self.a.g)
            .map(|(&e, &g)| phase(g - e * center) * (-0.5 * (e * width).powi(2)).exp())
            .collect();
        StateVector::from_slice(&amps, Basis::Clock).normalized()
    }
}

#[derive(Clone, Debug)]
pub struct FrameChange {
    pub state: StateVector,
    /// Weight of the input outside the image of the A reduction.
    pub image_residual: f64,
}

/// `ψ_{AS|B}(τ_B) = Λ^{A→B} ψ_{BS|A}(τ_A)`.
pub fn frame_change(ts: &TripartiteSystem, tau_a: f64, tau_b: f64, psi_bs: &StateVector) -> Result<FrameChange> {
    let dbs = ts.d_b() * ts.d_s();
    if psi_bs.dim() != dbs {
        return Err(Error::DimensionMismatch(dbs, psi_bs.dim()));
    }
    let phys = ts.physical_bs();
    let image_residual = (0..dbs)
        .filter(|i| !phys.contains(i))
        .map(|i| psi_bs.amps[i].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let amps = ts.lambda_ab(tau_a, tau_b) * &psi_bs.amps;
    Ok(FrameChange { state: StateVector::new(amps, Basis::product(&Basis::Clock, &Basis::System)), image_residual })
}

/// `ψ_{BS|A}(τ_A) = Λ^{B→A} ψ_{AS|B}(τ_B)`.
pub fn frame_change_back(ts: &TripartiteSystem, tau_a: f64, tau_b: f64, psi_as: &StateVector) -> Result<StateVector> {
    let das = ts.d_a() * ts.d_s();
    if psi_as.dim() != das {
        return Err(Error::DimensionMismatch(das, psi_as.dim()));
    }
    Ok(StateVector::new(ts.lambda_ba(tau_a, tau_b) * &psi_as.amps, Basis::product(&Basis::Clock, &Basis::System)))
}

/// `O_{AS|B} = Λ^{A→B} O_{BS|A} Λ^{B→A}`.
pub fn transform_observable(ts: &TripartiteSystem, tau_a: f64, tau_b: f64, o_bs: &Operator) -> Result<Operator> {
    let dbs = ts.d_b() * ts.d_s();
    if o_bs.dim() != dbs {
        return Err(Error::DimensionMismatch(dbs, o_bs.dim()));
    }
    let mat = ts.lambda_ab(tau_a, tau_b) * &o_bs.mat * ts.lambda_ba(tau_a, tau_b);
    Ok(Operator { mat, basis: Basis::product(&Basis::Clock, &Basis::System) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauBVerdict {
    pub dependent: bool,
    pub max_deviation: f64,
    /// `max ‖[O, H_B ⊗ I_S] v‖` over reduced physical states `v`.
    pub commutator_action: f64,
    pub criterion_dependent: bool,
}

/// Whether the transformed observable depends on `τ_B`, checked against the
/// commutator criterion with `H_B`.
pub fn tau_b_dependence(ts: &TripartiteSystem, tau_a: f64, o_bs: &Operator) -> Result<TauBVerdict> {
    let dbs = ts.d_b() * ts.d_s();
    if o_bs.dim() != dbs {
        return Err(Error::DimensionMismatch(dbs, o_bs.dim()));
    }
    let t_b = ts.b.t_max();
    let phys_as = ts.physical_as();
    let n = phys_as.len();
    // Transformed observable on the reduced physical block only.
    let block = |tb: f64| -> Mat {
        let lab = ts.lambda_ab(tau_a, tb);
        let lba = ts.lambda_ba(tau_a, tb);
        let left = Mat::from_fn(n, dbs, |r, c| lab[(phys_as[r], c)]);
        let right = Mat::from_fn(dbs, n, |r, c| lba[(r, phys_as[c])]);
        left * &o_bs.mat * right
    };
    let base = block(0.0);
    let mut max_deviation: f64 = 0.0;
    for k in 1..TAU_B_GRID {
        let tb = k as f64 * t_b / TAU_B_GRID as f64;
        max_deviation = max_deviation.max(max_abs(&(block(tb) - &base)));
    }
    let h_b = kron(&ts.b.hamiltonian(), &Operator::identity(ts.d_s(), Basis::System));
    let comm = &(&o_bs.mat * &h_b.mat) - &(&h_b.mat * &o_bs.mat);
    let commutator_action = ts
        .physical_bs()
        .into_iter()
        .map(|i| comm.column(i).norm())
        .fold(0.0, f64::max);
    let dependent = max_deviation > FRAME_TOL;
    let criterion_dependent = commutator_action > FRAME_TOL;
    if dependent != criterion_dependent {
        return Err(Error::Assertion {
            what: "τ_B dependence vs commutator criterion",
            residual: max_deviation.max(commutator_action),
            tol: FRAME_TOL,
        });
    }
    Ok(TauBVerdict { dependent, max_deviation, commutator_action, criterion_dependent })
}

/// `F = τ I − Q_A + φ̂_B` on the kinematical space.
pub fn unwinding_observable(ts: &TripartiteSystem, tau: f64) -> Operator {
    let (ia, ib, is) = (
        Operator::identity(ts.d_a(), Basis::Clock),
        Operator::identity(ts.d_b(), Basis::Clock),
        Operator::identity(ts.d_s(), Basis::System),
    );
    let q_a = kron(&kron(&moment(&ts.a, 1), &ib), &is);
    let phi_b = kron(&kron(&ia, &moment(&ts.b, 1)), &is);
    let n = ts.dim();
    let mat = Mat::identity(n, n) * C64::new(tau, 0.0) - &q_a.mat + &phi_b.mat;
    Operator { mat, basis: Basis::kinematical() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnwindingElement {
    /// `⟨ψ₂|U†(s) F U(s)|ψ₁⟩`.
    pub lhs: C64,
    /// `⟨ψ₂|F − t_B Z_B(s)|ψ₁⟩`.
    pub rhs: C64,
    /// `t_A ⟨ψ₂|Z_A(s)|ψ₁⟩`, the grid clock's own wrap-around term.
    pub boundary: C64,
}

/// Unwinding law for B read against A, with the exact grid boundary term reported.
pub fn unwound_flow_element(
    ts: &TripartiteSystem,
    s: f64,
    tau: f64,
    psi1: &StateVector,
    psi2: &StateVector,
) -> Result<UnwindingElement> {
    let n = ts.dim();
    if psi1.dim() != n {
        return Err(Error::DimensionMismatch(n, psi1.dim()));
    }
    if psi2.dim() != n {
        return Err(Error::DimensionMismatch(n, psi2.dim()));
    }
    let f = unwinding_observable(ts, tau);
    let u1 = ts.cs.apply_evolution(s, psi1);
    let u2 = ts.cs.apply_evolution(s, psi2);
    let lhs = u2.inner(&f.apply(&u1)?);

    let (ia, ib, is) = (
        Operator::identity(ts.d_a(), Basis::Clock),
        Operator::identity(ts.d_b(), Basis::Clock),
        Operator::identity(ts.d_s(), Basis::System),
    );
    let z_b = kron(&kron(&ia, &z_operator(&ts.b, s)), &is);
    let z_a = kron(&kron(&z_operator(&ts.a, s), &ib), &is);
    let rhs = f.sandwich(psi2, psi1) - z_b.sandwich(psi2, psi1) * ts.b.t_max();
    let boundary = z_a.sandwich(psi2, psi1) * ts.a.t_max();
    let scale = psi1.norm() * psi2.norm();
    ensure("unwinding identity with grid boundary term", (lhs - rhs - boundary).norm(), UNWINDING_TOL * scale.max(1.0))?;
    Ok(UnwindingElement { lhs, rhs, boundary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockChangeReport {
    pub physical_dim: usize,
    pub frame_change_roundtrip: f64,
    pub frame_change_norm_defect: f64,
    pub verdicts: Vec<(String, TauBVerdict)>,
    pub unwinding_residuals: Vec<(f64, f64)>,
}

/// `‖R^B(τ_B + t_B)ψ − e^{i varphi_B} R^B(τ_B)ψ‖` for a physical state.
pub fn b_periodicity_defect(ts: &TripartiteSystem, tau_b: f64, psi: &StateVector) -> f64 {
    let now = ts.reduce_b_matrix(tau_b) * &psi.amps;
    let later = ts.reduce_b_matrix(tau_b + ts.b.t_max()) * &psi.amps;
    max_abs_vec(&(later - now * phase(ts.b.varphi)))
}

/// `|⟨O⟩(τ_A + t_B) − ⟨O⟩(τ_A)|` in A's perspective for a physical state.
pub fn a_statistics_shift(ts: &TripartiteSystem, tau_a: f64, o_bs: &Operator, psi: &StateVector) -> f64 {
    let expect = |tau: f64| {
        let v: Vector = ts.reduce_a_matrix(tau) * &psi.amps;
        let num = v.dotc(&(&o_bs.mat * &v));
        num / C64::new(v.norm_squared(), 0.0)
    };
    (expect(tau_a + ts.b.t_max()) - expect(tau_a)).norm()
}

/// `max ‖M‖` over a square block given by indices.
pub fn block_max(m: &Mat, idx: &[usize]) -> f64 {
    let sub = Mat::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
    max_abs(&sub)
}
