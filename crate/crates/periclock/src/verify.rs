//! Executable suite of every identity in the library, one record per check.

use serde::{Deserialize, Serialize};

use crate::classical_dynamics::{
    angle_flow, figure_data, oscillator_angle, oscillator_flow, torus_relational, OscillatorParams, TorusState,
};
use crate::clock_changes::{
    build_tripartite, frame_change, frame_change_back, ideal_grid_clock, tau_b_dependence, unwound_flow_element,
    TripartiteSystem,
};
use crate::clock_povm::{
    clock_state, effect_operator, evolved_moment_floor_law, moment, moment_commutator_defect, ClockSpec,
};
use crate::dirac_quantization::{Group, SystemSpec};
use crate::error::{Error, Result};
use crate::hilbert_core::{commutator, kron, kron_state, Basis, Operator, StateVector, I};
use crate::models::{
    commensurate_oscillators, incommensurate_oscillators, oscillator_particle, qubit_particle, Model,
};
use crate::relational_observables::{
    constraint_commutator_defect, full_twirl_u1, partial_twirl, transient_flow_element, DiracClass,
};
use crate::rng::Rng;
use crate::trinity::{trinity_report, ReductionContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub lemma: String,
    pub check: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Substring matched against the lemma name.
    pub filter: Option<String>,
    pub seed: u64,
    /// Replaces every default tolerance.
    pub tol_override: Option<f64>,
}

/// Collects records, applying the tolerance override.
pub struct Recorder {
    tol_override: Option<f64>,
    pub records: Vec<CheckRecord>,
}

impl Recorder {
    pub fn new(tol_override: Option<f64>) -> Self {
        Recorder { tol_override, records: Vec::new() }
    }

    pub fn record(&mut self, lemma: &str, check: &str, residual: f64, tol: f64) {
        let tol = self.tol_override.unwrap_or(tol);
        let passed = residual <= tol;
        self.records.push(CheckRecord { lemma: lemma.into(), check: check.into(), residual, tol, passed });
    }

    /// Keeps the worst residual for repeated checks of the same name.
    pub fn record_max(&mut self, lemma: &str, check: &str, residual: f64, tol: f64) {
        let tol = self.tol_override.unwrap_or(tol);
        if let Some(r) = self.records.iter_mut().find(|r| r.lemma == lemma && r.check == check) {
            r.residual = r.residual.max(residual);
            r.passed = r.residual <= r.tol;
        } else {
            self.record(lemma, check, residual, tol);
        }
    }

    /// Pass/fail check with no natural residual.
    pub fn record_bool(&mut self, lemma: &str, check: &str, ok: bool) {
        let residual = if ok { 0.0 } else { 1.0 };
        let tol = self.tol_override.unwrap_or(0.0).max(0.0);
        self.records.push(CheckRecord { lemma: lemma.into(), check: check.into(), residual, tol, passed: ok });
    }
}

/// Residual of a self-asserting result: its assertion residual on failure,
/// infinity on any other error.
pub fn residual_of<T>(r: Result<T>, f: impl FnOnce(&T) -> f64) -> f64 {
    match r {
        Ok(v) => f(&v),
        Err(Error::Assertion { residual, .. }) => residual,
        Err(_) => f64::INFINITY,
    }
}

/// The canonical clock-system models.
pub fn canonical_models() -> Result<Vec<Model>> {
    Ok(vec![
        commensurate_oscillators(1, 1, 3, 8)?,
        commensurate_oscillators(2, 1, 3, 8)?,
        incommensurate_oscillators(6)?,
        qubit_particle()?,
        oscillator_particle(4)?,
    ])
}

/// Grid clock, qubit clock and particle used for the clock-change checks.
pub fn canonical_tripartite() -> Result<TripartiteSystem> {
    let s = SystemSpec::particle_grid(&[1.0, 2f64.sqrt(), 3f64.sqrt(), 2.0], 1.0, 1.0)?;
    build_tripartite(ideal_grid_clock(20, 0.05)?, ClockSpec::qubit(1.0)?, s)
}

pub const GROUPS: [&str; 12] = [
    "povm",
    "moments",
    "floor-law",
    "dirac",
    "commutator",
    "full-twirl",
    "transient",
    "trinity",
    "clock-changes",
    "unwinding",
    "classical",
    "torus",
];

/// Runs every group whose name contains the filter.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckRecord>> {
    let mut rec = Recorder::new(opts.tol_override);
    let selected = |g: &str| opts.filter.as_deref().map_or(true, |f| g.contains(f));
    let models = canonical_models()?;
    let mut rng = Rng::new(opts.seed);
    for g in GROUPS.iter().filter(|g| selected(g)) {
        match *g {
            "povm" => povm_checks(&mut rec)?,
            "moments" => moment_checks(&mut rec)?,
            "floor-law" => floor_law_checks(&mut rec, &mut rng)?,
            "dirac" => dirac_checks(&mut rec, &models),
            "commutator" => commutator_checks(&mut rec, &models, &mut rng)?,
            "full-twirl" => full_twirl_checks(&mut rec, &mut rng)?,
            "transient" => transient_checks(&mut rec, &models, &mut rng)?,
            "trinity" => trinity_checks(&mut rec, &models, &mut rng)?,
            "clock-changes" => clock_change_checks(&mut rec, &mut rng)?,
            "unwinding" => unwinding_checks(&mut rec, &mut rng)?,
            "classical" => classical_checks(&mut rec)?,
            "torus" => torus_checks(&mut rec)?,
            _ => unreachable!(),
        }
    }
    Ok(rec.records)
}

fn povm_checks(rec: &mut Recorder) -> Result<()> {
    for d in [2usize, 6, 16, 32] {
        let spec = ClockSpec::oscillator(d, 1.0)?;
        let e = effect_operator(&spec, 0.0, spec.t_max())?;
        let defect = (&e - &Operator::identity(d, Basis::Clock)).max_abs();
        rec.record("povm", &format!("completeness d={d}"), defect, 1e-12);
    }
    Ok(())
}

fn moment_checks(rec: &mut Recorder) -> Result<()> {
    for d in [2usize, 6, 16] {
        let spec = ClockSpec::oscillator(d, 1.0)?;
        for n in 1..=4 {
            let r = residual_of(moment_commutator_defect(&spec, n), |c| c.residual);
            rec.record_max("moments", &format!("commutator defect d={d}"), r, 1e-10);
        }
    }
    let q = ClockSpec::qubit(1.0)?;
    let comm = commutator(&moment(&q, 1), &q.hamiltonian())?;
    let zero = clock_state(&q, 0.0);
    let expected = (&Operator::identity(2, Basis::Clock) - &Operator::outer(&zero, &zero)).scale(I);
    rec.record("moments", "qubit [φ̂, H] = i(I − |0⟩⟨0|)", (&comm - &expected).max_abs(), 1e-12);
    Ok(())
}

fn floor_law_checks(rec: &mut Recorder, rng: &mut Rng) -> Result<()> {
    for spec in [ClockSpec::qubit(1.0)?, ClockSpec::oscillator(6, 1.0)?] {
        let t = spec.t_max();
        for _ in 0..8 {
            let s = rng.range(-2.0 * t, 3.0 * t);
            let u = spec.evolve(s);
            let direct = &(&u.adjoint() * &moment(&spec, 1)) * &u;
            let floor = evolved_moment_floor_law(&spec, s);
            rec.record_max("floor-law", &format!("evolved moment d={}", spec.dim()), (&direct - &floor).max_abs(), 1e-8);
        }
    }
    Ok(())
}

fn dirac_checks(rec: &mut Recorder, models: &[Model]) {
    let dim = |i: usize| models[i].ps.dim();
    rec.record_bool("dirac", "commensurate 1:1, Ẽ = 3 has dim 4", dim(0) == 4);
    rec.record_bool("dirac", "incommensurate has dim ≤ 1", dim(2) <= 1);
    rec.record_bool("dirac", "qubit and particle has dim 2", dim(3) == 2);
    for m in models {
        let worst = (0..m.ps.dim()).map(|a| m.cs.constraint_residual(&m.ps.basis_vector(a))).fold(0.0, f64::max);
        rec.record_max("dirac", "physical basis solves the constraint", worst, 1e-9);
    }
}

fn commutator_checks(rec: &mut Recorder, models: &[Model], rng: &mut Rng) -> Result<()> {
    for m in models.iter().take(4) {
        let ds = m.cs.d_s();
        let observables = [
            m.q.clone(),
            m.p.clone(),
            &m.q * &m.q,
            m.cs.system.hamiltonian(),
            rng.hermitian(ds, Basis::System),
        ];
        for f in &observables {
            for tau in [0.0, 1.3] {
                let obs = partial_twirl(&m.cs, tau, f)?;
                let r = residual_of(constraint_commutator_defect(&m.cs, &m.ps, &obs), |d| d.residual);
                rec.record_max("commutator", &format!("commutator formula, {}", m.name), r, 1e-9);
            }
        }
    }
    for (m1, m2) in [(1u32, 1u32), (1, 2), (1, 3), (2, 1), (2, 3), (3, 2)] {
        let m = commensurate_oscillators(m1, m2, 3, 6)?;
        let obs = partial_twirl(&m.cs, 0.4, &m.q)?;
        let class = constraint_commutator_defect(&m.cs, &m.ps, &obs).map(|d| d.class);
        let expect_strong = m2 % m1 == 0;
        let ok = matches!(class, Ok(c) if (c == DiracClass::Strong) == expect_strong);
        rec.record_bool("commutator", &format!("strong Dirac iff m₂/m₁ ∈ ℕ ({m1}:{m2})"), ok);
    }
    Ok(())
}

fn full_twirl_checks(rec: &mut Recorder, rng: &mut Rng) -> Result<()> {
    for (m1, m2, order) in [(1u32, 1u32, 1usize), (2, 1, 2)] {
        let m = commensurate_oscillators(m1, m2, 3, 6)?;
        let ok_order = matches!(m.cs.group, Group::CompactU1 { isotropy_order, .. } if isotropy_order == order);
        rec.record_bool("full-twirl", &format!("|H| = {order} for {m1}:{m2}"), ok_order);
        for f in [m.q.clone(), rng.hermitian(m.cs.d_s(), Basis::System)] {
            let r = residual_of(full_twirl_u1(&m.cs, 0.7, &f), |t| t.partial_residual);
            rec.record_max("full-twirl", &format!("full vs partial twirl, |H| = {order}"), r, 1e-9);
        }
    }
    let line = qubit_particle()?;
    let err = full_twirl_u1(&line.cs, 0.0, &line.q);
    rec.record_bool("full-twirl", "line group is rejected", matches!(err, Err(Error::NoncompactGroup)));
    Ok(())
}

fn transient_checks(rec: &mut Recorder, models: &[Model], rng: &mut Rng) -> Result<()> {
    for m in models {
        let ctx = ReductionContext::new(m.cs.clone(), m.ps.clone(), None)?;
        let t = m.cs.t_max();
        for _ in 0..10 {
            let s = rng.range(-2.0 * t, 3.0 * t);
            let tau = rng.range(-t, 2.0 * t);
            let psi1 = ctx.random_physical(rng);
            let psi2 = rng.state(m.cs.dim(), Basis::kinematical());
            let r = residual_of(transient_flow_element(&m.cs, s, tau, &m.q, &psi1, &psi2), |e| (e.lhs - e.rhs).norm());
            rec.record_max("transient", &format!("flow identity, {}", m.name), r, 1e-8);
        }
    }
    Ok(())
}

fn trinity_checks(rec: &mut Recorder, models: &[Model], rng: &mut Rng) -> Result<()> {
    for m in models {
        let ctx = ReductionContext::new(m.cs.clone(), m.ps.clone(), None)?;
        let obs = vec![m.ps.restrict(&m.q)?, m.ps.restrict(&m.p)?, rng.hermitian(ctx.d_phys(), Basis::System)];
        let report = trinity_report(&ctx, &m.name, &obs, &[0.0, 0.9, 4.1], 20, rng)?;
        for e in report.equalities {
            rec.record("trinity", &format!("{}: {}", m.name, e.name), e.max_residual, e.tol);
        }
    }
    Ok(())
}

fn clock_change_checks(rec: &mut Recorder, rng: &mut Rng) -> Result<()> {
    let ts = canonical_tripartite()?;
    let ds = ts.d_s();
    let id_s = Operator::identity(ds, Basis::System);
    let id_b = Operator::identity(ts.d_b(), Basis::Clock);
    let cases = [
        ("I ⊗ f", kron(&id_b, &Operator::diagonal(&[0.3, 1.0, -2.0, 0.5], Basis::System)), false),
        ("H_B ⊗ I", kron(&ts.b.hamiltonian(), &id_s), false),
        ("φ̂_B ⊗ I", kron(&moment(&ts.b, 1), &id_s), true),
    ];
    for (name, o, dependent) in &cases {
        let v = tau_b_dependence(&ts, 0.4, o);
        let ok = matches!(v, Ok(ref v) if v.dependent == *dependent);
        rec.record_bool("clock-changes", &format!("τ_B verdict for {name}"), ok);
    }
    for _ in 0..5 {
        let psi = ts.random_physical(rng);
        let (ta, tb) = (rng.range(0.0, 20.0), rng.range(0.0, ts.b.t_max()));
        let bs = StateVector::new(ts.reduce_a_matrix(ta) * &psi.amps, Basis::product(&Basis::Clock, &Basis::System));
        let fwd = frame_change(&ts, ta, tb, &bs)?;
        let back = frame_change_back(&ts, ta, tb, &fwd.state)?;
        rec.record_max("clock-changes", "Λ^{B→A} Λ^{A→B} = id", back.max_abs_diff(&bs), 1e-9);
        rec.record_max("clock-changes", "frame change preserves the norm", (fwd.state.norm() - bs.norm()).abs(), 1e-9);
        rec.record_max("clock-changes", "reduced input lies in the image", fwd.image_residual, 1e-9);
    }
    // F_{f,T_A} is strong Dirac for arbitrary f on B ⊗ S.
    let f = rng.hermitian(ts.d_b() * ds, Basis::System);
    let obs = partial_twirl(&ts.cs, 3.0, &f)?;
    let comm = ts.cs.commutator_with_constraint(&obs.matrix);
    let worst = ts.ps.basis.iter().map(|b| comm.mat.column(b.kin_index).norm()).fold(0.0, f64::max);
    rec.record("clock-changes", "F_{f,T_A} annihilates the physical space", worst, 1e-9);
    Ok(())
}

fn unwinding_checks(rec: &mut Recorder, rng: &mut Rng) -> Result<()> {
    let ts = canonical_tripartite()?;
    let t_b = ts.b.t_max();
    for _ in 0..10 {
        let psi1 = ts.random_physical(rng);
        let packet = ts.a_packet(ts.a.t_max() / 2.0 + rng.range(-5.0, 5.0), 7.1);
        let psi2 = kron_state(&packet, &rng.state(ts.d_b() * ts.d_s(), Basis::System));
        let s = rng.range(0.0, 2.0 * t_b);
        let tau = rng.range(-3.0, 3.0);
        let r = residual_of(unwound_flow_element(&ts, s, tau, &psi1, &psi2), |u| (u.lhs - u.rhs).norm());
        rec.record_max("unwinding", "U†F U = F − t_B Z_B(s)", r, 1e-8);
    }
    Ok(())
}

fn classical_checks(rec: &mut Recorder) -> Result<()> {
    let params = OscillatorParams::new(1.3, 0.8)?;
    let phi_max = params.phi_max();
    for (t0, p0) in [(0.7, 0.4), (-0.5, 1.1), (0.2, -0.9)] {
        let phi0 = oscillator_angle(t0, p0, &params).value().unwrap_or(f64::NAN);
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let s = 0.0371 + k as f64 * 3.0 * phi_max / 200.0;
            let (t, p) = oscillator_flow(t0, p0, s, &params);
            let got = oscillator_angle(t, p, &params).value().unwrap_or(f64::NAN);
            let want = angle_flow(phi0, s, phi_max)?.tau_c;
            worst = worst.max((got - want).abs());
        }
        rec.record_max("classical", "oscillator angle follows the floor law", worst, 1e-10);
    }
    let data = figure_data();
    let mut plateaus: Vec<f64> = Vec::new();
    for p in &data {
        if plateaus.last().map_or(true, |v| (v - p.value).abs() > 1e-12) {
            plateaus.push(p.value);
        }
    }
    rec.record_bool("classical", "three plateaus in the figure data", plateaus.len() == 3);
    let jump = plateaus.windows(2).map(|w| (w[1] - w[0] + 0.5 * 2.0 * std::f64::consts::PI).abs()).fold(0.0, f64::max);
    rec.record("classical", "plateau jump −(p/m)·2π", jump, 1e-12);
    Ok(())
}

fn torus_checks(rec: &mut Recorder) -> Result<()> {
    let st = TorusState { t: 0.2, q: 0.35, p_t: 1.0, p: 0.8, m_t: 1.0, m: 1.0 };
    let mut ok = true;
    for k in 0..300 {
        let tau = 0.2 + k as f64 * 0.01;
        let r = torus_relational(tau, &st)?;
        let diff = r.series - r.exact;
        ok &= (diff - r.winding as f64).abs() <= 1e-12 && (0.0..1.0).contains(&r.exact);
        if r.winding == 0 {
            ok &= r.series == r.exact;
        }
    }
    rec.record_bool("torus", "series and exact differ by the winding integer", ok);
    Ok(())
}

/// Renders the traceability matrix.
pub fn traceability_matrix(records: &[CheckRecord]) -> String {
    let mut out = format!("{:<14} | {:<60} | {:>12} | {:>8} | status\n", "lemma", "check", "residual", "tol");
    out.push_str(&"-".repeat(110));
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{:<14} | {:<60} | {:>12.3e} | {:>8.1e} | {}\n",
            r.lemma,
            r.check,
            r.residual,
            r.tol,
            if r.passed { "PASS" } else { "FAIL" }
        ));
    }
    out
}
