//! Runs one scenario config and collects every identity as a check record.

use periclock::clock_povm::make_clock;
use periclock::dirac_quantization::{build_constraint, solve_constraint, ConstraintSystem, Group, PhysicalSpace, SystemSpec};
use periclock::models::{commensurate_oscillators, incommensurate_oscillators, oscillator_particle, qubit_particle};
use periclock::relational_observables::{constraint_commutator_defect, full_twirl_u1, partial_twirl, transient_flow_element};
use periclock::rng::Rng;
use periclock::trinity::{
    conditional_probability, trinity_report, ConditionalProbabilityReport, ProbabilityMode, ReductionContext,
};
use periclock::verify::{residual_of, CheckRecord, Recorder};
use periclock::{Basis, Operator, Result};
use serde::Serialize;

use crate::config::{ScenarioConfig, SystemConfig};

#[derive(Clone, Debug, Serialize)]
pub struct BasisRow {
    pub epsilon: f64,
    pub energy: f64,
    pub sigma: i32,
    pub index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub schema_version: u32,
    pub seed: u64,
    pub kinematical_dim: usize,
    pub physical_dim: usize,
    pub group: Group,
    pub physical_basis: Vec<BasisRow>,
    pub checks: Vec<CheckRecord>,
    pub conditional_probabilities: Vec<ConditionalProbabilityReport>,
    pub passed: bool,
}

/// Constraint, physical space and the system observables to test.
pub struct Setup {
    pub cs: ConstraintSystem,
    pub ps: PhysicalSpace,
    pub observables: Vec<Operator>,
}

pub fn build(system: &SystemConfig, rng: &mut Rng) -> Result<Setup> {
    let model = match system {
        SystemConfig::CommensurateOscillators { m1, m2, e_tilde, levels } => commensurate_oscillators(*m1, *m2, *e_tilde, *levels)?,
        SystemConfig::IncommensurateOscillators { levels } => incommensurate_oscillators(*levels)?,
        SystemConfig::QubitParticle {} => qubit_particle()?,
        SystemConfig::OscillatorParticle { levels } => oscillator_particle(*levels)?,
        SystemConfig::Custom { clock, system } => {
            let c = make_clock(&clock.n_set, clock.omega_t, clock.varphi, clock.g.clone())?;
            let s = SystemSpec::new(system.energies.clone(), system.labels.clone())?;
            let cs = build_constraint(c, s)?;
            let ps = solve_constraint(&cs, cs.tol_energy)?;
            let observables = vec![cs.system.hamiltonian(), rng.hermitian(cs.d_s(), Basis::System)];
            return Ok(Setup { cs, ps, observables });
        }
    };
    let observables = vec![model.q.clone(), model.p.clone(), model.cs.system.hamiltonian()];
    Ok(Setup { cs: model.cs, ps: model.ps, observables })
}

pub fn run(cfg: &ScenarioConfig, tol_override: Option<f64>) -> Result<ScenarioReport> {
    let mut rng = Rng::new(cfg.seed);
    let Setup { cs, ps, observables } = build(&cfg.system, &mut rng)?;
    let mut rec = Recorder::new(tol_override.or(cfg.tolerance));

    for (a, b) in ps.basis.iter().enumerate() {
        rec.record_max("dirac", "physical basis annihilated by the constraint", cs.constraint_residual(&ps.basis_vector(a)), 1e-12);
        rec.record_max("dirac", "clock and system energies cancel", (b.epsilon + b.energy).abs(), cs.tol_energy);
    }

    for f in &observables {
        for &tau in &cfg.tau_grid {
            let r = partial_twirl(&cs, tau, f).and_then(|obs| constraint_commutator_defect(&cs, &ps, &obs));
            rec.record_max("commutator", "constraint commutator equals predicted defect", residual_of(r, |d| d.residual), 1e-9);
        }
    }

    if let Group::CompactU1 { .. } = cs.group {
        for f in &observables {
            for &tau in &cfg.tau_grid {
                let r = full_twirl_u1(&cs, tau, f);
                rec.record_max("full-twirl", "full twirl equals scaled partial twirl", residual_of(r, |t| t.partial_residual), 1e-9);
            }
        }
    }

    let mut conditional = Vec::new();
    if !ps.is_empty() {
        let tau0 = cfg.tau_grid.first().copied().unwrap_or(0.0);
        for &s in &cfg.s_grid {
            let psi1 = ps.embed(&rng.vector(ps.dim()))?;
            let psi2 = rng.state(cs.dim(), Basis::kinematical());
            for f in &observables {
                let r = transient_flow_element(&cs, s, tau0, f, &psi1, &psi2);
                rec.record_max("transient", "flowed observable equals floor-split integral", residual_of(r, |e| (e.lhs - e.rhs).norm()), 1e-8);
            }
        }

        let ctx = ReductionContext::new(cs.clone(), ps.clone(), None)?;
        let phys_obs = vec![rng.hermitian(ctx.d_phys(), Basis::System), Operator::identity(ctx.d_phys(), Basis::System)];
        let report = trinity_report(&ctx, &cfg.name, &phys_obs, &cfg.tau_grid, cfg.n_states, &mut rng)?;
        for e in &report.equalities {
            rec.record("trinity", &e.name, e.max_residual, e.tol);
        }

        let psi = ctx.random_physical(&mut rng);
        let mut proj = Operator::zeros(ctx.d_phys(), Basis::System);
        proj.mat[(0, 0)] = periclock::C64::new(1.0, 0.0);
        let cutoffs = (!cfg.cutoffs.is_empty()).then_some(cfg.cutoffs.as_slice());
        for &tau in &cfg.tau_grid {
            let phys = conditional_probability(&ctx, tau, &proj, "level 0", &psi, ProbabilityMode::Physical, None)?;
            let naive = conditional_probability(&ctx, tau, &proj, "level 0", &psi, ProbabilityMode::Naive, cutoffs)?;
            let p = phys.value.unwrap_or(f64::NAN);
            let gap = match naive.value {
                Some(v) => (v - p).abs(),
                None => naive.table.iter().map(|row| (row.ratio - p).abs()).fold(0.0, f64::max),
            };
            rec.record_max("conditional", "naive ratio equals physical probability", gap, 1e-9);
            conditional.push(phys);
            conditional.push(naive);
        }
    }

    let passed = rec.records.iter().all(|r| r.passed);
    Ok(ScenarioReport {
        name: cfg.name.clone(),
        schema_version: cfg.schema_version,
        seed: cfg.seed,
        kinematical_dim: cs.dim(),
        physical_dim: ps.dim(),
        group: cs.group,
        physical_basis: ps
            .basis
            .iter()
            .map(|b| BasisRow { epsilon: b.epsilon, energy: b.energy, sigma: b.sigma, index: b.kin_index })
            .collect(),
        checks: rec.records,
        conditional_probabilities: conditional,
        passed,
    })
}
