mod common;

use common::*;
use num_complex::Complex64 as C64;
use periclock::hilbert_core::{Basis, Operator, StateVector, Vector};
use periclock::models::*;
use periclock::relational_observables::partial_twirl;
use periclock::rng::Rng;
use periclock::trinity::*;
use periclock::Error;
use proptest::prelude::*;

fn contexts() -> Vec<(String, ReductionContext)> {
    [
        commensurate_oscillators(1, 1, 3, 8).unwrap(),
        commensurate_oscillators(2, 1, 3, 8).unwrap(),
        incommensurate_oscillators(6).unwrap(),
        qubit_particle().unwrap(),
        oscillator_particle(4).unwrap(),
    ]
    .into_iter()
    .map(|m| (m.name.clone(), ReductionContext::new(m.cs, m.ps, None).unwrap()))
    .collect()
}

/// `(⟨τ| ⊗ I)ψ` from the clock amplitudes, on the physical system levels.
fn reduce_oracle(ctx: &ReductionContext, tau: f64, psi: &StateVector) -> Vec<C64> {
    let ds = ctx.cs.d_s();
    ctx.ps
        .system_indices()
        .into_iter()
        .map(|k| (0..ctx.cs.d_c()).map(|j| clock_amp(&ctx.cs.clock, j, tau).conj() * psi.amps[idx(ds, j, k)]).sum())
        .collect()
}

#[test]
fn reduction_matches_contraction() {
    let mut rng = Rng::new(1);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        for tau in [0.0, 0.9, -3.3] {
            let got = pw_reduce(&ctx, tau, &psi).unwrap();
            let oracle = reduce_oracle(&ctx, tau, &psi);
            for (a, b) in got.amps.iter().zip(&oracle) {
                assert!((a - b).norm() <= 1e-12, "{name}");
            }
            assert!((got.norm() - psi.norm()).abs() <= 1e-12);
        }
    }
}

#[test]
fn inverse_matches_quadrature() {
    let mut rng = Rng::new(2);
    for (name, ctx) in contexts() {
        let psi_s = rng.state(ctx.d_phys(), Basis::System);
        let tau = 0.7;
        let got = pw_inverse(&ctx, tau, &psi_s).unwrap();
        let t = ctx.cs.t_max();
        let ds = ctx.cs.d_s();
        for (a, b) in ctx.ps.basis.iter().enumerate() {
            let j_phys = b.clock_index;
            for j in 0..ctx.cs.d_c() {
                let oracle = quad_c(|phi| clock_amp(&ctx.cs.clock, j, phi) * cis(-b.energy * (phi - tau)), 0.0, t) / t * psi_s.amps[a];
                let entry = got.amps[idx(ds, j, b.system_index)];
                assert!((entry - oracle).norm() <= 1e-10, "{name}");
                if j != j_phys {
                    assert!(entry.norm() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn reduction_round_trips() {
    let mut rng = Rng::new(3);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        for tau in [0.0, 2.2, 11.0] {
            let back = pw_inverse(&ctx, tau, &pw_reduce(&ctx, tau, &psi).unwrap()).unwrap();
            assert!(back.max_abs_diff(&psi) <= 1e-10, "{name}");
        }
    }
}

#[test]
fn schrodinger_evolution_of_reduced_states() {
    let mut rng = Rng::new(4);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        let (t0, t1) = (0.4, 3.9);
        let a = pw_reduce(&ctx, t0, &psi).unwrap();
        let b = pw_reduce(&ctx, t1, &psi).unwrap();
        let moved = ctx.ps.evolve_system(t1 - t0).apply(&a).unwrap();
        assert!(moved.max_abs_diff(&b) <= 1e-10, "{name}");
    }
}

#[test]
fn relational_expectations_equal_reduced_expectations() {
    let mut rng = Rng::new(5);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        let f = rng.hermitian(ctx.d_phys(), Basis::System);
        for tau in [0.0, 1.7, -5.0] {
            let big = partial_twirl(&ctx.cs, tau, &ctx.ps.extend(&f).unwrap()).unwrap();
            let lhs = big.matrix.sandwich(&psi, &psi);
            let r = pw_reduce(&ctx, tau, &psi).unwrap();
            let rhs = f.sandwich(&r, &r);
            assert!((lhs - rhs).norm() <= 1e-10, "{name} τ={tau}");
            // Heisenberg picture on the trivialised state.
            let h = heisenberg_reduce(&ctx, &psi).unwrap();
            let heis = heisenberg_observable(&ctx, tau, &f).sandwich(&h, &h);
            assert!((heis - rhs).norm() <= 1e-10, "{name} τ={tau}");
        }
    }
}

#[test]
fn trivialisation_factorises() {
    let mut rng = Rng::new(6);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        let tr = trivialize(&ctx, &psi).unwrap();
        assert!(tr.schmidt_ratio <= 1e-9 && tr.residual <= 1e-9, "{name}");
        assert_eq!(tr.clock_factor.amps.iter().filter(|a| a.norm() > 0.0).count(), 1);
        let back = trivialize_inverse(&ctx, &trivialization_matrix(&ctx).apply(&psi).unwrap()).unwrap();
        assert!(back.max_abs_diff(&psi) <= 1e-10);
        let h = heisenberg_reduce(&ctx, &psi).unwrap();
        assert!(heisenberg_inverse(&ctx, &h).unwrap().max_abs_diff(&psi) <= 1e-10);
    }
}

#[test]
fn trivialised_constraint_on_interior_levels() {
    let mut rng = Rng::new(7);
    for (name, ctx) in contexts() {
        let levels = trivializable_levels(&ctx);
        assert!(levels.contains(&ctx.star_index), "{name}");
        let psi_s = rng.state(ctx.d_phys(), Basis::System);
        for j in levels {
            let chi = StateVector::basis_vector(ctx.cs.d_c(), j, Basis::Clock);
            assert!(trivialized_constraint_residual(&ctx, &chi, &psi_s).unwrap() <= 1e-9, "{name} j={j}");
        }
    }
}

#[test]
fn trinity_reports_pass() {
    let mut rng = Rng::new(8);
    for (name, ctx) in contexts() {
        let obs = vec![rng.hermitian(ctx.d_phys(), Basis::System), Operator::identity(ctx.d_phys(), Basis::System)];
        let report = trinity_report(&ctx, &name, &obs, &[0.0, 0.9, 4.1], 10, &mut rng).unwrap();
        assert!(!report.equalities.is_empty());
        for e in &report.equalities {
            assert!(e.passed(), "{name}: {} = {:e} > {:e}", e.name, e.max_residual, e.tol);
        }
        assert!(!report.conditional_probability_tables.is_empty());
    }
}

#[test]
fn identity_outcome_has_unit_probability() {
    let mut rng = Rng::new(9);
    for (name, ctx) in contexts() {
        let psi = ctx.random_physical(&mut rng);
        let id = Operator::identity(ctx.d_phys(), Basis::System);
        let r = conditional_probability(&ctx, 0.3, &id, "I", &psi, ProbabilityMode::Physical, None).unwrap();
        assert!((r.value.unwrap() - 1.0).abs() <= 1e-12, "{name}");
    }
}

#[test]
fn naive_probability_on_the_line_scales_with_cutoff() {
    let mut rng = Rng::new(10);
    let m = qubit_particle().unwrap();
    let ctx = ReductionContext::new(m.cs, m.ps, None).unwrap();
    let psi = ctx.random_physical(&mut rng);
    let mut proj = Operator::zeros(ctx.d_phys(), Basis::System);
    proj.mat[(0, 0)] = C64::new(1.0, 0.0);
    let phys = conditional_probability(&ctx, 0.5, &proj, "level 0", &psi, ProbabilityMode::Physical, None).unwrap();
    let naive = conditional_probability(&ctx, 0.5, &proj, "level 0", &psi, ProbabilityMode::Naive, Some(&NAIVE_CUTOFFS)).unwrap();
    assert!(naive.value.is_none());
    let first = &naive.table[0];
    let last = naive.table.last().unwrap();
    assert_eq!((first.z, last.z), (1, 25));
    let ratio = last.denominator / first.denominator;
    assert!((ratio - 51.0 / 3.0).abs() <= 0.01 * 51.0 / 3.0, "{ratio}");
    for row in &naive.table {
        assert!((row.ratio - phys.value.unwrap()).abs() <= 1e-9);
    }
    let missing = conditional_probability(&ctx, 0.5, &proj, "level 0", &psi, ProbabilityMode::Naive, None);
    assert!(matches!(missing, Err(Error::MissingCutoff)));
}

#[test]
fn naive_equals_physical_for_compact_groups() {
    let mut rng = Rng::new(11);
    let m = commensurate_oscillators(1, 1, 3, 8).unwrap();
    let ctx = ReductionContext::new(m.cs, m.ps, None).unwrap();
    let psi = ctx.random_physical(&mut rng);
    let mut proj = Operator::zeros(ctx.d_phys(), Basis::System);
    proj.mat[(1, 1)] = C64::new(1.0, 0.0);
    let a = conditional_probability(&ctx, 1.1, &proj, "x", &psi, ProbabilityMode::Physical, None).unwrap();
    let b = conditional_probability(&ctx, 1.1, &proj, "x", &psi, ProbabilityMode::Naive, None).unwrap();
    assert!((a.value.unwrap() - b.value.unwrap()).abs() <= 1e-9);
}

#[test]
fn non_projector_outcome_rejected() {
    let mut rng = Rng::new(12);
    let m = commensurate_oscillators(1, 1, 3, 8).unwrap();
    let ctx = ReductionContext::new(m.cs, m.ps, None).unwrap();
    let psi = ctx.random_physical(&mut rng);
    let half = Operator::identity(ctx.d_phys(), Basis::System).scale(C64::new(0.5, 0.0));
    assert!(matches!(
        conditional_probability(&ctx, 0.0, &half, "½", &psi, ProbabilityMode::Physical, None),
        Err(Error::NotProjector(_))
    ));
}

#[test]
fn inputs_must_be_physical() {
    let m = qubit_particle().unwrap();
    let ctx = ReductionContext::new(m.cs, m.ps, None).unwrap();
    let mut rng = Rng::new(13);
    let psi = rng.state(ctx.cs.dim(), Basis::kinematical());
    assert!(matches!(pw_reduce(&ctx, 0.0, &psi), Err(Error::NotPhysical(_))));
    assert!(matches!(pw_inverse(&ctx, 0.0, &StateVector::zeros(5, Basis::System)), Err(Error::DimensionMismatch(2, 5))));
    assert!(matches!(
        ReductionContext::new(ctx.cs.clone(), ctx.ps.clone(), Some(0.123)),
        Err(Error::InvalidEpsilonStar(_))
    ));
}

proptest! {
    #[test]
    fn reduction_preserves_inner_products(seed in any::<u64>(), tau in -20.0f64..20.0) {
        let m = oscillator_particle(4).unwrap();
        let ctx = ReductionContext::new(m.cs, m.ps, None).unwrap();
        let mut rng = Rng::new(seed);
        let a = ctx.random_physical(&mut rng);
        let b = ctx.random_physical(&mut rng);
        let ra = pw_reduce(&ctx, tau, &a).unwrap();
        let rb = pw_reduce(&ctx, tau, &b).unwrap();
        prop_assert!((ra.inner(&rb) - a.inner(&b)).norm() <= 1e-12);
        let v: Vector = ra.amps.clone();
        prop_assert_eq!(v.len(), ctx.d_phys());
    }
}
