mod common;

use std::f64::consts::{PI, SQRT_2};

use common::*;
use num_complex::Complex64 as C64;
use periclock::clock_povm::ClockSpec;
use periclock::dirac_quantization::*;
use periclock::hilbert_core::{Mat, Operator, StateVector, Vector};
use periclock::models::*;
use periclock::rng::Rng;
use periclock::Error;
use proptest::prelude::*;

fn all_models() -> Vec<Model> {
    vec![
        commensurate_oscillators(1, 1, 3, 8).unwrap(),
        commensurate_oscillators(2, 1, 3, 8).unwrap(),
        incommensurate_oscillators(6).unwrap(),
        qubit_particle().unwrap(),
        oscillator_particle(4).unwrap(),
    ]
}

/// Physical pairs by brute force over every clock and system level.
fn enumerate_solutions(cs: &ConstraintSystem, tol: f64) -> Vec<(usize, usize)> {
    let ec = clock_energies(&cs.clock);
    let mut out = Vec::new();
    for (j, e) in ec.iter().enumerate() {
        for (k, es) in cs.system.energies.iter().enumerate() {
            if (e + es).abs() <= tol {
                out.push((j, k));
            }
        }
    }
    out
}

#[test]
fn physical_dimensions() {
    let dims: Vec<usize> = all_models().iter().map(|m| m.ps.dim()).collect();
    // n₁ + n₂ = 3; 2n₁ + n₂ = 3; n₁ + √2 n₂ = √2; ε = ±½ against p = ±1; ε = n + ½ against 2n + 1.
    assert_eq!(dims, vec![4, 2, 1, 2, 8]);
}

#[test]
fn physical_basis_matches_enumeration() {
    for m in all_models() {
        let brute = enumerate_solutions(&m.cs, m.cs.tol_energy);
        let got: Vec<(usize, usize)> = m.ps.basis.iter().map(|b| (b.clock_index, b.system_index)).collect();
        assert_eq!(got, brute, "{}", m.name);
        for (a, b) in m.ps.basis.iter().enumerate() {
            assert_eq!(b.kin_index, idx(m.cs.d_s(), b.clock_index, b.system_index));
            assert!(m.cs.constraint_residual(&m.ps.basis_vector(a)) <= 1e-12);
            assert!((b.epsilon + b.energy).abs() <= m.cs.tol_energy);
        }
    }
}

#[test]
fn group_classification() {
    let g: Vec<Group> = all_models().iter().map(|m| m.cs.group).collect();
    assert!(matches!(g[0], Group::CompactU1 { isotropy_order: 1, t_tilde } if (t_tilde - 2.0 * PI).abs() <= 1e-12));
    assert!(matches!(g[1], Group::CompactU1 { isotropy_order: 2, t_tilde } if (t_tilde - 4.0 * PI).abs() <= 1e-12));
    assert_eq!(g[2], Group::Line);
    assert_eq!(g[3], Group::Line);
    assert_eq!(g[4], Group::Line);
}

#[test]
fn spectrum_case() {
    let m = all_models();
    assert_eq!(m[0].ps.case, SpectrumCase::A);
    assert_eq!(m[3].ps.case, SpectrumCase::BRegularized);
}

#[test]
fn group_average_matches_quadrature_and_projector() {
    for m in all_models().into_iter().take(2) {
        let Group::CompactU1 { t_tilde, .. } = m.cs.group else { unreachable!() };
        let diag = m.cs.group_average_diagonal().unwrap();
        let phys: Vec<usize> = m.ps.basis.iter().map(|b| b.kin_index).collect();
        for (r, &lam) in m.cs.c_h.iter().enumerate() {
            let oracle = quad_c(|s| cis(-lam * s), 0.0, t_tilde) / t_tilde;
            assert!((C64::new(diag[r], 0.0) - oracle).norm() <= 1e-10);
            let indicator = if phys.contains(&r) { 1.0 } else { 0.0 };
            assert!((diag[r] - indicator).abs() <= 1e-12);
        }
    }
}

#[test]
fn group_average_rejects_line() {
    let m = incommensurate_oscillators(6).unwrap();
    assert_eq!(m.cs.group_average_diagonal(), Err(Error::NoncompactGroup));
}

#[test]
fn constraint_evolution_periodic_for_compact_group() {
    for m in all_models().into_iter().take(2) {
        let Group::CompactU1 { t_tilde, .. } = m.cs.group else { unreachable!() };
        let u = m.cs.evolve(t_tilde);
        let n = m.cs.dim();
        let first = u.mat[(0, 0)];
        assert!(max_diff(&u.mat, &(Mat::identity(n, n) * first)) <= 1e-10);
    }
}

#[test]
fn embed_project_round_trip() {
    let mut rng = Rng::new(3);
    for m in all_models() {
        let c = rng.vector(m.ps.dim());
        let psi = m.ps.embed(&c).unwrap();
        assert!(m.cs.constraint_residual(&psi) <= 1e-12);
        assert_eq!(m.ps.project(&psi).unwrap(), c);
        let inner = physical_inner(&m.ps, &c, &c).unwrap();
        assert!((inner - psi.inner(&psi)).norm() <= 1e-12);
    }
    let m = qubit_particle().unwrap();
    assert!(matches!(m.ps.embed(&Vector::zeros(5)), Err(Error::DimensionMismatch(2, 5))));
}

#[test]
fn physicalize_equals_projector_sandwich() {
    for m in all_models() {
        for f in [&m.q, &m.p] {
            let got = physicalize_observable(&m.ps, &m.cs, f).unwrap();
            let idx = m.ps.system_indices();
            let d = idx.len();
            let direct = Mat::from_fn(d, d, |a, b| f.mat[(idx[a], idx[b])]);
            assert!(max_diff(&got.mat, &direct) <= 1e-15);
            // The extension back is Π f Π.
            let pi = m.ps.system_projector();
            let sandwich = &(&pi * f) * &pi;
            assert!(max_diff(&m.ps.extend(&got).unwrap().mat, &sandwich.mat) <= 1e-15);
        }
    }
}

#[test]
fn weak_periodicity_of_observables() {
    for m in all_models() {
        // The momentum commutes with H_S.
        let p = physicalize_observable(&m.ps, &m.cs, &m.p).unwrap();
        assert!(weak_periodicity_check(&m.ps, &m.cs, &p).unwrap() <= 1e-10, "{}", m.name);
        let q = physicalize_observable(&m.ps, &m.cs, &m.q).unwrap();
        assert!(weak_periodicity_check(&m.ps, &m.cs, &q).unwrap() <= 1e-10, "{}", m.name);
    }
    // On the full system space the position is not periodic.
    let m = oscillator_particle(4).unwrap();
    assert!(weak_periodicity_check(&m.ps, &m.cs, &m.q).unwrap() > 1e-2);
}

#[test]
fn physical_system_evolution_is_a_phase() {
    for m in all_models() {
        for z in 1..=3 {
            assert!(physical_periodicity_defect(&m.ps, &m.cs, z) <= 1e-10, "{} z={z}", m.name);
            let u = m.ps.evolve_system(z as f64 * m.cs.t_max());
            let d = m.ps.dim();
            let expected = Mat::identity(d, d) * cis(z as f64 * m.cs.clock.varphi);
            assert!(max_diff(&u.mat, &expected) <= 1e-10);
        }
    }
}

#[test]
fn incommensurate_solution_is_first_excited_system_level() {
    let m = incommensurate_oscillators(6).unwrap();
    let b = &m.ps.basis[0];
    assert_eq!((b.clock_index, b.system_index), (0, 1));
    assert!((b.energy - (1.5 * SQRT_2 - 0.5 - 1.5 * SQRT_2)).abs() <= 1e-12);
}

#[test]
fn combine_is_additive() {
    let a = SystemSpec::new(vec![0.0, 1.0], vec![0, 1]).unwrap();
    let b = SystemSpec::particle_grid(&[1.0, -2.0], 1.0, 1.0).unwrap();
    let c = SystemSpec::combine(&a, &b).unwrap();
    assert_eq!(c.energies, vec![0.5, 2.0, 1.5, 3.0]);
}

#[test]
fn guard_and_validation() {
    let c = ClockSpec::oscillator(10, 1.0).unwrap();
    let s = SystemSpec::oscillator(10, 1.0, 0.0).unwrap();
    assert!(matches!(build_constraint_with_guard(c, s, 50), Err(Error::DimensionOverflow { dim: 100, guard: 50 })));
    assert!(SystemSpec::particle_grid(&[1.0], 0.0, 1.0).is_err());
    assert!(SystemSpec::new(vec![1.0], vec![0, 1]).is_err());
    let m = qubit_particle().unwrap();
    assert!(solve_constraint(&m.cs, 0.0).is_err());
}

#[test]
fn empty_physical_space() {
    let cs = build_constraint(ClockSpec::qubit(1.0).unwrap(), SystemSpec::oscillator(3, 1.0, -0.2).unwrap()).unwrap();
    let ps = solve_constraint(&cs, cs.tol_energy).unwrap();
    assert!(ps.is_empty());
}

proptest! {
    #[test]
    fn constraint_evolution_preserves_physical_states(seed in any::<u64>(), s in -50.0f64..50.0) {
        let m = oscillator_particle(4).unwrap();
        let mut rng = Rng::new(seed);
        let psi = m.ps.embed(&rng.vector(m.ps.dim())).unwrap();
        let moved: StateVector = m.cs.apply_evolution(s, &psi);
        prop_assert!(moved.max_abs_diff(&psi) <= 1e-12);
    }

    #[test]
    fn physicalize_is_hermitian(seed in any::<u64>()) {
        let m = commensurate_oscillators(1, 1, 3, 8).unwrap();
        let mut rng = Rng::new(seed);
        let f: Operator = rng.hermitian(m.cs.d_s(), periclock::hilbert_core::Basis::System);
        let g = physicalize_observable(&m.ps, &m.cs, &f).unwrap();
        prop_assert!(g.is_hermitian(1e-12));
    }
}
