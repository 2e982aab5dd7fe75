//! Test-side oracles: adaptive quadrature and brute-force loops that share no
//! code with the closed forms in the library.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use periclock::clock_povm::ClockSpec;
use periclock::dirac_quantization::ConstraintSystem;
use periclock::hilbert_core::{Basis, Mat, Operator, StateVector};

pub const PANELS: usize = 32;

/// `∫_a^b f` by double-exponential quadrature on equal panels.
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            quadrature::double_exponential::integrate(&f, lo, lo + h, 1e-14).integral
        })
        .sum()
}

/// Complex version of [`quad`].
pub fn quad_c(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    C64::new(quad(|x| f(x).re, a, b), quad(|x| f(x).im, a, b))
}

pub fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// Clock energies recomputed from the definition.
pub fn clock_energies(spec: &ClockSpec) -> Vec<f64> {
    spec.n_set.iter().map(|&n| spec.omega_t * (n as f64 + spec.varphi / (2.0 * std::f64::consts::PI))).collect()
}

/// `⟨j|φ⟩ = e^{i g_j} e^{−i ε_j φ}` from the definition.
pub fn clock_amp(spec: &ClockSpec, j: usize, phi: f64) -> C64 {
    let e = spec.omega_t * (spec.n_set[j] as f64 + spec.varphi / (2.0 * std::f64::consts::PI));
    cis(spec.g[j] - e * phi)
}

/// `(1/t) ∫_a^b |φ⟩⟨φ|` by quadrature, entry by entry.
pub fn effect_by_quadrature(spec: &ClockSpec, a: f64, b: f64) -> Mat {
    let d = spec.dim();
    let t = 2.0 * std::f64::consts::PI / spec.omega_t;
    Mat::from_fn(d, d, |j, l| quad_c(|phi| clock_amp(spec, j, phi) * clock_amp(spec, l, phi).conj(), a, b) / t)
}

/// `(1/t) ∫₀^t φⁿ |φ⟩⟨φ|` by quadrature.
pub fn moment_by_quadrature(spec: &ClockSpec, n: i32) -> Mat {
    let d = spec.dim();
    let t = 2.0 * std::f64::consts::PI / spec.omega_t;
    Mat::from_fn(d, d, |j, l| {
        quad_c(|phi| clock_amp(spec, j, phi) * clock_amp(spec, l, phi).conj() * phi.powi(n), 0.0, t) / t
    })
}

/// Element-by-element Kronecker product.
pub fn kron_loops(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Mat::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Matrix product by explicit loops.
pub fn matmul_loops(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = a.shape();
    let p = b.ncols();
    Mat::from_fn(n, p, |i, j| (0..m).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Partial twirl `(1/t) ∫₀^t |φ⟩⟨φ| ⊗ f(τ − φ) dφ` with `f(t) = e^{itH} f e^{−itH}`,
/// entry by entry by quadrature.
pub fn twirl_by_quadrature(cs: &ConstraintSystem, tau: f64, f: &Operator) -> Mat {
    let spec = &cs.clock;
    let es = &cs.system.energies;
    let (dc, ds) = (spec.dim(), es.len());
    let t = 2.0 * std::f64::consts::PI / spec.omega_t;
    let n = dc * ds;
    Mat::from_fn(n, n, |r, c| {
        let (j, k) = (r / ds, r % ds);
        let (l, m) = (c / ds, c % ds);
        let fkm = f.mat[(k, m)];
        if fkm.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        quad_c(
            |phi| clock_amp(spec, j, phi) * clock_amp(spec, l, phi).conj() * fkm * cis((es[k] - es[m]) * (tau - phi)),
            0.0,
            t,
        ) / t
    })
}

/// Product index of `(j, k)` recomputed locally.
pub fn idx(ds: usize, j: usize, k: usize) -> usize {
    j * ds + k
}

pub fn kin_state(amps: Vec<C64>) -> StateVector {
    StateVector::new(periclock::hilbert_core::Vector::from_vec(amps), Basis::kinematical())
}
