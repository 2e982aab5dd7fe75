//! Closed-form classical flows, angle variables and relational observables.
//!
//! Brackets are supplied analytically: callers pass iterated brackets `{f, H_S}_k`
//! evaluated at a phase-space point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the classical transient-invariance equalities.
pub const CLASSICAL_TOL: f64 = 1e-10;
/// Samples per clock cycle in the figure data.
pub const FIGURE_STEPS_PER_CYCLE: usize = 200;
/// Clock cycles covered by the figure data.
pub const FIGURE_CYCLES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub mass: f64,
    pub omega: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, omega: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter { name: "mass", reason: format!("{mass} is not positive") });
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("{omega} is not positive") });
        }
        Ok(OscillatorParams { mass, omega })
    }

    pub fn phi_max(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// `p²/2m + mω²t²/2`.
    pub fn energy(&self, t: f64, p: f64) -> f64 {
        p * p / (2.0 * self.mass) + 0.5 * self.mass * self.omega * self.omega * t * t
    }
}

/// One canonical pair with a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constituent {
    pub label: String,
    pub q: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub constituents: Vec<Constituent>,
}

impl ClassicalState {
    pub fn new(pairs: &[(&str, f64, f64)]) -> Self {
        ClassicalState {
            constituents: pairs.iter().map(|&(l, q, p)| Constituent { label: l.to_string(), q, p }).collect(),
        }
    }

    pub fn get(&self, label: &str) -> Result<&Constituent> {
        self.constituents.iter().find(|c| c.label == label).ok_or_else(|| Error::InvalidParameter {
            name: "state",
            reason: format!("no constituent labelled {label}"),
        })
    }

    /// Fails unless `|constraint(state)| ≤ tol`.
    pub fn check_on_shell(&self, constraint: impl Fn(&ClassicalState) -> f64, tol: f64) -> Result<()> {
        let c = constraint(self);
        if c.abs() > tol {
            return Err(Error::InvalidParameter { name: "state", reason: format!("constraint {c:e} off shell") });
        }
        Ok(())
    }
}

/// Angle reading, tagged undefined at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AngleValue {
    Defined(f64),
    Undefined,
}

impl AngleValue {
    pub fn value(self) -> Option<f64> {
        match self {
            AngleValue::Defined(v) => Some(v),
            AngleValue::Undefined => None,
        }
    }
}

/// `(1/ω) atan(−p_t/(m ω t)) + π/ω − (π/2ω) sgn t`.
pub fn oscillator_angle(t: f64, p_t: f64, params: &OscillatorParams) -> AngleValue {
    if t == 0.0 {
        return AngleValue::Undefined;
    }
    let w = params.omega;
    let varphi = (-p_t / (params.mass * w * t)).atan() / w;
    AngleValue::Defined(varphi + PI / w - PI / (2.0 * w) * t.signum())
}

/// Phase-space flow of the oscillator by parameter time `s`.
pub fn oscillator_flow(t: f64, p_t: f64, s: f64, params: &OscillatorParams) -> (f64, f64) {
    let (m, w) = (params.mass, params.omega);
    let (sn, cs) = (w * s).sin_cos();
    (t * cs + p_t / (m * w) * sn, p_t * cs - m * w * t * sn)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingDecomposition {
    pub tau_c: f64,
    pub n: i64,
    pub phi_max: f64,
}

impl WindingDecomposition {
    /// `τ_C + n φ_max`.
    pub fn unwrapped(&self) -> f64 {
        self.tau_c + self.n as f64 * self.phi_max
    }
}

/// Split `x` into `τ_C ∈ [0, φ_max)` and `n = ⌊x/φ_max⌋`.
pub fn wind(x: f64, phi_max: f64) -> Result<WindingDecomposition> {
    if !(phi_max > 0.0) {
        return Err(Error::NonPositivePeriod(phi_max));
    }
    let mut n = (x / phi_max).floor();
    let mut tau_c = x - n * phi_max;
    if tau_c >= phi_max {
        tau_c -= phi_max;
        n += 1.0;
    } else if tau_c < 0.0 {
        tau_c += phi_max;
        n -= 1.0;
    }
    if tau_c >= phi_max {
        tau_c = 0.0;
        n += 1.0;
    }
    Ok(WindingDecomposition { tau_c, n: n as i64, phi_max })
}

/// `φ_C(s) = (s + φ0) mod φ_max` with its winding number.
pub fn angle_flow(phi0: f64, s: f64, phi_max: f64) -> Result<WindingDecomposition> {
    if !(phi_max > 0.0) {
        return Err(Error::NonPositivePeriod(phi_max));
    }
    if !(0.0..phi_max).contains(&phi0) {
        return Err(Error::InvalidParameter { name: "phi0", reason: format!("{phi0} outside [0, {phi_max})") });
    }
    wind(s + phi0, phi_max)
}

/// `Σ_{k ≤ order} (τ − φ_C)^k/k! · tower[k]`.
pub fn relational_series(tower: &[f64], tau: f64, phi_c: f64, order: i64) -> Result<f64> {
    if order < 0 {
        return Err(Error::InvalidParameter { name: "order", reason: format!("{order} is negative") });
    }
    let order = order as usize;
    if tower.len() <= order {
        return Err(Error::InvalidParameter {
            name: "bracket_tower",
            reason: format!("{} terms supplied, order {order} requested", tower.len()),
        });
    }
    let x = tau - phi_c;
    let mut term = 1.0;
    let mut sum = 0.0;
    for (k, b) in tower.iter().take(order + 1).enumerate() {
        if k > 0 {
            term *= x / k as f64;
        }
        sum += term * b;
    }
    Ok(sum)
}

/// Iterated brackets of `q` with `p²/2m + mω²q²/2`, up to `order`.
pub fn oscillator_q_tower(q: f64, p: f64, mass: f64, omega: f64, order: usize) -> Vec<f64> {
    let w2 = -omega * omega;
    (0..=order)
        .map(|k| if k % 2 == 0 { w2.powi((k / 2) as i32) * q } else { w2.powi((k / 2) as i32) * p / mass })
        .collect()
}

/// Iterated brackets of `q` with `sign·p²/2m`: `(q, sign·p/m, 0, …)`.
pub fn free_particle_q_tower(q: f64, p: f64, mass: f64, sign: f64, order: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| match k {
            0 => q,
            1 => sign * p / mass,
            _ => 0.0,
        })
        .collect()
}

/// `F_q` and `F_p` of a system oscillator read against an angle `φ_C`.
pub fn oscillator_relational(q: f64, p: f64, mass: f64, omega: f64, tau: f64, phi_c: f64) -> (f64, f64) {
    let (sn, cs) = ((phi_c - tau) * omega).sin_cos();
    (q * cs - p / (mass * omega) * sn, p * cs + mass * omega * q * sn)
}

/// Oscillator clock with a free particle `H_S = −p²/2m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParticle {
    pub clock: OscillatorParams,
    pub mass: f64,
}

impl OscillatorParticle {
    /// `H_C − p²/2m` on a state with constituents `clock` and `system`.
    pub fn constraint(&self, state: &ClassicalState) -> f64 {
        match (state.get("clock"), state.get("system")) {
            (Ok(c), Ok(s)) => self.clock.energy(c.q, c.p) - s.p * s.p / (2.0 * self.mass),
            _ => f64::NAN,
        }
    }

    /// Initial angle of the clock in `state`.
    pub fn initial_angle(&self, state: &ClassicalState) -> Result<f64> {
        let c = state.get("clock")?;
        oscillator_angle(c.q, c.p, &self.clock).value().ok_or_else(|| Error::InvalidParameter {
            name: "state",
            reason: "clock angle undefined at t = 0".into(),
        })
    }

    /// `F_{q,T}(τ) = q − (p/m)(τ − φ_C)`.
    pub fn f_qt(&self, tau: f64, phi_c: f64, q: f64, p: f64) -> f64 {
        q - p / self.mass * (tau - phi_c)
    }

    /// Flowed value `q − (p/m)(τ − φ_C⁰ + φ_max n)`.
    pub fn flow_f_qt_from_angle(&self, s: f64, tau: f64, phi0: f64, q: f64, p: f64) -> Result<f64> {
        let w = angle_flow(phi0, s, self.clock.phi_max())?;
        Ok(q - p / self.mass * (tau - phi0 + self.clock.phi_max() * w.n as f64))
    }

    pub fn flow_f_qt(&self, s: f64, tau: f64, state: &ClassicalState, tol: f64) -> Result<f64> {
        state.check_on_shell(|st| self.constraint(st), tol)?;
        let phi0 = self.initial_angle(state)?;
        let sys = state.get("system")?;
        self.flow_f_qt_from_angle(s, tau, phi0, sys.q, sys.p)
    }

    /// `cos(m ω_t q/p − ω_t(τ − φ_C))`, the relational observable of a `φ_max`-periodic function.
    pub fn periodic_observable(&self, tau: f64, phi_c: f64, q: f64, p: f64) -> f64 {
        let w = self.clock.omega;
        (self.mass * w * q / p - w * (tau - phi_c)).cos()
    }

    /// Flow of [`Self::periodic_observable`] by `s`.
    pub fn flow_periodic_observable(&self, s: f64, tau: f64, phi0: f64, q: f64, p: f64) -> Result<f64> {
        let w = angle_flow(phi0, s, self.clock.phi_max())?;
        Ok(self.periodic_observable(tau, w.tau_c, q - p * s / self.mass, p))
    }
}

/// `F_{T,Q}(τ) = τ − Q⁰ + φ_C⁰`.
pub fn relational_tq(tau: f64, q0: f64, phi0: f64) -> f64 {
    tau - q0 + phi0
}

/// Flow of `F_{T,Q}` by `s`: `F_{T,Q}(τ − n φ_max)` with `n = ⌊(s + φ0)/φ_max⌋`.
pub fn relational_tq_flow(tau: f64, q0: f64, phi0: f64, s: f64, phi_max: f64) -> Result<f64> {
    let w = angle_flow(phi0, s, phi_max)?;
    Ok(relational_tq(tau - w.n as f64 * phi_max, q0, phi0))
}

/// Two free particles on a unit torus, the first used as clock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusState {
    pub t: f64,
    pub q: f64,
    pub p_t: f64,
    pub p: f64,
    pub m_t: f64,
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusRelational {
    pub exact: f64,
    pub series: f64,
    pub winding: i64,
}

/// Exact and series relational positions of the second particle.
pub fn torus_relational(tau: f64, st: &TorusState) -> Result<TorusRelational> {
    for (name, v) in [("t", st.t), ("q", st.q)] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidParameter { name: "torus position", reason: format!("{name} = {v} outside [0, 1)") });
        }
    }
    if !(st.p_t > 0.0) || !(st.m_t > 0.0) || !(st.m > 0.0) {
        return Err(Error::InvalidParameter { name: "torus momenta", reason: "p_t, m_t and m must be positive".into() });
    }
    let energy = st.p_t * st.p_t / (2.0 * st.m_t) + st.p * st.p / (2.0 * st.m);
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter { name: "energy", reason: format!("{energy} is not positive") });
    }
    let phi_c = st.m_t * st.t / st.p_t;
    let series = st.p / st.m * (tau - phi_c) + st.q;
    let winding = series.floor();
    Ok(TorusRelational { exact: series - winding, series, winding: winding as i64 })
}

/// `{f, g}` by central differences; `point = (q₁, p₁, q₂, p₂, …)`.
pub fn poisson_bracket(f: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> f64 {
    let d = |func: &dyn Fn(&[f64]) -> f64, i: usize| {
        let mut a = point.to_vec();
        let mut b = point.to_vec();
        a[i] += h;
        b[i] -= h;
        (func(&a) - func(&b)) / (2.0 * h)
    };
    (0..point.len() / 2)
        .map(|k| {
            let (iq, ip) = (2 * k, 2 * k + 1);
            d(&f, iq) * d(&g, ip) - d(&f, ip) * d(&g, iq)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub s: f64,
    pub value: f64,
    pub marker: bool,
}

/// Flow of `F_{q,T}(0)` for `q = 1`, `p = ½`, `m = 1`, `ω_t = 1`, `φ_C⁰ = 0`, sampled at
/// `s_k = kφ_max/200` over three cycles. Markers sit at the gauge-fixed readings `φ_C* = π`.
pub fn figure_data() -> Vec<FigurePoint> {
    let model = OscillatorParticle { clock: OscillatorParams { mass: 1.0, omega: 1.0 }, mass: 1.0 };
    let phi_max = model.clock.phi_max();
    let ds = phi_max / FIGURE_STEPS_PER_CYCLE as f64;
    (0..FIGURE_STEPS_PER_CYCLE * FIGURE_CYCLES)
        .map(|k| {
            let s = k as f64 * ds;
            let value = model.flow_f_qt_from_angle(s, 0.0, 0.0, 1.0, 0.5).expect("valid parameters");
            FigurePoint { s, value, marker: k % FIGURE_STEPS_PER_CYCLE == FIGURE_STEPS_PER_CYCLE / 2 }
        })
        .collect()
}
