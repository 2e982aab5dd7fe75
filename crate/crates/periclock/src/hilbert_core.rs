//! Dense operator algebra in fixed energy eigenbases.
//!
//! Every Hamiltonian in this crate is stored diagonal, so time evolution is a
//! diagonal phase matrix and every integral over a clock cycle reduces to the
//! closed forms [`cycle_integral`] and [`moment_integral`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Resonance threshold on `|Δ·t_max|` below which a cycle average is exactly 1.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Default absolute tolerance for complex scalar comparisons.
pub const COMPLEX_TOL: f64 = 1e-9;

/// Off-diagonal magnitude above which a matrix no longer counts as diagonal.
const DIAGONAL_TOL: f64 = 1e-14;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `e^{iθ}`.
#[inline]
pub fn phase(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// Eigenbasis an operator or state is expressed in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    Clock,
    System,
    Product(Box<Basis>, Box<Basis>),
}

impl Basis {
    pub fn product(a: &Basis, b: &Basis) -> Basis {
        Basis::Product(Box::new(a.clone()), Box::new(b.clone()))
    }

    /// Clock ⊗ system, the kinematical basis of a clock-system pair.
    pub fn kinematical() -> Basis {
        Basis::product(&Basis::Clock, &Basis::System)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Clock => write!(f, "clock"),
            Basis::System => write!(f, "system"),
            Basis::Product(a, b) => write!(f, "({a}⊗{b})"),
        }
    }
}

/// Square complex matrix tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub mat: Mat,
    pub basis: Basis,
}

impl Operator {
    pub fn new(mat: Mat, basis: Basis) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        Ok(Operator { mat, basis })
    }

    pub fn zeros(dim: usize, basis: Basis) -> Self {
        Operator { mat: Mat::zeros(dim, dim), basis }
    }

    pub fn identity(dim: usize, basis: Basis) -> Self {
        Operator { mat: Mat::identity(dim, dim), basis }
    }

    pub fn diagonal(values: &[f64], basis: Basis) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Operator { mat: Mat::from_diagonal(&d), basis }
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &StateVector, v: &StateVector) -> Self {
        Operator { mat: &u.amps * v.amps.adjoint(), basis: u.basis.clone() }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator { mat: self.mat.adjoint(), basis: self.basis.clone() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator { mat: &self.mat * c, basis: self.basis.clone() }
    }

    /// Largest entry modulus, the norm used for all tolerances.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| r == c || self.mat[(r, c)].norm() <= DIAGONAL_TOL))
    }

    /// Diagonal entries as reals; errors unless the operator is diagonal.
    pub fn diagonal_values(&self) -> Result<Vec<f64>> {
        if !self.is_diagonal() {
            return Err(Error::NotDiagonal);
        }
        Ok((0..self.dim()).map(|k| self.mat[(k, k)].re).collect())
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), v.dim()));
        }
        Ok(StateVector { amps: &self.mat * &v.amps, basis: self.basis.clone() })
    }

    /// `⟨u|A|v⟩`.
    pub fn sandwich(&self, u: &StateVector, v: &StateVector) -> C64 {
        u.amps.dotc(&(&self.mat * &v.amps))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat + &rhs.mat, basis: self.basis.clone() }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat - &rhs.mat, basis: self.basis.clone() }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat * &rhs.mat, basis: self.basis.clone() }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat, basis: self.basis.clone() }
    }
}

/// Complex amplitudes tagged with their basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amps: Vector,
    pub basis: Basis,
}

impl StateVector {
    pub fn new(amps: Vector, basis: Basis) -> Self {
        StateVector { amps, basis }
    }

    pub fn from_slice(amps: &[C64], basis: Basis) -> Self {
        StateVector { amps: Vector::from_column_slice(amps), basis }
    }

    pub fn zeros(dim: usize, basis: Basis) -> Self {
        StateVector { amps: Vector::zeros(dim), basis }
    }

    /// Unit vector `|k⟩`.
    pub fn basis_vector(dim: usize, k: usize, basis: Basis) -> Self {
        let mut amps = Vector::zeros(dim);
        amps[k] = ONE;
        StateVector { amps, basis }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        StateVector { amps: &self.amps / C64::new(n, 0.0), basis: self.basis.clone() }
    }

    pub fn scale(&self, c: C64) -> Self {
        StateVector { amps: &self.amps * c, basis: self.basis.clone() }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        max_abs_vec(&(&self.amps - &other.amps))
    }
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Kronecker product in row-major block order: index `(i, k) ↦ i·dim_b + k`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator { mat: a.mat.kronecker(&b.mat), basis: Basis::product(&a.basis, &b.basis) }
}

pub fn kron_state(a: &StateVector, b: &StateVector) -> StateVector {
    StateVector { amps: a.amps.kronecker(&b.amps), basis: Basis::product(&a.basis, &b.basis) }
}

/// `AB − BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.basis != b.basis {
        return Err(Error::BasisMismatch(a.basis.to_string(), b.basis.to_string()));
    }
    Ok(Operator { mat: &a.mat * &b.mat - &b.mat * &a.mat, basis: a.basis.clone() })
}

/// `e^{−iHt}` for diagonal `H`.
pub fn evolve(h: &Operator, t: f64) -> Result<Operator> {
    let e = h.diagonal_values()?;
    Ok(evolve_diag(&e, t, h.basis.clone()))
}

pub(crate) fn evolve_diag(energies: &[f64], t: f64, basis: Basis) -> Operator {
    let d = DVector::from_iterator(energies.len(), energies.iter().map(|&e| phase(-e * t)));
    Operator { mat: Mat::from_diagonal(&d), basis }
}

/// `e^{−ix} − 1` without cancellation for small `x`.
fn expm1_neg_i(x: f64) -> C64 {
    let h = (0.5 * x).sin();
    C64::new(-2.0 * h * h, -x.sin())
}

/// `(1/t_max) ∫₀^{t_max} e^{−iΔφ} dφ`.
pub fn cycle_integral(delta: f64, t_max: f64) -> Result<C64> {
    if !(t_max > 0.0) {
        return Err(Error::NonPositivePeriod(t_max));
    }
    Ok(unit_moment(0, delta * t_max))
}

/// `(1/t_max) ∫₀^{t_max} φⁿ e^{−iΔφ} dφ`.
pub fn moment_integral(n: u32, delta: f64, t_max: f64) -> Result<C64> {
    if !(t_max > 0.0) {
        return Err(Error::NonPositivePeriod(t_max));
    }
    Ok(unit_moment(n, delta * t_max) * t_max.powi(n as i32))
}

/// `∫_a^b φⁿ e^{−iΔφ} dφ` (not normalised). Zero for `b ≤ a`.
pub fn segment_integral(n: u32, delta: f64, a: f64, b: f64) -> C64 {
    let len = b - a;
    if len <= 0.0 {
        return ZERO;
    }
    // φ = a + len·u, expand (a + len·u)ⁿ binomially.
    let x = delta * len;
    let mut total = ZERO;
    let mut binom = 1.0;
    for k in 0..=n {
        let coeff = binom * a.powi((n - k) as i32) * len.powi(k as i32);
        total += unit_moment(k, x) * coeff;
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    total * phase(-delta * a) * len
}

/// `Jₙ(x) = ∫₀¹ uⁿ e^{−ixu} du`.
///
/// Power series for moderate `|x|`, upward recursion otherwise.
pub(crate) fn unit_moment(n: u32, x: f64) -> C64 {
    if x.abs() <= RESONANCE_TOL {
        return C64::new(1.0 / (n as f64 + 1.0), 0.0);
    }
    if x.abs() < 2.0 + n as f64 {
        let b = C64::new(0.0, -x);
        let mut term = ONE; // bᵏ/k!
        let mut sum = ZERO;
        let mut k = 0u32;
        loop {
            let contrib = term / (n + k + 1) as f64;
            sum += contrib;
            if k as f64 > x.abs() && contrib.norm() < 1e-18 * sum.norm().max(1e-300) {
                break;
            }
            k += 1;
            term = term * b / k as f64;
            if k > 400 {
                break;
            }
        }
        return sum;
    }
    let b = C64::new(0.0, -x);
    let eb = phase(-x);
    let mut j = expm1_neg_i(x) / b;
    for m in 1..=n {
        j = (eb - j * m as f64) / b;
    }
    j
}
