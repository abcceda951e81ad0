//! Forward-mode automatic differentiation with fixed-width dual numbers.
//!
//! Physics code is written once against [`Scalar`] and evaluated either with
//! `f64` or with [`Dual<M>`], which carries `M` tangent directions alongside
//! the value. Comparisons look at the value channel only, so branches taken
//! by the value (logarithmic mean expansion, wavespeed maxima) are followed
//! consistently by the tangents.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicBool, Ordering};

/// Largest tangent width needed by a flux Jacobian (3D Euler).
pub const MAX_FLUX_TANGENTS: usize = 5;

static TRAP_DOMAIN_ERRORS: AtomicBool = AtomicBool::new(false);

/// When enabled, `ln`, `sqrt` and division by zero panic on invalid input
/// instead of propagating NaN/inf.
pub fn set_domain_trap(enabled: bool) {
    TRAP_DOMAIN_ERRORS.store(enabled, Ordering::Relaxed);
}

pub fn domain_trap_enabled() -> bool {
    TRAP_DOMAIN_ERRORS.load(Ordering::Relaxed)
}

#[inline]
fn check_domain(ok: bool, op: &str, x: f64) {
    if !ok && domain_trap_enabled() {
        panic!("domain error: {op}({x})");
    }
}

/// Real-like scalar that physics kernels are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn powi(self, p: i32) -> Self;
    fn abs(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    /// Maximum by value; ties keep `self`.
    fn max_by_value(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn ln(self) -> Self {
        check_domain(self > 0.0, "ln", self);
        f64::ln(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        check_domain(self >= 0.0, "sqrt", self);
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn powi(self, p: i32) -> Self {
        f64::powi(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Value with `M` forward tangents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const M: usize> {
    pub value: f64,
    pub tangents: [f64; M],
}

impl<const M: usize> Dual<M> {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            tangents: [0.0; M],
        }
    }

    /// Independent variable seeded in tangent direction `k`.
    pub fn variable(value: f64, k: usize) -> Self {
        let mut tangents = [0.0; M];
        tangents[k] = 1.0;
        Self { value, tangents }
    }

    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        let mut tangents = self.tangents;
        for t in &mut tangents {
            *t *= slope;
        }
        Self { value, tangents }
    }
}

impl<const M: usize> PartialOrd for Dual<M> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<const M: usize> Add for Dual<M> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for (a, b) in self.tangents.iter_mut().zip(rhs.tangents) {
            *a += b;
        }
        self
    }
}

impl<const M: usize> Sub for Dual<M> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for (a, b) in self.tangents.iter_mut().zip(rhs.tangents) {
            *a -= b;
        }
        self
    }
}

impl<const M: usize> Mul for Dual<M> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut tangents = [0.0; M];
        for k in 0..M {
            tangents[k] = self.value * rhs.tangents[k] + rhs.value * self.tangents[k];
        }
        Self {
            value: self.value * rhs.value,
            tangents,
        }
    }
}

impl<const M: usize> Div for Dual<M> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        check_domain(rhs.value != 0.0, "div", rhs.value);
        let inv = 1.0 / rhs.value;
        let value = self.value * inv;
        let mut tangents = [0.0; M];
        for k in 0..M {
            tangents[k] = (self.tangents[k] - value * rhs.tangents[k]) * inv;
        }
        Self { value, tangents }
    }
}

impl<const M: usize> Neg for Dual<M> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.value, -1.0)
    }
}

impl<const M: usize> Add<f64> for Dual<M> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.value += rhs;
        self
    }
}

impl<const M: usize> Sub<f64> for Dual<M> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.value -= rhs;
        self
    }
}

impl<const M: usize> Mul<f64> for Dual<M> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.value * rhs, rhs)
    }
}

impl<const M: usize> Div<f64> for Dual<M> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        check_domain(rhs != 0.0, "div", rhs);
        let inv = 1.0 / rhs;
        self.chain(self.value * inv, inv)
    }
}

impl<const M: usize> AddAssign for Dual<M> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const M: usize> SubAssign for Dual<M> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const M: usize> MulAssign for Dual<M> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const M: usize> Scalar for Dual<M> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.value
    }
    #[inline]
    fn ln(self) -> Self {
        check_domain(self.value > 0.0, "ln", self.value);
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    #[inline]
    fn sqrt(self) -> Self {
        check_domain(self.value >= 0.0, "sqrt", self.value);
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let v = self.value.powf(p);
        self.chain(v, p * self.value.powf(p - 1.0))
    }
    #[inline]
    fn powi(self, p: i32) -> Self {
        let v = self.value.powi(p);
        self.chain(v, f64::from(p) * self.value.powi(p - 1))
    }
    #[inline]
    fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }
}

/// Seeds every component of `x` as an independent variable.
pub fn seed<const N: usize>(x: &[f64; N]) -> [Dual<N>; N] {
    std::array::from_fn(|k| Dual::variable(x[k], k))
}

/// Lifts `x` to duals with zero tangents.
pub fn lift<const N: usize, const M: usize>(x: &[f64; N]) -> [Dual<M>; N] {
    std::array::from_fn(|k| Dual::constant(x[k]))
}

/// `out[a][b] = ∂y_a/∂x_b` from duals seeded per input component.
pub fn tangent_matrix<const N: usize, const M: usize>(y: &[Dual<M>; N]) -> [[f64; M]; N] {
    std::array::from_fn(|a| y[a].tangents)
}

/// Jacobian of a vector map `R^N -> R^N`.
pub fn jacobian<const N: usize, F>(f: F, x: &[f64; N]) -> [[f64; N]; N]
where
    F: Fn(&[Dual<N>; N]) -> [Dual<N>; N],
{
    tangent_matrix(&f(&seed(x)))
}

/// Gradient of a scalar map `R^N -> R`.
pub fn gradient<const N: usize, F>(f: F, x: &[f64; N]) -> [f64; N]
where
    F: Fn(&[Dual<N>; N]) -> Dual<N>,
{
    f(&seed(x)).tangents
}

/// `d f / dx` for a scalar function.
pub fn derivative<F>(f: F, x: f64) -> f64
where
    F: Fn(Dual<1>) -> Dual<1>,
{
    f(Dual::variable(x, 0)).tangents[0]
}

/// `∂f/∂y` of a bivariate scalar function at `(x, y)`.
pub fn derivative_wrt_right<F>(f: F, x: f64, y: f64) -> f64
where
    F: Fn(Dual<1>, Dual<1>) -> Dual<1>,
{
    f(Dual::constant(x), Dual::variable(y, 0)).tangents[0]
}

/// `∂f/∂x` of a bivariate scalar function at `(x, y)`.
pub fn derivative_wrt_left<F>(f: F, x: f64, y: f64) -> f64
where
    F: Fn(Dual<1>, Dual<1>) -> Dual<1>,
{
    f(Dual::variable(x, 0), Dual::constant(y)).tangents[0]
}

/// `∂f_a/∂(u_R)_b` of a two-point vector flux.
pub fn flux_jacobian_right<const N: usize, F>(f: F, ul: &[f64; N], ur: &[f64; N]) -> [[f64; N]; N]
where
    F: Fn(&[Dual<N>; N], &[Dual<N>; N]) -> [Dual<N>; N],
{
    tangent_matrix(&f(&lift(ul), &seed(ur)))
}

/// `∂f_a/∂(u_L)_b` of a two-point vector flux.
pub fn flux_jacobian_left<const N: usize, F>(f: F, ul: &[f64; N], ur: &[f64; N]) -> [[f64; N]; N]
where
    F: Fn(&[Dual<N>; N], &[Dual<N>; N]) -> [Dual<N>; N],
{
    tangent_matrix(&f(&seed(ul), &lift(ur)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_derivatives() {
        assert_eq!(derivative(|x| x * x, 3.0), 6.0);
        assert_eq!(derivative(|x| x.ln(), 2.0), 0.5);
        assert_eq!(derivative(|x| x * x.ln(), 1.0), 1.0);
        assert!((derivative(|x| x.sqrt(), 4.0) - 0.25).abs() < 1e-15);
        assert!((derivative(|x| x.powf(1.5), 4.0) - 3.0).abs() < 1e-14);
        assert!((derivative(|x| Dual::cst(1.0) / x, 2.0) + 0.25).abs() < 1e-15);
        assert_eq!(derivative(|x| x.powi(3), 2.0), 12.0);
        assert!((derivative(|x| x.exp(), 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(derivative(|x| x.abs(), -2.0), -1.0);
    }

    #[test]
    fn product_rule_on_two_tangents() {
        let a = Dual::<2>::variable(3.0, 0);
        let b = Dual::<2>::variable(5.0, 1);
        let p = a * b;
        assert_eq!(p.value, 15.0);
        assert_eq!(p.tangents, [5.0, 3.0]);
        let q = a / b;
        assert!((q.tangents[1] + 3.0 / 25.0).abs() < 1e-16);
    }

    #[test]
    fn comparisons_use_value_only() {
        let a = Dual::<1>::variable(1.0, 0);
        let b = Dual::<1>::constant(2.0);
        assert!(a < b);
        assert_eq!(a.max_by_value(b), b);
    }

    #[test]
    fn domain_errors_propagate_as_nan() {
        let r = Dual::<1>::variable(-1.0, 0).ln();
        assert!(r.value.is_nan());
    }

    #[test]
    fn bivariate_partials() {
        let burgers = |x: Dual<1>, y: Dual<1>| (x * x + x * y + y * y) / 6.0;
        assert!((derivative_wrt_right(burgers, 1.0, 2.0) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(derivative_wrt_right(|x, _y| x, 1.0, 2.0), 0.0);
        assert_eq!(derivative_wrt_left(|x, _y| x, 1.0, 2.0), 1.0);
    }
}
