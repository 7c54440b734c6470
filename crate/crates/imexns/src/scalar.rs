//! Scalar abstractions shared by the generic time integrators.
//!
//! Two ladders of types parameterize the ODE layer:
//!
//! * [`Real`] — the precision carrier for tableau coefficients, step sizes and
//!   quadrature weights (`f64` or the extended [`Dd`]).
//! * [`Field`] — the arithmetic type of state components (real or complex, in
//!   either precision), each tied to its `Real` via an associated type.
//!
//! [`OdeState`] lifts a `Field` to vector-space states (single scalars for
//!   amplification-factor work, `Vec` for systems), and [`SplitOde`] is the
//! right-hand-side contract `du/dt = f_c(u) + f_d(nu(u), u)` with a linear
//! implicit solve in the diffusive part.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::dd::{ComplexDd, Dd};
use crate::error::{Error, Result};

/// Real scalar used for coefficients, step sizes and node locations.
pub trait Real:
    Copy
    + Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Correctly evaluated rational constant in this precision.
    fn from_ratio(num: i128, den: i128) -> Self;
    fn abs(self) -> Self;
    /// Convergence tolerance for iterative root finding in this precision.
    fn root_tol() -> f64;
}

impl Real for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    fn from_ratio(num: i128, den: i128) -> Self {
        // Evaluate in extended precision first so the result is the rational
        // rounded once, not a quotient of two separately rounded integers.
        Dd::from_ratio(num, den).to_f64()
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn root_tol() -> f64 {
        1e-15
    }
}

impl Real for Dd {
    #[inline]
    fn zero() -> Self {
        Dd::ZERO
    }
    #[inline]
    fn one() -> Self {
        Dd::ONE
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    #[inline]
    fn from_ratio(num: i128, den: i128) -> Self {
        Dd::from_ratio(num, den)
    }
    #[inline]
    fn abs(self) -> Self {
        Dd::abs(self)
    }
    #[inline]
    fn root_tol() -> f64 {
        1e-30
    }
}

/// Field of state components: real or complex scalars in either precision.
pub trait Field:
    Copy
    + Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    type Re: Real;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_re(r: Self::Re) -> Self;
    fn from_f64(x: f64) -> Self;
    /// Builds the value `re + i*im`; real fields require `im == 0`.
    fn from_re_im(re: f64, im: f64) -> Self;
    fn re(self) -> Self::Re;
    fn im(self) -> Self::Re;
    /// Magnitude reduced to `f64` — every comparison here tolerates that.
    fn modulus(self) -> f64;
    fn exp(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Field for f64 {
    type Re = f64;
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_re(r: f64) -> Self {
        r
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_re_im(re: f64, im: f64) -> Self {
        assert_eq!(im, 0.0, "imaginary part on a real field");
        re
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Field for Complex64 {
    type Re = f64;
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    #[inline]
    fn from_re(r: f64) -> Self {
        Complex64::new(r, 0.0)
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Field for Dd {
    type Re = Dd;
    #[inline]
    fn zero() -> Self {
        Dd::ZERO
    }
    #[inline]
    fn one() -> Self {
        Dd::ONE
    }
    #[inline]
    fn from_re(r: Dd) -> Self {
        r
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    #[inline]
    fn from_re_im(re: f64, im: f64) -> Self {
        assert_eq!(im, 0.0, "imaginary part on a real field");
        Dd::from_f64(re)
    }
    #[inline]
    fn re(self) -> Dd {
        self
    }
    #[inline]
    fn im(self) -> Dd {
        Dd::ZERO
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs().to_f64()
    }
    #[inline]
    fn exp(self) -> Self {
        Dd::exp(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        Dd::is_finite(self)
    }
}

impl Field for ComplexDd {
    type Re = Dd;
    #[inline]
    fn zero() -> Self {
        ComplexDd::ZERO
    }
    #[inline]
    fn one() -> Self {
        ComplexDd::ONE
    }
    #[inline]
    fn from_re(r: Dd) -> Self {
        ComplexDd::new(r, Dd::ZERO)
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        ComplexDd::new(Dd::from_f64(x), Dd::ZERO)
    }
    #[inline]
    fn from_re_im(re: f64, im: f64) -> Self {
        ComplexDd::new(Dd::from_f64(re), Dd::from_f64(im))
    }
    #[inline]
    fn re(self) -> Dd {
        self.re
    }
    #[inline]
    fn im(self) -> Dd {
        self.im
    }
    #[inline]
    fn modulus(self) -> f64 {
        ComplexDd::modulus(self)
    }
    #[inline]
    fn exp(self) -> Self {
        ComplexDd::exp(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// State vector over a field: the linear operations the integrators need.
pub trait OdeState<C: Field>: Clone {
    /// Zero state with the same shape as `self`.
    fn zero_like(&self) -> Self;
    /// `self += a * x` (shapes must agree).
    fn axpy(&mut self, a: C, x: &Self);
    /// `self *= a`.
    fn scale(&mut self, a: C);
    /// Largest component magnitude, for boundedness checks.
    fn max_abs(&self) -> f64;
}

impl<C: Field> OdeState<C> for C {
    #[inline]
    fn zero_like(&self) -> Self {
        C::zero()
    }
    #[inline]
    fn axpy(&mut self, a: C, x: &Self) {
        *self = *self + a * *x;
    }
    #[inline]
    fn scale(&mut self, a: C) {
        *self = *self * a;
    }
    #[inline]
    fn max_abs(&self) -> f64 {
        self.modulus()
    }
}

impl<C: Field> OdeState<C> for Vec<C> {
    fn zero_like(&self) -> Self {
        vec![C::zero(); self.len()]
    }
    fn axpy(&mut self, a: C, x: &Self) {
        assert_eq!(self.len(), x.len(), "state length mismatch");
        for (s, &v) in self.iter_mut().zip(x) {
            *s = *s + a * v;
        }
    }
    fn scale(&mut self, a: C) {
        for s in self.iter_mut() {
            *s = *s * a;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, &v| m.max(v.modulus()))
    }
}

/// Additively split right-hand side `du/dt = f_c(u) + f_d(nu, u)` where `f_c`
/// is integrated explicitly, `f_d` implicitly, and the diffusive coefficient
/// `nu` may depend on the state (evaluated and frozen by the caller).
pub trait SplitOde {
    type C: Field;
    type State: OdeState<Self::C>;
    /// Frozen diffusive-coefficient snapshot.
    type Nu: Clone;

    /// Explicitly treated tendency.
    fn f_c(&self, t: f64, u: &Self::State) -> Self::State;
    /// Implicitly treated tendency at a frozen coefficient.
    fn f_d(&self, t: f64, nu: &Self::Nu, u: &Self::State) -> Self::State;
    /// Coefficient snapshot at the given state.
    fn nu_of(&self, t: f64, u: &Self::State) -> Self::Nu;
    /// Linear combination `c0*nu0 + c1*nu1` of snapshots (multistep extrapolation).
    fn nu_combine(&self, c0: f64, nu0: &Self::Nu, c1: f64, nu1: &Self::Nu) -> Self::Nu;
    /// Solves `u - gamma * f_d(nu, u) = g` for `u`.
    fn implicit_solve(
        &self,
        t: f64,
        nu: &Self::Nu,
        gamma: <Self::C as Field>::Re,
        g: &Self::State,
    ) -> Result<Self::State>;
}

/// Scalar linear split system `du/dt = lambda_c u + lambda_d u`.
///
/// This is the amplification-factor probe: one step from `u = 1` evaluates the
/// stability function at `z = dt * lambda`.
#[derive(Clone, Copy, Debug)]
pub struct LinearSplit<C: Field> {
    pub lambda_c: C,
    pub lambda_d: C,
}

impl<C: Field> LinearSplit<C> {
    pub fn new(lambda_c: C, lambda_d: C) -> Self {
        Self { lambda_c, lambda_d }
    }
}

impl<C: Field> SplitOde for LinearSplit<C> {
    type C = C;
    type State = C;
    type Nu = C;

    #[inline]
    fn f_c(&self, _t: f64, u: &C) -> C {
        self.lambda_c * *u
    }
    #[inline]
    fn f_d(&self, _t: f64, nu: &C, u: &C) -> C {
        *nu * *u
    }
    #[inline]
    fn nu_of(&self, _t: f64, _u: &C) -> C {
        self.lambda_d
    }
    #[inline]
    fn nu_combine(&self, c0: f64, nu0: &C, c1: f64, nu1: &C) -> C {
        C::from_f64(c0) * *nu0 + C::from_f64(c1) * *nu1
    }
    fn implicit_solve(&self, _t: f64, nu: &C, gamma: C::Re, g: &C) -> Result<C> {
        let denom = C::one() - C::from_re(gamma) * *nu;
        if denom.modulus() == 0.0 {
            return Err(Error::AmplificationPole {
                stage: 0,
                magnitude: denom.modulus(),
            });
        }
        Ok(*g / denom)
    }
}

/// Nonlinear scalar decay problem with state-dependent coefficient:
/// `du/dt = -u^3 - nu(u) u` with `nu(u) = 1 + u^2`, split so the cubic term is
/// explicit and the linear-in-`u` decay (at frozen `nu`) is implicit.
///
/// Smooth, contractive, and genuinely coefficient-varying — used to confirm
/// that the variable-coefficient stage predictors preserve design order.
#[derive(Clone, Copy, Debug, Default)]
pub struct DecayNonlinear;

impl SplitOde for DecayNonlinear {
    type C = f64;
    type State = f64;
    type Nu = f64;

    #[inline]
    fn f_c(&self, _t: f64, u: &f64) -> f64 {
        -u * u * u
    }
    #[inline]
    fn f_d(&self, _t: f64, nu: &f64, u: &f64) -> f64 {
        -nu * u
    }
    #[inline]
    fn nu_of(&self, _t: f64, u: &f64) -> f64 {
        1.0 + u * u
    }
    #[inline]
    fn nu_combine(&self, c0: f64, nu0: &f64, c1: f64, nu1: &f64) -> f64 {
        c0 * nu0 + c1 * nu1
    }
    fn implicit_solve(&self, _t: f64, nu: &f64, gamma: f64, g: &f64) -> Result<f64> {
        let denom = 1.0 + gamma * nu;
        if denom == 0.0 {
            return Err(Error::AmplificationPole {
                stage: 0,
                magnitude: 0.0,
            });
        }
        Ok(g / denom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_ratio_is_correctly_rounded_in_f64() {
        assert_eq!(<f64 as Real>::from_ratio(1, 3), 1.0 / 3.0);
        assert_eq!(<f64 as Real>::from_ratio(-5, 6), -5.0 / 6.0);
        // 71-bit operands: the two-step i128->f64 quotient would be off.
        let x = <f64 as Real>::from_ratio(
            -11_712_383_888_607_531_889_907,
            32_694_570_495_602_105_556_248,
        );
        let dd = Dd::from_ratio(
            -11_712_383_888_607_531_889_907,
            32_694_570_495_602_105_556_248,
        );
        assert_eq!(x, dd.to_f64());
    }

    #[test]
    fn vec_state_axpy_and_scale() {
        let mut v = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let x = vec![Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)];
        v.axpy(Complex64::new(2.0, 0.0), &x);
        assert_eq!(v[0], Complex64::new(2.0, 0.0));
        assert_eq!(v[1], Complex64::new(2.0, 2.0));
        v.scale(Complex64::new(0.0, 1.0));
        assert_eq!(v[0], Complex64::new(0.0, 2.0));
        assert!((v.max_abs() - 8.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_split_pole_is_reported() {
        let sys = LinearSplit::new(0.0, 2.0);
        let err = sys.implicit_solve(0.0, &2.0, 0.5, &1.0).unwrap_err();
        assert!(matches!(err, Error::AmplificationPole { .. }));
    }

    #[test]
    fn linear_split_solve_matches_closed_form() {
        let sys = LinearSplit::new(Complex64::new(0.0, 1.0), Complex64::new(-2.0, 0.0));
        let nu = sys.nu_of(0.0, &Complex64::new(1.0, 0.0));
        let u = sys
            .implicit_solve(0.0, &nu, 0.25, &Complex64::new(1.0, 0.0))
            .unwrap();
        // u (1 - 0.25 * (-2)) = 1  =>  u = 1 / 1.5
        assert!((u - Complex64::new(1.0 / 1.5, 0.0)).norm() < 1e-15);
    }
}
