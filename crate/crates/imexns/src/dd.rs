//! Double-double arithmetic: unevaluated sums of two `f64`s giving ~31
//! significant decimal digits.
//!
//! The high-order verification paths (consistency-order fits near machine
//! epsilon, sixth-order convergence studies) produce errors below the `f64`
//! cancellation floor, so the scalar layer is generic over a precision type
//! and this module supplies the extended one. Algorithms follow the classic
//! error-free transformations (Knuth's `two_sum`, FMA-based `two_prod`) with
//! accurate addition and three-term long division.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Error-free sum: returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// Error-free sum assuming `|a| >= |b|` (or either is zero).
#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product: returns `(p, e)` with `p = fl(a * b)` and `a * b = p + e` exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Double-double number: the exact value is `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    /// Builds from components, renormalizing so the invariant holds.
    #[inline]
    pub fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Self { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact conversion of an integer with `|x| < 2^100`.
    ///
    /// The high part takes the rounded value; the remainder is below half an
    /// ulp of it, hence under `2^47` in magnitude and exactly representable.
    pub fn from_i128(x: i128) -> Self {
        assert!(
            x.unsigned_abs() < (1u128 << 100),
            "integer too large for exact double-double split: {x}"
        );
        let hi = x as f64;
        let rem = x - hi as i128;
        Self::renorm(hi, rem as f64)
    }

    /// `num / den` evaluated in double-double precision from exact operands.
    pub fn from_ratio(num: i128, den: i128) -> Self {
        Self::from_i128(num) / Self::from_i128(den)
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Reciprocal.
    #[inline]
    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    /// Exponential via argument reduction and a Taylor series.
    ///
    /// Reduces by `2^4` so the series argument stays below 1/4 for inputs up
    /// to magnitude 4, then squares back. Callers stay well inside that range.
    pub fn exp(self) -> Self {
        let m = (self.hi / std::f64::consts::LN_2).round();
        // Split off exact powers of two for wide-range robustness:
        // exp(x) = 2^m * exp(x - m ln 2).
        let r = self - Dd::from_f64(m) * LN_2_DD;
        let r16 = r * Dd::from_f64(1.0 / 16.0);
        let mut term = r16;
        let mut sum = Dd::ONE + r16;
        for k in 2..32 {
            term = term * r16 / Dd::from_f64(k as f64);
            sum += term;
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        // Undo the 1/16 reduction by squaring four times.
        for _ in 0..4 {
            sum = sum * sum;
        }
        let scale = f64::powi(2.0, m as i32);
        Self::renorm(sum.hi * scale, sum.lo * scale)
    }
}

/// ln(2) in double-double precision.
const LN_2_DD: Dd = Dd {
    hi: 0.6931471805599453,
    lo: 2.3190468138462996e-17,
};

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

impl Neg for Dd {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        Self::renorm(p1, p2)
    }
}

impl Div for Dd {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Self { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl DivAssign for Dd {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

/// Complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexDd {
    pub re: Dd,
    pub im: Dd,
}

impl ComplexDd {
    pub const ZERO: Self = Self {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: Self = Self {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn new(re: Dd, im: Dd) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    /// Squared modulus in double-double precision.
    #[inline]
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    /// Modulus reduced to `f64` (sufficient for every magnitude comparison here).
    #[inline]
    pub fn modulus(self) -> f64 {
        self.norm_sqr().to_f64().sqrt()
    }

    /// Complex exponential: `exp(re) * (cos(im) + i sin(im))`, with the
    /// trigonometric part from a reduced Taylor series.
    pub fn exp(self) -> Self {
        let mag = self.re.exp();
        let (c, s) = cos_sin_dd(self.im);
        Self {
            re: mag * c,
            im: mag * s,
        }
    }
}

/// cos/sin of a double-double via 1/16 argument reduction and Taylor series,
/// rebuilt with double-angle formulas. Intended for |x| up to a few units.
fn cos_sin_dd(x: Dd) -> (Dd, Dd) {
    let r = x * Dd::from_f64(1.0 / 16.0);
    // Taylor for sin(r), cos(r) with |r| small.
    let r2 = r * r;
    let mut sin = r;
    let mut term = r;
    let mut k = 1.0;
    loop {
        term = term * r2 / Dd::from_f64(-(k + 1.0) * (k + 2.0));
        sin += term;
        k += 2.0;
        if term.hi.abs() < 1e-35 * (sin.hi.abs() + 1e-300) || k > 40.0 {
            break;
        }
    }
    let mut cos = Dd::ONE;
    let mut term = Dd::ONE;
    let mut k = 0.0;
    loop {
        term = term * r2 / Dd::from_f64(-(k + 1.0) * (k + 2.0));
        cos += term;
        k += 2.0;
        if term.hi.abs() < 1e-35 || k > 40.0 {
            break;
        }
    }
    // Four double-angle steps undo the reduction.
    for _ in 0..4 {
        let s2 = Dd::from_f64(2.0) * sin * cos;
        let c2 = cos * cos - sin * sin;
        sin = s2;
        cos = c2;
    }
    (cos, sin)
}

impl Neg for ComplexDd {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for ComplexDd {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexDd {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for ComplexDd {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for ComplexDd {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let d = rhs.norm_sqr();
        let num = self * rhs.conj();
        Self {
            re: num.re / d,
            im: num.im / d,
        }
    }
}

impl AddAssign for ComplexDd {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for ComplexDd {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for ComplexDd {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl DivAssign for ComplexDd {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl fmt::Display for ComplexDd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}
