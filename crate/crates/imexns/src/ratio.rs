//! Exact rational coefficients.
//!
//! The built-in tableaux are published as rational numbers; some of the
//! third- and fourth-order low-storage pairs use convergents with 20+ digit
//! numerators chosen so that row sums and order identities hold *exactly* as
//! rationals. Storing them as `i128` pairs keeps that exactness; conversion
//! to working precision (f64 or double-double) happens once, on load.
//!
//! No rational arithmetic is implemented on purpose: every consumer needs the
//! values only in floating point, and products of the large denominators
//! would overflow even i128.

/// An exact rational number `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    /// Creates `num/den`. Panics if `den == 0` (coefficients are static data,
    /// so this is a programming error, not a runtime condition).
    pub const fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "rational with zero denominator");
        // Normalize the sign into the numerator.
        if den < 0 {
            Ratio {
                num: -num,
                den: -den,
            }
        } else {
            Ratio { num, den }
        }
    }

    /// The zero constant.
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    /// The unit constant.
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    /// Numerator (sign-carrying).
    pub fn numerator(self) -> i128 {
        self.num
    }

    /// Denominator (always positive).
    pub fn denominator(self) -> i128 {
        self.den
    }

    /// Nearest f64. The double rounding (i128 → f64 for each part, then one
    /// division) keeps the result within ~2 ulp of the true value, which is
    /// far below every structural tolerance in the crate.
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True if the rational is exactly zero.
    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_simple_fractions() {
        assert_eq!(Ratio::new(1, 2).to_f64(), 0.5);
        assert_eq!(Ratio::new(-7, 4).to_f64(), -1.75);
        assert_eq!(Ratio::new(3, -4).to_f64(), -0.75);
        assert!(Ratio::ZERO.is_zero());
        assert_eq!(Ratio::ONE.to_f64(), 1.0);
    }

    #[test]
    fn handles_large_numerators() {
        // The widest coefficient in the built-in tableaux.
        let r = Ratio::new(-11_712_383_888_607_531_889_907, 32_694_570_495_602_105_556_248);
        let v = r.to_f64();
        assert!(v < -0.358 && v > -0.359, "got {v}");
    }

    #[test]
    fn sign_normalisation() {
        let r = Ratio::new(5, -3);
        assert_eq!(r.numerator(), -5);
        assert_eq!(r.denominator(), 3);
    }
}
