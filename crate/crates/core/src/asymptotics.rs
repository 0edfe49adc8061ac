//! Leading-order arithmetic on nonnegative monomials `c·λ^e`.
//!
//! Every transition probability of a perturbed family is tracked only by its
//! first Puiseux term. Because every quantity the analysis builds is a sum or
//! product of nonnegative terms, no cancellation can occur and the leading
//! term of a result is determined by the leading terms of its inputs:
//!
//! ```text
//! (a·λ^p) ⊗ (b·λ^q) = ab·λ^(p+q)
//! (a·λ^p) ⊕ (b·λ^q) = a·λ^p            if p < q
//!                   = (a+b)·λ^p        if p = q
//! ```
//!
//! Exponents are exact reduced fractions so that every branching decision of
//! the aggregation algorithm (which exponent is smallest, whether a threshold
//! has reached 1) is made without rounding. Coefficients are `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance used whenever two coefficients are compared.
pub const COEFF_RTOL: f64 = 1e-9;

/// Whether two coefficients agree within [`COEFF_RTOL`].
pub fn coeff_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= COEFF_RTOL * a.abs().max(b.abs())
}

/// An exact rational exponent, or `+∞`.
///
/// Finite values are stored as a reduced fraction with a positive
/// denominator. The infinite value is encoded with a zero denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalExp {
    num: i64,
    den: i64,
}

impl RationalExp {
    pub const ZERO: RationalExp = RationalExp { num: 0, den: 1 };
    pub const ONE: RationalExp = RationalExp { num: 1, den: 1 };
    pub const INFINITY: RationalExp = RationalExp { num: 1, den: 0 };

    /// Builds `num/den`, reducing the fraction. `den` must be nonzero.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain(format!("zero denominator in {num}/{den}")));
        }
        Self::from_i128(num as i128, den as i128)
    }

    pub fn integer(n: i64) -> Self {
        RationalExp { num: n, den: 1 }
    }

    fn from_i128(num: i128, den: i128) -> Result<Self> {
        let (mut num, mut den) = (num, den);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = num.gcd(&den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(num), Ok(den)) => Ok(RationalExp { num, den }),
            _ => Err(Error::Arithmetic(format!(
                "exponent {num}/{den} exceeds the 64-bit range"
            ))),
        }
    }

    pub fn is_infinite(self) -> bool {
        self.den == 0
    }

    pub fn is_finite(self) -> bool {
        self.den != 0
    }

    /// Numerator of a finite exponent.
    pub fn numer(self) -> i64 {
        self.num
    }

    /// Denominator of a finite exponent (0 for `+∞`).
    pub fn denom(self) -> i64 {
        self.den
    }

    pub fn is_negative(self) -> bool {
        self.is_finite() && self.num < 0
    }

    pub fn to_f64(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.num as f64 / self.den as f64
        }
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        if self.is_infinite() || other.is_infinite() {
            return Ok(Self::INFINITY);
        }
        let num = self.num as i128 * other.den as i128 + other.num as i128 * self.den as i128;
        let den = self.den as i128 * other.den as i128;
        Self::from_i128(num, den)
    }

    /// `self - other`; `other` must be finite.
    pub fn checked_sub(self, other: Self) -> Result<Self> {
        if other.is_infinite() {
            return Err(Error::Domain("cannot subtract an infinite exponent".into()));
        }
        if self.is_infinite() {
            return Ok(Self::INFINITY);
        }
        self.checked_add(RationalExp {
            num: -other.num,
            den: other.den,
        })
    }
}

impl Ord for RationalExp {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => (self.num as i128 * other.den as i128)
                .cmp(&(other.num as i128 * self.den as i128)),
        }
    }
}

impl PartialOrd for RationalExp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for RationalExp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        if text == "inf" {
            return Ok(Self::INFINITY);
        }
        let bad = |why: &str| Error::parse(format!("exponent {s:?}"), why.to_string());
        match text.split_once('/') {
            None => text
                .parse::<i64>()
                .map(Self::integer)
                .map_err(|_| bad("expected an integer, a fraction p/q, or inf")),
            Some((p, q)) => {
                let p = p
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| bad("numerator is not an integer"))?;
                let q = q
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| bad("denominator is not an integer"))?;
                if q <= 0 {
                    return Err(bad("denominator must be positive"));
                }
                Self::new(p, q)
            }
        }
    }
}

impl Serialize for RationalExp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalExp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonnegative leading-order term `coeff · λ^exp`.
///
/// The zero monomial is the unique value `(0, +∞)`; every other value has a
/// strictly positive finite coefficient and a finite exponent.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MonomialRepr", into = "MonomialRepr")]
pub struct Monomial {
    coeff: f64,
    exp: RationalExp,
}

#[derive(Serialize, Deserialize)]
struct MonomialRepr {
    coeff: f64,
    exp: RationalExp,
}

impl TryFrom<MonomialRepr> for Monomial {
    type Error = Error;
    fn try_from(r: MonomialRepr) -> Result<Self> {
        Monomial::new(r.coeff, r.exp)
    }
}

impl From<Monomial> for MonomialRepr {
    fn from(m: Monomial) -> Self {
        MonomialRepr {
            coeff: m.coeff,
            exp: m.exp,
        }
    }
}

impl Monomial {
    pub const ZERO: Monomial = Monomial {
        coeff: 0.0,
        exp: RationalExp::INFINITY,
    };
    pub const ONE: Monomial = Monomial {
        coeff: 1.0,
        exp: RationalExp::ZERO,
    };

    /// Validated constructor. A zero coefficient must come with an infinite
    /// exponent (or is normalised to the zero monomial when `exp` is finite
    /// and `coeff == 0`).
    pub fn new(coeff: f64, exp: RationalExp) -> Result<Self> {
        if !coeff.is_finite() || coeff < 0.0 {
            return Err(Error::Domain(format!(
                "monomial coefficient must be finite and nonnegative, got {coeff}"
            )));
        }
        if coeff == 0.0 {
            return Ok(Self::ZERO);
        }
        if exp.is_infinite() {
            return Err(Error::Domain(
                "a positive coefficient needs a finite exponent".into(),
            ));
        }
        Ok(Monomial { coeff, exp })
    }

    /// A λ-independent constant.
    pub fn constant(coeff: f64) -> Result<Self> {
        Self::new(coeff, RationalExp::ZERO)
    }

    pub fn coeff(self) -> f64 {
        self.coeff
    }

    pub fn exp(self) -> RationalExp {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.coeff == 0.0
    }

    pub fn checked_mul(self, other: Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(Monomial {
            coeff: self.coeff * other.coeff,
            exp: self.exp.checked_add(other.exp)?,
        })
    }

    /// Leading term of the quotient. The divisor must be nonzero; the result
    /// may carry a negative exponent.
    pub fn checked_div(self, other: Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::Domain("division by the zero monomial".into()));
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(Monomial {
            coeff: self.coeff / other.coeff,
            exp: self.exp.checked_sub(other.exp)?,
        })
    }

    /// Multiplies the coefficient by a positive real factor.
    pub fn scale(self, factor: f64) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Self::new(self.coeff * factor, self.exp)
    }

    /// `lim_{λ→0} coeff·λ^exp`.
    pub fn limit(self) -> Result<f64> {
        if self.exp.is_negative() {
            return Err(Error::Domain(format!(
                "limit of {self} diverges (negative exponent)"
            )));
        }
        Ok(if self.exp == RationalExp::ZERO {
            self.coeff
        } else {
            0.0
        })
    }

    /// `coeff·λ^exp` in double precision.
    pub fn eval(self, lambda: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exp == RationalExp::ZERO {
            return self.coeff;
        }
        self.coeff * (self.exp.to_f64() * lambda.ln()).exp()
    }

    /// Same exponent and coefficients within [`COEFF_RTOL`].
    pub fn approx_eq(self, other: Self) -> bool {
        self.exp == other.exp && (self.is_zero() && other.is_zero() || coeff_close(self.coeff, other.coeff))
    }
}

impl Add for Monomial {
    type Output = Monomial;

    fn add(self, other: Self) -> Self {
        match self.exp.cmp(&other.exp) {
            Ordering::Less => self,
            Ordering::Greater => other,
            Ordering::Equal => Monomial {
                coeff: self.coeff + other.coeff,
                exp: self.exp,
            },
        }
    }
}

impl Mul for Monomial {
    type Output = Monomial;

    /// # Panics
    /// If the exponent sum overflows 64-bit fractions.
    fn mul(self, other: Self) -> Self {
        self.checked_mul(other)
            .unwrap_or_else(|e| panic!("fatal monomial arithmetic: {e}"))
    }
}

impl Sum for Monomial {
    fn sum<I: Iterator<Item = Monomial>>(iter: I) -> Self {
        iter.fold(Monomial::ZERO, |acc, m| acc + m)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            f.write_str("0")
        } else {
            write!(f, "{}·λ^{}", self.coeff, self.exp)
        }
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> RationalExp {
        RationalExp::new(num, den).unwrap()
    }

    fn m(c: f64, num: i64, den: i64) -> Monomial {
        Monomial::new(c, q(num, den)).unwrap()
    }

    #[test]
    fn exponents_are_exact_and_reduced() {
        let sum = q(1, 5).checked_add(q(2, 5)).unwrap();
        assert_eq!(sum, q(3, 5));
        assert_eq!((sum.numer(), sum.denom()), (3, 5));
        assert_eq!(q(4, 10), q(2, 5));
        assert_eq!(q(2, -4).to_string(), "-1/2");
        assert!(RationalExp::INFINITY > q(1_000_000, 1));
        assert_eq!(
            RationalExp::INFINITY.checked_add(q(3, 7)).unwrap(),
            RationalExp::INFINITY
        );
    }

    #[test]
    fn exponent_text_format() {
        assert_eq!("2".parse::<RationalExp>().unwrap(), RationalExp::integer(2));
        assert_eq!("3/5".parse::<RationalExp>().unwrap(), q(3, 5));
        assert_eq!("inf".parse::<RationalExp>().unwrap(), RationalExp::INFINITY);
        assert!("1/0".parse::<RationalExp>().is_err());
        assert!("1/-3".parse::<RationalExp>().is_err());
        assert!("0.2".parse::<RationalExp>().is_err());
        assert_eq!(q(3, 5).to_string(), "3/5");
        assert_eq!(RationalExp::integer(1).to_string(), "1");
    }

    #[test]
    fn exponent_overflow_is_reported() {
        let big = q(1, i64::MAX);
        let other = q(1, i64::MAX - 1);
        assert!(matches!(big.checked_add(other), Err(Error::Arithmetic(_))));
    }

    #[test]
    fn mono_mul_examples() {
        assert!((m(2.0, 1, 5) * m(3.0, 2, 5)).approx_eq(m(6.0, 3, 5)));
        assert!((m(5.0, 2, 5) * Monomial::ZERO).is_zero());
        // exit-rate product c/a · e with a = 2, c = 5, e = 11
        let pi1 = m(5.0 / 2.0, 2, 5);
        let edge = m(11.0, 3, 5);
        assert!((pi1 * edge).approx_eq(m(55.0 / 2.0, 1, 1)));
        // negative exponents are legal in intermediate products
        let neg = m(1.0, -1, 5);
        assert_eq!((m(3.0, 3, 5) * neg).exp(), q(2, 5));
    }

    #[test]
    fn mono_add_examples() {
        assert!((m(1.0, 1, 5) + m(4.0, 2, 5)).approx_eq(m(1.0, 1, 5)));
        assert!((m(1.0, 1, 5) + m(2.0, 1, 5)).approx_eq(m(3.0, 1, 5)));
        let (a, b, c, e, f) = (2.0, 3.0, 5.0, 11.0, 13.0);
        let lhs = m(c * e / a, 1, 1) + m(c * f / b, 1, 1);
        assert!(lhs.approx_eq(m(c * e / a + c * f / b, 1, 1)));
        assert!((Monomial::ZERO + m(2.0, 1, 1)).approx_eq(m(2.0, 1, 1)));
    }

    #[test]
    fn mono_div_examples() {
        let a = 2.0;
        let r = m(1.0 / 3.0, 0, 1).checked_div(m(a, 1, 5)).unwrap();
        assert!(r.approx_eq(m(1.0 / (3.0 * a), -1, 5)));
        assert!(m(6.0, 3, 5).checked_div(m(3.0, 2, 5)).unwrap().approx_eq(m(2.0, 1, 5)));
        assert!(Monomial::ZERO.checked_div(m(2.0, 1, 1)).unwrap().is_zero());
        assert!(matches!(
            m(1.0, 0, 1).checked_div(Monomial::ZERO),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mono_limit_examples() {
        assert_eq!(m(2.5, 2, 5).limit().unwrap(), 0.0);
        assert_eq!(Monomial::ONE.limit().unwrap(), 1.0);
        assert_eq!(Monomial::ZERO.limit().unwrap(), 0.0);
        assert!(matches!(m(1.0, -1, 5).limit(), Err(Error::Domain(_))));
    }

    #[test]
    fn mono_eval_examples() {
        assert!((m(1.0, 1, 5).eval(1e-5) - 0.1).abs() < 1e-15);
        assert_eq!(m(2.0, 0, 1).eval(0.37), 2.0);
        assert!((m(1.0, 3, 5).eval(1e-5) - 1e-3).abs() < 1e-17);
        assert_eq!(Monomial::ZERO.eval(0.5), 0.0);
    }

    #[test]
    fn constructor_enforces_invariants() {
        assert!(Monomial::new(-1.0, RationalExp::ZERO).is_err());
        assert!(Monomial::new(f64::NAN, RationalExp::ZERO).is_err());
        assert!(Monomial::new(1.0, RationalExp::INFINITY).is_err());
        assert!(Monomial::new(0.0, q(1, 2)).unwrap().is_zero());
    }

    #[test]
    fn serde_uses_exponent_strings() {
        let json = serde_json::to_string(&m(0.5, 3, 5)).unwrap();
        assert_eq!(json, r#"{"coeff":0.5,"exp":"3/5"}"#);
        let back: Monomial = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m(0.5, 3, 5));
        assert!(serde_json::from_str::<Monomial>(r#"{"coeff":-1.0,"exp":"1"}"#).is_err());
    }
}
