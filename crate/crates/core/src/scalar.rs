use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ScalarError;

/// Exact complex rational `re + i*im`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar {
    re: BigRational,
    im: BigRational,
}

impl Scalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Scalar { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Scalar { re, im: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Scalar::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn i() -> Self {
        Scalar { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn zero() -> Self {
        Scalar::int(0)
    }

    pub fn one() -> Self {
        Scalar::int(1)
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// The value as an integer, when it is a real integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.is_real() && self.re.is_integer() {
            Some(self.re.to_integer())
        } else {
            None
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_integer().and_then(|n| n.to_i64())
    }

    /// True for a real value strictly below zero.
    pub fn is_negative_real(&self) -> bool {
        self.is_real() && self.re.is_negative()
    }

    pub fn conj(&self) -> Self {
        Scalar { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn real_part(&self) -> Self {
        Scalar::real(self.re.clone())
    }

    pub fn imag_part(&self) -> Self {
        Scalar::real(self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn recip(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let n = self.norm_sqr();
        Ok(Scalar { re: &self.re / &n, im: -&self.im / &n })
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Self, ScalarError> {
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, n: i64) -> Result<Self, ScalarError> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Scalar::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Writes `r` as `n` or `n/d`, sign included.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::real(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        Scalar {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, o: Scalar) -> Scalar {
        &self + &o
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, o: Scalar) -> Scalar {
        &self - &o
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, o: Scalar) -> Scalar {
        &self * &o
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -self.re, im: -self.im }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { re: -&self.re, im: -&self.im }
    }
}

impl fmt::Display for Scalar {
    /// Real values print as rationals, pure imaginary ones as `q*i`, and
    /// general values as a parenthesized sum.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let im_part = |f: &mut fmt::Formatter<'_>, im: &BigRational| {
            if im.is_one() {
                write!(f, "i")
            } else if *im == -BigRational::one() {
                write!(f, "-i")
            } else {
                write!(f, "{}*i", format_rational(im))
            }
        };
        if self.im.is_zero() {
            write!(f, "{}", format_rational(&self.re))
        } else if self.re.is_zero() {
            im_part(f, &self.im)
        } else {
            write!(f, "({}", format_rational(&self.re))?;
            if self.im.is_negative() {
                write!(f, " - ")?;
                im_part(f, &-self.im.clone())?;
            } else {
                write!(f, " + ")?;
                im_part(f, &self.im)?;
            }
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-40i64..40, 1i64..12, -40i64..40, 1i64..12).prop_map(|(a, b, c, d)| {
            Scalar::new(
                BigRational::new(a.into(), b.into()),
                BigRational::new(c.into(), d.into()),
            )
        })
    }

    #[test]
    fn reciprocal_of_zero_is_rejected() {
        assert_eq!(Scalar::zero().recip(), Err(ScalarError::DivisionByZero));
    }

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(&Scalar::i() * &Scalar::i(), Scalar::int(-1));
    }

    #[test]
    fn display_forms() {
        assert_eq!(Scalar::ratio(-3, 6).to_string(), "-1/2");
        assert_eq!(Scalar::i().to_string(), "i");
        assert_eq!((-Scalar::i()).to_string(), "-i");
        let z = Scalar::new(BigRational::one(), BigRational::from_integer((-2).into()));
        assert_eq!(z.to_string(), "(1 - 2*i)");
    }

    #[test]
    fn integer_powers() {
        let z = Scalar::new(BigRational::one(), BigRational::one());
        assert_eq!(z.powi(4).unwrap(), Scalar::int(-4));
        assert_eq!(z.powi(-2).unwrap(), Scalar::new(BigRational::zero(), BigRational::new((-1).into(), 2.into())));
    }

    proptest! {
        #[test]
        fn reciprocal_is_exact_inverse(a in arb_scalar()) {
            prop_assume!(!a.is_zero());
            prop_assert_eq!(&a * &a.recip().unwrap(), Scalar::one());
        }

        #[test]
        fn distributive(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn conjugation_is_multiplicative(a in arb_scalar(), b in arb_scalar()) {
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        }
    }
}
