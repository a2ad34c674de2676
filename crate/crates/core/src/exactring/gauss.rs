//! Gaussian rationals `(re + i*im) / den` with arbitrary-precision parts.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact element of `Q(i)`.
///
/// Stored over a single positive denominator with
/// `gcd(re, im, den) = 1`, so structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussRat {
    re: BigInt,
    im: BigInt,
    den: BigInt,
}

impl Default for GaussRat {
    fn default() -> Self {
        GaussRat {
            re: BigInt::zero(),
            im: BigInt::zero(),
            den: BigInt::one(),
        }
    }
}

impl GaussRat {
    fn reduced(mut re: BigInt, mut im: BigInt, mut den: BigInt) -> Self {
        if den.is_negative() {
            re = -re;
            im = -im;
            den = -den;
        }
        if re.is_zero() && im.is_zero() {
            return GaussRat::default();
        }
        if !den.is_one() {
            let mut g = re.gcd(&den);
            if !g.is_one() {
                g = g.gcd(&im);
            }
            if !g.is_one() {
                re /= &g;
                im /= &g;
                den /= &g;
            }
        }
        GaussRat { re, im, den }
    }

    /// `(re + im i) / den`, brought to lowest terms. Panics if `den == 0`.
    pub(crate) fn from_parts(re: BigInt, im: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::reduced(re, im, den)
    }

    pub(crate) fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub(crate) fn numerators(&self) -> (&BigInt, &BigInt) {
        (&self.re, &self.im)
    }

    pub fn new(re: BigRational, im: BigRational) -> Self {
        let den = re.denom().lcm(im.denom());
        let a = re.numer() * (&den / re.denom());
        let b = im.numer() * (&den / im.denom());
        Self::reduced(a, b, den)
    }

    pub fn from_real(re: BigRational) -> Self {
        let (n, d) = re.into();
        Self::reduced(n, BigInt::zero(), d)
    }

    /// `num/den` as a real number. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::reduced(BigInt::from(num), BigInt::zero(), BigInt::from(den))
    }

    pub fn from_int(n: i64) -> Self {
        GaussRat {
            re: BigInt::from(n),
            im: BigInt::zero(),
            den: BigInt::one(),
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussRat {
            re: BigInt::zero(),
            im: BigInt::one(),
            den: BigInt::one(),
        }
    }

    pub fn re(&self) -> BigRational {
        BigRational::new(self.re.clone(), self.den.clone())
    }

    pub fn im(&self) -> BigRational {
        BigRational::new(self.im.clone(), self.den.clone())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat {
            re: self.re.clone(),
            im: -&self.im,
            den: self.den.clone(),
        }
    }

    /// `re^2 + im^2`.
    pub fn norm_sqr(&self) -> BigRational {
        BigRational::new(
            &self.re * &self.re + &self.im * &self.im,
            &self.den * &self.den,
        )
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // d / (a + bi) = d (a - bi) / (a^2 + b^2)
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(Self::reduced(
            &self.den * &self.re,
            -(&self.den * &self.im),
            n,
        ))
    }

    /// Multiply by `i`: `(a + bi) i = -b + ai`.
    pub fn mul_i(&self) -> Self {
        GaussRat {
            re: -&self.im,
            im: self.re.clone(),
            den: self.den.clone(),
        }
    }

    /// Multiply by `-i`.
    pub fn mul_neg_i(&self) -> Self {
        GaussRat {
            re: self.im.clone(),
            im: -&self.re,
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::reduced(&self.re * k.numer(), &self.im * k.numer(), &self.den * k.denom())
    }

    /// True when the value is `-r` for a positive real `r`, or `-r i` for a
    /// positive real `r`. Used to pull a leading minus sign out when printing.
    pub fn is_negative_like(&self) -> bool {
        if self.im.is_zero() {
            self.re.is_negative()
        } else if self.re.is_zero() {
            self.im.is_negative()
        } else {
            false
        }
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat::default()
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        GaussRat::from_int(1)
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        GaussRat::from_int(n)
    }
}

impl From<BigRational> for GaussRat {
    fn from(r: BigRational) -> Self {
        GaussRat::from_real(r)
    }
}

fn add_parts(a: &GaussRat, b: &GaussRat, negate: bool) -> GaussRat {
    let (bre, bim) = if negate {
        (-&b.re, -&b.im)
    } else {
        (b.re.clone(), b.im.clone())
    };
    if a.den == b.den {
        return GaussRat::reduced(&a.re + bre, &a.im + bim, a.den.clone());
    }
    let g = a.den.gcd(&b.den);
    let fa = &b.den / &g;
    let fb = &a.den / &g;
    GaussRat::reduced(
        &a.re * &fa + bre * &fb,
        &a.im * &fa + bim * &fb,
        &a.den * fa,
    )
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, rhs: &GaussRat) -> GaussRat {
        add_parts(self, rhs, false)
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, rhs: GaussRat) -> GaussRat {
        add_parts(&self, &rhs, false)
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, rhs: &GaussRat) {
        *self = add_parts(self, rhs, false);
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, rhs: &GaussRat) {
        *self = add_parts(self, rhs, true);
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, rhs: &GaussRat) -> GaussRat {
        add_parts(self, rhs, true)
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, rhs: GaussRat) -> GaussRat {
        add_parts(&self, &rhs, true)
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: &GaussRat) -> GaussRat {
        let den = &self.den * &rhs.den;
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussRat::reduced(&self.re * &rhs.re, BigInt::zero(), den);
        }
        GaussRat::reduced(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
            den,
        )
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: GaussRat) -> GaussRat {
        &self * &rhs
    }
}

impl<'a> Div<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    /// Panics on division by zero.
    fn div(self, rhs: &GaussRat) -> GaussRat {
        self.mul(&rhs.inv().expect("division by zero GaussRat"))
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat {
            re: -self.re,
            im: -self.im,
            den: self.den,
        }
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat {
            re: -&self.re,
            im: -&self.im,
            den: self.den.clone(),
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Canonical rendering: `3/2`, `-1/2i`, `i`, `-i`, `(3/2 + 1/2i)`.
impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_imag = |f: &mut fmt::Formatter<'_>, im: &BigRational| -> fmt::Result {
            if im.is_one() {
                write!(f, "i")
            } else if (-im).is_one() {
                write!(f, "-i")
            } else {
                write_rational(f, im)?;
                write!(f, "i")
            }
        };
        let (re, im) = (self.re(), self.im());
        match (re.is_zero(), im.is_zero()) {
            (_, true) => write_rational(f, &re),
            (true, false) => write_imag(f, &im),
            (false, false) => {
                write!(f, "(")?;
                write_rational(f, &re)?;
                if im.is_negative() {
                    write!(f, " - ")?;
                    write_imag(f, &-im)?;
                } else {
                    write!(f, " + ")?;
                    write_imag(f, &im)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        let i = GaussRat::i();
        assert_eq!(&i * &i, GaussRat::from_int(-1));
        assert_eq!(i.mul_i(), GaussRat::from_int(-1));
        assert_eq!(i.mul_neg_i(), GaussRat::one());
    }

    #[test]
    fn canonical_denominators() {
        let a = GaussRat::ratio(2, -4);
        assert_eq!(a, GaussRat::ratio(-1, 2));
        assert_eq!(a.to_string(), "-1/2");
    }

    #[test]
    fn conjugate_sum_is_real() {
        let a = GaussRat::new(GaussRat::ratio(1, 2).re(), BigRational::one());
        let s = &a + &a.conj();
        assert!(s.is_real());
        assert_eq!(s, GaussRat::one());
    }

    #[test]
    fn inverse() {
        let a = GaussRat::new(GaussRat::ratio(3, 1).re(), GaussRat::ratio(-4, 7).re());
        assert_eq!(&a * &a.inv().unwrap(), GaussRat::one());
        assert!(GaussRat::zero().inv().is_none());
    }

    #[test]
    fn display() {
        let c = GaussRat::new(GaussRat::ratio(3, 2).re(), GaussRat::ratio(1, 2).re());
        assert_eq!(c.to_string(), "(3/2 + 1/2i)");
        assert_eq!(c.conj().to_string(), "(3/2 - 1/2i)");
        assert_eq!(GaussRat::i().to_string(), "i");
        assert_eq!((-GaussRat::i()).to_string(), "-i");
        assert_eq!(GaussRat::from_int(7).to_string(), "7");
    }

    #[test]
    fn mixed_denominators() {
        let a = GaussRat::new(GaussRat::ratio(1, 6).re(), GaussRat::ratio(1, 4).re());
        let b = GaussRat::ratio(5, 6);
        assert_eq!((&a + &b).to_string(), "(1 + 1/4i)");
        assert_eq!(&(&a - &a), &GaussRat::zero());
        assert_eq!(a.re(), BigRational::new(1.into(), 6.into()));
        assert_eq!(a.im(), BigRational::new(1.into(), 4.into()));
        let p = &a * &GaussRat::from_int(12);
        assert_eq!(p.to_string(), "(2 + 3i)");
    }
}
