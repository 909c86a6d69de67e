//! Exact scalars: Gaussian rationals extended by formal square roots.
//!
//! A [`ScalarExt`] is a finite sum `sum_r (a_r + b_r i) * sqrt(r)` over
//! squarefree positive integers `r`, with exact rational `a_r`, `b_r`.
//! Radicand `1` carries the plain rational-plus-`i` part. Products reduce
//! `sqrt(r)*sqrt(s)` to a squarefree radicand by extracting square factors,
//! so equal values always have identical term maps.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{CoreError, Result};

pub type Rational = BigRational;

/// `p/q` as an exact rational.
pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Integer `n` as an exact rational.
pub fn rat_int(n: i64) -> Rational {
    BigRational::from(BigInt::from(n))
}

/// A Gaussian rational `re + im*i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gaussian {
    pub re: Rational,
    pub im: Rational,
}

impl Gaussian {
    pub fn new(re: Rational, im: Rational) -> Self {
        Gaussian { re, im }
    }

    pub fn zero() -> Self {
        Gaussian::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        Gaussian::new(Rational::one(), Rational::zero())
    }

    pub fn i() -> Self {
        Gaussian::new(Rational::zero(), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn mul(&self, other: &Gaussian) -> Gaussian {
        Gaussian::new(
            &self.re * &other.re - &self.im * &other.im,
            &self.re * &other.im + &self.im * &other.re,
        )
    }

    pub fn add(&self, other: &Gaussian) -> Gaussian {
        Gaussian::new(&self.re + &other.re, &self.im + &other.im)
    }

    pub fn neg(&self) -> Gaussian {
        Gaussian::new(-self.re.clone(), -self.im.clone())
    }

    /// `1/(re + im*i)`; error on zero.
    pub fn inv(&self) -> Result<Gaussian> {
        let norm = &self.re * &self.re + &self.im * &self.im;
        if norm.is_zero() {
            return Err(CoreError::DivisionByZero);
        }
        Ok(Gaussian::new(&self.re / &norm, -(&self.im / &norm)))
    }
}

/// Splits `n > 0` as `k^2 * m` with `m` squarefree; returns `(k, m)`.
fn extract_square(n: u128) -> (u128, u128) {
    debug_assert!(n > 0);
    let mut m = n;
    let mut k: u128 = 1;
    let mut p: u128 = 2;
    while p * p <= m {
        while m % (p * p) == 0 {
            m /= p * p;
            k *= p;
        }
        p += 1;
    }
    (k, m)
}

/// Element of `Q(i)` extended by formal square roots of squarefree positive
/// integers. The map key is the radicand; key `1` is the rational part.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ScalarExt {
    terms: BTreeMap<u128, Gaussian>,
}

impl ScalarExt {
    pub fn zero() -> Self {
        ScalarExt::default()
    }

    pub fn one() -> Self {
        ScalarExt::from_gaussian(Gaussian::one())
    }

    pub fn i() -> Self {
        ScalarExt::from_gaussian(Gaussian::i())
    }

    pub fn from_gaussian(g: Gaussian) -> Self {
        let mut s = ScalarExt::zero();
        s.add_term(1, g);
        s
    }

    pub fn from_rational(r: Rational) -> Self {
        ScalarExt::from_gaussian(Gaussian::new(r, Rational::zero()))
    }

    pub fn from_int(n: i64) -> Self {
        ScalarExt::from_rational(rat_int(n))
    }

    /// `coeff * sqrt(radicand)`, reducing the radicand to squarefree form.
    pub fn radical(coeff: Gaussian, radicand: u128) -> Self {
        assert!(radicand > 0, "radicand must be positive");
        let (k, m) = extract_square(radicand);
        let scale = Gaussian::new(Rational::from(BigInt::from(k)), Rational::zero());
        let mut s = ScalarExt::zero();
        s.add_term(m, coeff.mul(&scale));
        s
    }

    /// The branch `sqrt(ix) > 0 if ix > 0`: positive root for `r > 0`,
    /// `i*sqrt(|r|)` for `r < 0`. Total on nonzero rationals.
    pub fn sqrt_branch(r: &Rational) -> Result<ScalarExt> {
        if r.is_zero() {
            return Err(CoreError::DivisionByZero);
        }
        let p = r.numer().abs();
        let q = r.denom().clone();
        // sqrt(p/q) = sqrt(p*q)/q
        let pq = (&p * &q)
            .to_string()
            .parse::<u128>()
            .expect("radicand exceeds supported range");
        let coeff = Gaussian::new(Rational::new(BigInt::one(), q), Rational::zero());
        let root = ScalarExt::radical(coeff, pq);
        if r.is_positive() {
            Ok(root)
        } else {
            Ok(&root * &ScalarExt::i())
        }
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> ScalarExt {
        match k.rem_euclid(4) {
            0 => ScalarExt::one(),
            1 => ScalarExt::i(),
            2 => -&ScalarExt::one(),
            _ => -&ScalarExt::i(),
        }
    }

    fn add_term(&mut self, radicand: u128, g: Gaussian) {
        if g.is_zero() {
            return;
        }
        match self.terms.get_mut(&radicand) {
            Some(existing) => {
                *existing = existing.add(&g);
                if existing.is_zero() {
                    self.terms.remove(&radicand);
                }
            }
            None => {
                self.terms.insert(radicand, g);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self == &ScalarExt::one()
    }

    /// The rational part (radicand-1 coefficient), if no root terms remain.
    pub fn as_gaussian(&self) -> Option<&Gaussian> {
        if self.terms.is_empty() {
            return None;
        }
        if self.terms.len() == 1 {
            return self.terms.get(&1);
        }
        None
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        let g = self.as_gaussian()?;
        if g.im.is_zero() {
            Some(g.re.clone())
        } else {
            None
        }
    }

    pub fn scale(&self, r: &Rational) -> ScalarExt {
        self.scale_gaussian(&Gaussian::new(r.clone(), Rational::zero()))
    }

    pub fn scale_gaussian(&self, g: &Gaussian) -> ScalarExt {
        let mut out = ScalarExt::zero();
        for (rad, c) in &self.terms {
            out.add_term(*rad, c.mul(g));
        }
        out
    }

    /// Inverse of a single-radicand term; a multi-term sum is rejected.
    pub fn inv(&self) -> Result<ScalarExt> {
        if self.terms.len() != 1 {
            return Err(CoreError::NonInvertibleScalar);
        }
        let (rad, g) = self.terms.iter().next().unwrap();
        // 1/(g*sqrt(r)) = g^{-1} * sqrt(r)/r
        let ginv = g.inv().map_err(|_| CoreError::NonInvertibleScalar)?;
        let rad_rat = Rational::from(BigInt::from(*rad));
        let mut out = ScalarExt::zero();
        out.add_term(
            *rad,
            ginv.mul(&Gaussian::new(rad_rat.recip(), Rational::zero())),
        );
        Ok(out)
    }
}

impl Add for &ScalarExt {
    type Output = ScalarExt;
    fn add(self, other: &ScalarExt) -> ScalarExt {
        let mut out = self.clone();
        for (rad, g) in &other.terms {
            out.add_term(*rad, g.clone());
        }
        out
    }
}

impl Sub for &ScalarExt {
    type Output = ScalarExt;
    fn sub(self, other: &ScalarExt) -> ScalarExt {
        self + &(-other)
    }
}

impl Neg for &ScalarExt {
    type Output = ScalarExt;
    fn neg(self) -> ScalarExt {
        let mut out = ScalarExt::zero();
        for (rad, g) in &self.terms {
            out.add_term(*rad, g.neg());
        }
        out
    }
}

impl Mul for &ScalarExt {
    type Output = ScalarExt;
    fn mul(self, other: &ScalarExt) -> ScalarExt {
        let mut out = ScalarExt::zero();
        for (r, a) in &self.terms {
            for (s, b) in &other.terms {
                // sqrt(r)*sqrt(s) = k*sqrt(m) with r*s = k^2 m squarefree
                let (k, m) = extract_square(r * s);
                let scale = Gaussian::new(Rational::from(BigInt::from(k)), Rational::zero());
                out.add_term(m, a.mul(b).mul(&scale));
            }
        }
        out
    }
}

fn fmt_gaussian(g: &Gaussian, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if g.im.is_zero() {
        write!(f, "{}", g.re)
    } else if g.re.is_zero() {
        write!(f, "{}i", g.im)
    } else if g.im.is_negative() {
        write!(f, "({} - {}i)", g.re, -g.im.clone())
    } else {
        write!(f, "({} + {}i)", g.re, g.im)
    }
}

impl fmt::Display for ScalarExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let wrap = self.terms.len() > 1;
        if wrap {
            write!(f, "(")?;
        }
        for (idx, (rad, g)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            if *rad == 1 {
                fmt_gaussian(g, f)?;
            } else if g == &Gaussian::one() {
                write!(f, "sqrt({rad})")?;
            } else {
                fmt_gaussian(g, f)?;
                write!(f, "*sqrt({rad})")?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt(n: u128) -> ScalarExt {
        ScalarExt::radical(Gaussian::one(), n)
    }

    #[test]
    fn sqrt2_times_sqrt2_is_two() {
        assert_eq!(&sqrt(2) * &sqrt(2), ScalarExt::from_int(2));
    }

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(&ScalarExt::i() * &ScalarExt::i(), ScalarExt::from_int(-1));
    }

    #[test]
    fn mixed_radical_product_reduces() {
        // (1+i)*sqrt(3) * sqrt(12) = (1+i)*sqrt(36) = 6(1+i)
        let a = ScalarExt::radical(Gaussian::new(rat_int(1), rat_int(1)), 3);
        let b = sqrt(12);
        let expected =
            ScalarExt::from_gaussian(Gaussian::new(rat_int(6), rat_int(6)));
        assert_eq!(&a * &b, expected);
    }

    #[test]
    fn inv_of_monomial() {
        // 1/(2*sqrt(3)) = sqrt(3)/6
        let a = ScalarExt::radical(Gaussian::new(rat_int(2), rat_int(0)), 3);
        let inv = a.inv().unwrap();
        assert_eq!(&a * &inv, ScalarExt::one());
    }

    #[test]
    fn inv_of_sum_rejected() {
        let a = &ScalarExt::one() + &sqrt(2);
        assert_eq!(a.inv(), Err(CoreError::NonInvertibleScalar));
    }

    #[test]
    fn inv_of_zero_rejected() {
        assert!(ScalarExt::zero().inv().is_err());
    }

    #[test]
    fn sqrt_branch_negative_is_imaginary() {
        // sqrt(-4) = 2i under the branch sqrt(ix) > 0 for ix > 0
        let s = ScalarExt::sqrt_branch(&rat_int(-4)).unwrap();
        assert_eq!(s, ScalarExt::from_gaussian(Gaussian::new(rat_int(0), rat_int(2))));
    }

    #[test]
    fn rendering_is_canonical() {
        let v = ScalarExt::radical(Gaussian::new(rat(3, 2), rat_int(1)), 5);
        assert_eq!(v.to_string(), "(3/2 + 1i)*sqrt(5)");
        assert_eq!(ScalarExt::zero().to_string(), "0");
        assert_eq!(ScalarExt::i_pow(3).to_string(), "-1i");
    }
}
