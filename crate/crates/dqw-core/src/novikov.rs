//! Novikov ring/field arithmetic: finite sums `sum_k a_k E[c_k]` where
//! `E[c] = exp(c/(i*h))`, the `a_k` are [`HbarLaurent`] values, and exponents
//! are rationals strictly below a cutoff. The subring with all `c >= 0` plays
//! the role of the Novikov ring; arbitrary rational exponents give the field
//! fragment.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{Signed, Zero};

use crate::error::Result;
use crate::hbar::HbarLaurent;
use crate::scalar::{rat_int, Rational, ScalarExt};

/// Default exponent cutoff used across the crate.
pub fn default_cutoff() -> Rational {
    rat_int(40)
}

/// Valuation of a Novikov element: the smallest exponent present, or
/// `Infinite` for zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovElement {
    cutoff: Rational,
    terms: BTreeMap<Rational, HbarLaurent>,
}

impl NovikovElement {
    pub fn zero() -> Self {
        NovikovElement { cutoff: default_cutoff(), terms: BTreeMap::new() }
    }

    pub fn zero_cutoff(cutoff: Rational) -> Self {
        NovikovElement { cutoff, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        NovikovElement::monomial(Rational::zero(), HbarLaurent::one())
    }

    /// `a * E[c]`.
    pub fn monomial(c: Rational, a: HbarLaurent) -> Self {
        let mut v = NovikovElement::zero();
        v.add_term(c, a);
        v
    }

    /// `E[c] = exp(c/(i*h))`.
    pub fn exp(c: Rational) -> Self {
        NovikovElement::monomial(c, HbarLaurent::one())
    }

    pub fn from_hbar(a: HbarLaurent) -> Self {
        NovikovElement::monomial(Rational::zero(), a)
    }

    pub fn from_scalar(s: ScalarExt) -> Self {
        NovikovElement::from_hbar(HbarLaurent::from_scalar(s))
    }

    pub fn from_rational(r: Rational) -> Self {
        NovikovElement::from_scalar(ScalarExt::from_rational(r))
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn with_cutoff(&self, cutoff: Rational) -> NovikovElement {
        let mut out = NovikovElement::zero_cutoff(cutoff);
        for (c, a) in &self.terms {
            out.add_term(c.clone(), a.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Rational, &HbarLaurent)> {
        self.terms.iter()
    }

    pub fn coeff(&self, c: &Rational) -> HbarLaurent {
        self.terms.get(c).cloned().unwrap_or_else(HbarLaurent::zero)
    }

    fn add_term(&mut self, c: Rational, a: HbarLaurent) {
        if a.is_zero() || c >= self.cutoff {
            return;
        }
        match self.terms.get_mut(&c) {
            Some(existing) => {
                *existing = &*existing + &a;
                if existing.is_zero() {
                    self.terms.remove(&c);
                }
            }
            None => {
                self.terms.insert(c, a);
            }
        }
    }

    /// Membership in the Novikov ring proper: every exponent `>= 0`.
    pub fn in_lambda(&self) -> bool {
        self.terms.keys().all(|c| !c.is_negative())
    }

    /// Smallest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Valuation {
        match self.terms.keys().next() {
            Some(c) => Valuation::Finite(c.clone()),
            None => Valuation::Infinite,
        }
    }

    pub fn scale(&self, s: &ScalarExt) -> NovikovElement {
        let mut out = NovikovElement::zero_cutoff(self.cutoff.clone());
        for (c, a) in &self.terms {
            out.add_term(c.clone(), a.scale(s));
        }
        out
    }

    pub fn scale_hbar(&self, h: &HbarLaurent) -> NovikovElement {
        let mut out = NovikovElement::zero_cutoff(self.cutoff.clone());
        for (c, a) in &self.terms {
            out.add_term(c.clone(), a * h);
        }
        out
    }

    /// Inverse of a single-term element with invertible Laurent coefficient.
    pub fn inv(&self) -> Result<NovikovElement> {
        if self.terms.len() != 1 {
            return Err(crate::error::CoreError::NonInvertibleScalar);
        }
        let (c, a) = self.terms.iter().next().unwrap();
        Ok(NovikovElement::monomial(-c.clone(), a.inv()?))
    }

    /// Drops terms with valuation at or above `floor`.
    pub fn truncate_below(&self, floor: &Rational) -> NovikovElement {
        let mut out = NovikovElement::zero_cutoff(self.cutoff.clone().min(floor.clone()));
        for (c, a) in &self.terms {
            out.add_term(c.clone(), a.clone());
        }
        out
    }
}

impl Add for &NovikovElement {
    type Output = NovikovElement;
    fn add(self, other: &NovikovElement) -> NovikovElement {
        let cutoff = self.cutoff.clone().min(other.cutoff.clone());
        let mut out = NovikovElement::zero_cutoff(cutoff);
        for (c, a) in &self.terms {
            out.add_term(c.clone(), a.clone());
        }
        for (c, a) in &other.terms {
            out.add_term(c.clone(), a.clone());
        }
        out
    }
}

impl Sub for &NovikovElement {
    type Output = NovikovElement;
    fn sub(self, other: &NovikovElement) -> NovikovElement {
        self + &(-other)
    }
}

impl Neg for &NovikovElement {
    type Output = NovikovElement;
    fn neg(self) -> NovikovElement {
        let mut out = NovikovElement::zero_cutoff(self.cutoff.clone());
        for (c, a) in &self.terms {
            out.add_term(c.clone(), -a);
        }
        out
    }
}

impl Mul for &NovikovElement {
    type Output = NovikovElement;
    fn mul(self, other: &NovikovElement) -> NovikovElement {
        let cutoff = self.cutoff.clone().min(other.cutoff.clone());
        let mut out = NovikovElement::zero_cutoff(cutoff);
        for (c, a) in &self.terms {
            for (d, b) in &other.terms {
                out.add_term(c + d, a * b);
            }
        }
        out
    }
}

impl fmt::Display for NovikovElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (c, a)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            let needs_wrap = a.terms().count() > 1;
            if c.is_zero() {
                write!(f, "{a}")?;
            } else if a == &HbarLaurent::one() {
                write!(f, "E[c={c}]")?;
            } else if needs_wrap {
                write!(f, "({a})*E[c={c}]")?;
            } else {
                write!(f, "{a}*E[c={c}]")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn exponent_additivity() {
        let a = NovikovElement::exp(rat_int(1));
        let b = NovikovElement::exp(rat_int(2));
        assert_eq!(&a * &b, NovikovElement::exp(rat_int(3)));
    }

    #[test]
    fn cutoff_truncates_products() {
        let cutoff = rat_int(8);
        let one = NovikovElement::one().with_cutoff(cutoff.clone());
        let e5 = NovikovElement::exp(rat_int(5)).with_cutoff(cutoff.clone());
        let a = &one + &e5;
        let b = &one - &e5;
        // (1 + E[5])(1 - E[5]) = 1 - E[10], and E[10] is beyond the cutoff.
        assert_eq!(&a * &b, NovikovElement::one().with_cutoff(cutoff));
    }

    #[test]
    fn laurent_and_exponent_mix() {
        let a = NovikovElement::monomial(rat_int(1), HbarLaurent::monomial(-1, ScalarExt::one()));
        let b = NovikovElement::monomial(rat(1, 2), HbarLaurent::monomial(2, ScalarExt::one()));
        let expected =
            NovikovElement::monomial(rat(3, 2), HbarLaurent::monomial(1, ScalarExt::one()));
        assert_eq!(&a * &b, expected);
    }

    #[test]
    fn valuation_of_zero_is_infinite() {
        assert_eq!(NovikovElement::zero().valuation(), Valuation::Infinite);
    }

    #[test]
    fn valuation_is_min_exponent() {
        let v = &NovikovElement::exp(rat_int(-2)).scale(&ScalarExt::from_int(3))
            + &NovikovElement::exp(rat_int(7));
        assert_eq!(v.valuation(), Valuation::Finite(rat_int(-2)));
    }

    #[test]
    fn rendering() {
        let v = NovikovElement::monomial(
            rat(3, 2),
            HbarLaurent::monomial(-1, ScalarExt::radical(crate::scalar::Gaussian::new(rat(3, 2), rat_int(1)), 5)),
        );
        assert_eq!(v.to_string(), "(3/2 + 1i)*sqrt(5)*h^-1*E[c=3/2]");
    }
}
