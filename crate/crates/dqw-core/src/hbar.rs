//! Truncated Laurent series in the formal parameter `h` (Planck constant).
//!
//! Every value carries an explicit power window `[pmin, pmax]`; arithmetic
//! intersects the operands' windows and silently drops powers outside it.
//! `h` is never evaluated at a number.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Result;
use crate::scalar::{Rational, ScalarExt};

/// Default window wide enough for every desk-scale computation here.
pub const DEFAULT_WINDOW: (i64, i64) = (-64, 64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbarLaurent {
    window: (i64, i64),
    coeffs: BTreeMap<i64, ScalarExt>,
}

impl HbarLaurent {
    pub fn zero() -> Self {
        HbarLaurent { window: DEFAULT_WINDOW, coeffs: BTreeMap::new() }
    }

    pub fn zero_window(window: (i64, i64)) -> Self {
        HbarLaurent { window, coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        HbarLaurent::monomial(0, ScalarExt::one())
    }

    pub fn from_scalar(s: ScalarExt) -> Self {
        HbarLaurent::monomial(0, s)
    }

    pub fn from_rational(r: Rational) -> Self {
        HbarLaurent::from_scalar(ScalarExt::from_rational(r))
    }

    /// `s * h^p` in the default window.
    pub fn monomial(p: i64, s: ScalarExt) -> Self {
        let mut v = HbarLaurent::zero();
        v.add_term(p, s);
        v
    }

    /// `h`.
    pub fn hbar() -> Self {
        HbarLaurent::monomial(1, ScalarExt::one())
    }

    /// `1/(i*h) = -i * h^{-1}`.
    pub fn one_over_ihbar() -> Self {
        HbarLaurent::monomial(-1, -&ScalarExt::i())
    }

    /// `i*h`.
    pub fn ihbar() -> Self {
        HbarLaurent::monomial(1, ScalarExt::i())
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, p: i64) -> ScalarExt {
        self.coeffs.get(&p).cloned().unwrap_or_else(ScalarExt::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &ScalarExt)> {
        self.coeffs.iter().map(|(p, s)| (*p, s))
    }

    fn add_term(&mut self, p: i64, s: ScalarExt) {
        if s.is_zero() || p < self.window.0 || p > self.window.1 {
            return;
        }
        match self.coeffs.get_mut(&p) {
            Some(existing) => {
                *existing = &*existing + &s;
                if existing.is_zero() {
                    self.coeffs.remove(&p);
                }
            }
            None => {
                self.coeffs.insert(p, s);
            }
        }
    }

    fn intersect_window(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
        (a.0.max(b.0), a.1.min(b.1))
    }

    pub fn scale(&self, s: &ScalarExt) -> HbarLaurent {
        let mut out = HbarLaurent::zero_window(self.window);
        for (p, c) in &self.coeffs {
            out.add_term(*p, s * c);
        }
        out
    }

    /// Multiplication by `h^k`, truncating at the window.
    pub fn shift(&self, k: i64) -> HbarLaurent {
        let mut out = HbarLaurent::zero_window(self.window);
        for (p, c) in &self.coeffs {
            out.add_term(p + k, c.clone());
        }
        out
    }

    /// Inverse of a single-power term whose scalar is a radical monomial.
    pub fn inv(&self) -> Result<HbarLaurent> {
        if self.coeffs.len() != 1 {
            return Err(crate::error::CoreError::NonInvertibleScalar);
        }
        let (p, s) = self.coeffs.iter().next().unwrap();
        Ok(HbarLaurent::monomial(-p, s.inv()?))
    }

    /// Lowest h-power with a nonzero coefficient.
    pub fn min_power(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }
}

impl Add for &HbarLaurent {
    type Output = HbarLaurent;
    fn add(self, other: &HbarLaurent) -> HbarLaurent {
        let mut out =
            HbarLaurent::zero_window(HbarLaurent::intersect_window(self.window, other.window));
        for (p, c) in &self.coeffs {
            out.add_term(*p, c.clone());
        }
        for (p, c) in &other.coeffs {
            out.add_term(*p, c.clone());
        }
        out
    }
}

impl Sub for &HbarLaurent {
    type Output = HbarLaurent;
    fn sub(self, other: &HbarLaurent) -> HbarLaurent {
        self + &(-other)
    }
}

impl Neg for &HbarLaurent {
    type Output = HbarLaurent;
    fn neg(self) -> HbarLaurent {
        let mut out = HbarLaurent::zero_window(self.window);
        for (p, c) in &self.coeffs {
            out.add_term(*p, -c);
        }
        out
    }
}

impl Mul for &HbarLaurent {
    type Output = HbarLaurent;
    fn mul(self, other: &HbarLaurent) -> HbarLaurent {
        let mut out =
            HbarLaurent::zero_window(HbarLaurent::intersect_window(self.window, other.window));
        for (p, a) in &self.coeffs {
            for (q, b) in &other.coeffs {
                out.add_term(p + q, a * b);
            }
        }
        out
    }
}

impl fmt::Display for HbarLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (p, s)) in self.coeffs.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            match p {
                0 => write!(f, "{s}")?,
                1 if s.is_one() => write!(f, "h")?,
                1 => write!(f, "{s}*h")?,
                _ if s.is_one() => write!(f, "h^{p}")?,
                _ => write!(f, "{s}*h^{p}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ihbar_inverse_pair() {
        let prod = &HbarLaurent::ihbar() * &HbarLaurent::one_over_ihbar();
        assert_eq!(prod, HbarLaurent::one());
    }

    #[test]
    fn window_intersection_truncates() {
        let a = HbarLaurent {
            window: (0, 2),
            coeffs: [(2, ScalarExt::one())].into_iter().collect(),
        };
        let b = HbarLaurent {
            window: (0, 3),
            coeffs: [(2, ScalarExt::one())].into_iter().collect(),
        };
        let prod = &a * &b; // h^4 falls outside [0,2]
        assert!(prod.is_zero());
        assert_eq!(prod.window(), (0, 2));
    }

    #[test]
    fn rendering() {
        let v = &HbarLaurent::monomial(-1, ScalarExt::from_int(3)) + &HbarLaurent::one();
        assert_eq!(v.to_string(), "3*h^-1 + 1");
    }
}
