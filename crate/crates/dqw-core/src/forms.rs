//! Differential forms on a flat chart with polynomial base coefficients and
//! Weyl-algebra fiber values: exterior calculus, the flat and lifted Fedosov
//! connections, and the quantization embedding `f -> f(x+xh, xi+xih)`.
//!
//! The symplectic form is fixed as `omega = dxi ^ dx`, matching the product
//! convention `[xih, xh] = i*h`. The exterior generators `dxh_j` are carried
//! as inert symbols for the resolution complexes; the connections treat them
//! as constants.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num::BigInt;
use num::One;

use crate::error::{CoreError, Result};
use crate::poly::BasePolynomial;
use crate::scalar::{Rational, ScalarExt};
use crate::weyl::{WeylElement, WeylMono};

/// Base monomial in the chart coordinates `x_1..x_n, xi_1..xi_n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BaseMono {
    pub x: Vec<u32>,
    pub xi: Vec<u32>,
}

impl BaseMono {
    pub fn unit(n: usize) -> Self {
        BaseMono { x: vec![0; n], xi: vec![0; n] }
    }

    pub fn degree(&self) -> u32 {
        self.x.iter().sum::<u32>() + self.xi.iter().sum::<u32>()
    }

    fn mul(&self, other: &BaseMono) -> BaseMono {
        BaseMono {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Exterior word over the ordered generators
/// `dx_1..dx_n, dxi_1..dxi_n, dxh_1..dxh_n` as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExtWord(pub u32);

impl ExtWord {
    pub const EMPTY: ExtWord = ExtWord(0);

    pub fn dx(j: usize) -> ExtWord {
        ExtWord(1 << j)
    }

    pub fn dxi(n: usize, j: usize) -> ExtWord {
        ExtWord(1 << (n + j))
    }

    pub fn dxh(n: usize, j: usize) -> ExtWord {
        ExtWord(1 << (2 * n + j))
    }

    pub fn degree(self) -> u32 {
        self.0.count_ones()
    }

    /// Wedge of two sorted words; `None` on a repeated generator, else the
    /// merged word and the Koszul sign.
    pub fn wedge(self, other: ExtWord) -> Option<(ExtWord, i32)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // Sign: for each generator of `other`, count generators of `self`
        // strictly above it (moves needed to interleave sorted positions).
        let mut sign = 0u32;
        let mut bits = other.0;
        while bits != 0 {
            let b = bits & bits.wrapping_neg();
            let pos = b.trailing_zeros();
            sign += (self.0 >> (pos + 1)).count_ones();
            bits ^= b;
        }
        let s = if sign % 2 == 0 { 1 } else { -1 };
        Some((ExtWord(self.0 | other.0), s))
    }
}

/// A differential form with polynomial base coefficients valued in the Weyl
/// algebra. Mixed exterior degrees are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyForm {
    n: usize,
    terms: BTreeMap<(BaseMono, ExtWord), WeylElement>,
}

impl PolyForm {
    pub fn zero(n: usize) -> Self {
        PolyForm { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        PolyForm::from_weyl(WeylElement::one(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn from_weyl(w: WeylElement) -> Self {
        let n = w.n();
        let mut form = PolyForm::zero(n);
        form.add_term(BaseMono::unit(n), ExtWord::EMPTY, w);
        form
    }

    pub fn term(n: usize, base: BaseMono, word: ExtWord, value: WeylElement) -> Self {
        let mut form = PolyForm::zero(n);
        form.add_term(base, word, value);
        form
    }

    /// The base coordinate `x_j` as a 0-form.
    pub fn base_x(n: usize, j: usize) -> Self {
        let mut base = BaseMono::unit(n);
        base.x[j] = 1;
        PolyForm::term(n, base, ExtWord::EMPTY, WeylElement::one(n))
    }

    /// The base coordinate `xi_j` as a 0-form.
    pub fn base_xi(n: usize, j: usize) -> Self {
        let mut base = BaseMono::unit(n);
        base.xi[j] = 1;
        PolyForm::term(n, base, ExtWord::EMPTY, WeylElement::one(n))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(BaseMono, ExtWord), &WeylElement)> {
        self.terms.iter()
    }

    fn add_term(&mut self, base: BaseMono, word: ExtWord, value: WeylElement) {
        if value.is_zero() {
            return;
        }
        let key = (base, word);
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing = &*existing + &value;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, value);
            }
        }
    }

    pub fn scale(&self, s: &ScalarExt) -> PolyForm {
        let mut out = PolyForm::zero(self.n);
        for ((b, w), v) in &self.terms {
            out.add_term(b.clone(), *w, v.scale(s));
        }
        out
    }

    /// Extraction of the exterior-degree-`k` part (exact).
    pub fn degree_part(&self, k: u32) -> PolyForm {
        let mut out = PolyForm::zero(self.n);
        for ((b, w), v) in &self.terms {
            if w.degree() == k {
                out.add_term(b.clone(), *w, v.clone());
            }
        }
        out
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|(_, w)| w.degree()).max().unwrap_or(0)
    }

    fn check_chart(&self, other: &PolyForm) -> Result<()> {
        if self.n != other.n {
            return Err(CoreError::ChartMismatch);
        }
        Ok(())
    }

    /// Graded product: wedge on exterior words, Moyal product on fiber values.
    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        self.check_chart(other)?;
        let mut out = PolyForm::zero(self.n);
        for ((b1, w1), v1) in &self.terms {
            for ((b2, w2), v2) in &other.terms {
                if let Some((w, sign)) = w1.wedge(*w2) {
                    let mut v = v1.star(v2)?;
                    if sign < 0 {
                        v = -&v;
                    }
                    out.add_term(b1.mul(b2), w, v);
                }
            }
        }
        Ok(out)
    }

    /// De Rham differential in the base variables `x, xi` only.
    pub fn d_base(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.n);
        for ((b, w), v) in &self.terms {
            for j in 0..self.n {
                if b.x[j] > 0 {
                    let mut b2 = b.clone();
                    b2.x[j] -= 1;
                    if let Some((word, sign)) = ExtWord::dx(j).wedge(*w) {
                        let mut val =
                            v.scale(&ScalarExt::from_rational(Rational::from(BigInt::from(b.x[j]))));
                        if sign < 0 {
                            val = -&val;
                        }
                        out.add_term(b2, word, val);
                    }
                }
                if b.xi[j] > 0 {
                    let mut b2 = b.clone();
                    b2.xi[j] -= 1;
                    if let Some((word, sign)) = ExtWord::dxi(self.n, j).wedge(*w) {
                        let mut val = v
                            .scale(&ScalarExt::from_rational(Rational::from(BigInt::from(b.xi[j]))));
                        if sign < 0 {
                            val = -&val;
                        }
                        out.add_term(b2, word, val);
                    }
                }
            }
        }
        out
    }

    /// Applies `op` to every fiber value and wedges `gen` in from the left.
    fn fiber_op_wedge(
        &self,
        gen: ExtWord,
        op: impl Fn(&WeylElement) -> WeylElement,
    ) -> PolyForm {
        let mut out = PolyForm::zero(self.n);
        for ((b, w), v) in &self.terms {
            if let Some((word, sign)) = gen.wedge(*w) {
                let mut val = op(v);
                if sign < 0 {
                    val = -&val;
                }
                out.add_term(b.clone(), word, val);
            }
        }
        out
    }

    /// The flat Fedosov connection
    /// `(d/dx - d/dxh) dx + (d/dxi - d/dxih) dxi`.
    pub fn fedosov_flat_apply(&self) -> PolyForm {
        let mut out = self.d_base();
        for j in 0..self.n {
            out = &out - &self.fiber_op_wedge(ExtWord::dx(j), |v| v.deriv_x(j));
            out = &out - &self.fiber_op_wedge(ExtWord::dxi(self.n, j), |v| v.deriv_xi(j));
        }
        out
    }

    /// The weight `-1` connection one-form
    /// `A = (1/(i h)) (-xih dx + xh dxi)` of the lifted Fedosov connection.
    pub fn lifted_connection_form(n: usize) -> PolyForm {
        let mut a = PolyForm::zero(n);
        for j in 0..n {
            a.add_term(
                BaseMono::unit(n),
                ExtWord::dx(j),
                -&WeylElement::xi_hat(n, j).div_ihbar(),
            );
            a.add_term(
                BaseMono::unit(n),
                ExtWord::dxi(n, j),
                WeylElement::x_hat(n, j).div_ihbar(),
            );
        }
        a
    }

    /// The lifted Fedosov connection `d + [A, -]` with `A` as above; the
    /// central parts of `A` act by zero, so this projects onto the flat
    /// connection.
    pub fn fedosov_lifted_apply(&self) -> Result<PolyForm> {
        let a = PolyForm::lifted_connection_form(self.n);
        let mut out = self.d_base();
        // graded commutator [A, v] = A ^ v - (-1)^{|v|} v ^ A, per degree
        for k in 0..=self.max_degree() {
            let part = self.degree_part(k);
            if part.is_zero() {
                continue;
            }
            let left = a.wedge(&part)?;
            let right = part.wedge(&a)?;
            out = &out + &left;
            if k % 2 == 0 {
                out = &out - &right;
            } else {
                out = &out + &right;
            }
        }
        Ok(out)
    }

    /// Curvature `dA + A ^ A` of the lifted connection: a central two-form.
    pub fn lifted_curvature(n: usize) -> Result<PolyForm> {
        let a = PolyForm::lifted_connection_form(n);
        Ok(&a.d_base() + &a.wedge(&a)?)
    }

    /// The quantization embedding `f(x, xi) -> f(x + xh, xi + xih)` as a
    /// horizontal 0-form. `f` has `2n` variables: `x_1..x_n, xi_1..xi_n`.
    pub fn quantization_embed(n: usize, f: &BasePolynomial) -> PolyForm {
        assert_eq!(f.nvars(), 2 * n);
        let mut out = PolyForm::zero(n);
        for (exp, c) in f.terms() {
            let (xe, xie) = exp.split_at(n);
            // binomial expansion per variable
            let mut parts: Vec<(BaseMono, WeylMono, Rational)> = vec![(
                BaseMono::unit(n),
                WeylMono { alpha: vec![0; n], beta: vec![0; n], hpow: 0 },
                c.clone(),
            )];
            for j in 0..n {
                let mut next = Vec::new();
                for (b, m, coeff) in &parts {
                    for i in 0..=xe[j] {
                        let binom = binomial(xe[j], i);
                        let mut b2 = b.clone();
                        let mut m2 = m.clone();
                        b2.x[j] += xe[j] - i;
                        m2.alpha[j] += i;
                        next.push((b2, m2, coeff * &binom));
                    }
                }
                parts = next;
                let mut next = Vec::new();
                for (b, m, coeff) in &parts {
                    for i in 0..=xie[j] {
                        let binom = binomial(xie[j], i);
                        let mut b2 = b.clone();
                        let mut m2 = m.clone();
                        b2.xi[j] += xie[j] - i;
                        m2.beta[j] += i;
                        next.push((b2, m2, coeff * &binom));
                    }
                }
                parts = next;
            }
            for (b, m, coeff) in parts {
                out.add_term(
                    b,
                    ExtWord::EMPTY,
                    WeylElement::monomial(n, m, ScalarExt::from_rational(coeff)),
                );
            }
        }
        out
    }

    /// Classical part: sets `xh = xih = h = 0` and returns the base
    /// polynomial (2n variables).
    pub fn classical_base(&self) -> BasePolynomial {
        let mut f = BasePolynomial::zero(2 * self.n);
        for ((b, w), v) in &self.terms {
            if *w != ExtWord::EMPTY {
                continue;
            }
            for (m, c) in v.terms() {
                if m.weight() == 0 && m.hpow == 0 {
                    if let Some(r) = c.as_rational() {
                        let mut exp = b.x.clone();
                        exp.extend_from_slice(&b.xi);
                        f = f.add(&BasePolynomial::monomial(2 * self.n, exp, r));
                    }
                }
            }
        }
        f
    }
}

fn binomial(n: u32, k: u32) -> Rational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(n - j);
        den *= BigInt::from(j + 1);
    }
    Rational::new(num, den)
}

impl Add for &PolyForm {
    type Output = PolyForm;
    fn add(self, other: &PolyForm) -> PolyForm {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for ((b, w), v) in &other.terms {
            out.add_term(b.clone(), *w, v.clone());
        }
        out
    }
}

impl Sub for &PolyForm {
    type Output = PolyForm;
    fn sub(self, other: &PolyForm) -> PolyForm {
        self + &(-other)
    }
}

impl Neg for &PolyForm {
    type Output = PolyForm;
    fn neg(self) -> PolyForm {
        let mut out = PolyForm::zero(self.n);
        for ((b, w), v) in &self.terms {
            out.add_term(b.clone(), *w, -v);
        }
        out
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, ((b, w), v)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            for (j, &k) in b.x.iter().enumerate() {
                if k == 1 {
                    factors.push(format!("x{}", j + 1));
                } else if k > 1 {
                    factors.push(format!("x{}^{k}", j + 1));
                }
            }
            for (j, &k) in b.xi.iter().enumerate() {
                if k == 1 {
                    factors.push(format!("xi{}", j + 1));
                } else if k > 1 {
                    factors.push(format!("xi{}^{k}", j + 1));
                }
            }
            for j in 0..self.n {
                if w.0 & ExtWord::dx(j).0 != 0 {
                    factors.push(format!("dx{}", j + 1));
                }
            }
            for j in 0..self.n {
                if w.0 & ExtWord::dxi(self.n, j).0 != 0 {
                    factors.push(format!("dxi{}", j + 1));
                }
            }
            for j in 0..self.n {
                if w.0 & ExtWord::dxh(self.n, j).0 != 0 {
                    factors.push(format!("dxh{}", j + 1));
                }
            }
            if factors.is_empty() {
                write!(f, "({v})")?;
            } else {
                write!(f, "({v})*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}
