//! Truncated graded Weyl algebra in `n` pairs of formal variables with the
//! Moyal-Weyl product.
//!
//! Elements are sparse sums of monomials `xh^alpha * xih^beta * h^p` with
//! [`ScalarExt`] coefficients, graded by `|xh_i| = |xih_i| = 1`, `|h| = 2`.
//! Each element carries a weight window `[wmin, wmax]`; products truncate to
//! the intersection window and never extend it, so associativity holds
//! exactly at the stated window. The product convention is fixed by
//! `[xih, xh] = i*h`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::BigInt;
use num::{One, Zero};

use crate::error::{CoreError, Result};
use crate::scalar::{Gaussian, Rational, ScalarExt};

/// Monomial key: multidegrees in the position and momentum variables plus an
/// integer power of `h`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeylMono {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub hpow: i64,
}

impl WeylMono {
    pub fn weight(&self) -> i64 {
        let d: u32 = self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>();
        d as i64 + 2 * self.hpow
    }

    fn unit(n: usize) -> Self {
        WeylMono { alpha: vec![0; n], beta: vec![0; n], hpow: 0 }
    }
}

/// Default weight window: generous enough that desk-scale computations see no
/// truncation unless they ask for it.
pub const DEFAULT_WINDOW: (i64, i64) = (-64, 64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    n: usize,
    window: (i64, i64),
    terms: BTreeMap<WeylMono, ScalarExt>,
}

fn falling(m: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc *= BigInt::from(m - j);
    }
    acc
}

fn factorial(k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 2..=k {
        acc *= BigInt::from(j);
    }
    acc
}

/// Enumerates multi-indices `0 <= kappa <= cap` componentwise.
fn multi_indices(cap: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &c in cap {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..=c {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl WeylElement {
    pub fn zero(n: usize) -> Self {
        WeylElement { n, window: DEFAULT_WINDOW, terms: BTreeMap::new() }
    }

    pub fn zero_window(n: usize, window: (i64, i64)) -> Self {
        WeylElement { n, window, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        WeylElement::monomial(n, WeylMono::unit(n), ScalarExt::one())
    }

    pub fn monomial(n: usize, mono: WeylMono, coeff: ScalarExt) -> Self {
        assert_eq!(mono.alpha.len(), n);
        assert_eq!(mono.beta.len(), n);
        let mut v = WeylElement::zero(n);
        v.add_term(mono, coeff);
        v
    }

    /// The position generator `xh_j` (0-based `j`).
    pub fn x_hat(n: usize, j: usize) -> Self {
        let mut m = WeylMono::unit(n);
        m.alpha[j] = 1;
        WeylElement::monomial(n, m, ScalarExt::one())
    }

    /// The momentum generator `xih_j` (0-based `j`).
    pub fn xi_hat(n: usize, j: usize) -> Self {
        let mut m = WeylMono::unit(n);
        m.beta[j] = 1;
        WeylElement::monomial(n, m, ScalarExt::one())
    }

    /// The central formal parameter `h`.
    pub fn hbar(n: usize) -> Self {
        let mut m = WeylMono::unit(n);
        m.hpow = 1;
        WeylElement::monomial(n, m, ScalarExt::one())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn with_window(&self, window: (i64, i64)) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, window);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WeylMono, &ScalarExt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &WeylMono) -> ScalarExt {
        self.terms.get(m).cloned().unwrap_or_else(ScalarExt::zero)
    }

    fn add_term(&mut self, m: WeylMono, c: ScalarExt) {
        if c.is_zero() {
            return;
        }
        let w = m.weight();
        if w < self.window.0 || w > self.window.1 {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing = &*existing + &c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, s: &ScalarExt) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, self.window);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), s * c);
        }
        out
    }

    /// Multiplication by `h^k` (central).
    pub fn shift_h(&self, k: i64) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, self.window);
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.hpow += k;
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Division by `i*h`: shifts `h`-power down and multiplies by `-i`.
    pub fn div_ihbar(&self) -> WeylElement {
        self.shift_h(-1).scale(&(-&ScalarExt::i()))
    }

    fn check_compatible(&self, other: &WeylElement) -> Result<()> {
        if self.n != other.n {
            return Err(CoreError::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// Moyal-Weyl product, truncated to the intersection weight window.
    pub fn star(&self, other: &WeylElement) -> Result<WeylElement> {
        self.check_compatible(other)?;
        let window = (self.window.0.max(other.window.0), self.window.1.min(other.window.1));
        let mut out = WeylElement::zero_window(self.n, window);
        let half_i = ScalarExt::from_gaussian(Gaussian::new(
            Rational::zero(),
            Rational::new(BigInt::one(), BigInt::from(2)),
        ));
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                // kernel exp((ih/2)(d_xi . d_x' - d_x . d_xi')) applied
                // left-factor-first
                let kcaps: Vec<u32> =
                    m1.beta.iter().zip(&m2.alpha).map(|(a, b)| *a.min(b)).collect();
                let lcaps: Vec<u32> =
                    m1.alpha.iter().zip(&m2.beta).map(|(a, b)| *a.min(b)).collect();
                for kappa in multi_indices(&kcaps) {
                    for lambda in multi_indices(&lcaps) {
                        let order: u32 =
                            kappa.iter().sum::<u32>() + lambda.iter().sum::<u32>();
                        let mut num = BigInt::one();
                        let mut den = BigInt::one();
                        for j in 0..self.n {
                            num *= falling(m1.beta[j], kappa[j])
                                * falling(m2.alpha[j], kappa[j])
                                * falling(m1.alpha[j], lambda[j])
                                * falling(m2.beta[j], lambda[j]);
                            den *= factorial(kappa[j]) * factorial(lambda[j]);
                        }
                        if num.is_zero() {
                            continue;
                        }
                        let lam_sum: u32 = lambda.iter().sum();
                        if lam_sum % 2 == 1 {
                            num = -num;
                        }
                        let mut coeff = (c1 * c2)
                            .scale(&Rational::new(num, den));
                        let mut ipow = ScalarExt::one();
                        for _ in 0..order {
                            ipow = &ipow * &half_i;
                        }
                        coeff = &coeff * &ipow;
                        let mono = WeylMono {
                            alpha: (0..self.n)
                                .map(|j| m1.alpha[j] + m2.alpha[j] - lambda[j] - kappa[j])
                                .collect(),
                            beta: (0..self.n)
                                .map(|j| m1.beta[j] + m2.beta[j] - kappa[j] - lambda[j])
                                .collect(),
                            hpow: m1.hpow + m2.hpow + order as i64,
                        };
                        out.add_term(mono, coeff);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `a*b - b*a` under the Moyal product.
    pub fn commutator(&self, other: &WeylElement) -> Result<WeylElement> {
        Ok(&self.star(other)? - &other.star(self)?)
    }

    /// The derivation `v -> (1/(i*h)) (a*v - v*a)`.
    pub fn ad_over_ihbar(&self, v: &WeylElement) -> Result<WeylElement> {
        Ok(self.commutator(v)?.div_ihbar())
    }

    /// Partial derivative in `xh_j`.
    pub fn deriv_x(&self, j: usize) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, self.window);
        for (m, c) in &self.terms {
            if m.alpha[j] == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.alpha[j] -= 1;
            out.add_term(m2, c.scale(&Rational::from(BigInt::from(m.alpha[j]))));
        }
        out
    }

    /// Partial derivative in `xih_j`.
    pub fn deriv_xi(&self, j: usize) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, self.window);
        for (m, c) in &self.terms {
            if m.beta[j] == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.beta[j] -= 1;
            out.add_term(m2, c.scale(&Rational::from(BigInt::from(m.beta[j]))));
        }
        out
    }

    /// Graded components `(weight, part)`, ascending; their sum is `self`.
    pub fn weight_decompose(&self) -> Vec<(i64, WeylElement)> {
        let mut parts: BTreeMap<i64, WeylElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            parts
                .entry(m.weight())
                .or_insert_with(|| WeylElement::zero_window(self.n, self.window))
                .add_term(m.clone(), c.clone());
        }
        parts.into_iter().collect()
    }

    /// Pointwise (commutative) product of the underlying symbols.
    pub fn pointwise_mul(&self, other: &WeylElement) -> Result<WeylElement> {
        self.check_compatible(other)?;
        let window = (self.window.0.max(other.window.0), self.window.1.min(other.window.1));
        let mut out = WeylElement::zero_window(self.n, window);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mono = WeylMono {
                    alpha: m1.alpha.iter().zip(&m2.alpha).map(|(a, b)| a + b).collect(),
                    beta: m1.beta.iter().zip(&m2.beta).map(|(a, b)| a + b).collect(),
                    hpow: m1.hpow + m2.hpow,
                };
                out.add_term(mono, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Setting `h = 0` and keeping only the stated classical symbol.
    pub fn classical_part(&self) -> WeylElement {
        let mut out = WeylElement::zero_window(self.n, self.window);
        for (m, c) in &self.terms {
            if m.hpow == 0 {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, xname: &str, xiname: &str) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            for (j, &a) in m.alpha.iter().enumerate() {
                if a == 1 {
                    factors.push(format!("{xname}{}", j + 1));
                } else if a > 1 {
                    factors.push(format!("{xname}{}^{a}", j + 1));
                }
            }
            for (j, &b) in m.beta.iter().enumerate() {
                if b == 1 {
                    factors.push(format!("{xiname}{}", j + 1));
                } else if b > 1 {
                    factors.push(format!("{xiname}{}^{b}", j + 1));
                }
            }
            if m.hpow == 1 {
                factors.push("h".into());
            } else if m.hpow != 0 {
                factors.push(format!("h^{}", m.hpow));
            }
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{c}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }

    /// Renders with the base-variable names `x1, xi1, ...`.
    pub fn display_plain(&self) -> String {
        struct Plain<'a>(&'a WeylElement);
        impl fmt::Display for Plain<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.render(f, "x", "xi")
            }
        }
        Plain(self).to_string()
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, "xh", "xih")
    }
}

impl Add for &WeylElement {
    type Output = WeylElement;
    fn add(self, other: &WeylElement) -> WeylElement {
        assert_eq!(self.n, other.n);
        let window = (self.window.0.max(other.window.0), self.window.1.min(other.window.1));
        let mut out = WeylElement::zero_window(self.n, window);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &WeylElement {
    type Output = WeylElement;
    fn sub(self, other: &WeylElement) -> WeylElement {
        self + &(-other)
    }
}

impl Neg for &WeylElement {
    type Output = WeylElement;
    fn neg(self) -> WeylElement {
        self.scale(&ScalarExt::from_int(-1))
    }
}

impl Mul for &WeylElement {
    type Output = WeylElement;
    fn mul(self, other: &WeylElement) -> WeylElement {
        self.star(other).expect("dimension mismatch")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbar::HbarLaurent;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_element(
        rng: &mut ChaCha8Rng,
        n: usize,
        max_weight: u32,
        nterms: usize,
    ) -> WeylElement {
        let mut v = WeylElement::zero(n);
        for _ in 0..nterms {
            let mut alpha = vec![0u32; n];
            let mut beta = vec![0u32; n];
            let mut budget = rng.gen_range(0..=max_weight);
            let hpow = rng.gen_range(0..=(budget / 2)) as i64;
            budget -= 2 * hpow as u32;
            for _ in 0..budget {
                let j = rng.gen_range(0..n);
                if rng.gen_bool(0.5) {
                    alpha[j] += 1;
                } else {
                    beta[j] += 1;
                }
            }
            let c = ScalarExt::from_gaussian(Gaussian::new(
                crate::scalar::rat_int(rng.gen_range(-3..=3)),
                crate::scalar::rat_int(rng.gen_range(-3..=3)),
            ));
            v = &v + &WeylElement::monomial(n, WeylMono { alpha, beta, hpow }, c);
        }
        v
    }

    fn ihbar(n: usize) -> WeylElement {
        WeylElement::hbar(n).scale(&ScalarExt::i())
    }

    #[test]
    fn heisenberg_relation() {
        for n in 1..=2 {
            for j in 0..n {
                for k in 0..n {
                    let lhs = WeylElement::xi_hat(n, j)
                        .commutator(&WeylElement::x_hat(n, k))
                        .unwrap();
                    let expected =
                        if j == k { ihbar(n) } else { WeylElement::zero(n) };
                    assert_eq!(lhs, expected, "[xih_{j}, xh_{k}] at n={n}");
                    assert!(WeylElement::x_hat(n, j)
                        .commutator(&WeylElement::x_hat(n, k))
                        .unwrap()
                        .is_zero());
                    assert!(WeylElement::xi_hat(n, j)
                        .commutator(&WeylElement::xi_hat(n, k))
                        .unwrap()
                        .is_zero());
                }
            }
        }
    }

    #[test]
    fn unit_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let f = random_element(&mut rng, 2, 6, 5);
            assert_eq!(WeylElement::one(2).star(&f).unwrap(), f);
            assert_eq!(f.star(&WeylElement::one(2)).unwrap(), f);
        }
    }

    #[test]
    fn x2_star_xi2_full_expansion() {
        // Oracle: direct summation of the bidifferential series, which
        // terminates for polynomials:
        //   x^2 * xi^2 = x^2 xi^2 + 2 (ih/2) x xi (2)(2)/1... expanded below.
        let x = WeylElement::x_hat(1, 0);
        let xi = WeylElement::xi_hat(1, 0);
        let x2 = x.star(&x).unwrap();
        let xi2 = xi.star(&xi).unwrap();
        let got = x2.star(&xi2).unwrap();

        // Order 0: x^2 xi^2. Order 1: -(ih/2)*2x*2xi = -2 ih x xi.
        // Order 2: (ih/2)^2/2 * (2)(2)... = ((ih)^2/8)*4 = -h^2/2.
        let mut expected = WeylElement::monomial(
            1,
            WeylMono { alpha: vec![2], beta: vec![2], hpow: 0 },
            ScalarExt::one(),
        );
        expected = &expected
            + &WeylElement::monomial(
                1,
                WeylMono { alpha: vec![1], beta: vec![1], hpow: 1 },
                ScalarExt::from_gaussian(Gaussian::new(
                    crate::scalar::rat_int(0),
                    crate::scalar::rat_int(-2),
                )),
            );
        expected = &expected
            + &WeylElement::monomial(
                1,
                WeylMono { alpha: vec![0], beta: vec![0], hpow: 2 },
                ScalarExt::from_rational(crate::scalar::rat(-1, 2)),
            );
        assert_eq!(got, expected);
    }

    #[test]
    fn associativity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=2 {
            for _ in 0..25 {
                let a = random_element(&mut rng, n, 8, 4);
                let b = random_element(&mut rng, n, 8, 4);
                let c = random_element(&mut rng, n, 8, 4);
                let left = a.star(&b).unwrap().star(&c).unwrap();
                let right = a.star(&b.star(&c).unwrap()).unwrap();
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = random_element(&mut rng, 1, 6, 4);
            assert!(a.commutator(&a).unwrap().is_zero());
        }
    }

    #[test]
    fn ad_is_directional_derivative() {
        // ad(xih/ih) = d/dxh and ad(xh/ih) = -d/dxih
        let x = WeylElement::x_hat(1, 0);
        let xi = WeylElement::xi_hat(1, 0);
        let x3 = x.star(&x).unwrap().star(&x).unwrap();
        let got = xi.ad_over_ihbar(&x3).unwrap();
        let expected = x.star(&x).unwrap().scale(&ScalarExt::from_int(3));
        assert_eq!(got, expected);

        let got2 = x.ad_over_ihbar(&xi).unwrap();
        assert_eq!(got2, -&WeylElement::one(1));
    }

    #[test]
    fn ad_of_quadratic_is_symplectic_field() {
        // ad(q/ih) for q = xh*xih acts on the basis like the linear field
        // {q, -}: xh -> xh, xih -> -xih (Poisson-bracket oracle with
        // {f,g} = df/dxih dg/dxh - df/dxh dg/dxih).
        let x = WeylElement::x_hat(1, 0);
        let xi = WeylElement::xi_hat(1, 0);
        let q = x.pointwise_mul(&xi).unwrap();
        assert_eq!(q.ad_over_ihbar(&x).unwrap(), x);
        assert_eq!(q.ad_over_ihbar(&xi).unwrap(), -&xi);
    }

    #[test]
    fn weight_decomposition_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_element(&mut rng, 2, 7, 6);
        let parts = a.weight_decompose();
        let mut sum = WeylElement::zero(2);
        for (w, p) in &parts {
            for (m, _) in p.terms() {
                assert_eq!(m.weight(), *w);
            }
            sum = &sum + p;
        }
        assert_eq!(sum, a);
        assert!(WeylElement::zero(2).weight_decompose().is_empty());

        let single = &WeylElement::x_hat(1, 0).pointwise_mul(&WeylElement::xi_hat(1, 0)).unwrap()
            + &WeylElement::hbar(1);
        assert_eq!(single.weight_decompose().len(), 1);
    }

    #[test]
    fn star_is_weight_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_element(&mut rng, 1, 5, 3);
        let b = random_element(&mut rng, 1, 5, 3);
        let weights_a: Vec<i64> = a.weight_decompose().iter().map(|(w, _)| *w).collect();
        let weights_b: Vec<i64> = b.weight_decompose().iter().map(|(w, _)| *w).collect();
        let prod = a.star(&b).unwrap();
        for (w, _) in prod.weight_decompose() {
            assert!(
                weights_a
                    .iter()
                    .any(|wa| weights_b.iter().any(|wb| wa + wb == w)),
                "unexpected weight {w}"
            );
        }
    }

    #[test]
    fn classical_limit_is_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_element(&mut rng, 1, 4, 3).classical_part();
        let b = random_element(&mut rng, 1, 4, 3).classical_part();
        let star = a.star(&b).unwrap().classical_part();
        let point = a.pointwise_mul(&b).unwrap();
        assert_eq!(star, point);
    }

    #[test]
    fn sl2_triple_brackets() {
        // H = xh*xih/(ih), Xminus = xh^2/(2ih), Xplus = -xih^2/(2ih);
        // oracle: direct Moyal expansion of all three brackets.
        let x = WeylElement::x_hat(1, 0);
        let xi = WeylElement::xi_hat(1, 0);
        let half = crate::scalar::rat(1, 2);
        let h_elt = x.pointwise_mul(&xi).unwrap().div_ihbar();
        let xminus = x.pointwise_mul(&x).unwrap().div_ihbar().scale(&ScalarExt::from_rational(half.clone()));
        let xplus = xi
            .pointwise_mul(&xi)
            .unwrap()
            .div_ihbar()
            .scale(&ScalarExt::from_rational(-half));

        let two = ScalarExt::from_int(2);
        assert_eq!(h_elt.commutator(&xminus).unwrap(), xminus.scale(&two));
        assert_eq!(h_elt.commutator(&xplus).unwrap(), -&xplus.scale(&two));
        assert_eq!(xminus.commutator(&xplus).unwrap(), h_elt);
        // keep h's Laurent sanity in scope: (ih)(1/ih) = 1
        assert_eq!(&HbarLaurent::ihbar() * &HbarLaurent::one_over_ihbar(), HbarLaurent::one());
    }
}
