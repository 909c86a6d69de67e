//! Sparse polynomials with exact rational coefficients, univariate helpers,
//! Sturm-sequence real-root counting, and small exact linear algebra kernels
//! used across the crate.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Signed, Zero};

use crate::error::{CoreError, Result};
use crate::scalar::{rat_int, Rational};

/// Sparse polynomial in `nvars` commuting variables over the rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePolynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl BasePolynomial {
    pub fn zero(nvars: usize) -> Self {
        BasePolynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = BasePolynomial::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        BasePolynomial::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        let mut exp = vec![0; nvars];
        exp[j] = 1;
        let mut p = BasePolynomial::zero(nvars);
        p.add_term(exp, Rational::one());
        p
    }

    pub fn monomial(nvars: usize, exp: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exp.len(), nvars);
        let mut p = BasePolynomial::zero(nvars);
        p.add_term(exp, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, exp: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&exp);
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    pub fn add(&self, other: &BasePolynomial) -> BasePolynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> BasePolynomial {
        self.scale(&rat_int(-1))
    }

    pub fn sub(&self, other: &BasePolynomial) -> BasePolynomial {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rational) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * r);
        }
        out
    }

    pub fn mul(&self, other: &BasePolynomial) -> BasePolynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = BasePolynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn deriv(&self, j: usize) -> BasePolynomial {
        let mut out = BasePolynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[j] -= 1;
            out.add_term(e2, c * Rational::from(BigInt::from(e[j])));
        }
        out
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Substitutes `subs[j]` for variable `j`.
    pub fn substitute(&self, subs: &[BasePolynomial]) -> BasePolynomial {
        assert_eq!(subs.len(), self.nvars);
        let target_vars = subs.first().map(|p| p.nvars).unwrap_or(self.nvars);
        let mut out = BasePolynomial::zero(target_vars);
        for (e, c) in &self.terms {
            let mut term = BasePolynomial::constant(target_vars, c.clone());
            for (j, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&subs[j]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (j, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= &point[j];
                }
            }
            acc += t;
        }
        acc
    }

    /// Dense coefficient vector of a univariate polynomial, low degree first.
    pub fn univariate_coeffs(&self) -> Vec<Rational> {
        assert_eq!(self.nvars, 1, "univariate view of a multivariate polynomial");
        let deg = self.terms.keys().map(|e| e[0]).max().unwrap_or(0) as usize;
        let mut out = vec![Rational::zero(); deg + 1];
        for (e, c) in &self.terms {
            out[e[0] as usize] = c.clone();
        }
        out
    }

    pub fn from_univariate_coeffs(coeffs: &[Rational]) -> BasePolynomial {
        let mut p = BasePolynomial::zero(1);
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(vec![k as u32], c.clone());
        }
        p
    }
}

impl fmt::Display for BasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            let half = self.nvars / 2;
            for (j, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let name = if self.nvars == 1 {
                    "x".to_string()
                } else if j < half || self.nvars % 2 == 1 {
                    format!("x{}", j + 1)
                } else {
                    format!("xi{}", j - half + 1)
                };
                if k == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{k}"));
                }
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
}

// ---------------------------------------------------------------------------
// Univariate utilities (dense, low degree first)
// ---------------------------------------------------------------------------

pub fn poly_trim(v: &mut Vec<Rational>) {
    while v.last().map_or(false, |c| c.is_zero()) {
        v.pop();
    }
}

pub fn poly_eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn poly_deriv(p: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::new();
    for (k, c) in p.iter().enumerate().skip(1) {
        out.push(c * Rational::from(BigInt::from(k)));
    }
    out
}

pub fn poly_neg_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    assert!(!b.is_empty());
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap() / b.last().unwrap();
        for i in 0..b.len() {
            let delta = &b[i] * &factor;
            r[i + shift] -= delta;
        }
        poly_trim(&mut r);
    }
    r.iter().map(|c| -c.clone()).collect()
}

/// Sturm chain of a squarefree-enough polynomial.
pub fn sturm_chain(p: &[Rational]) -> Vec<Vec<Rational>> {
    let mut chain = Vec::new();
    let mut p0 = p.to_vec();
    poly_trim(&mut p0);
    if p0.is_empty() {
        return chain;
    }
    chain.push(p0.clone());
    let mut p1 = poly_deriv(&p0);
    poly_trim(&mut p1);
    while !p1.is_empty() {
        chain.push(p1.clone());
        let r = poly_neg_rem(&p0, &p1);
        p0 = p1;
        p1 = r;
        poly_trim(&mut p1);
    }
    chain
}

fn sign_changes(chain: &[Vec<Rational>], x: &Rational) -> usize {
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for p in chain {
        let v = poly_eval(p, x);
        if v.is_zero() {
            continue;
        }
        let s = v.is_positive();
        if let Some(prev) = last {
            if prev != s {
                changes += 1;
            }
        }
        last = Some(s);
    }
    changes
}

/// Number of distinct real roots of `p` in the half-open interval `(a, b]`.
pub fn sturm_count(chain: &[Vec<Rational>], a: &Rational, b: &Rational) -> usize {
    sign_changes(chain, a) - sign_changes(chain, b)
}

/// Isolating the distinct real roots of `p` inside `[a, b]` down to disjoint
/// rational intervals `(lo, hi]`, each containing exactly one root.
pub fn isolate_roots(p: &[Rational], a: &Rational, b: &Rational) -> Vec<(Rational, Rational)> {
    let chain = sturm_chain(p);
    if chain.is_empty() {
        return Vec::new();
    }
    // Widen the left end a hair so a root exactly at `a` is counted:
    // (a - 1, b] then refined back into [a, b].
    let mut stack = vec![(a - Rational::one(), b.clone())];
    let mut out = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let count = sturm_count(&chain, &lo, &hi);
        if count == 0 {
            continue;
        }
        if count == 1 {
            out.push((lo, hi));
            continue;
        }
        let mid = (&lo + &hi) / rat_int(2);
        if poly_eval(p, &mid).is_zero() {
            // Nudge the split so the midpoint root lands inside one piece.
            let quarter = (&hi - &lo) / rat_int(4);
            let m2 = &mid + &quarter;
            stack.push((lo, mid.clone()));
            stack.push((mid, m2.clone()));
            stack.push((m2, hi));
        } else {
            stack.push((lo, mid.clone()));
            stack.push((mid, hi));
        }
    }
    out.retain(|(lo, hi)| {
        // Discard intervals whose single root lies strictly left of `a`.
        if lo >= a {
            return true;
        }
        let chain_count = sturm_count(&chain, &lo, &a.min(hi).clone());
        chain_count == 0
    });
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Shrinks an isolating interval until its width is at most `eps`.
pub fn refine_root(p: &[Rational], mut lo: Rational, mut hi: Rational, eps: &Rational) -> (Rational, Rational) {
    let chain = sturm_chain(p);
    while &(&hi - &lo) > eps {
        let mid = (&lo + &hi) / rat_int(2);
        if sturm_count(&chain, &lo, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Exact linear algebra over the rationals
// ---------------------------------------------------------------------------

/// Row-reduces in place; returns the rank. Entries stay exact.
pub fn rank_rational(mut m: Vec<Vec<Rational>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows).find(|&r| !m[r][col].is_zero());
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        let inv = m[rank][col].clone().recip();
        for c in col..cols {
            m[rank][c] = &m[rank][c] * &inv;
        }
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..cols {
                    let delta = &m[rank][c] * &factor;
                    m[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Kernel dimension of the linear map given by `m` (rows = outputs).
pub fn kernel_dim_rational(m: Vec<Vec<Rational>>, ncols: usize) -> usize {
    ncols - rank_rational(m)
}

// ---------------------------------------------------------------------------
// Fraction-free rank over Q[mu] (univariate polynomial entries)
// ---------------------------------------------------------------------------

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(&mut out);
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    poly_trim(&mut out);
    out
}

/// Exact division; panics if the division is not exact (Bareiss guarantees it).
fn poly_div_exact(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    assert!(!b.is_empty(), "division by zero polynomial");
    if r.is_empty() {
        return Vec::new();
    }
    let mut q = vec![Rational::zero(); r.len().saturating_sub(b.len()) + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap() / b.last().unwrap();
        q[shift] = factor.clone();
        for i in 0..b.len() {
            let delta = &b[i] * &factor;
            r[i + shift] -= delta;
        }
        poly_trim(&mut r);
    }
    assert!(r.is_empty(), "non-exact polynomial division in fraction-free elimination");
    q
}

/// Rank of a matrix with entries in `Q[mu]` over the fraction field `Q(mu)`,
/// by fraction-free (Bareiss) elimination.
pub fn rank_poly_matrix(mut m: Vec<Vec<Vec<Rational>>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev_pivot: Vec<Rational> = vec![Rational::one()];
    for col in 0..cols {
        let pivot = (rank..rows).find(|&r| !m[r][col].is_empty());
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        let pivot_val = m[rank][col].clone();
        for r in 0..rows {
            if r == rank {
                continue;
            }
            for c in 0..cols {
                if c == col {
                    continue;
                }
                let num = poly_sub(
                    &poly_mul(&pivot_val, &m[r][c]),
                    &poly_mul(&m[r][col], &m[rank][c]),
                );
                m[r][c] = if num.is_empty() { num } else { poly_div_exact(&num, &prev_pivot) };
            }
            m[r][col] = Vec::new();
        }
        prev_pivot = pivot_val;
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Evaluation-based rank oracle: rank over `Q(mu)` equals the maximum rank of
/// specializations at more points than any minor's degree bound.
pub fn rank_poly_matrix_by_evaluation(m: &[Vec<Vec<Rational>>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let max_entry_deg = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|p| p.len().saturating_sub(1))
        .max()
        .unwrap_or(0);
    let bound = rows.min(cols) * max_entry_deg + 1;
    let mut best = 0;
    for k in 0..=bound {
        let x = rat_int(k as i64);
        let numeric: Vec<Vec<Rational>> =
            m.iter().map(|row| row.iter().map(|p| poly_eval(p, &x)).collect()).collect();
        best = best.max(rank_rational(numeric));
    }
    best
}

/// Superlevel-set component count: the number of connected components of
/// `{ x in [a, b] : f(x) >= level }`, by Sturm isolation of `f - level`.
pub fn superlevel_components(
    f: &BasePolynomial,
    a: &Rational,
    b: &Rational,
    level: &Rational,
) -> Result<usize> {
    if a > b {
        return Err(CoreError::EmptyInterval);
    }
    let mut g = f.univariate_coeffs();
    if g.is_empty() {
        g.push(Rational::zero());
    }
    g[0] -= level;
    poly_trim(&mut g);
    if g.is_empty() {
        // f is identically equal to the level: one closed component.
        return Ok(1);
    }
    let roots = isolate_roots(&g, a, b);
    // Refine so intervals are far narrower than the gaps between them and do
    // not touch the endpoints a, b except where the root itself does.
    let mut markers: Vec<(Rational, Rational)> = Vec::new();
    for (lo, hi) in roots {
        let eps = {
            let width = b - a;
            width / rat_int(1 << 20)
        };
        markers.push(refine_root(&g, lo, hi, &eps));
    }
    // Sample points: a, between consecutive root intervals, b.
    let mut samples: Vec<Rational> = Vec::new();
    samples.push(a.clone());
    for w in markers.windows(2) {
        samples.push((&w[0].1 + &w[1].0) / rat_int(2));
    }
    samples.push(b.clone());
    // Sign of g on each maximal root-free region, in order.
    let mut region_pos: Vec<bool> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        // Clamp the sample into the open region; endpoints may be roots.
        let v = poly_eval(&g, s);
        if v.is_zero() {
            // The endpoint is a root: nudge inward.
            let delta = (b - a) / rat_int(1 << 21);
            let s2 = if i == 0 { s + &delta } else { s - &delta };
            region_pos.push(poly_eval(&g, &s2).is_positive());
        } else {
            region_pos.push(v.is_positive());
        }
    }
    // Components: positive regions merge through their boundary roots; a root
    // between two negative regions is an isolated component.
    let mut count = 0;
    let mut in_component = false;
    for (i, &pos) in region_pos.iter().enumerate() {
        if pos {
            if !in_component {
                count += 1;
                in_component = true;
            }
        } else {
            in_component = false;
        }
        if i < markers.len() {
            // Root after region i: part of the set.
            let left_pos = pos;
            let right_pos = region_pos[i + 1];
            if !left_pos && !right_pos {
                count += 1; // isolated touch point
            }
        }
    }
    Ok(count)
}
