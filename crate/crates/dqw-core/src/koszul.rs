//! Koszul resolution of the vacuum module, the twisted De Rham complex whose
//! cohomology counts critical points, the filtered superlevel-set counts, and
//! the differential of the DG replacement complex.

use num::{One, Signed, Zero};

use crate::error::{CoreError, Result};
use crate::poly::{
    rank_poly_matrix, superlevel_components, BasePolynomial,
};
use crate::scalar::{rat_int, Rational, ScalarExt};
use crate::weyl::WeylElement;

// ---------------------------------------------------------------------------
// Koszul resolution R_k = A (x) Lambda^k with d(a (x) e_{j1..jk}) =
// sum_p (-1)^p a xi_{j_p} (x) e_{..drop p..}
// ---------------------------------------------------------------------------

/// An element of the Koszul resolution: Weyl coefficients against subsets of
/// `{e_1..e_n}` encoded as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoszulElement {
    pub n: usize,
    pub parts: Vec<(u32, WeylElement)>,
}

impl KoszulElement {
    pub fn new(n: usize) -> Self {
        KoszulElement { n, parts: Vec::new() }
    }

    pub fn push(&mut self, mask: u32, value: WeylElement) {
        if value.is_zero() {
            return;
        }
        if let Some(entry) = self.parts.iter_mut().find(|(m, _)| *m == mask) {
            entry.1 = &entry.1 + &value;
        } else {
            self.parts.push((mask, value));
        }
        self.parts.retain(|(_, v)| !v.is_zero());
        self.parts.sort_by_key(|(m, _)| *m);
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }
}

/// The Koszul differential; right-multiplies by the momentum generators.
pub fn koszul_boundary(elt: &KoszulElement) -> Result<KoszulElement> {
    let n = elt.n;
    let mut out = KoszulElement::new(n);
    for (mask, a) in &elt.parts {
        // positions p = 1..k in ascending generator order
        let mut p = 0u32;
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            p += 1;
            let xi = WeylElement::xi_hat(n, j);
            let mut v = a.star(&xi)?;
            if p % 2 == 1 {
                v = -&v;
            }
            out.push(mask & !(1 << j), v);
        }
    }
    Ok(out)
}

/// Checks `d^2 = 0` for the Koszul boundary on the given elements.
pub fn koszul_d2_check(elements: &[KoszulElement]) -> Result<bool> {
    for e in elements {
        if !koszul_boundary(&koszul_boundary(e)?)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Twisted De Rham Ext ranks
// ---------------------------------------------------------------------------

/// Cohomology ranks `(h0, h1)` of `(Q(h)[x]_{<=D} -> Q(h)[x]_{<=D+deg f'} dx,
/// i*h*d/dx + f')` plus a stabilization flag (`true` when the ranks at `D`
/// and `D+1` agree).
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ExtRanks {
    pub h0: usize,
    pub h1: usize,
    pub degree_bound: usize,
    pub stable: bool,
}

/// The matrix of `i*h*d/dx + f'` on `Q[x]_{<=deg}`, entries in `Q[mu]` with
/// `mu = i*h` (dense, low degree first).
fn twisted_matrix(fprime: &[Rational], deg: usize) -> Vec<Vec<Vec<Rational>>> {
    let target = deg + fprime.len().saturating_sub(1) + 1;
    let mut m = vec![vec![Vec::new(); deg + 1]; target];
    for (col, _) in (0..=deg).enumerate() {
        // i*h * k x^{k-1}
        if col > 0 {
            m[col - 1][col] = vec![Rational::zero(), rat_int(col as i64)];
        }
        // f'(x) x^k
        for (j, c) in fprime.iter().enumerate() {
            if !c.is_zero() {
                let row = col + j;
                let mut entry = m[row][col].clone();
                if entry.is_empty() {
                    entry = vec![c.clone()];
                } else {
                    entry[0] += c;
                }
                m[row][col] = entry;
            }
        }
    }
    m
}

fn ranks_at(fprime: &[Rational], deg: usize) -> (usize, usize) {
    let m = twisted_matrix(fprime, deg);
    let rows = m.len();
    let cols = deg + 1;
    let rank = rank_poly_matrix(m);
    (cols - rank, rows - rank)
}

/// Exact Ext ranks of the twisted De Rham complex for a univariate `f`.
pub fn ext_dimension(f: &BasePolynomial, degree_bound: usize) -> Result<ExtRanks> {
    assert_eq!(f.nvars(), 1, "ext ranks are computed for univariate f");
    let fprime_poly = f.deriv(0);
    if fprime_poly.is_zero() {
        return Err(CoreError::DegenerateFunction);
    }
    let fprime = fprime_poly.univariate_coeffs();
    let (h0, h1) = ranks_at(&fprime, degree_bound);
    let (h0b, h1b) = ranks_at(&fprime, degree_bound + 1);
    Ok(ExtRanks {
        h0,
        h1,
        degree_bound,
        stable: h0 == h0b && h1 == h1b,
    })
}

// ---------------------------------------------------------------------------
// Morse filtration: superlevel-set component counts
// ---------------------------------------------------------------------------

/// For each `c` in the grid, the number of connected components of
/// `{ x in [a, b] : f(x) >= t - c }`.
pub fn morse_filtered_h0(
    f: &BasePolynomial,
    a: &Rational,
    b: &Rational,
    t: &Rational,
    c_grid: &[Rational],
) -> Result<Vec<usize>> {
    if a > b {
        return Err(CoreError::EmptyInterval);
    }
    c_grid
        .iter()
        .map(|c| superlevel_components(f, a, b, &(t - c)))
        .collect()
}

// ---------------------------------------------------------------------------
// DG model differential and its d^2 = 0 check
// ---------------------------------------------------------------------------

/// Monomial of the DG replacement complex:
/// `x^xdeg * xh^xhdeg * h^hpow * astar^apow * dx^dx * estar^estar * ehstar^ehstar`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DgMono {
    pub xdeg: u32,
    pub xhdeg: u32,
    pub hpow: u32,
    pub apow: u32,
    pub dx: bool,
    pub estar: bool,
    pub ehstar: bool,
}

/// Sparse element of the DG replacement complex.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DgElement {
    terms: std::collections::BTreeMap<DgMono, ScalarExt>,
}

impl DgElement {
    pub fn monomial(m: DgMono, c: ScalarExt) -> Self {
        let mut e = DgElement::default();
        e.add(m, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&mut self, m: DgMono, c: ScalarExt) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                *e = &*e + &c;
                if e.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }
}

/// Odd generators in canonical order `dx < estar < ehstar`; left
/// multiplication reorders with Koszul signs.
#[derive(Clone, Copy, PartialEq, Eq)]
enum OddGen {
    Dx,
    EStar,
    EhStar,
}

fn left_mul_odd(m: &DgMono, g: OddGen) -> Option<(DgMono, i32)> {
    let mut m2 = m.clone();
    let sign = match g {
        OddGen::Dx => {
            if m.dx {
                return None;
            }
            m2.dx = true;
            1
        }
        OddGen::EStar => {
            if m.estar {
                return None;
            }
            m2.estar = true;
            if m.dx { -1 } else { 1 }
        }
        OddGen::EhStar => {
            if m.ehstar {
                return None;
            }
            m2.ehstar = true;
            let passed = m.dx as i32 + m.estar as i32;
            if passed % 2 == 1 { -1 } else { 1 }
        }
    };
    Some((m2, sign))
}

/// Applies the DG model differential
/// `(d/dx - d/dxh) dx + estar f'(x) + astar f''(x) dx
///  + ehstar (i h d/dxh + f'(x+xh) - f'(x)) + (estar - ehstar) d/dastar`
/// exactly (no truncation: polynomial in, polynomial out).
pub fn dg_differential(f: &BasePolynomial, v: &DgElement) -> DgElement {
    assert_eq!(f.nvars(), 1);
    let fp = f.deriv(0).univariate_coeffs();
    let fpp = f.deriv(0).deriv(0).univariate_coeffs();
    // f'(x+xh) - f'(x) as coefficients on x^i xh^j with j >= 1
    let mut shifted: Vec<(u32, u32, Rational)> = Vec::new();
    for (k, c) in fp.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        // (x+xh)^k = sum_j C(k,j) x^{k-j} xh^j
        for j in 1..=k {
            let mut binom = Rational::one();
            for t in 0..j {
                binom *= Rational::new(
                    num::BigInt::from(k - t),
                    num::BigInt::from(t + 1),
                );
            }
            shifted.push(((k - j) as u32, j as u32, c * &binom));
        }
    }
    let mut out = DgElement::default();
    for (m, c) in &v.terms {
        // (d/dx - d/dxh) dx
        if m.xdeg > 0 {
            if let Some((mut m2, sign)) = left_mul_odd(m, OddGen::Dx) {
                m2.xdeg -= 1;
                out.add(m2, c.scale(&rat_int(sign as i64 * m.xdeg as i64)));
            }
        }
        if m.xhdeg > 0 {
            if let Some((mut m2, sign)) = left_mul_odd(m, OddGen::Dx) {
                m2.xhdeg -= 1;
                out.add(m2, c.scale(&rat_int(-sign as i64 * m.xhdeg as i64)));
            }
        }
        // estar f'(x)
        if let Some((m2, sign)) = left_mul_odd(m, OddGen::EStar) {
            for (k, fc) in fp.iter().enumerate() {
                if fc.is_zero() {
                    continue;
                }
                let mut m3 = m2.clone();
                m3.xdeg += k as u32;
                out.add(m3, c.scale(&(fc * rat_int(sign as i64))));
            }
        }
        // astar f''(x) dx
        if let Some((m2, sign)) = left_mul_odd(m, OddGen::Dx) {
            for (k, fc) in fpp.iter().enumerate() {
                if fc.is_zero() {
                    continue;
                }
                let mut m3 = m2.clone();
                m3.xdeg += k as u32;
                m3.apow += 1;
                out.add(m3, c.scale(&(fc * rat_int(sign as i64))));
            }
        }
        // ehstar (i h d/dxh + f'(x+xh) - f'(x))
        if let Some((m2, sign)) = left_mul_odd(m, OddGen::EhStar) {
            if m.xhdeg > 0 {
                let mut m3 = m2.clone();
                m3.xhdeg -= 1;
                m3.hpow += 1;
                let coeff = &c.scale(&rat_int(sign as i64 * m.xhdeg as i64)) * &ScalarExt::i();
                out.add(m3, coeff);
            }
            for (xe, xhe, fc) in &shifted {
                let mut m3 = m2.clone();
                m3.xdeg += xe;
                m3.xhdeg += xhe;
                out.add(m3, c.scale(&(fc * rat_int(sign as i64))));
            }
        }
        // (estar - ehstar) d/dastar
        if m.apow > 0 {
            if let Some((mut m2, sign)) = left_mul_odd(m, OddGen::EStar) {
                m2.apow -= 1;
                out.add(m2, c.scale(&rat_int(sign as i64 * m.apow as i64)));
            }
            if let Some((mut m2, sign)) = left_mul_odd(m, OddGen::EhStar) {
                m2.apow -= 1;
                out.add(m2, c.scale(&rat_int(-sign as i64 * m.apow as i64)));
            }
        }
    }
    out
}

/// Verifies `d^2 = 0` on every monomial within the truncation bounds.
pub fn dg_model_d2_check(
    f: &BasePolynomial,
    xdeg_max: u32,
    xhdeg_max: u32,
    apow_max: u32,
) -> bool {
    for xdeg in 0..=xdeg_max {
        for xhdeg in 0..=xhdeg_max {
            for apow in 0..=apow_max {
                for parity in 0..8u8 {
                    let m = DgMono {
                        xdeg,
                        xhdeg,
                        hpow: 0,
                        apow,
                        dx: parity & 1 != 0,
                        estar: parity & 2 != 0,
                        ehstar: parity & 4 != 0,
                    };
                    let v = DgElement::monomial(m, ScalarExt::one());
                    if !dg_differential(f, &dg_differential(f, &v)).is_zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Total rank of `ext_dimension` equals the critical-point count `deg f'`
/// for squarefree `f'`; exposed for the reporting layer.
pub fn critical_point_count(f: &BasePolynomial) -> Result<usize> {
    let fp = f.deriv(0);
    if fp.is_zero() {
        return Err(CoreError::DegenerateFunction);
    }
    Ok(fp.total_degree().unwrap_or(0) as usize)
}
