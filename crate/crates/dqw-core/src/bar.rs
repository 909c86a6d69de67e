//! Bar-complex machinery over finite-dimensional graded test algebras: the
//! standard complex computing Ext, its differential, the insertion and
//! homotopy operators attached to invertible elements, derivation actions,
//! and the Yoneda product.
//!
//! Cochains are finitely supported across arities and exact at every stored
//! component; every operator here maps finitely supported cochains to
//! finitely supported cochains with no truncation error.

use std::collections::BTreeMap;

use num::One;

use crate::error::{CoreError, Result};
use crate::scalar::{rat_int, Rational, ScalarExt};

pub type Matrix = Vec<Vec<ScalarExt>>;



pub fn mat_zero(rows: usize, cols: usize) -> Matrix {
    vec![vec![ScalarExt::zero(); cols]; rows]
}

pub fn mat_identity(n: usize) -> Matrix {
    let mut m = mat_zero(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ScalarExt::one();
    }
    m
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner > 0 { b[0].len() } else { 0 };
    let mut out = mat_zero(rows, cols);
    for r in 0..rows {
        for k in 0..inner {
            if a[r][k].is_zero() {
                continue;
            }
            for c in 0..cols {
                if b[k][c].is_zero() {
                    continue;
                }
                out[r][c] = &out[r][c] + &(&a[r][k] * &b[k][c]);
            }
        }
    }
    out
}

pub fn mat_add(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    for (r, row) in b.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            out[r][c] = &out[r][c] + v;
        }
    }
    out
}

pub fn mat_scale(a: &Matrix, s: &ScalarExt) -> Matrix {
    a.iter().map(|row| row.iter().map(|v| v * s).collect()).collect()
}

pub fn mat_neg(a: &Matrix) -> Matrix {
    mat_scale(a, &ScalarExt::from_int(-1))
}

pub fn mat_is_zero(a: &Matrix) -> bool {
    a.iter().all(|row| row.iter().all(|v| v.is_zero()))
}

pub fn mat_eq(a: &Matrix, b: &Matrix) -> bool {
    a == b
}

/// Inverse of a matrix with `ScalarExt` entries whose inverses stay in the
/// monomial fragment (true for all test instances here).
pub fn mat_inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.len();
    let mut work = a.clone();
    let mut inv = mat_identity(n);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !work[r][col].is_zero());
        let Some(p) = pivot else {
            return Err(CoreError::NonInvertibleElement);
        };
        work.swap(col, p);
        inv.swap(col, p);
        let scale = work[col][col].inv().map_err(|_| CoreError::NonInvertibleElement)?;
        for c in 0..n {
            work[col][c] = &work[col][c] * &scale;
            inv[col][c] = &inv[col][c] * &scale;
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let factor = work[r][col].clone();
                for c in 0..n {
                    let w = &work[col][c] * &factor;
                    work[r][c] = &work[r][c] - &w;
                    let v = &inv[col][c] * &factor;
                    inv[r][c] = &inv[r][c] - &v;
                }
            }
        }
    }
    Ok(inv)
}

// ---------------------------------------------------------------------------
// Finite graded algebra and modules
// ---------------------------------------------------------------------------

/// An element as a dense coefficient vector against the algebra basis.
pub type AlgElement = Vec<ScalarExt>;

#[derive(Clone, Debug)]
pub struct FinAlgebra {
    pub dim: usize,
    pub degrees: Vec<i32>,
    /// `mult[i][j]` is the expansion of `e_i e_j`.
    pub mult: Vec<Vec<Vec<(usize, ScalarExt)>>>,
    pub unit: AlgElement,
}

impl FinAlgebra {
    pub fn elem_zero(&self) -> AlgElement {
        vec![ScalarExt::zero(); self.dim]
    }

    pub fn basis_elem(&self, i: usize) -> AlgElement {
        let mut v = self.elem_zero();
        v[i] = ScalarExt::one();
        v
    }

    pub fn add(&self, a: &AlgElement, b: &AlgElement) -> AlgElement {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn neg(&self, a: &AlgElement) -> AlgElement {
        a.iter().map(|x| -x).collect()
    }

    pub fn scale(&self, a: &AlgElement, s: &ScalarExt) -> AlgElement {
        a.iter().map(|x| x * s).collect()
    }

    pub fn mul(&self, a: &AlgElement, b: &AlgElement) -> AlgElement {
        let mut out = self.elem_zero();
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                for (k, c) in &self.mult[i][j] {
                    out[*k] = &out[*k] + &(&(x * y) * c);
                }
            }
        }
        out
    }

    pub fn is_zero_elem(&self, a: &AlgElement) -> bool {
        a.iter().all(|x| x.is_zero())
    }

    /// Degree of a homogeneous element; `None` for 0 or mixed degrees.
    pub fn degree_of(&self, a: &AlgElement) -> Option<i32> {
        let mut deg = None;
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            match deg {
                None => deg = Some(self.degrees[i]),
                Some(d) if d == self.degrees[i] => {}
                _ => return None,
            }
        }
        deg
    }

    /// Left-multiplication matrix of `a` on the algebra itself.
    pub fn left_mult_matrix(&self, a: &AlgElement) -> Matrix {
        let mut m = mat_zero(self.dim, self.dim);
        for j in 0..self.dim {
            let col = self.mul(a, &self.basis_elem(j));
            for (i, v) in col.iter().enumerate() {
                m[i][j] = v.clone();
            }
        }
        m
    }

    /// Inverse of an invertible element.
    pub fn inverse(&self, a: &AlgElement) -> Result<AlgElement> {
        let m = self.left_mult_matrix(a);
        let minv = mat_inverse(&m)?;
        // a^{-1} = minv * 1
        let mut out = self.elem_zero();
        for (i, row) in minv.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() && !self.unit[j].is_zero() {
                    out[i] = &out[i] + &(v * &self.unit[j]);
                }
            }
        }
        Ok(out)
    }

    /// `c a c^{-1}`.
    pub fn conjugate(&self, c: &AlgElement, a: &AlgElement) -> Result<AlgElement> {
        let cinv = self.inverse(c)?;
        Ok(self.mul(&self.mul(c, a), &cinv))
    }

    /// Checks associativity of the structure constants on the whole basis.
    pub fn verify_associative(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let a = self.basis_elem(i);
                    let b = self.basis_elem(j);
                    let c = self.basis_elem(k);
                    let left = self.mul(&self.mul(&a, &b), &c);
                    let right = self.mul(&a, &self.mul(&b, &c));
                    if left != right {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A graded module with the action of each algebra basis element.
#[derive(Clone, Debug)]
pub struct FinModule {
    pub dim: usize,
    pub degrees: Vec<i32>,
    /// `action[i]` is the matrix of `e_i . (-)`.
    pub action: Vec<Matrix>,
}

impl FinModule {
    pub fn act_elem(&self, a: &AlgElement) -> Matrix {
        let mut m = mat_zero(self.dim, self.dim);
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            m = mat_add(&m, &mat_scale(&self.action[i], x));
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Finite group tables
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GroupTable {
    pub size: usize,
    pub mul: Vec<Vec<usize>>,
    pub inv: Vec<usize>,
    pub identity: usize,
}

impl GroupTable {
    pub fn from_mul(mul: Vec<Vec<usize>>) -> Result<GroupTable> {
        let size = mul.len();
        let identity = (0..size)
            .find(|&e| (0..size).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or_else(|| CoreError::ActionInvariant("no identity in group table".into()))?;
        let mut inv = vec![0; size];
        for g in 0..size {
            inv[g] = (0..size)
                .find(|&h| mul[g][h] == identity)
                .ok_or_else(|| CoreError::ActionInvariant("non-invertible group element".into()))?;
        }
        Ok(GroupTable { size, mul, inv, identity })
    }

    /// `Z/2 x Z/2` as indices `(a, b) -> 2a + b`.
    pub fn klein_four() -> GroupTable {
        let mul = (0..4)
            .map(|g: usize| (0..4).map(|h: usize| g ^ h).collect())
            .collect();
        GroupTable::from_mul(mul).unwrap()
    }

    /// Cyclic group of order `n`.
    pub fn cyclic(n: usize) -> GroupTable {
        let mul = (0..n).map(|g| (0..n).map(|h| (g + h) % n).collect()).collect();
        GroupTable::from_mul(mul).unwrap()
    }
}

// ---------------------------------------------------------------------------
// Group actions up to inner automorphisms, with optional curved data
// ---------------------------------------------------------------------------

/// Group action on a finite-dimensional algebra up to inner automorphisms,
/// with compatible module actions on `V` and `W` and optional square-zero
/// derivation data `(D, alpha, R)`.
#[derive(Clone, Debug)]
pub struct FinAction {
    pub algebra: FinAlgebra,
    pub group: GroupTable,
    /// `t_alg[g]`: automorphism matrix on the algebra.
    pub t_alg: Vec<Matrix>,
    /// `c[g1][g2]`: invertible degree-0 elements.
    pub c: Vec<Vec<AlgElement>>,
    pub v: FinModule,
    pub w: FinModule,
    pub t_v: Vec<Matrix>,
    pub t_w: Vec<Matrix>,
    pub derivation: Option<DerivationData>,
}

#[derive(Clone, Debug)]
pub struct DerivationData {
    /// Degree-one derivation matrix on the algebra.
    pub d_alg: Matrix,
    /// Curvature element of degree 2 with `D^2 = ad(R)`, `D R = 0`.
    pub r: AlgElement,
    /// `alpha[g]`: degree-one elements with
    /// `T_g D T_g^{-1} = D + ad(alpha(g))`.
    pub alpha: Vec<AlgElement>,
    pub d_v: Matrix,
    pub d_w: Matrix,
}

impl FinAction {
    pub fn apply_t_alg(&self, g: usize, a: &AlgElement) -> AlgElement {
        let m = &self.t_alg[g];
        let mut out = self.algebra.elem_zero();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() && !a[j].is_zero() {
                    out[i] = &out[i] + &(v * &a[j]);
                }
            }
        }
        out
    }

    pub fn d_of(&self, a: &AlgElement) -> AlgElement {
        let data = self.derivation.as_ref().expect("derivation data present");
        let mut out = self.algebra.elem_zero();
        for (i, row) in data.d_alg.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() && !a[j].is_zero() {
                    out[i] = &out[i] + &(v * &a[j]);
                }
            }
        }
        out
    }

    /// Verifies every structural invariant; returns a description of the
    /// first failure.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let alg = &self.algebra;
        if !alg.verify_associative() {
            return Err("structure constants are not associative".into());
        }
        let g = &self.group;
        // T_g are algebra automorphisms
        for t in 0..g.size {
            for i in 0..alg.dim {
                for j in 0..alg.dim {
                    let a = alg.basis_elem(i);
                    let b = alg.basis_elem(j);
                    let lhs = self.apply_t_alg(t, &alg.mul(&a, &b));
                    let rhs = alg.mul(&self.apply_t_alg(t, &a), &self.apply_t_alg(t, &b));
                    if lhs != rhs {
                        return Err(format!("T_{t} is not multiplicative"));
                    }
                }
            }
        }
        // T_{g1} T_{g2} = Ad(c(g1,g2)) T_{g1 g2} on the algebra
        for g1 in 0..g.size {
            for g2 in 0..g.size {
                let c = &self.c[g1][g2];
                let cinv = alg.inverse(c).map_err(|_| "non-invertible cocycle value")?;
                for i in 0..alg.dim {
                    let a = alg.basis_elem(i);
                    let lhs = self.apply_t_alg(g1, &self.apply_t_alg(g2, &a));
                    let inner = self.apply_t_alg(g.mul[g1][g2], &a);
                    let rhs = alg.mul(&alg.mul(c, &inner), &cinv);
                    if lhs != rhs {
                        return Err(format!("composition law fails at ({g1},{g2})"));
                    }
                }
            }
        }
        // cocycle identity
        for g1 in 0..g.size {
            for g2 in 0..g.size {
                for g3 in 0..g.size {
                    let lhs = alg.mul(&self.c[g1][g2], &self.c[g.mul[g1][g2]][g3]);
                    let rhs = alg.mul(
                        &self.apply_t_alg(g1, &self.c[g2][g3]),
                        &self.c[g1][g.mul[g2][g3]],
                    );
                    if lhs != rhs {
                        return Err(format!("cocycle identity fails at ({g1},{g2},{g3})"));
                    }
                }
            }
        }
        // module compatibility: T_g(a v) = T_g(a) T_g(v);
        // T_{g1} T_{g2} = c(g1,g2) T_{g1g2}
        for (modl, t_mod, name) in
            [(&self.v, &self.t_v, "V"), (&self.w, &self.t_w, "W")]
        {
            for t in 0..g.size {
                for i in 0..alg.dim {
                    let lhs = mat_mul(&t_mod[t], &modl.action[i]);
                    let rhs = mat_mul(
                        &modl.act_elem(&self.apply_t_alg(t, &alg.basis_elem(i))),
                        &t_mod[t],
                    );
                    if !mat_eq(&lhs, &rhs) {
                        return Err(format!("module {name}: T_{t} incompatible with action"));
                    }
                }
            }
            for g1 in 0..g.size {
                for g2 in 0..g.size {
                    let lhs = mat_mul(&t_mod[g1], &t_mod[g2]);
                    let rhs = mat_mul(
                        &modl.act_elem(&self.c[g1][g2]),
                        &t_mod[g.mul[g1][g2]],
                    );
                    if !mat_eq(&lhs, &rhs) {
                        return Err(format!("module {name}: projective law fails at ({g1},{g2})"));
                    }
                }
            }
        }
        if let Some(data) = &self.derivation {
            // D is a degree-1 derivation
            for i in 0..alg.dim {
                for j in 0..alg.dim {
                    let a = alg.basis_elem(i);
                    let b = alg.basis_elem(j);
                    let lhs = self.d_of(&alg.mul(&a, &b));
                    let mut rhs = alg.mul(&self.d_of(&a), &b);
                    let sign = if alg.degrees[i] % 2 == 0 { 1 } else { -1 };
                    let second = alg.scale(&alg.mul(&a, &self.d_of(&b)), &ScalarExt::from_int(sign));
                    rhs = alg.add(&rhs, &second);
                    if lhs != rhs {
                        return Err(format!("D fails the Leibniz rule at ({i},{j})"));
                    }
                }
            }
            // D^2 = ad(R), D R = 0
            for i in 0..alg.dim {
                let a = alg.basis_elem(i);
                let lhs = self.d_of(&self.d_of(&a));
                let rhs = alg.add(
                    &alg.mul(&data.r, &a),
                    &alg.neg(&alg.mul(&a, &data.r)),
                );
                if lhs != rhs {
                    return Err(format!("D^2 != ad(R) at basis {i}"));
                }
            }
            if !alg.is_zero_elem(&self.d_of(&data.r)) {
                return Err("D R != 0".into());
            }
            // T_g D T_g^{-1} = D + ad(alpha(g))
            for t in 0..g.size {
                let tinv = g.inv[t];
                for i in 0..alg.dim {
                    let a = alg.basis_elem(i);
                    // both sides applied to T_t(a'): use a = T_t(a')
                    let back = self.apply_t_alg(tinv, &a);
                    // T acting through c(t, t^{-1}): T_t T_{t^{-1}} = Ad(c) T_e,
                    // so compare T_t D T_{t^{-1}} Ad(c)^{-1} with D + ad(alpha).
                    let ctt = &self.c[t][tinv];
                    let cinv = alg.inverse(ctt).map_err(|_| "bad cocycle")?;
                    let conj_back = alg.mul(&alg.mul(&cinv, &a), ctt);
                    let lhs = self.apply_t_alg(t, &self.d_of(&self.apply_t_alg(tinv, &conj_back)));
                    let _ = back;
                    let ad_part = alg.add(
                        &alg.mul(&data.alpha[t], &a),
                        &alg.scale(
                            &alg.mul(&a, &data.alpha[t]),
                            &ScalarExt::from_int(if alg.degree_of(&a).unwrap_or(0) % 2 == 0 {
                                -1
                            } else {
                                1
                            }),
                        ),
                    );
                    let rhs = alg.add(&self.d_of(&a), &ad_part);
                    if lhs != rhs {
                        return Err(format!("T_{t} D T_{t}^(-1) != D + ad(alpha) at {i}"));
                    }
                }
            }
            // D alpha(g) + alpha(g)^2 = T_g R - R
            for t in 0..g.size {
                let lhs = alg.add(
                    &self.d_of(&data.alpha[t]),
                    &alg.mul(&data.alpha[t], &data.alpha[t]),
                );
                let rhs = alg.add(&self.apply_t_alg(t, &data.r), &alg.neg(&data.r));
                if lhs != rhs {
                    return Err(format!("curvature equation fails at g={t}"));
                }
            }
            // alpha(g1) + T_g1 alpha(g2) - Ad(c) alpha(g1g2) + Dc c^{-1} = 0
            for g1 in 0..g.size {
                for g2 in 0..g.size {
                    let c = &self.c[g1][g2];
                    let cinv = alg.inverse(c).map_err(|_| "bad cocycle")?;
                    let mut acc = alg.add(
                        &data.alpha[g1],
                        &self.apply_t_alg(g1, &data.alpha[g2]),
                    );
                    let conj =
                        alg.mul(&alg.mul(c, &data.alpha[g.mul[g1][g2]]), &cinv);
                    acc = alg.add(&acc, &alg.neg(&conj));
                    acc = alg.add(&acc, &alg.mul(&self.d_of(c), &cinv));
                    if !alg.is_zero_elem(&acc) {
                        return Err(format!("alpha cocycle equation fails at ({g1},{g2})"));
                    }
                }
            }
            // module derivations: D_V^2 = R ., D(av) = D(a)v +- a D(v),
            // T_g D T_g^{-1} = D + alpha(g) .
            for (modl, t_mod, d_mod, name) in [
                (&self.v, &self.t_v, &data.d_v, "V"),
                (&self.w, &self.t_w, &data.d_w, "W"),
            ] {
                let d2 = mat_mul(d_mod, d_mod);
                let r_act = modl.act_elem(&data.r);
                if !mat_eq(&d2, &r_act) {
                    return Err(format!("module {name}: D^2 != R"));
                }
                for i in 0..alg.dim {
                    let sign = if alg.degrees[i] % 2 == 0 { 1 } else { -1 };
                    let lhs = mat_add(
                        &mat_mul(d_mod, &modl.action[i]),
                        &mat_scale(&mat_mul(&modl.action[i], d_mod), &ScalarExt::from_int(-sign)),
                    );
                    let rhs = modl.act_elem(&self.d_of(&alg.basis_elem(i)));
                    if !mat_eq(&lhs, &rhs) {
                        return Err(format!("module {name}: Leibniz fails at basis {i}"));
                    }
                }
                for t in 0..self.group.size {
                    let lhs = mat_mul(&t_mod[t], d_mod);
                    let rhs = mat_mul(
                        &mat_add(d_mod, &modl.act_elem(&data.alpha[t])),
                        &t_mod[t],
                    );
                    if !mat_eq(&lhs, &rhs) {
                        return Err(format!("module {name}: derivation twist fails at g={t}"));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bar cochains
// ---------------------------------------------------------------------------

/// Mixed-radix index over algebra basis tuples.
pub fn tuple_count(dim: usize, arity: usize) -> usize {
    dim.pow(arity as u32)
}

pub fn tuple_unrank(dim: usize, arity: usize, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; arity];
    for slot in (0..arity).rev() {
        out[slot] = idx % dim;
        idx /= dim;
    }
    out
}

pub fn tuple_rank(dim: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * dim + t)
}

/// A finitely supported bar cochain of homogeneous total degree: the arity-q
/// component maps basis tuples to `Hom(V, W)` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct BarCochain {
    pub degree: i32,
    pub comps: BTreeMap<usize, Vec<Matrix>>,
}

impl BarCochain {
    pub fn zero(degree: i32) -> Self {
        BarCochain { degree, comps: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|tables| tables.iter().all(mat_is_zero))
    }

    pub fn max_arity(&self) -> Option<usize> {
        self.comps
            .iter()
            .filter(|(_, t)| !t.iter().all(mat_is_zero))
            .map(|(q, _)| *q)
            .max()
    }

    pub fn component(&self, ctx: &FinAction, q: usize) -> Vec<Matrix> {
        match self.comps.get(&q) {
            Some(t) => t.clone(),
            None => {
                let n = tuple_count(ctx.algebra.dim, q);
                vec![mat_zero(ctx.w.dim, ctx.v.dim); n]
            }
        }
    }

    pub fn add(&self, other: &BarCochain) -> BarCochain {
        if self.is_zero() {
            let mut out = other.clone();
            out.degree = other.degree;
            return out;
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "adding cochains of different degree");
        let mut out = self.clone();
        for (q, tables) in &other.comps {
            match out.comps.get_mut(q) {
                Some(mine) => {
                    for (i, m) in tables.iter().enumerate() {
                        mine[i] = mat_add(&mine[i], m);
                    }
                }
                None => {
                    out.comps.insert(*q, tables.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &ScalarExt) -> BarCochain {
        BarCochain {
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .map(|(q, t)| (*q, t.iter().map(|m| mat_scale(m, s)).collect()))
                .collect(),
        }
    }

    pub fn neg(&self) -> BarCochain {
        self.scale(&ScalarExt::from_int(-1))
    }

    pub fn sub(&self, other: &BarCochain) -> BarCochain {
        self.add(&other.neg())
    }

    /// Evaluation at a basis tuple, treating missing components as zero.
    pub fn eval_basis(&self, ctx: &FinAction, tuple: &[usize]) -> Matrix {
        match self.comps.get(&tuple.len()) {
            Some(t) => t[tuple_rank(ctx.algebra.dim, tuple)].clone(),
            None => mat_zero(ctx.w.dim, ctx.v.dim),
        }
    }

    /// Multilinear evaluation at algebra elements.
    pub fn eval(&self, ctx: &FinAction, args: &[AlgElement]) -> Matrix {
        let dim = ctx.algebra.dim;
        let mut out = mat_zero(ctx.w.dim, ctx.v.dim);
        let Some(tables) = self.comps.get(&args.len()) else {
            return out;
        };
        // expand over supports
        let mut stack: Vec<(usize, usize, ScalarExt)> = vec![(0, 0, ScalarExt::one())];
        // (slot, partial rank, coefficient)
        while let Some((slot, rank, coeff)) = stack.pop() {
            if slot == args.len() {
                out = mat_add(&out, &mat_scale(&tables[rank], &coeff));
                continue;
            }
            for (i, x) in args[slot].iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                stack.push((slot + 1, rank * dim + i, &coeff * x));
            }
        }
        out
    }
}

fn sign_of(i: i64) -> ScalarExt {
    if i.rem_euclid(2) == 0 {
        ScalarExt::one()
    } else {
        ScalarExt::from_int(-1)
    }
}

/// `(-1)^{sum_{i<=j}(|a_i|+1)}`-style prefix weights for a basis tuple.
fn prefix_weights(ctx: &FinAction, tuple: &[usize]) -> Vec<i64> {
    let mut acc = 0i64;
    let mut out = Vec::with_capacity(tuple.len() + 1);
    out.push(0);
    for &t in tuple {
        acc += ctx.algebra.degrees[t] as i64 + 1;
        out.push(acc);
    }
    out
}

/// The bar differential.
pub fn bar_delta(ctx: &FinAction, phi: &BarCochain) -> BarCochain {
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree + 1);
    for (&q, tables) in &phi.comps {
        let out_q = q + 1;
        let n_out = tuple_count(dim, out_q);
        let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out];
        for idx in 0..n_out {
            let tuple = tuple_unrank(dim, out_q, idx);
            let weights = prefix_weights(ctx, &tuple);
            let mut acc = mat_zero(ctx.w.dim, ctx.v.dim);
            // a1 . phi(a2..)
            {
                let sub = &tuple[1..];
                let m = tables[tuple_rank(dim, sub)].clone();
                let a1 = ctx.algebra.degrees[tuple[0]] as i64 + 1;
                let s = sign_of(phi.degree as i64 * a1);
                acc = mat_add(&acc, &mat_scale(&mat_mul(&ctx.w.action[tuple[0]], &m), &s));
            }
            // merge terms
            for j in 1..out_q {
                let prod = ctx.algebra.mul(
                    &ctx.algebra.basis_elem(tuple[j - 1]),
                    &ctx.algebra.basis_elem(tuple[j]),
                );
                if ctx.algebra.is_zero_elem(&prod) {
                    continue;
                }
                let mut args: Vec<AlgElement> = Vec::with_capacity(q);
                for (slot, &t) in tuple.iter().enumerate() {
                    if slot == j - 1 {
                        args.push(prod.clone());
                    } else if slot == j {
                        continue;
                    } else {
                        args.push(ctx.algebra.basis_elem(t));
                    }
                }
                let m = phi.eval(ctx, &args);
                let s = sign_of(weights[j] + phi.degree as i64);
                acc = mat_add(&acc, &mat_scale(&m, &s));
            }
            // phi(a1..aq) . a_{q+1}
            {
                let sub = &tuple[..out_q - 1];
                let m = tables[tuple_rank(dim, sub)].clone();
                let s = sign_of(weights[out_q] + phi.degree as i64);
                acc = mat_add(&acc, &mat_scale(&mat_mul(&m, &ctx.v.action[tuple[out_q - 1]]), &s));
            }
            result[idx] = acc;
        }
        match out.comps.get_mut(&out_q) {
            Some(existing) => {
                for (i, m) in result.into_iter().enumerate() {
                    existing[i] = mat_add(&existing[i], &m);
                }
            }
            None => {
                out.comps.insert(out_q, result);
            }
        }
    }
    out
}

/// The automorphism twist `(T phi)(a1..an) = T phi(T^{-1} a1, ...) T^{-1}`
/// for a group element with compatible module operators.
pub fn t_twist(ctx: &FinAction, g: usize, phi: &BarCochain) -> BarCochain {
    let ginv = ctx.group.inv[g];
    let dim = ctx.algebra.dim;
    // On modules the honest inverse of T_g is c(g,g^{-1})^{-1}-twisted
    // T_{g^{-1}}: (T_g)^{-1} = T_{g^{-1}} c(g,g^{-1})^{-1} as operators on V.
    let cgg = &ctx.c[g][ginv];
    let cgg_inv = ctx.algebra.inverse(cgg).expect("invertible cocycle");
    let tv_inv = mat_mul(&ctx.t_v[ginv], &ctx.v.act_elem(&cgg_inv));
    let mut out = BarCochain::zero(phi.degree);
    for (&q, _) in &phi.comps {
        let n_out = tuple_count(dim, q);
        let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out];
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q, idx);
            // T^{-1} on the algebra: apply t_alg[ginv] conjugated by c(g,g^{-1})
            let args: Vec<AlgElement> = tuple
                .iter()
                .map(|&t| {
                    let back = ctx.apply_t_alg(ginv, &ctx.algebra.basis_elem(t));
                    // honest inverse of T_g on A: Ad(c(g,g^{-1}))^{-1} after T_{g^{-1}}
                    ctx.algebra
                        .conjugate(&cgg_inv, &back)
                        .expect("invertible cocycle")
                })
                .collect();
            let m = phi.eval(ctx, &args);
            *entry = mat_mul(&ctx.t_w[g], &mat_mul(&m, &tv_inv));
        }
        out.comps.insert(q, result);
    }
    out
}

/// `Ad(c)`: conjugation of the cochain by an invertible degree-0 element.
pub fn ad_c(ctx: &FinAction, c: &AlgElement, phi: &BarCochain) -> BarCochain {
    let cinv = ctx.algebra.inverse(c).expect("invertible element");
    let dim = ctx.algebra.dim;
    let c_w = ctx.w.act_elem(c);
    let cinv_v = ctx.v.act_elem(&cinv);
    let mut out = BarCochain::zero(phi.degree);
    for (&q, _) in &phi.comps {
        let n_out = tuple_count(dim, q);
        let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out];
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q, idx);
            let args: Vec<AlgElement> = tuple
                .iter()
                .map(|&t| {
                    ctx.algebra
                        .conjugate(&cinv, &ctx.algebra.basis_elem(t))
                        .expect("invertible element")
                })
                .collect();
            let m = phi.eval(ctx, &args);
            *entry = mat_mul(&c_w, &mat_mul(&m, &cinv_v));
        }
        out.comps.insert(q, result);
    }
    out
}

/// All nondecreasing tuples `0 <= j_1 <= ... <= j_m <= cap`.
pub fn nondecreasing_tuples(m: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for prefix in &out {
            let lo = prefix.last().copied().unwrap_or(0);
            for j in lo..=cap {
                let mut p = prefix.clone();
                p.push(j);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// The homotopy family `phi(c_1, ..., c_m)` attached to invertible degree-0
/// elements; lowers total degree by `m`.
pub fn phi_op(ctx: &FinAction, cs: &[AlgElement], phi: &BarCochain) -> Result<BarCochain> {
    let m = cs.len();
    if m == 0 {
        return Ok(phi.clone());
    }
    for c in cs {
        ctx.algebra.inverse(c)?;
    }
    // running products c_1..c_j and their inverses
    let mut prods: Vec<AlgElement> = vec![ctx.algebra.unit.clone()];
    for c in cs {
        let last = prods.last().unwrap();
        prods.push(ctx.algebra.mul(last, c));
    }
    let prod_invs: Vec<AlgElement> =
        prods.iter().map(|p| ctx.algebra.inverse(p).unwrap()).collect();
    let full_inv_v = ctx.v.act_elem(prod_invs.last().unwrap());
    // Global sign (-1)^{m(m+1)/2 + m|phi|}: the staircase telescopes
    // through the shuffle identity and makes [d, phi(c)] = Ad(c) - Id exact
    // in the suspended convention used throughout.
    let mm = m as i64;
    let global = sign_of(mm * (mm + 1) / 2 + mm * phi.degree as i64);

    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree - m as i32);
    let arities: Vec<usize> = phi.comps.keys().copied().collect();
    for q_in in arities {
        if q_in < m {
            continue;
        }
        let q_out = q_in - m;
        let n_out = tuple_count(dim, q_out);
        let mut result = out
            .comps
            .remove(&q_out)
            .unwrap_or_else(|| vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out]);
        let position_sets = nondecreasing_tuples(m, q_out);
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q_out, idx);
            let weights = prefix_weights(ctx, &tuple);
            for positions in &position_sets {
                // arguments: a's up to j_1, then c_1, conjugated a's, c_2, ...
                let mut args: Vec<AlgElement> = Vec::with_capacity(q_in);
                let mut sign_exp = 0i64;
                let mut pos_iter = 0usize;
                for (k, &jk) in positions.iter().enumerate() {
                    while pos_iter < jk {
                        let a = ctx.algebra.basis_elem(tuple[pos_iter]);
                        let conj =
                            ctx.algebra.mul(&ctx.algebra.mul(&prod_invs[k], &a), &prods[k]);
                        args.push(conj);
                        pos_iter += 1;
                    }
                    sign_exp += weights[jk];
                    args.push(cs[k].clone());
                }
                while pos_iter < q_out {
                    let a = ctx.algebra.basis_elem(tuple[pos_iter]);
                    let conj =
                        ctx.algebra.mul(&ctx.algebra.mul(&prod_invs[m], &a), &prods[m]);
                    args.push(conj);
                    pos_iter += 1;
                }
                let mval = phi.eval(ctx, &args);
                let signed = mat_scale(&mval, &(&global * &sign_of(sign_exp)));
                *entry = mat_add(entry, &mat_mul(&signed, &full_inv_v));
            }
        }
        out.comps.insert(q_out, result);
    }
    Ok(out)
}

/// The insertion operator `iota_a` of degree `|a| - 1`.
pub fn iota(ctx: &FinAction, a: &AlgElement, phi: &BarCochain) -> BarCochain {
    let a_deg = ctx.algebra.degree_of(a).unwrap_or(0) as i64;
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree + a_deg as i32 - 1);
    let arities: Vec<usize> = phi.comps.keys().copied().collect();
    for q_in in arities {
        if q_in == 0 {
            continue;
        }
        let q_out = q_in - 1;
        let n_out = tuple_count(dim, q_out);
        let mut result = out
            .comps
            .remove(&q_out)
            .unwrap_or_else(|| vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out]);
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q_out, idx);
            let weights = prefix_weights(ctx, &tuple);
            for j in 0..=q_out {
                let mut args: Vec<AlgElement> = Vec::with_capacity(q_in);
                for &t in &tuple[..j] {
                    args.push(ctx.algebra.basis_elem(t));
                }
                args.push(a.clone());
                for &t in &tuple[j..] {
                    args.push(ctx.algebra.basis_elem(t));
                }
                let m = phi.eval(ctx, &args);
                let s = sign_of((a_deg + 1) * (phi.degree as i64 + weights[j]));
                *entry = mat_add(entry, &mat_scale(&m, &s));
            }
        }
        out.comps.insert(q_out, result);
    }
    out
}

/// `exp(iota_a)`: exact on finitely supported cochains (arity-lowering).
pub fn exp_iota(ctx: &FinAction, a: &AlgElement, phi: &BarCochain) -> BarCochain {
    let mut out = phi.clone();
    let mut term = phi.clone();
    let mut k = 1u32;
    loop {
        term = iota(ctx, a, &term);
        if term.is_zero() {
            break;
        }
        let mut factorial = Rational::one();
        for t in 1..=k {
            factorial *= rat_int(t as i64);
        }
        let scaled = term.scale(&ScalarExt::from_rational(factorial.recip()));
        // exp terms land in the same total degree only when |a| = 1
        out = BarCochain {
            degree: out.degree,
            comps: add_comp_maps(&out.comps, &scaled.comps, ctx),
        };
        k += 1;
        if k > 64 {
            panic!("exp(iota) failed to terminate");
        }
    }
    out
}

fn add_comp_maps(
    a: &BTreeMap<usize, Vec<Matrix>>,
    b: &BTreeMap<usize, Vec<Matrix>>,
    _ctx: &FinAction,
) -> BTreeMap<usize, Vec<Matrix>> {
    let mut out = a.clone();
    for (q, tables) in b {
        match out.get_mut(q) {
            Some(mine) => {
                for (i, m) in tables.iter().enumerate() {
                    mine[i] = mat_add(&mine[i], m);
                }
            }
            None => {
                out.insert(*q, tables.clone());
            }
        }
    }
    out
}

/// Action of the derivation `D` on cochains:
/// `(D phi)(a1..an) = [D, phi(a1..an)] - sum_j +- phi(a1,..,D a_j,..,an)`.
pub fn d_action(ctx: &FinAction, phi: &BarCochain) -> BarCochain {
    let data = ctx.derivation.as_ref().expect("derivation data present");
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree + 1);
    for (&q, tables) in &phi.comps {
        let n_out = tuple_count(dim, q);
        let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out];
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q, idx);
            let m = &tables[idx];
            // [D, phi(args)] with the Hom-degree of phi(args)
            let hom_deg: i64 = phi.degree as i64 - q as i64
                + tuple.iter().map(|&t| ctx.algebra.degrees[t] as i64).sum::<i64>();
            let mut acc = mat_mul(&data.d_w, m);
            acc = mat_add(
                &acc,
                &mat_scale(&mat_mul(m, &data.d_v), &(-&sign_of(hom_deg + 1))),
            );
            // derivative terms
            let mut deg_prefix = 0i64;
            for (j, &t) in tuple.iter().enumerate() {
                let da = ctx.d_of(&ctx.algebra.basis_elem(t));
                if !ctx.algebra.is_zero_elem(&da) {
                    let mut args: Vec<AlgElement> = Vec::with_capacity(q);
                    for (slot, &s) in tuple.iter().enumerate() {
                        if slot == j {
                            args.push(da.clone());
                        } else {
                            args.push(ctx.algebra.basis_elem(s));
                        }
                    }
                    let val = phi.eval(ctx, &args);
                    let s = sign_of(phi.degree as i64 + 1 + deg_prefix);
                    acc = mat_add(&acc, &mat_scale(&val, &(-&s)));
                }
                deg_prefix += ctx.algebra.degrees[t] as i64 + 1;
            }
            *entry = acc;
        }
        out.comps.insert(q, result);
    }
    out
}

/// The full differential `delta + D - iota_R` of the curved standard
/// complex; reduces to `delta` when no derivation data is present.
pub fn full_differential(ctx: &FinAction, phi: &BarCochain) -> BarCochain {
    let mut out = bar_delta(ctx, phi);
    if let Some(data) = &ctx.derivation {
        out = out.add(&d_action(ctx, phi));
        if !ctx.algebra.is_zero_elem(&data.r) {
            out = out.add(&iota(ctx, &data.r, phi).neg());
        }
    }
    out
}

/// Graded commutator `[full_differential, op]` applied to `phi`, where `op`
/// has the given total degree.
pub fn differential_commutator(
    ctx: &FinAction,
    op: &dyn Fn(&BarCochain) -> BarCochain,
    op_degree: i64,
    phi: &BarCochain,
) -> BarCochain {
    let left = full_differential(ctx, &op(phi));
    let right = op(&full_differential(ctx, phi));
    left.add(&right.scale(&(-&sign_of(op_degree))))
}

// ---------------------------------------------------------------------------
// Yoneda product
// ---------------------------------------------------------------------------

/// Cup product for cochains over module chains `V1 -> V2 -> V3`; here all
/// three are the action's `V`/`W` pair with `V = W`, which suffices for the
/// implemented checks. `phi` takes the first block of arguments.
pub fn yoneda_cup(ctx: &FinAction, phi: &BarCochain, psi: &BarCochain) -> BarCochain {
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree + psi.degree);
    for (&qp, tp) in &phi.comps {
        for (&qs, ts) in &psi.comps {
            let q_out = qp + qs;
            let n_out = tuple_count(dim, q_out);
            let mut result = out
                .comps
                .remove(&q_out)
                .unwrap_or_else(|| vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out]);
            for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
                let tuple = tuple_unrank(dim, q_out, idx);
                let first = &tuple[..qp];
                let second = &tuple[qp..];
                let mphi = &tp[tuple_rank(dim, first)];
                let mpsi = &ts[tuple_rank(dim, second)];
                // Koszul sign: psi moves past the first block of bar arguments
                let w: i64 = first
                    .iter()
                    .map(|&t| ctx.algebra.degrees[t] as i64 + 1)
                    .sum();
                let s = sign_of(psi.degree as i64 * w);
                *entry = mat_add(entry, &mat_scale(&mat_mul(mpsi, mphi), &s));
            }
            out.comps.insert(q_out, result);
        }
    }
    out
}
