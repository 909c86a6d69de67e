//! Group actions on bar complexes up to inner automorphisms: the curved
//! operator dressings, the shuffle-product identity for the homotopy family,
//! the recursion generating the higher action operators, equivalence
//! transport, quotient actions, and the pair-groupoid contracting homotopy.
//!
//! Sign conventions (resolved here once, validated by the identity tests):
//! the boundary identity for the homotopy family reads
//! `[d, phi(c_1..c_m)] = Ad~(c_1) phi(c_2..c_m)
//!    + sum_j (-1)^j phi(.., c_j c_{j+1}, ..) + (-1)^m phi(c_1..c_{m-1})`
//! and the recursion seeds `Psi(g) = 1` with
//! `Psi(g_1..g_{n+1}) = s sum_j (-1)^{j+1} Psi(g_1..g_j)
//!    T_{g_1..g_j} Psi(g_{j+1}..g_{n+1}) c(g_1..g_j, g_{j+1}..g_{n+1})`.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use crate::bar::{
    ad_c, bar_delta, exp_iota, full_differential, iota, mat_add, mat_identity, mat_is_zero,
    mat_mul, mat_scale, mat_zero, nondecreasing_tuples, phi_op, t_twist, tuple_count,
    tuple_rank, tuple_unrank, AlgElement, BarCochain, DerivationData, FinAction, FinAlgebra,
    GroupTable, Matrix,
};
use crate::error::{CoreError, Result};
use crate::scalar::{rat_int, Rational, ScalarExt};

fn sign_of(i: i64) -> ScalarExt {
    if i.rem_euclid(2) == 0 {
        ScalarExt::one()
    } else {
        ScalarExt::from_int(-1)
    }
}

// ---------------------------------------------------------------------------
// Curved operators
// ---------------------------------------------------------------------------

/// `T_g` dressed by the insertion exponential: `exp(iota_{alpha(g)}) T_g`.
/// Without derivation data this is the plain twist.
pub fn curved_t(ctx: &FinAction, g: usize, phi: &BarCochain) -> BarCochain {
    let twisted = t_twist(ctx, g, phi);
    match &ctx.derivation {
        Some(data) => exp_iota(ctx, &data.alpha[g], &twisted),
        None => twisted,
    }
}

/// `Ad(c)` dressed by `exp(-iota_{Dc c^{-1}})`.
pub fn ad_tilde(ctx: &FinAction, c: &AlgElement, phi: &BarCochain) -> BarCochain {
    let plain = ad_c(ctx, c, phi);
    match &ctx.derivation {
        Some(_) => {
            let cinv = ctx.algebra.inverse(c).expect("invertible element");
            let u = ctx.algebra.mul(&ctx.d_of(c), &cinv);
            let minus_u = ctx.algebra.neg(&u);
            exp_iota(ctx, &minus_u, &plain)
        }
        None => plain,
    }
}

/// The curved homotopy family: like `phi_op`, with trailing argument blocks
/// transported by `Ad~(c_1..c_k)^{-1}` (which inserts the degree-one
/// elements `D(c_1..c_k)(c_1..c_k)^{-1}` in all positions).
pub fn phi_op_curved(ctx: &FinAction, cs: &[AlgElement], phi: &BarCochain) -> Result<BarCochain> {
    if ctx.derivation.is_none() {
        return phi_op(ctx, cs, phi);
    }
    let m = cs.len();
    if m == 0 {
        return Ok(phi.clone());
    }
    let alg = &ctx.algebra;
    for c in cs {
        alg.inverse(c)?;
    }
    let mut prods: Vec<AlgElement> = vec![alg.unit.clone()];
    for c in cs {
        let last = prods.last().unwrap();
        prods.push(alg.mul(last, c));
    }
    let prod_invs: Vec<AlgElement> = prods.iter().map(|p| alg.inverse(p).unwrap()).collect();
    // u_k = D(p_k) p_k^{-1}, conjugated into position: p_k^{-1} u_k p_k
    let us: Vec<AlgElement> = prods
        .iter()
        .zip(&prod_invs)
        .map(|(p, pinv)| {
            let u = alg.mul(&ctx.d_of(p), pinv);
            alg.mul(&alg.mul(pinv, &u), p)
        })
        .collect();
    let full_inv_v = ctx.v.act_elem(prod_invs.last().unwrap());
    let mm = m as i64;
    let global = sign_of(mm * (mm + 1) / 2 + mm * phi.degree as i64);
    let max_arity = phi.max_arity().unwrap_or(0);

    let dim = alg.dim;
    let mut out = BarCochain::zero(phi.degree - m as i32);
    // output arities: every q_out with q_out + m <= max stored arity can
    // receive contributions (insertions only add arguments)
    for q_out in 0..=max_arity.saturating_sub(m) {
        let n_out = tuple_count(dim, q_out);
        let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out];
        let position_sets = nondecreasing_tuples(m, q_out);
        for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
            let tuple = tuple_unrank(dim, q_out, idx);
            let weights = {
                let mut acc = 0i64;
                let mut w = vec![0i64];
                for &t in &tuple {
                    acc += alg.degrees[t] as i64 + 1;
                    w.push(acc);
                }
                w
            };
            for positions in &position_sets {
                // blocks: block k (0-based) lies between c_k and c_{k+1}
                // block 0 = a_1..a_{j_1} untouched; block k conjugated by
                // p_k and dressed with any number of u_k insertions.
                let mut sign_exp = 0i64;
                for &jk in positions {
                    sign_exp += weights[jk];
                }
                // assemble the blocks with conjugation (no insertions yet)
                let mut blocks: Vec<Vec<AlgElement>> = Vec::with_capacity(m + 1);
                let mut bounds = vec![0usize];
                bounds.extend(positions.iter().copied());
                bounds.push(q_out);
                for k in 0..=m {
                    let (lo, hi) = (bounds[k], bounds[k + 1]);
                    let mut block = Vec::new();
                    for &t in &tuple[lo..hi] {
                        let a = alg.basis_elem(t);
                        block.push(alg.mul(&alg.mul(&prod_invs[k], &a), &prods[k]));
                    }
                    blocks.push(block);
                }
                // enumerate u-insertions into blocks 1..m (block 0 untouched);
                // total argument count capped by the stored arities of phi
                let base_len = q_out + m;
                let budget = max_arity.saturating_sub(base_len);
                insert_and_accumulate(
                    ctx,
                    phi,
                    cs,
                    &blocks,
                    &us,
                    budget,
                    &(&global * &sign_of(sign_exp)),
                    &full_inv_v,
                    entry,
                );
            }
        }
        out.comps.insert(q_out, result);
    }
    Ok(out)
}

/// Recursively inserts `0..=budget` copies of `us[k]` into block `k`
/// (`k >= 1`), evaluates, and accumulates. Inserted elements have odd
/// degree, so no extra Koszul signs arise.
#[allow(clippy::too_many_arguments)]
fn insert_and_accumulate(
    ctx: &FinAction,
    phi: &BarCochain,
    cs: &[AlgElement],
    blocks: &[Vec<AlgElement>],
    us: &[AlgElement],
    budget: usize,
    sign: &ScalarExt,
    full_inv_v: &Matrix,
    entry: &mut Matrix,
) {
    let m = cs.len();
    // choices[k] = list of dressed variants of block k (with insertion count)
    fn dress(block: &[AlgElement], u: &AlgElement, budget: usize, alg: &FinAlgebra) -> Vec<(usize, Vec<Vec<AlgElement>>)> {
        // returns per insertion count r the list of dressed blocks
        let mut per_count: Vec<(usize, Vec<Vec<AlgElement>>)> = Vec::new();
        if alg.is_zero_elem(u) {
            per_count.push((0, vec![block.to_vec()]));
            return per_count;
        }
        for r in 0..=budget {
            let gaps = block.len() + 1;
            // distribute r insertions over gaps (multisets)
            let distributions = nondecreasing_tuples(r, gaps.saturating_sub(1));
            let mut variants = Vec::new();
            for dist in distributions {
                // dist is a nondecreasing list of gap indices
                let mut dressed: Vec<AlgElement> = Vec::with_capacity(block.len() + r);
                let mut di = 0usize;
                for (gap, b) in block.iter().enumerate() {
                    while di < dist.len() && dist[di] == gap {
                        dressed.push(u.clone());
                        di += 1;
                    }
                    dressed.push(b.clone());
                }
                while di < dist.len() {
                    dressed.push(u.clone());
                    di += 1;
                }
                variants.push(dressed);
            }
            per_count.push((r, variants));
        }
        per_count
    }

    // enumerate dressed variants per block (blocks 1..=m only)
    let mut dressed_blocks: Vec<Vec<(usize, Vec<Vec<AlgElement>>)>> = Vec::new();
    for (k, block) in blocks.iter().enumerate() {
        if k == 0 {
            dressed_blocks.push(vec![(0, vec![block.clone()])]);
        } else {
            dressed_blocks.push(dress(block, &us[k], budget, &ctx.algebra));
        }
    }
    // cartesian product over blocks with total insertion count <= budget
    fn recurse(
        ctx: &FinAction,
        phi: &BarCochain,
        cs: &[AlgElement],
        dressed_blocks: &[Vec<(usize, Vec<Vec<AlgElement>>)>],
        k: usize,
        used: usize,
        budget: usize,
        prefix: &[AlgElement],
        sign: &ScalarExt,
        full_inv_v: &Matrix,
        entry: &mut Matrix,
    ) {
        let m = cs.len();
        if k > m {
            let val = phi.eval(ctx, prefix);
            if !mat_is_zero(&val) {
                let signed = mat_scale(&val, sign);
                *entry = mat_add(entry, &mat_mul(&signed, full_inv_v));
            }
            return;
        }
        for (count, variants) in &dressed_blocks[k] {
            if used + count > budget {
                continue;
            }
            for variant in variants {
                let mut next = prefix.to_vec();
                next.extend(variant.iter().cloned());
                if k < m {
                    next.push(cs[k].clone());
                }
                recurse(
                    ctx, phi, cs, dressed_blocks, k + 1, used + count, budget, &next, sign,
                    full_inv_v, entry,
                );
            }
        }
    }
    recurse(ctx, phi, cs, &dressed_blocks, 0, 0, budget, &[], sign, full_inv_v, entry);
}

// ---------------------------------------------------------------------------
// Shuffle identity
// ---------------------------------------------------------------------------

/// Enumerates the signed shuffle tuples of Lemma-style products
/// `phi(c_1..c_m) phi(d_1..d_n) = sum +- phi(e_1..e_{m+n})`: interleavings
/// preserving both orders, each `c_j` conjugated by the product of the `d`'s
/// to its left, with sign `(-1)^{#(d left of c) pairs}`.
pub fn shuffle_tuples(
    alg: &FinAlgebra,
    cs: &[AlgElement],
    ds: &[AlgElement],
) -> Vec<(i64, Vec<AlgElement>)> {
    let m = cs.len();
    let n = ds.len();
    let mut out = Vec::new();
    // choose positions of c's in the merged word
    let total = m + n;
    let mut choice = (0..m).collect::<Vec<usize>>(); // positions of c's, increasing
    loop {
        // build the tuple
        let mut is_c = vec![false; total];
        for &p in &choice {
            is_c[p] = true;
        }
        let mut tuple = Vec::with_capacity(total);
        let mut d_prefix = alg.unit.clone();
        let mut d_prefix_inv = alg.unit.clone();
        let mut d_iter = ds.iter();
        let mut c_iter = cs.iter();
        let mut inversions = 0i64;
        let mut d_count = 0i64;
        for flag in &is_c {
            if *flag {
                let c = c_iter.next().unwrap();
                inversions += d_count;
                tuple.push(alg.mul(&alg.mul(&d_prefix, c), &d_prefix_inv));
            } else {
                let d = d_iter.next().unwrap();
                d_count += 1;
                d_prefix = alg.mul(&d_prefix, d);
                d_prefix_inv = alg.inverse(&d_prefix).expect("invertible");
                tuple.push(d.clone());
            }
        }
        out.push((inversions, tuple));
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if choice[i] < total - (m - i) {
                choice[i] += 1;
                for t in i + 1..m {
                    choice[t] = choice[t - 1] + 1;
                }
                break;
            }
        }
        if m == 0 {
            return out;
        }
    }
}

/// Verifies `phi(c_1..c_m) phi(d_1..d_n) = sum +- phi(e-tuple)` as operators
/// on the given cochain (curved variants when derivation data is present).
pub fn tasovki_check(
    ctx: &FinAction,
    cs: &[AlgElement],
    ds: &[AlgElement],
    phi: &BarCochain,
) -> Result<bool> {
    let lhs = phi_op_curved(ctx, cs, &phi_op_curved(ctx, ds, phi)?)?;
    let mut rhs = BarCochain::zero(phi.degree - (cs.len() + ds.len()) as i32);
    for (sign, tuple) in shuffle_tuples(&ctx.algebra, cs, ds) {
        let term = phi_op_curved(ctx, &tuple, phi)?;
        rhs = rhs.add(&term.scale(&sign_of(sign)));
    }
    Ok(lhs.sub(&rhs).is_zero())
}

// ---------------------------------------------------------------------------
// The word algebra generated by the homotopy family, and the recursion
// ---------------------------------------------------------------------------

/// A scalar multiple of a word `c_0 Phi(c_1, ..., c_m)`.
#[derive(Clone, Debug)]
pub struct BWord {
    pub coeff: ScalarExt,
    pub c0: AlgElement,
    pub phis: Vec<AlgElement>,
}

pub type BSum = Vec<BWord>;

fn bsum_push(alg: &FinAlgebra, sum: &mut BSum, word: BWord) {
    if word.coeff.is_zero() {
        return;
    }
    for existing in sum.iter_mut() {
        if existing.c0 == word.c0 && existing.phis == word.phis {
            existing.coeff = &existing.coeff + &word.coeff;
            return;
        }
    }
    let _ = alg;
    sum.push(word);
}

fn bsum_normalize(sum: BSum) -> BSum {
    sum.into_iter().filter(|w| !w.coeff.is_zero()).collect()
}

/// Product in the word algebra:
/// `(c0 Phi(cs)) (d0 Phi(ds)) = (c0 d0) Phi(shuffles(Ad_{d0^{-1}} cs, ds))`.
pub fn bword_mul(alg: &FinAlgebra, a: &BWord, b: &BWord) -> BSum {
    let d0inv = alg.inverse(&b.c0).expect("invertible");
    let conj_cs: Vec<AlgElement> = a
        .phis
        .iter()
        .map(|c| alg.mul(&alg.mul(&d0inv, c), &b.c0))
        .collect();
    let mut out = BSum::new();
    let coeff = &a.coeff * &b.coeff;
    for (sign, tuple) in shuffle_tuples(alg, &conj_cs, &b.phis) {
        bsum_push(
            alg,
            &mut out,
            BWord {
                coeff: &coeff * &sign_of(sign),
                c0: alg.mul(&a.c0, &b.c0),
                phis: tuple,
            },
        );
    }
    out
}

pub fn bsum_mul(alg: &FinAlgebra, a: &BSum, b: &BSum) -> BSum {
    let mut out = BSum::new();
    for wa in a {
        for wb in b {
            for w in bword_mul(alg, wa, wb) {
                bsum_push(alg, &mut out, w);
            }
        }
    }
    bsum_normalize(out)
}

/// Right multiplication by a plain invertible element.
pub fn bsum_mul_elem(alg: &FinAlgebra, a: &BSum, c: &AlgElement) -> BSum {
    let word = BWord { coeff: ScalarExt::one(), c0: c.clone(), phis: Vec::new() };
    bsum_mul(alg, a, &vec![word])
}

/// The group twist `T_h (c0 Phi(cs)) = (T_h c0) Phi(T_h cs)`.
pub fn bsum_t_apply(ctx: &FinAction, h: usize, a: &BSum) -> BSum {
    a.iter()
        .map(|w| BWord {
            coeff: w.coeff.clone(),
            c0: ctx.apply_t_alg(h, &w.c0),
            phis: w.phis.iter().map(|c| ctx.apply_t_alg(h, c)).collect(),
        })
        .collect()
}

/// The homotopy `s(c0 Phi(cs)) = Phi(c0, cs)`.
pub fn bsum_homotopy(alg: &FinAlgebra, a: &BSum) -> BSum {
    let mut out = BSum::new();
    for w in a {
        let mut phis = vec![w.c0.clone()];
        phis.extend(w.phis.iter().cloned());
        bsum_push(
            alg,
            &mut out,
            BWord { coeff: w.coeff.clone(), c0: alg.unit.clone(), phis },
        );
    }
    bsum_normalize(out)
}

/// The recursion producing the higher-action words:
/// `Psi(g) = 1`, and for longer tuples the homotopy of the signed sum of
/// split products twisted by the cocycle values.
pub fn psi_words(ctx: &FinAction, tuple: &[usize]) -> BSum {
    let alg = &ctx.algebra;
    if tuple.len() <= 1 {
        return vec![BWord { coeff: ScalarExt::one(), c0: alg.unit.clone(), phis: Vec::new() }];
    }
    let n1 = tuple.len();
    let mut acc = BSum::new();
    for j in 1..n1 {
        let left = psi_words(ctx, &tuple[..j]);
        let right = psi_words(ctx, &tuple[j..]);
        let gleft = tuple[..j]
            .iter()
            .fold(ctx.group.identity, |acc, &g| ctx.group.mul[acc][g]);
        let gright = tuple[j..]
            .iter()
            .fold(ctx.group.identity, |acc, &g| ctx.group.mul[acc][g]);
        let twisted = bsum_t_apply(ctx, gleft, &right);
        let mut prod = bsum_mul(alg, &left, &twisted);
        prod = bsum_mul_elem(alg, &prod, &ctx.c[gleft][gright]);
        let s = sign_of(j as i64 + 1);
        for w in prod {
            bsum_push(alg, &mut acc, BWord { coeff: &w.coeff * &s, c0: w.c0, phis: w.phis });
        }
    }
    bsum_homotopy(alg, &bsum_normalize(acc))
}

/// The action operator `T(g_1..g_n) = psi(g_1..g_n) T_{g_1..g_n}`, realized
/// on a cochain. Words map to `Ad~(c0)` composed with the (curved) homotopy
/// family; the trailing twist is the (curved) `T` of the product.
pub fn ainfty_t_apply(ctx: &FinAction, tuple: &[usize], phi: &BarCochain) -> Result<BarCochain> {
    let gtotal = tuple
        .iter()
        .fold(ctx.group.identity, |acc, &g| ctx.group.mul[acc][g]);
    let twisted = curved_t(ctx, gtotal, phi);
    let words = psi_words(ctx, tuple);
    let mut out = BarCochain::zero(twisted.degree - (tuple.len() as i32 - 1));
    for w in words {
        let mut term = phi_op_curved(ctx, &w.phis, &twisted)?;
        if w.c0 != ctx.algebra.unit {
            term = ad_tilde(ctx, &w.c0, &term);
        }
        out = out.add(&term.scale(&w.coeff));
    }
    Ok(out)
}

/// Verifies the coherence relation
/// `[d, T(g_1..g_n)] + sum_j (-1)^j T(g_1..g_j) T(g_{j+1}..g_n)
///   - sum_j (-1)^j T(g_1..g_j g_{j+1}..g_n) = 0`
/// on the given cochain for one tuple.
pub fn ainfty_relation_holds(
    ctx: &FinAction,
    tuple: &[usize],
    phi: &BarCochain,
) -> Result<bool> {
    let n = tuple.len();
    let t_n = ainfty_t_apply(ctx, tuple, phi)?;
    // [d, T]: T has degree 1 - n
    let mut acc = full_differential(ctx, &t_n);
    let d_phi = full_differential(ctx, phi);
    let t_d = ainfty_t_apply(ctx, tuple, &d_phi)?;
    acc = acc.add(&t_d.scale(&(-&sign_of(1 - n as i64))));
    for j in 1..n {
        let right = ainfty_t_apply(ctx, &tuple[j..], phi)?;
        let both = ainfty_t_apply(ctx, &tuple[..j], &right)?;
        acc = acc.add(&both.scale(&sign_of(j as i64)));
        let mut merged = tuple.to_vec();
        let prod = ctx.group.mul[tuple[j - 1]][tuple[j]];
        merged[j - 1] = prod;
        merged.remove(j);
        let t_merged = ainfty_t_apply(ctx, &merged, phi)?;
        acc = acc.add(&t_merged.scale(&(-&sign_of(j as i64))));
    }
    Ok(acc.is_zero())
}

// ---------------------------------------------------------------------------
// Equivalence transport
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Equivalence {
    /// Invertible degree-0 elements per group element.
    pub b: Vec<AlgElement>,
    /// Degree-one element (zero when no derivation data).
    pub beta: AlgElement,
}

impl Equivalence {
    pub fn identity(ctx: &FinAction) -> Self {
        Equivalence {
            b: vec![ctx.algebra.unit.clone(); ctx.group.size],
            beta: ctx.algebra.elem_zero(),
        }
    }

    /// Composition `(b1 b2)(g) = b1(g) b2(g)`, `beta = beta1 + beta2`.
    pub fn compose(&self, ctx: &FinAction, other: &Equivalence) -> Equivalence {
        Equivalence {
            b: self
                .b
                .iter()
                .zip(&other.b)
                .map(|(x, y)| ctx.algebra.mul(x, y))
                .collect(),
            beta: ctx.algebra.add(&self.beta, &other.beta),
        }
    }
}

/// Transports the action data along an equivalence and verifies that the
/// transported data satisfies every invariant.
pub fn equivalence_transport(ctx: &FinAction, eq: &Equivalence) -> Result<FinAction> {
    let alg = &ctx.algebra;
    let mut t_alg = Vec::new();
    let mut t_v = Vec::new();
    let mut t_w = Vec::new();
    for g in 0..ctx.group.size {
        let b = &eq.b[g];
        let binv = alg.inverse(b)?;
        // Ad(b) T_g on the algebra
        let mut m = mat_zero(alg.dim, alg.dim);
        for j in 0..alg.dim {
            let v = ctx.apply_t_alg(g, &alg.basis_elem(j));
            let v = alg.mul(&alg.mul(b, &v), &binv);
            for (i, x) in v.iter().enumerate() {
                m[i][j] = x.clone();
            }
        }
        t_alg.push(m);
        t_v.push(mat_mul(&ctx.v.act_elem(b), &ctx.t_v[g]));
        t_w.push(mat_mul(&ctx.w.act_elem(b), &ctx.t_w[g]));
    }
    let mut c = vec![vec![alg.elem_zero(); ctx.group.size]; ctx.group.size];
    for g1 in 0..ctx.group.size {
        for g2 in 0..ctx.group.size {
            let prod = ctx.group.mul[g1][g2];
            let binv = alg.inverse(&eq.b[prod])?;
            let mut v = alg.mul(&eq.b[g1], &ctx.apply_t_alg(g1, &eq.b[g2]));
            v = alg.mul(&v, &ctx.c[g1][g2]);
            v = alg.mul(&v, &binv);
            c[g1][g2] = v;
        }
    }
    let derivation = match &ctx.derivation {
        None => None,
        Some(data) => {
            // D' = D + ad(beta)
            let mut d_alg = data.d_alg.clone();
            for j in 0..alg.dim {
                let a = alg.basis_elem(j);
                let sign = if alg.degrees[j] % 2 == 0 { 1 } else { -1 };
                let v = alg.add(
                    &alg.mul(&eq.beta, &a),
                    &alg.scale(&alg.mul(&a, &eq.beta), &ScalarExt::from_int(-sign)),
                );
                for (i, x) in v.iter().enumerate() {
                    d_alg[i][j] = &d_alg[i][j] + x;
                }
            }
            // R' = R + D beta + beta^2
            let r = alg.add(
                &alg.add(&data.r, &ctx.d_of(&eq.beta)),
                &alg.mul(&eq.beta, &eq.beta),
            );
            // alpha'(g) = -D b(g) b(g)^{-1} + Ad_{b(g)}(alpha(g) + T_g beta)
            let mut alpha = Vec::new();
            for g in 0..ctx.group.size {
                let b = &eq.b[g];
                let binv = alg.inverse(b)?;
                let mut v = alg.neg(&alg.mul(&ctx.d_of(b), &binv));
                let inner = alg.add(&data.alpha[g], &ctx.apply_t_alg(g, &eq.beta));
                v = alg.add(&v, &alg.mul(&alg.mul(b, &inner), &binv));
                alpha.push(v);
            }
            Some(DerivationData {
                d_alg,
                r,
                alpha,
                d_v: mat_add(&data.d_v, &ctx.v.act_elem(&eq.beta)),
                d_w: mat_add(&data.d_w, &ctx.w.act_elem(&eq.beta)),
            })
        }
    };
    let out = FinAction {
        algebra: ctx.algebra.clone(),
        group: ctx.group.clone(),
        t_alg,
        c,
        v: ctx.v.clone(),
        w: ctx.w.clone(),
        t_v,
        t_w,
        derivation,
    };
    out.verify().map_err(CoreError::ActionInvariant)?;
    Ok(out)
}

/// The chain map attached to an equivalence: `exp(iota_beta)`.
pub fn transport_chain_map(ctx: &FinAction, eq: &Equivalence, phi: &BarCochain) -> BarCochain {
    if ctx.algebra.is_zero_elem(&eq.beta) {
        phi.clone()
    } else {
        exp_iota(ctx, &eq.beta, phi)
    }
}

// ---------------------------------------------------------------------------
// Quotient actions
// ---------------------------------------------------------------------------

/// Data for a plain (cocycle-free) action of a group `G` on the algebra.
#[derive(Clone, Debug)]
pub struct PlainAction {
    pub group: GroupTable,
    pub t_alg: Vec<Matrix>,
    pub t_v: Vec<Matrix>,
    pub t_w: Vec<Matrix>,
}

/// Builds the quotient action of `G/H` up to inner automorphisms from an
/// honest `G`-action, an equivariant embedding `i : H -> A^x`, and a choice
/// of section (coset representatives).
pub fn quotient_action(
    alg: &FinAlgebra,
    v: &crate::bar::FinModule,
    w: &crate::bar::FinModule,
    big: &PlainAction,
    h_elems: &[usize],
    i_map: &BTreeMap<usize, AlgElement>,
    section: &[usize],
) -> Result<FinAction> {
    let g = &big.group;
    // H must be a subgroup and normal
    for &h1 in h_elems {
        for &h2 in h_elems {
            if !h_elems.contains(&g.mul[h1][h2]) {
                return Err(CoreError::NonNormalSubgroup);
            }
        }
    }
    for gg in 0..g.size {
        for &h in h_elems {
            let conj = g.mul[g.mul[gg][h]][g.inv[gg]];
            if !h_elems.contains(&conj) {
                return Err(CoreError::NonNormalSubgroup);
            }
        }
    }
    // i must be a homomorphism and equivariant: i(g h g^{-1}) = T_g(i(h))
    let apply_t = |t: usize, a: &AlgElement| {
        let m = &big.t_alg[t];
        let mut outv = alg.elem_zero();
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if !x.is_zero() && !a[j].is_zero() {
                    outv[i] = &outv[i] + &(x * &a[j]);
                }
            }
        }
        outv
    };
    for &h1 in h_elems {
        for &h2 in h_elems {
            let lhs = alg.mul(&i_map[&h1], &i_map[&h2]);
            let rhs = &i_map[&g.mul[h1][h2]];
            if &lhs != rhs {
                return Err(CoreError::NonEquivariantEmbedding);
            }
        }
    }
    for gg in 0..g.size {
        for &h in h_elems {
            let conj = g.mul[g.mul[gg][h]][g.inv[gg]];
            let lhs = apply_t(gg, &i_map[&h]);
            if lhs != i_map[&conj] {
                return Err(CoreError::NonEquivariantEmbedding);
            }
        }
    }
    // H must act by Ad(i(h)) on A and by i(h) on the modules
    for &h in h_elems {
        let ih = &i_map[&h];
        let ihinv = alg.inverse(ih)?;
        for j in 0..alg.dim {
            let a = alg.basis_elem(j);
            let lhs = apply_t(h, &a);
            let rhs = alg.mul(&alg.mul(ih, &a), &ihinv);
            if lhs != rhs {
                return Err(CoreError::ActionInvariant(
                    "kernel does not act by the declared inner automorphisms".into(),
                ));
            }
        }
        if !crate::bar::mat_eq(&big.t_v[h], &v.act_elem(ih))
            || !crate::bar::mat_eq(&big.t_w[h], &w.act_elem(ih))
        {
            return Err(CoreError::ActionInvariant(
                "kernel module action differs from the embedded elements".into(),
            ));
        }
    }
    // quotient group: cosets of H with the section's representatives
    let nq = section.len();
    let coset_of = |x: usize| -> Result<usize> {
        for (q, &rep) in section.iter().enumerate() {
            // x in rep H?
            let diff = g.mul[g.inv[rep]][x];
            if h_elems.contains(&diff) {
                return Ok(q);
            }
        }
        Err(CoreError::ActionInvariant("section does not cover the quotient".into()))
    };
    let mut qmul = vec![vec![0usize; nq]; nq];
    for q1 in 0..nq {
        for q2 in 0..nq {
            qmul[q1][q2] = coset_of(g.mul[section[q1]][section[q2]])?;
        }
    }
    let qgroup = GroupTable::from_mul(qmul)?;
    let mut c = vec![vec![alg.elem_zero(); nq]; nq];
    for q1 in 0..nq {
        for q2 in 0..nq {
            let prod_rep = section[qgroup.mul[q1][q2]];
            let word = g.mul[g.mul[section[q1]][section[q2]]][g.inv[prod_rep]];
            if !h_elems.contains(&word) {
                return Err(CoreError::ActionInvariant("section defect outside kernel".into()));
            }
            c[q1][q2] = i_map[&word].clone();
        }
    }
    let action = FinAction {
        algebra: alg.clone(),
        group: qgroup,
        t_alg: section.iter().map(|&r| big.t_alg[r].clone()).collect(),
        c,
        v: v.clone(),
        w: w.clone(),
        t_v: section.iter().map(|&r| big.t_v[r].clone()).collect(),
        t_w: section.iter().map(|&r| big.t_w[r].clone()).collect(),
        derivation: None,
    };
    action.verify().map_err(CoreError::ActionInvariant)?;
    Ok(action)
}

/// The equivalence `B(s2, s1)` between the quotient actions cut out by two
/// sections: `b(q) = i(s2(q) s1(q)^{-1})`.
pub fn section_change(
    alg: &FinAlgebra,
    big: &PlainAction,
    h_elems: &[usize],
    i_map: &BTreeMap<usize, AlgElement>,
    s1: &[usize],
    s2: &[usize],
) -> Result<Equivalence> {
    let g = &big.group;
    let mut b = Vec::new();
    for (r1, r2) in s1.iter().zip(s2) {
        let word = g.mul[*r2][g.inv[*r1]];
        if !h_elems.contains(&word) {
            return Err(CoreError::ActionInvariant("sections differ outside the kernel".into()));
        }
        b.push(i_map[&word].clone());
    }
    Ok(Equivalence { b, beta: alg.elem_zero() })
}

// ---------------------------------------------------------------------------
// Pair-groupoid contracting homotopy
// ---------------------------------------------------------------------------

/// Functions on `X^{q+1}` as dense tables; `delta` is the alternating sum of
/// coordinate-dropping pullbacks and `h` prepends the base point. Verifies
/// `delta h + h delta = Id - r0` through arity `qmax`, where `r0` replaces a
/// function on `X` by the constant at the base point and vanishes for q > 0.
pub fn pair_groupoid_homotopy(points: usize, base: usize, qmax: usize) -> Result<bool> {
    if points == 0 {
        return Err(CoreError::EmptyPointSet);
    }
    let delta = |omega: &[Rational], q: usize| -> Vec<Rational> {
        // input on X^{q+1}, output on X^{q+2}
        let out_len = points.pow(q as u32 + 2);
        let mut out = vec![Rational::zero(); out_len];
        for (idx, entry) in out.iter_mut().enumerate() {
            let tuple = tuple_unrank(points, q + 2, idx);
            for j in 0..=q + 1 {
                let mut sub = tuple.clone();
                sub.remove(j);
                let v = &omega[tuple_rank(points, &sub)];
                if j % 2 == 0 {
                    *entry += v;
                } else {
                    *entry -= v;
                }
            }
        }
        out
    };
    let homotopy = |omega: &[Rational], q: usize| -> Vec<Rational> {
        // input on X^{q+1}, output on X^{q}; zero when q = 0
        if q == 0 {
            return Vec::new();
        }
        let out_len = points.pow(q as u32);
        let mut out = vec![Rational::zero(); out_len];
        for (idx, entry) in out.iter_mut().enumerate() {
            let mut tuple = vec![base];
            tuple.extend(tuple_unrank(points, q, idx));
            *entry = omega[tuple_rank(points, &tuple)].clone();
        }
        out
    };
    for q in 0..=qmax {
        let len = points.pow(q as u32 + 1);
        for basis in 0..len {
            let mut omega = vec![Rational::zero(); len];
            omega[basis] = Rational::one();
            // [delta, h] = delta h + h delta
            let dh = if q == 0 {
                vec![Rational::zero(); len]
            } else {
                delta(&homotopy(&omega, q), q - 1)
            };
            let hd = homotopy(&delta(&omega, q), q + 1);
            let mut lhs: Vec<Rational> =
                dh.iter().zip(&hd).map(|(a, b)| a + b).collect();
            // Id - r0
            let mut rhs = omega.clone();
            if q == 0 {
                // r0: constant function at the base value
                let val = omega[base].clone();
                for entry in rhs.iter_mut() {
                    *entry -= &val;
                }
            }
            if lhs.len() != rhs.len() {
                return Ok(false);
            }
            for (a, b) in lhs.iter_mut().zip(&rhs) {
                if &*a != b {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Random cochains for the identity tests
// ---------------------------------------------------------------------------

/// A homogeneous finitely supported cochain with entries in a small integer
/// box, respecting the degree constraint of each slot.
pub fn random_cochain(
    ctx: &FinAction,
    degree: i32,
    arities: &[usize],
    rng: &mut impl rand::Rng,
) -> BarCochain {
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(degree);
    for &q in arities {
        let n = tuple_count(dim, q);
        let mut tables = Vec::with_capacity(n);
        for idx in 0..n {
            let tuple = tuple_unrank(dim, q, idx);
            let args_deg: i32 = tuple.iter().map(|&t| ctx.algebra.degrees[t]).sum();
            let hom_deg = degree - q as i32 + args_deg;
            let mut m = mat_zero(ctx.w.dim, ctx.v.dim);
            for (r, row) in m.iter_mut().enumerate() {
                for (cidx, entry) in row.iter_mut().enumerate() {
                    if ctx.w.degrees[r] - ctx.v.degrees[cidx] == hom_deg {
                        *entry = ScalarExt::from_int(rng.gen_range(-2..=2));
                    }
                }
            }
            tables.push(m);
        }
        out.comps.insert(q, tables);
    }
    out
}

/// Identity cochain: arity 0, the identity map (requires `V = W`).
pub fn identity_cochain(ctx: &FinAction) -> BarCochain {
    let mut out = BarCochain::zero(0);
    out.comps.insert(0, vec![mat_identity(ctx.v.dim)]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bar::{mat_eq, yoneda_cup};
    use crate::instances::{curved_action, pauli_action};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_elem(ctx: &FinAction, v: i64) -> AlgElement {
        ctx.algebra.scale(&ctx.algebra.unit, &ScalarExt::from_int(v))
    }

    fn sz_elem(ctx: &FinAction) -> AlgElement {
        // basis index 2 in both instances' degree-0 part
        ctx.algebra.basis_elem(2)
    }

    #[test]
    fn delta_squares_to_zero() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for deg in 0..3 {
            let phi = random_cochain(&ctx, deg, &[0, 1, 2, 3], &mut rng);
            assert!(bar_delta(&ctx, &bar_delta(&ctx, &phi)).is_zero());
        }
    }

    #[test]
    fn delta_at_arity_zero_is_commutator() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let phi = random_cochain(&ctx, 0, &[0], &mut rng);
        let d = bar_delta(&ctx, &phi);
        let m = phi.comps[&0][0].clone();
        for i in 0..ctx.algebra.dim {
            let expected = mat_add(
                &mat_mul(&ctx.w.action[i], &m),
                &mat_scale(&mat_mul(&m, &ctx.v.action[i]), &ScalarExt::from_int(-1)),
            );
            assert!(mat_eq(&d.comps[&1][i], &expected));
        }
    }

    #[test]
    fn full_differential_squares_to_zero_curved() {
        let ctx = curved_action();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for deg in 0..3 {
            let phi = random_cochain(&ctx, deg, &[0, 1, 2], &mut rng);
            let dd = full_differential(&ctx, &full_differential(&ctx, &phi));
            assert!(dd.is_zero(), "(delta + D - iota_R)^2 != 0 at degree {deg}");
        }
    }

    #[test]
    fn jota_relations() {
        // [delta, iota_a] = ad(a); [iota_a, iota_b] = 0; [D, iota_a] = iota_{Da}
        let ctx = curved_action();
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2], &mut rng);
        for idx in [1usize, 5, 6] {
            let a = ctx.algebra.basis_elem(idx);
            let a_deg = ctx.algebra.degrees[idx] as i64;
            // [delta, iota_a] with iota_a of degree |a| - 1
            let lhs = bar_delta(&ctx, &iota(&ctx, &a, &phi)).add(
                &iota(&ctx, &a, &bar_delta(&ctx, &phi))
                    .scale(&(-&sign_of(a_deg - 1))),
            );
            // ad(a) phi = a phi - (-1)^{|a||phi|} phi a, as the cochain
            // sending args to [a-action, phi(args)] with Koszul signs;
            // realized through iota of the commutator action:
            let rhs = ad_action(&ctx, &a, &phi);
            assert_eq!(lhs.sub(&rhs).is_zero(), true, "[delta, iota] != ad at basis {idx}");
            for jdx in [2usize, 5] {
                let b = ctx.algebra.basis_elem(jdx);
                let b_deg = ctx.algebra.degrees[jdx] as i64;
                let comm = iota(&ctx, &a, &iota(&ctx, &b, &phi)).add(
                    &iota(&ctx, &b, &iota(&ctx, &a, &phi))
                        .scale(&(-&sign_of((a_deg - 1) * (b_deg - 1)))),
                );
                assert!(comm.is_zero(), "[iota, iota] != 0 at ({idx},{jdx})");
            }
            // [D, iota_a] = (-1)^{|D|} iota_{Da} = -iota_{Da}
            let lhs2 = crate::bar::d_action(&ctx, &iota(&ctx, &a, &phi)).add(
                &iota(&ctx, &a, &crate::bar::d_action(&ctx, &phi))
                    .scale(&(-&sign_of(a_deg - 1))),
            );
            let da = ctx.d_of(&a);
            let rhs2 = iota(&ctx, &da, &phi).scale(&ScalarExt::from_int(-1));
            assert!(lhs2.sub(&rhs2).is_zero(), "[D, iota] mismatch at {idx}");
        }
    }

    /// `ad(a)` on cochains: `a . phi(args) - +- phi(args) . a` plus the
    /// argument-rotation terms, computed through the module actions; for
    /// degree-0 ungraded `a` it is `a phi - phi a` argument-wise. Computed
    /// here as `[delta, iota_a]`'s expected value: the operator
    /// `(ad_a phi)(args) = a phi(args) -+ phi(args) a - sum_j phi(.., [a, a_j], ..)`.
    fn ad_action(ctx: &FinAction, a: &AlgElement, phi: &BarCochain) -> BarCochain {
        let dim = ctx.algebra.dim;
        let a_deg = ctx.algebra.degree_of(a).unwrap_or(0) as i64;
        let a_w = ctx.w.act_elem(a);
        let a_v = ctx.v.act_elem(a);
        let mut out = BarCochain::zero(phi.degree + a_deg as i32);
        for (&q, tables) in &phi.comps {
            let n = tuple_count(dim, q);
            let mut result = vec![mat_zero(ctx.w.dim, ctx.v.dim); n];
            for (idx, entry) in result.iter_mut().enumerate().take(n) {
                let tuple = tuple_unrank(dim, q, idx);
                let m = &tables[idx];
                let hom_deg: i64 = phi.degree as i64 - q as i64
                    + tuple.iter().map(|&t| ctx.algebra.degrees[t] as i64).sum::<i64>();
                let mut acc = mat_mul(&a_w, m);
                acc = mat_add(
                    &acc,
                    &mat_scale(&mat_mul(m, &a_v), &(-&sign_of(a_deg * hom_deg))),
                );
                // commutator insertions in the arguments
                let mut prefix = 0i64;
                for (j, &t) in tuple.iter().enumerate() {
                    let aj = ctx.algebra.basis_elem(t);
                    let ta = ctx.algebra.degrees[t] as i64;
                    let comm = ctx.algebra.add(
                        &ctx.algebra.mul(a, &aj),
                        &ctx.algebra.scale(
                            &ctx.algebra.mul(&aj, a),
                            &(-&sign_of(a_deg * ta)),
                        ),
                    );
                    if !ctx.algebra.is_zero_elem(&comm) {
                        let mut args: Vec<AlgElement> = Vec::with_capacity(q);
                        for (slot, &s) in tuple.iter().enumerate() {
                            if slot == j {
                                args.push(comm.clone());
                            } else {
                                args.push(ctx.algebra.basis_elem(s));
                            }
                        }
                        let val = phi.eval(ctx, &args);
                        acc = mat_add(&acc, &mat_scale(&val, &(-&sign_of(a_deg * prefix))));
                    }
                    prefix += ta + 1;
                }
                *entry = acc;
            }
            out.comps.insert(q, result);
        }
        out
    }

    #[test]
    fn delta_phi_c_is_ad_minus_id() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        for c_raw in [scalar_elem(&ctx, -1), sz_elem(&ctx)] {
            for deg in 0..2 {
                let phi = random_cochain(&ctx, deg, &[0, 1, 2, 3], &mut rng);
                let hc = phi_op(&ctx, &[c_raw.clone()], &phi).unwrap();
                // [delta, phi(c)] = delta phi(c) + phi(c) delta
                let lhs = bar_delta(&ctx, &hc)
                    .add(&phi_op(&ctx, &[c_raw.clone()], &bar_delta(&ctx, &phi)).unwrap());
                let rhs = ad_c(&ctx, &c_raw, &phi).sub(&phi);
                assert!(lhs.sub(&rhs).is_zero(), "[delta, phi(c)] != Ad(c) - Id");
            }
        }
    }

    #[test]
    fn phi_of_unit_commutes_with_delta() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3], &mut rng);
        let one = ctx.algebra.unit.clone();
        let hc = phi_op(&ctx, &[one.clone()], &phi).unwrap();
        let lhs = bar_delta(&ctx, &hc)
            .add(&phi_op(&ctx, &[one], &bar_delta(&ctx, &phi)).unwrap());
        assert!(lhs.is_zero(), "[delta, phi(1)] != 0");
    }

    #[test]
    fn boundary_identity_higher_m() {
        // [d, phi(c1..cm)] = Ad(c1) phi(c2..cm)
        //   + sum_j (-1)^j phi(.., c_j c_{j+1}, ..) + (-1)^m phi(c1..c_{m-1})
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3, 4], &mut rng);
        for cs in [
            vec![sz_elem(&ctx), scalar_elem(&ctx, -1)],
            vec![ctx.algebra.basis_elem(1), sz_elem(&ctx)],
            vec![ctx.algebra.basis_elem(1), sz_elem(&ctx), scalar_elem(&ctx, 2)],
        ] {
            let m = cs.len();
            let hc = phi_op(&ctx, &cs, &phi).unwrap();
            // phi-ops have odd/even degree -m; graded commutator sign
            let lhs = bar_delta(&ctx, &hc).add(
                &phi_op(&ctx, &cs, &bar_delta(&ctx, &phi))
                    .unwrap()
                    .scale(&(-&sign_of(m as i64))),
            );
            let mut rhs = ad_c(&ctx, &cs[0], &phi_op(&ctx, &cs[1..], &phi).unwrap());
            for j in 1..m {
                let mut merged = cs.clone();
                merged[j - 1] = ctx.algebra.mul(&cs[j - 1], &cs[j]);
                merged.remove(j);
                rhs = rhs.add(
                    &phi_op(&ctx, &merged, &phi).unwrap().scale(&sign_of(j as i64)),
                );
            }
            rhs = rhs.add(
                &phi_op(&ctx, &cs[..m - 1], &phi).unwrap().scale(&sign_of(m as i64)),
            );
            assert!(
                lhs.sub(&rhs).is_zero(),
                "m-term boundary identity fails at m = {m}"
            );
        }
    }

    #[test]
    fn shuffle_identity_small() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(68);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3, 4], &mut rng);
        let c = sz_elem(&ctx);
        let d = ctx.algebra.basis_elem(1);
        let e = scalar_elem(&ctx, -1);
        // phi(c) phi(d) = phi(c,d) - phi(d, dcd^{-1})
        assert!(tasovki_check(&ctx, &[c.clone()], &[d.clone()], &phi).unwrap());
        // empty tuple is the unit
        assert!(tasovki_check(&ctx, &[], &[d.clone()], &phi).unwrap());
        // lengths (2,1), (1,2), (2,2)
        assert!(tasovki_check(&ctx, &[c.clone(), e.clone()], &[d.clone()], &phi).unwrap());
        assert!(tasovki_check(&ctx, &[c.clone()], &[d.clone(), e.clone()], &phi).unwrap());
        assert!(tasovki_check(&ctx, &[c, e.clone()], &[d, e], &phi).unwrap());
    }

    #[test]
    fn explicit_two_term_shuffle() {
        let ctx = pauli_action();
        let c = sz_elem(&ctx);
        let d = ctx.algebra.basis_elem(1);
        let shuffles = shuffle_tuples(&ctx.algebra, &[c.clone()], &[d.clone()]);
        assert_eq!(shuffles.len(), 2);
        // (c, d) with sign +, (d, d c d^{-1}) with sign -
        assert_eq!(shuffles[0].0 % 2, 0);
        assert_eq!(shuffles[0].1[0], c);
        assert_eq!(shuffles[1].0 % 2, 1);
        assert_eq!(shuffles[1].1[0], d);
        let dinv = ctx.algebra.inverse(&d).unwrap();
        let conj = ctx.algebra.mul(&ctx.algebra.mul(&d, &c), &dinv);
        assert_eq!(shuffles[1].1[1], conj);
    }

    #[test]
    fn curved_lemma_identities() {
        let ctx = curved_action();
        let data = ctx.derivation.as_ref().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2], &mut rng);
        // b) [delta + D - iota_R, curved T_g] = 0 (curved T has degree 0)
        for g in 0..4 {
            let lhs = full_differential(&ctx, &curved_t(&ctx, g, &phi))
                .sub(&curved_t(&ctx, g, &full_differential(&ctx, &phi)));
            assert!(lhs.is_zero(), "[d, curved T] != 0 at g = {g}");
        }
        // c) Ad~(c1) Ad~(c2) = Ad~(c1 c2) for noncentral invertibles
        let c1 = sz_elem(&ctx);
        let c2 = ctx.algebra.basis_elem(1);
        let lhs = ad_tilde(&ctx, &c1, &ad_tilde(&ctx, &c2, &phi));
        let rhs = ad_tilde(&ctx, &ctx.algebra.mul(&c1, &c2), &phi);
        assert!(lhs.sub(&rhs).is_zero(), "Ad~ fails multiplicativity");
        // d) curved T_g Ad~(c) curved T_g^{-1} = Ad~(T_g c):
        // equivalently curved T_g Ad~(c) = Ad~(T_g c) curved T_g
        for g in 0..4 {
            let lhs = curved_t(&ctx, g, &ad_tilde(&ctx, &c1, &phi));
            let rhs = ad_tilde(&ctx, &ctx.apply_t_alg(g, &c1), &curved_t(&ctx, g, &phi));
            assert!(lhs.sub(&rhs).is_zero(), "curved conjugation fails at g = {g}");
        }
        // e) curved T_{g1} curved T_{g2} = Ad~(c(g1,g2)) curved T_{g1g2}
        for g1 in 0..4 {
            for g2 in 0..4 {
                let lhs = curved_t(&ctx, g1, &curved_t(&ctx, g2, &phi));
                let rhs = ad_tilde(
                    &ctx,
                    &ctx.c[g1][g2],
                    &curved_t(&ctx, ctx.group.mul[g1][g2], &phi),
                );
                assert!(lhs.sub(&rhs).is_zero(), "curved cocycle law fails at ({g1},{g2})");
            }
        }
        let _ = data;
    }

    #[test]
    fn curved_boundary_identity() {
        // the m = 1, 2 boundary identities with the curved operators and a
        // noncentral c with Dc != 0
        let ctx = curved_action();
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3], &mut rng);
        let c = sz_elem(&ctx);
        let c2 = ctx.algebra.basis_elem(1);
        // m = 1: [d, phi(c)] = Ad~(c) - Id
        let hc = phi_op_curved(&ctx, &[c.clone()], &phi).unwrap();
        let lhs = full_differential(&ctx, &hc)
            .add(&phi_op_curved(&ctx, &[c.clone()], &full_differential(&ctx, &phi)).unwrap());
        let rhs = ad_tilde(&ctx, &c, &phi).sub(&phi);
        assert!(lhs.sub(&rhs).is_zero(), "curved [d, phi(c)] != Ad~(c) - Id");
        // m = 2
        let cs = vec![c.clone(), c2.clone()];
        let hc2 = phi_op_curved(&ctx, &cs, &phi).unwrap();
        let lhs2 = full_differential(&ctx, &hc2)
            .add(&phi_op_curved(&ctx, &cs, &full_differential(&ctx, &phi)).unwrap());
        let mut rhs2 = ad_tilde(&ctx, &c, &phi_op_curved(&ctx, &[c2.clone()], &phi).unwrap());
        rhs2 = rhs2.add(
            &phi_op_curved(&ctx, &[ctx.algebra.mul(&c, &c2)], &phi)
                .unwrap()
                .scale(&ScalarExt::from_int(-1)),
        );
        rhs2 = rhs2.add(&phi_op_curved(&ctx, &[c.clone()], &phi).unwrap());
        assert!(lhs2.sub(&rhs2).is_zero(), "curved m = 2 boundary identity fails");
    }

    #[test]
    fn recursion_seeds() {
        let ctx = pauli_action();
        // Psi(g) is the unit word; T(g1,g2) = phi(c(g1,g2)) T_{g1g2}
        let words = psi_words(&ctx, &[1]);
        assert_eq!(words.len(), 1);
        assert!(words[0].phis.is_empty());
        let words2 = psi_words(&ctx, &[1, 2]);
        assert_eq!(words2.len(), 1);
        assert_eq!(words2[0].phis.len(), 1);
        assert_eq!(words2[0].phis[0], ctx.c[1][2]);
        assert_eq!(words2[0].coeff, ScalarExt::one());
    }

    #[test]
    fn ainfty_relation_depths_1_2_3_pauli() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3, 4], &mut rng);
        // depth 1: [d, T(g)] = 0
        for g in 0..4 {
            assert!(ainfty_relation_holds(&ctx, &[g], &phi).unwrap(), "depth 1 at {g}");
        }
        // depth 2 on a spread of tuples
        for (g1, g2) in [(1, 2), (2, 1), (3, 3), (1, 3)] {
            assert!(ainfty_relation_holds(&ctx, &[g1, g2], &phi).unwrap(), "depth 2");
        }
        // depth 3
        for t in [[1, 2, 1], [2, 1, 3], [3, 2, 1]] {
            assert!(ainfty_relation_holds(&ctx, &t, &phi).unwrap(), "depth 3 at {t:?}");
        }
    }

    #[test]
    fn ainfty_relation_curved() {
        let ctx = curved_action();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let phi = random_cochain(&ctx, 1, &[0, 1, 2, 3], &mut rng);
        for g in 0..4 {
            assert!(ainfty_relation_holds(&ctx, &[g], &phi).unwrap());
        }
        for (g1, g2) in [(1, 2), (3, 1)] {
            assert!(ainfty_relation_holds(&ctx, &[g1, g2], &phi).unwrap());
        }
        assert!(ainfty_relation_holds(&ctx, &[1, 2, 3], &phi).unwrap());
    }

    #[test]
    fn equivalence_transport_identities() {
        let ctx = curved_action();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        // b(g): invertible degree-0 elements; beta: degree-1 element
        let b: Vec<AlgElement> = (0..4)
            .map(|g| {
                if g == 0 {
                    ctx.algebra.unit.clone()
                } else {
                    ctx.algebra.basis_elem(2) // sz
                }
            })
            .collect();
        let beta = ctx.algebra.basis_elem(5); // e sx
        let eq = Equivalence { b, beta };
        let ctx2 = equivalence_transport(&ctx, &eq).expect("transport invariants");
        // identity transport is the identity
        let id = Equivalence::identity(&ctx);
        let ctx_same = equivalence_transport(&ctx, &id).unwrap();
        assert!(mat_eq(&ctx_same.t_alg[1], &ctx.t_alg[1]));
        // intertwining: Ad~(b(g)) curved T_g exp(iota_beta)
        //             = exp(iota_beta) curved T'_g
        let phi = random_cochain(&ctx, 1, &[0, 1, 2], &mut rng);
        for g in 0..4 {
            let lhs = ad_tilde(
                &ctx,
                &eq.b[g],
                &curved_t(&ctx, g, &transport_chain_map(&ctx, &eq, &phi)),
            );
            let rhs = transport_chain_map(&ctx, &eq, &curved_t(&ctx2, g, &phi));
            assert!(lhs.sub(&rhs).is_zero(), "transport intertwining fails at g = {g}");
        }
        // Ad~(c) exp(iota_beta) = exp(iota_beta) Ad~'(c)
        let c = ctx.algebra.basis_elem(1);
        let lhs = ad_tilde(&ctx, &c, &transport_chain_map(&ctx, &eq, &phi));
        let rhs = transport_chain_map(&ctx, &eq, &ad_tilde(&ctx2, &c, &phi));
        assert!(lhs.sub(&rhs).is_zero());
        // composition law: (b1 b2)* = b2* b1* and exp(iota) inverse
        let eq2 = Equivalence { b: vec![ctx.algebra.unit.clone(); 4], beta: ctx.algebra.basis_elem(6) };
        let composed = eq.compose(&ctx, &eq2);
        let lhs = transport_chain_map(&ctx, &composed, &phi);
        let rhs = transport_chain_map(&ctx, &eq, &transport_chain_map(&ctx, &eq2, &phi));
        assert!(lhs.sub(&rhs).is_zero(), "(b1 b2)* != b2* b1*");
        let inv = Equivalence {
            b: vec![ctx.algebra.unit.clone(); 4],
            beta: ctx.algebra.neg(&eq.beta),
        };
        let back = transport_chain_map(
            &ctx,
            &inv,
            &transport_chain_map(
                &ctx,
                &Equivalence { b: vec![ctx.algebra.unit.clone(); 4], beta: eq.beta.clone() },
                &phi,
            ),
        );
        assert!(back.sub(&phi).is_zero(), "exp(iota_beta) not inverted by exp(iota_-beta)");
    }

    #[test]
    fn yoneda_product_identities() {
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let psi = random_cochain(&ctx, 1, &[0, 1, 2], &mut rng);
        // unit cochain is a left unit
        let unit = identity_cochain(&ctx);
        let cup = yoneda_cup(&ctx, &unit, &psi);
        assert!(cup.sub(&psi).is_zero(), "unit fails for the cup product");
        // Leibniz: delta(phi cup psi) = delta phi cup psi + (-1)^{|phi|} phi cup delta psi
        for dphi in 0..2 {
            let phi = random_cochain(&ctx, dphi, &[0, 1, 2], &mut rng);
            let lhs = bar_delta(&ctx, &yoneda_cup(&ctx, &phi, &psi));
            let rhs = yoneda_cup(&ctx, &bar_delta(&ctx, &phi), &psi).add(
                &yoneda_cup(&ctx, &phi, &bar_delta(&ctx, &psi))
                    .scale(&sign_of(dphi as i64)),
            );
            assert!(lhs.sub(&rhs).is_zero(), "cup Leibniz fails at degree {dphi}");
        }
        // associativity
        let a = random_cochain(&ctx, 0, &[0, 1], &mut rng);
        let b = random_cochain(&ctx, 1, &[0, 1], &mut rng);
        let c = random_cochain(&ctx, 0, &[1, 2], &mut rng);
        let left = yoneda_cup(&ctx, &yoneda_cup(&ctx, &a, &b), &c);
        let right = yoneda_cup(&ctx, &a, &yoneda_cup(&ctx, &b, &c));
        assert!(left.sub(&right).is_zero(), "cup associativity fails");
    }

    #[test]
    fn coproduct_compatibility() {
        // phi(c1..cm)(phi cup psi)
        //   = sum_j (phi(c1..cj) phi) cup Ad(c1..cj)(phi(c_{j+1}..cm) psi)
        let ctx = pauli_action();
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let phi = random_cochain(&ctx, 0, &[0, 1, 2], &mut rng);
        let psi = random_cochain(&ctx, 1, &[0, 1, 2], &mut rng);
        for cs in [vec![sz_elem(&ctx)], vec![sz_elem(&ctx), ctx.algebra.basis_elem(1)]] {
            let m = cs.len();
            let lhs = phi_op(&ctx, &cs, &yoneda_cup(&ctx, &phi, &psi)).unwrap();
            let mut rhs = BarCochain::zero(lhs.degree);
            for j in 0..=m {
                let left = phi_op(&ctx, &cs[..j], &phi).unwrap();
                let mut right = phi_op(&ctx, &cs[j..], &psi).unwrap();
                // conjugate by c_1..c_j
                let mut prod = ctx.algebra.unit.clone();
                for c in &cs[..j] {
                    prod = ctx.algebra.mul(&prod, c);
                }
                if prod != ctx.algebra.unit {
                    right = ad_c(&ctx, &prod, &right);
                }
                rhs = rhs.add(&yoneda_cup(&ctx, &left, &right));
            }
            assert!(lhs.sub(&rhs).is_zero(), "coproduct compatibility fails at m = {m}");
        }
    }

    #[test]
    fn quotient_z4_over_z2() {
        // G = Z/4 acting on the Pauli algebra by conjugation with powers of
        // Q = -sx sz (Q^2 = -I); H = {e, g^2}; i(g^2) = -1.
        let base = pauli_action();
        let alg = base.algebra.clone();
        let g4 = GroupTable::cyclic(4);
        // Q = -sx*sz, as an element
        let q_elem = alg.scale(&alg.basis_elem(3), &ScalarExt::from_int(-1));
        let mut t_alg = Vec::new();
        let mut t_col = Vec::new();
        let mut word = alg.unit.clone();
        let mats = {
            // column matrices of Q^k
            let m_q = vec![
                vec![ScalarExt::from_int(0), ScalarExt::from_int(1)],
                vec![ScalarExt::from_int(-1), ScalarExt::from_int(0)],
            ];
            let mut acc = mat_identity(2);
            let mut out = Vec::new();
            for _ in 0..4 {
                out.push(acc.clone());
                acc = mat_mul(&m_q, &acc);
            }
            out
        };
        for k in 0..4 {
            // Ad(Q^k) on the algebra
            let mut m = mat_zero(alg.dim, alg.dim);
            let winv = alg.inverse(&word).unwrap();
            for j in 0..alg.dim {
                let v = alg.mul(&alg.mul(&word, &alg.basis_elem(j)), &winv);
                for (i, x) in v.iter().enumerate() {
                    m[i][j] = x.clone();
                }
            }
            t_alg.push(m);
            t_col.push(mats[k].clone());
            word = alg.mul(&q_elem, &word);
        }
        let big = PlainAction { group: g4, t_alg, t_v: t_col.clone(), t_w: t_col };
        let h = vec![0usize, 2];
        let mut i_map = BTreeMap::new();
        i_map.insert(0usize, alg.unit.clone());
        i_map.insert(2usize, alg.scale(&alg.unit, &ScalarExt::from_int(-1)));
        let s1 = vec![0usize, 1];
        let action = quotient_action(&alg, &base.v, &base.w, &big, &h, &i_map, &s1).unwrap();
        // c(gbar, gbar) = i(g^2) = -1
        assert_eq!(action.c[1][1][0], ScalarExt::from_int(-1));
        // trivial kernel: original action with c = 1
        let s_all = vec![0usize, 1, 2, 3];
        let mut i_triv = BTreeMap::new();
        i_triv.insert(0usize, alg.unit.clone());
        let full =
            quotient_action(&alg, &base.v, &base.w, &big, &[0], &i_triv, &s_all).unwrap();
        for g1 in 0..4 {
            for g2 in 0..4 {
                assert_eq!(full.c[g1][g2], alg.unit);
            }
        }
        // section change: s2 differs in the nontrivial coset
        let s2 = vec![0usize, 3];
        let s3 = vec![0usize, 1];
        let b21 = section_change(&alg, &big, &h, &i_map, &s1, &s2).unwrap();
        let b32 = section_change(&alg, &big, &h, &i_map, &s2, &s3).unwrap();
        let b31 = section_change(&alg, &big, &h, &i_map, &s1, &s3).unwrap();
        let composed = b32.compose(&action, &b21);
        assert_eq!(composed.b, b31.b);
        // the transported action along b21 is again a valid action
        let transported = equivalence_transport(&action, &b21);
        assert!(transported.is_ok());
    }

    #[test]
    fn pair_groupoid_identity() {
        assert!(pair_groupoid_homotopy(1, 0, 3).unwrap());
        assert!(pair_groupoid_homotopy(3, 0, 3).unwrap());
        assert!(pair_groupoid_homotopy(3, 1, 2).unwrap());
        assert!(pair_groupoid_homotopy(0, 0, 2).is_err());
    }
}
