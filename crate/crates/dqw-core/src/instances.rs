//! Shipped test instances for the bar-complex machinery: the smallest
//! algebras carrying a group action up to inner automorphisms with a
//! nontrivial cocycle, and a graded variant with a nontrivial square-zero
//! derivation twist.

use crate::bar::{
    mat_zero, AlgElement, DerivationData, FinAction, FinAlgebra, FinModule, GroupTable, Matrix,
};
use crate::scalar::ScalarExt;

fn s(v: i64) -> ScalarExt {
    ScalarExt::from_int(v)
}

/// 2x2 matrix algebra on the basis `I, sx, sz, sx*sz` (sx, sz the real
/// Pauli matrices; (sx sz)^2 = -I).
fn pauli_algebra() -> FinAlgebra {
    // basis order: 0 = I, 1 = sx, 2 = sz, 3 = sx sz
    // relations: sx^2 = sz^2 = I; sz sx = -sx sz; (sx sz)^2 = -I
    let e = |k: usize, c: i64| vec![(k, s(c))];
    let mult = vec![
        // I * -
        vec![e(0, 1), e(1, 1), e(2, 1), e(3, 1)],
        // sx * -
        vec![e(1, 1), e(0, 1), e(3, 1), e(2, 1)],
        // sz * -
        vec![e(2, 1), e(3, -1), e(0, 1), e(1, -1)],
        // sxsz * -
        vec![e(3, 1), e(2, -1), e(1, 1), e(0, -1)],
    ];
    FinAlgebra {
        dim: 4,
        degrees: vec![0; 4],
        mult,
        unit: vec![s(1), s(0), s(0), s(0)],
    }
}

/// The 2x2 matrices of the algebra basis in the column representation.
fn pauli_matrices() -> Vec<Matrix> {
    let m = |a: i64, b: i64, c: i64, d: i64| vec![vec![s(a), s(b)], vec![s(c), s(d)]];
    vec![
        m(1, 0, 0, 1),   // I
        m(0, 1, 1, 0),   // sx
        m(1, 0, 0, -1),  // sz
        m(0, -1, 1, 0),  // sx sz
    ]
}

/// Automorphism matrix of `Ad(u)` on the algebra basis, for `u` in the
/// algebra.
fn ad_matrix(alg: &FinAlgebra, u: &AlgElement) -> Matrix {
    let uinv = alg.inverse(u).expect("invertible");
    let mut m = mat_zero(alg.dim, alg.dim);
    for j in 0..alg.dim {
        let col = alg.mul(&alg.mul(u, &alg.basis_elem(j)), &uinv);
        for (i, v) in col.iter().enumerate() {
            m[i][j] = v.clone();
        }
    }
    m
}

/// Group element `(a, b)` of `Z/2 x Z/2` as the word `sx^a sz^b`.
fn pauli_word(alg: &FinAlgebra, g: usize) -> AlgElement {
    let a = g / 2;
    let b = g % 2;
    let mut w = alg.unit.clone();
    if a == 1 {
        w = alg.mul(&w, &alg.basis_elem(1));
    }
    if b == 1 {
        w = alg.mul(&w, &alg.basis_elem(2));
    }
    w
}

/// The projective Pauli instance: `A = M_2`, the Klein four-group acting by
/// conjugation with `sx^a sz^b`, cocycle `c((a,b),(a',b')) = (-1)^{b a'}`,
/// and `V = W` the column module.
pub fn pauli_action() -> FinAction {
    let alg = pauli_algebra();
    let group = GroupTable::klein_four();
    let mats = pauli_matrices();

    let mut t_alg = Vec::new();
    let mut t_col = Vec::new();
    for g in 0..4 {
        let w = pauli_word(&alg, g);
        t_alg.push(ad_matrix(&alg, &w));
        // column action: the 2x2 matrix of the word
        let a = g / 2;
        let b = g % 2;
        let mut m = mats[0].clone();
        if a == 1 {
            m = crate::bar::mat_mul(&m, &mats[1]);
        }
        if b == 1 {
            m = crate::bar::mat_mul(&m, &mats[2]);
        }
        t_col.push(m);
    }
    let mut c = vec![vec![alg.unit.clone(); 4]; 4];
    for g1 in 0..4 {
        for g2 in 0..4 {
            let b1 = g1 % 2;
            let a2 = g2 / 2;
            let sign = if (b1 * a2) % 2 == 1 { -1 } else { 1 };
            c[g1][g2] = alg.scale(&alg.unit, &s(sign));
        }
    }
    let module = FinModule { dim: 2, degrees: vec![0, 0], action: mats };
    FinAction {
        algebra: alg,
        group,
        t_alg,
        c,
        v: module.clone(),
        w: module,
        t_v: t_col.clone(),
        t_w: t_col,
        derivation: None,
    }
}

/// The curved instance: `A = M_2 (x) Lambda[e]` with `|e| = 1`, the same
/// Klein four-group and cocycle, derivation `D = ad(e N)` for the nilpotent
/// `N = [[0,1],[0,0]]`, curvature `R = (e N)^2 = 0` (the rank-one exterior
/// algebra has no degree-2 part), and `alpha(g) = e (s_g N s_g^{-1} - N)`.
/// Modules: `V = W = C^2 (x) Lambda[e]` with `D_V` the left multiplication
/// by `e N`.
pub fn curved_action() -> FinAction {
    let m2 = pauli_algebra();
    let dim = 8; // basis: B_0..B_3, e B_0..e B_3
    let mut degrees = vec![0; 4];
    degrees.extend(vec![1; 4]);
    // multiplication: (e^p B_i)(e^q B_j) = 0 if p+q=2 else e^{p+q} B_i B_j;
    // e commutes with M_2 and squares to zero.
    let mut mult = vec![vec![Vec::new(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let (pi, bi) = (i / 4, i % 4);
            let (pj, bj) = (j / 4, j % 4);
            if pi + pj >= 2 {
                continue;
            }
            let prods = &m2.mult[bi][bj];
            mult[i][j] = prods
                .iter()
                .map(|(k, cval)| ((pi + pj) * 4 + k, cval.clone()))
                .collect();
        }
    }
    let mut unit = vec![s(0); dim];
    unit[0] = s(1);
    let alg = FinAlgebra { dim, degrees, mult, unit };

    let group = GroupTable::klein_four();
    // T_g = Ad(sx^a sz^b) acting on both graded pieces
    let mut t_alg = Vec::new();
    for g in 0..4 {
        let small = ad_matrix(&m2, &pauli_word(&m2, g));
        let mut big = mat_zero(dim, dim);
        for p in 0..2 {
            for r in 0..4 {
                for c in 0..4 {
                    big[p * 4 + r][p * 4 + c] = small[r][c].clone();
                }
            }
        }
        t_alg.push(big);
    }
    let mut c = vec![vec![alg.unit.clone(); 4]; 4];
    for g1 in 0..4 {
        for g2 in 0..4 {
            let b1 = g1 % 2;
            let a2 = g2 / 2;
            let sign = if (b1 * a2) % 2 == 1 { -1 } else { 1 };
            c[g1][g2] = alg.scale(&alg.unit, &s(sign));
        }
    }

    // N = [[0,1],[0,0]] = (sx + sx sz)/2
    let n_elem: AlgElement = {
        let mut v = m2.elem_zero();
        v[1] = ScalarExt::from_rational(crate::scalar::rat(1, 2));
        v[3] = ScalarExt::from_rational(crate::scalar::rat(1, 2));
        v
    };
    // e N inside the big algebra
    let mut en: AlgElement = vec![s(0); dim];
    for (k, val) in n_elem.iter().enumerate() {
        en[4 + k] = val.clone();
    }
    // D = ad(e N) as a matrix
    let mut d_alg = mat_zero(dim, dim);
    for j in 0..dim {
        let a = alg.basis_elem(j);
        let sign = if alg.degrees[j] % 2 == 0 { 1 } else { -1 };
        let val = alg.add(
            &alg.mul(&en, &a),
            &alg.scale(&alg.mul(&a, &en), &s(-sign)),
        );
        for (i, v) in val.iter().enumerate() {
            d_alg[i][j] = v.clone();
        }
    }
    let r = vec![s(0); dim];
    // alpha(g) = T_g(eN) - eN
    let mut alpha = Vec::new();
    for g in 0..4 {
        let tg_en = {
            let m = &t_alg[g];
            let mut outv = vec![s(0); dim];
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if !v.is_zero() && !en[j].is_zero() {
                        outv[i] = &outv[i] + &(v * &en[j]);
                    }
                }
            }
            outv
        };
        alpha.push(alg.add(&tg_en, &alg.neg(&en)));
    }

    // module: C^2 (x) Lambda[e], basis v0, v1, e v0, e v1
    let mats = pauli_matrices();
    let mdim = 4;
    let mdeg = vec![0, 0, 1, 1];
    let mut action = Vec::new();
    for i in 0..dim {
        let (p, b) = (i / 4, i % 4);
        let small = &mats[b];
        let mut big = mat_zero(mdim, mdim);
        for q in 0..2 {
            if p + q >= 2 {
                continue;
            }
            for r in 0..2 {
                for cc in 0..2 {
                    big[(p + q) * 2 + r][q * 2 + cc] = small[r][cc].clone();
                }
            }
        }
        action.push(big);
    }
    let module = FinModule { dim: mdim, degrees: mdeg, action: action.clone() };
    // T_g on the module: sx^a sz^b on each graded piece
    let mut t_col = Vec::new();
    for g in 0..4 {
        let a = g / 2;
        let b = g % 2;
        let mut small = mats[0].clone();
        if a == 1 {
            small = crate::bar::mat_mul(&small, &mats[1]);
        }
        if b == 1 {
            small = crate::bar::mat_mul(&small, &mats[2]);
        }
        let mut big = mat_zero(mdim, mdim);
        for p in 0..2 {
            for r in 0..2 {
                for cc in 0..2 {
                    big[p * 2 + r][p * 2 + cc] = small[r][cc].clone();
                }
            }
        }
        t_col.push(big);
    }
    // D_V = left multiplication by e N
    let d_v = module.act_elem(&en);

    FinAction {
        algebra: alg,
        group,
        t_alg,
        c,
        v: module.clone(),
        w: module,
        t_v: t_col.clone(),
        t_w: t_col,
        derivation: Some(DerivationData {
            d_alg,
            r,
            alpha,
            d_v: d_v.clone(),
            d_w: d_v,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_instance_satisfies_all_invariants() {
        let action = pauli_action();
        action.verify().expect("pauli instance invariants");
        // the cocycle is genuinely nontrivial
        let c = &action.c[1][2]; // (0,1) then (1,0): (-1)^{1*1}
        assert_eq!(c[0], ScalarExt::from_int(-1));
    }

    #[test]
    fn curved_instance_satisfies_all_invariants() {
        let action = curved_action();
        action.verify().expect("curved instance invariants");
        // alpha is nontrivial for the sx generator
        let data = action.derivation.as_ref().unwrap();
        assert!(!action.algebra.is_zero_elem(&data.alpha[2]));
    }
}
