use dqw_core::ainfty::*;
use dqw_core::bar::*;
use dqw_core::instances::*;
use dqw_core::scalar::ScalarExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sign_of(i: i64) -> ScalarExt {
    if i.rem_euclid(2) == 0 { ScalarExt::one() } else { ScalarExt::from_int(-1) }
}

// the pre-suspension differential: delta_old = (-1)^{|phi|} delta_new
fn delta_old(ctx: &FinAction, phi: &BarCochain) -> BarCochain {
    bar_delta(ctx, phi).scale(&sign_of(phi.degree as i64))
}

fn cup_var(ctx: &FinAction, phi: &BarCochain, psi: &BarCochain, bits: u32) -> BarCochain {
    let dim = ctx.algebra.dim;
    let mut out = BarCochain::zero(phi.degree + psi.degree);
    for (&qp, tp) in &phi.comps {
        for (&qs, ts) in &psi.comps {
            let q_out = qp + qs;
            let n_out = tuple_count(dim, q_out);
            let mut result = out.comps.remove(&q_out)
                .unwrap_or_else(|| vec![mat_zero(ctx.w.dim, ctx.v.dim); n_out]);
            for (idx, entry) in result.iter_mut().enumerate().take(n_out) {
                let tuple = tuple_unrank(dim, q_out, idx);
                let first = &tuple[..qp];
                let second = &tuple[qp..];
                let mphi = &tp[tuple_rank(dim, first)];
                let mpsi = &ts[tuple_rank(dim, second)];
                let w: i64 = first.iter().map(|&t| ctx.algebra.degrees[t] as i64 + 1).sum();
                let wdeg: i64 = first.iter().map(|&t| ctx.algebra.degrees[t] as i64).sum();
                let homp: i64 = phi.degree as i64 - qp as i64 + wdeg;
                let homs: i64 = psi.degree as i64 - qs as i64
                    + second.iter().map(|&t| ctx.algebra.degrees[t] as i64).sum::<i64>();
                let dps = psi.degree as i64;
                let mut e = 0i64;
                if bits & 1 != 0 { e += dps * w; }
                if bits & 2 != 0 { e += dps * wdeg; }
                if bits & 4 != 0 { e += dps * qp as i64; }
                if bits & 8 != 0 { e += homp * homs; }
                if bits & 16 != 0 { e += homs * w; }
                if bits & 32 != 0 { e += homs * qp as i64; }
                let s = sign_of(e);
                let prod = if bits & 64 != 0 { mat_mul(mphi, mpsi) } else { mat_mul(mpsi, mphi) };
                *entry = mat_add(entry, &mat_scale(&prod, &s));
            }
            out.comps.insert(q_out, result);
        }
    }
    out
}

fn main() {
    let ctx = curved_action();
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let psis: Vec<BarCochain> = (0..2).map(|d| random_cochain(&ctx, d, &[0, 1, 2], &mut rng)).collect();
    let phis: Vec<BarCochain> = (0..3).map(|d| random_cochain(&ctx, d, &[0, 1, 2], &mut rng)).collect();
    for bits in 0..128u32 {
        let mut pass = true;
        'outer: for phi2 in &phis {
            for psi in &psis {
                let lhs = delta_old(&ctx, &cup_var(&ctx, phi2, psi, bits));
                let rhs = cup_var(&ctx, &delta_old(&ctx, phi2), psi, bits).add(
                    &cup_var(&ctx, phi2, &delta_old(&ctx, psi), bits)
                        .scale(&sign_of(phi2.degree as i64)));
                if !lhs.sub(&rhs).is_zero() { pass = false; break 'outer; }
            }
        }
        if pass { println!("OLD-CUP OK bits={bits:07b}"); }
    }
    println!("done");
}
