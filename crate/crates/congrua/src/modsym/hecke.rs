//! Hecke operators on Manin symbols through Heilbronn matrices.
//!
//! For a prime `ℓ` the Heilbronn–Cremona matrices `H_ℓ` are a finite set of
//! integer matrices of determinant `ℓ` such that
//!
//! ```text
//!   T_ℓ [P, (c:d)] = Σ_{h ∈ H_ℓ} [P|h, (c:d)·h],
//! ```
//!
//! where terms with `(c:d)·h` non-primitive modulo `N` are dropped (this
//! only happens for `ℓ | N`, where the sum computes `U_ℓ`).

use super::space::{monomial_transform, ModularSymbolSpace};
use crate::dvr::{Mat, Rat};
use num_bigint::BigInt;
use num_traits::Zero;

/// Nearest integer to `a/b` (`b ≠ 0`); ties may round either way.
fn round_div(a: i64, b: i64) -> i64 {
    let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
    (2 * a + b).div_euclid(2 * b)
}

/// The Heilbronn–Cremona matrices of determinant `ℓ`.
pub fn heilbronn_matrices(ell: u64) -> Vec<[i64; 4]> {
    let ell = ell as i64;
    let mut out = vec![[1, 0, 0, ell]];
    let lo = -(ell - 1) / 2;
    let hi = ell / 2;
    for r in lo..=hi {
        let (mut x1, mut x2, mut y1, mut y2) = (ell, -r, 0i64, 1i64);
        let (mut a, mut b) = (-ell, r);
        out.push([x1, x2, y1, y2]);
        while b != 0 {
            let q = round_div(a, b);
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push([x1, x2, y1, y2]);
        }
    }
    debug_assert!(out.iter().all(|m| m[0] * m[3] - m[1] * m[2] == ell));
    out
}

/// `T_ℓ` (resp. `U_ℓ` for `ℓ | N`) in lattice coordinates.
pub fn hecke_matrix(space: &ModularSymbolSpace, ell: u64) -> Mat {
    let hs = heilbronn_matrices(ell);
    let m = space.weight - 2;
    space.operator_from_action(|p1, u, i| {
        let mut terms = Vec::new();
        for h in &hs {
            let Some(u2) = p1.apply(u, *h) else { continue };
            for (j, &c) in monomial_transform(m, i, *h).iter().enumerate() {
                if c != 0 {
                    terms.push((u2, j, Rat::from(BigInt::from(c))));
                }
            }
        }
        terms
    })
}

/// `T_ℓ · v` for a single vector in lattice coordinates, without building the
/// whole matrix (used to extract eigenvalues `a_ℓ` for large `ℓ`).
pub fn hecke_on_vector(space: &ModularSymbolSpace, v: &[Rat], ell: u64) -> Vec<Rat> {
    let hs = heilbronn_matrices(ell);
    let m = space.weight - 2;
    let w = space.weight - 1;
    // coefficients of v on the free-root generators
    let v_free = space.basis_free.mul_vec(v);
    let mut out = vec![Rat::zero(); space.dim];
    for (fc, coef) in v_free.iter().enumerate() {
        if coef.is_zero() {
            continue;
        }
        let root = space.free_roots[fc];
        let (u, i) = (root / w, root % w);
        for h in &hs {
            let Some(u2) = space.p1.apply(u, *h) else { continue };
            let tr = monomial_transform(m, i, *h);
            for (j, &c) in tr.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let gi = &space.gen_images[space.gen_index(u2, j)];
                let cc = Rat::from(BigInt::from(c)) * coef;
                for (slot, x) in out.iter_mut().zip(gi.iter()) {
                    *slot += x * &cc;
                }
            }
        }
    }
    out
}
