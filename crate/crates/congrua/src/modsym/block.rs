//! Rational eigensystems, localization at a residual eigensystem, and
//! congruence numbers.
//!
//! The cuspidal lattice is split into generalized eigenspaces of the good
//! Hecke operators `T_ℓ` (`ℓ ∤ N`, `ℓ` up to the Sturm bound) with *integer*
//! eigenvalues; branches on which every such `T_ℓ` has a single integer
//! generalized eigenvalue are the rational eigensystems.  Localization at
//! the maximal ideal `m` attached to a rational eigenform `f` and an odd
//! prime `p ∤ N` collects all branches whose eigensystem is congruent to
//! `f`'s modulo `p`; completeness of this rational description is certified
//! by comparing against the iterated kernel of the mod-`p` Hecke action, and
//! a mismatch (an irrational congruent eigensystem) is refused.
//!
//! The localized Hecke algebra `T` is the `O`-span of the monomials in the
//! restricted operators, packaged with its structure constants; `λ_f` is the
//! eigenvalue character.  The congruence number is
//! `η_f = λ_f(Ann_T ker λ_f)`, and the cohomological congruence number is
//! `Fitt C0^λ(H^±)` for the `±`-parts `H^±` of the localized lattice,
//! cross-checked through a perfect `T`-bilinear pairing when one is found.

use super::hecke::hecke_matrix;
use super::oracle::sturm_bound;
use super::space::ModularSymbolSpace;
use super::{ModsymError, Result};
use crate::dvr::{rat, Dvr, Lattice, Mat, PIdeal, Rat};
use crate::finalg::{
    duality_transfer, eta, eta_of_module, find_perfect_pairing, idempotent_for_character,
    AlgebraModule, Character, FinalgError, FiniteFlatAlgebra,
};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// A rational Hecke eigensystem found in the cuspidal space.
#[derive(Debug, Clone)]
pub struct RationalSystem {
    /// Basis of the generalized eigenspace, in cuspidal coordinates.
    pub basis: Mat,
    /// `a_ℓ` for good primes `ℓ ∤ N` up to the Sturm bound, plus `U_ℓ`
    /// eigenvalues for `ℓ | N` when the system is new.
    pub aps: BTreeMap<u64, i64>,
    /// `true` when the generalized eigenspace has rank 2 and all `U_ℓ`
    /// (`ℓ | N`) act by integer scalars: a rational newform of level `N`.
    pub is_new: bool,
}

/// A rational eigenform, identified by its eigenvalue list.
#[derive(Debug, Clone)]
pub struct EigenformData {
    pub level: u64,
    pub weight: usize,
    pub label: String,
    pub aps: BTreeMap<u64, i64>,
}

/// Characteristic polynomial by the Faddeev–LeVerrier recursion;
/// coefficients ascending, `c[n] = 1`.
fn char_poly(a: &Mat) -> Vec<Rat> {
    let n = a.rows;
    let mut coeffs = vec![Rat::zero(); n + 1];
    coeffs[n] = Rat::one();
    let mut m = Mat::identity(n);
    for k in 1..=n {
        m = a.mul(&m);
        let tr: Rat = (0..n).map(|i| m[(i, i)].clone()).sum();
        let c = -tr / rat(k as i64);
        coeffs[n - k] = c.clone();
        for i in 0..n {
            m[(i, i)] += c.clone();
        }
    }
    coeffs
}

/// Integer roots of a rational polynomial among `|a| ≤ bound`, by a modular
/// screen followed by exact verification.
fn integer_roots(coeffs: &[Rat], bound: i64) -> Result<Vec<i64>> {
    const Q: u64 = 1_000_003;
    if bound as u64 >= Q / 2 - 1 {
        return Err(ModsymError::Unsupported(format!(
            "integer-eigenvalue search bound {bound} too large"
        )));
    }
    let mut lcm = BigInt::one();
    for c in coeffs {
        lcm = num_integer::Integer::lcm(&lcm, c.denom());
    }
    let ints: Vec<BigInt> = coeffs.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
    let qb = BigInt::from(Q);
    let modq: Vec<u64> = ints
        .iter()
        .map(|c| (((c % &qb) + &qb) % &qb).to_u64().unwrap())
        .collect();
    let mut roots = Vec::new();
    for a in -bound..=bound {
        let x = a.rem_euclid(Q as i64) as u64;
        let mut acc: u64 = 0;
        for c in modq.iter().rev() {
            acc = (acc * x + c) % Q;
        }
        if acc != 0 {
            continue;
        }
        let mut v = BigInt::zero();
        for c in ints.iter().rev() {
            v = v * BigInt::from(a) + c;
        }
        if v.is_zero() {
            roots.push(a);
        }
    }
    Ok(roots)
}

fn mat_pow(a: &Mat, mut e: usize) -> Mat {
    let mut base = a.clone();
    let mut acc = Mat::identity(a.rows);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    acc
}

/// Restriction `A` of `op` to the column span of `u`: `op·u = u·A`.
fn restrict(op: &Mat, u: &Mat) -> Mat {
    u.solve_mat(&op.mul(u)).expect("subspace is invariant")
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn good_primes(level: u64, limit: u64) -> Vec<u64> {
    (2..=limit).filter(|&q| is_prime(q) && level % q != 0).collect()
}

/// `T_ℓ` on the cuspidal lattice for all good primes up to the Sturm bound.
fn cuspidal_hecke_table(space: &ModularSymbolSpace) -> Vec<(u64, Mat)> {
    let sturm = sturm_bound(space.level, space.weight).max(2);
    good_primes(space.level, sturm)
        .into_iter()
        .map(|ell| (ell, space.restrict_to_cuspidal(&hecke_matrix(space, ell))))
        .collect()
}

fn split_rational(
    space: &ModularSymbolSpace,
    table: &[(u64, Mat)],
) -> Result<Vec<RationalSystem>> {
    let r = space.cuspidal.rank();
    if r == 0 {
        return Ok(Vec::new());
    }
    let k = space.weight;
    struct Work {
        basis: Mat,
        aps: BTreeMap<u64, i64>,
    }
    let mut branches = vec![Work { basis: Mat::identity(r), aps: BTreeMap::new() }];
    for (ell, t) in table {
        // Deligne bound |a_ℓ| ≤ 2·ℓ^((k-1)/2)
        let bound = (2.0 * (*ell as f64).powf((k - 1) as f64 / 2.0)).ceil() as i64 + 1;
        let mut next = Vec::new();
        for br in branches {
            let s = br.basis.cols;
            let a = restrict(t, &br.basis);
            let cp = char_poly(&a);
            for root in integer_roots(&cp, bound)? {
                let mut shifted = a.clone();
                for i in 0..s {
                    shifted[(i, i)] -= rat(root);
                }
                let gker = mat_pow(&shifted, s).kernel_basis();
                if gker.is_empty() {
                    continue;
                }
                let sub = br.basis.mul(&Mat::from_cols(gker));
                let mut aps = br.aps.clone();
                aps.insert(*ell, root);
                next.push(Work { basis: sub, aps });
            }
            // the non-integer remainder carries no rational eigensystem
        }
        branches = next;
    }

    let mut out = Vec::new();
    for br in branches {
        let mut aps = br.aps;
        let mut is_new = br.basis.cols == 2;
        if is_new {
            for ell in (2..=space.level).filter(|&q| is_prime(q) && space.level % q == 0) {
                let u_op = space.restrict_to_cuspidal(&hecke_matrix(space, ell));
                let a = restrict(&u_op, &br.basis);
                let scalar = a[(0, 0)].clone();
                let mut m = a.clone();
                for i in 0..m.rows {
                    m[(i, i)] -= scalar.clone();
                }
                if m.is_zero() && scalar.is_integer() {
                    let v = scalar.numer().to_i64().ok_or_else(|| {
                        ModsymError::Unsupported("U_ℓ eigenvalue overflow".into())
                    })?;
                    aps.insert(ell, v);
                } else {
                    is_new = false;
                }
            }
        }
        out.push(RationalSystem { basis: br.basis, aps, is_new });
    }
    Ok(out)
}

/// Enumerate the rational eigensystems of the cuspidal space.
pub fn rational_eigensystems(space: &ModularSymbolSpace) -> Result<Vec<RationalSystem>> {
    if space.cuspidal.rank() == 0 {
        return Ok(Vec::new());
    }
    split_rational(space, &cuspidal_hecke_table(space))
}

/// The new rational eigensystems, labelled `"{N}.{k}.{idx}"`.
pub fn rational_newforms(
    space: &ModularSymbolSpace,
) -> Result<Vec<(EigenformData, RationalSystem)>> {
    let systems = rational_eigensystems(space)?;
    let mut out = Vec::new();
    let mut idx = 0;
    for sys in systems {
        if !sys.is_new {
            continue;
        }
        let f = EigenformData {
            level: space.level,
            weight: space.weight,
            label: format!("{}.{}.{}", space.level, space.weight, idx),
            aps: sys.aps.clone(),
        };
        idx += 1;
        out.push((f, sys));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// mod-p linear algebra for the completeness certificate
// ---------------------------------------------------------------------------

type FpMat = Vec<Vec<u64>>;

fn fp_from_rat(m: &Mat, p: u64) -> FpMat {
    let pb = BigInt::from(p);
    let red = |x: &Rat| -> u64 {
        let n = (((x.numer() % &pb) + &pb) % &pb).to_u64().unwrap();
        let d = (((x.denom() % &pb) + &pb) % &pb).to_u64().unwrap();
        assert!(d != 0, "entry is p-integral");
        n * fp_inv(d, p) % p
    };
    (0..m.rows).map(|i| (0..m.cols).map(|j| red(&m[(i, j)])).collect()).collect()
}

fn fp_inv(a: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

fn fp_mul(a: &FpMat, b: &FpMat, p: u64) -> FpMat {
    let (n, l) = (a.len(), b.len());
    let m = if l == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![0u64; m]; n];
    for i in 0..n {
        for kk in 0..l {
            let av = a[i][kk];
            if av == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] = (out[i][j] + av * b[kk][j]) % p;
            }
        }
    }
    out
}

fn fp_identity(n: usize) -> FpMat {
    (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect()
}

fn fp_pow(a: &FpMat, mut e: usize, p: u64) -> FpMat {
    let mut acc = fp_identity(a.len());
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_mul(&acc, &base, p);
        }
        e >>= 1;
        if e > 0 {
            base = fp_mul(&base, &base, p);
        }
    }
    acc
}

/// Kernel vectors (each of length `cols`) of `a` over `F_p`.
fn fp_kernel(a: &FpMat, p: u64) -> Vec<Vec<u64>> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut rr = 0;
    for c in 0..cols {
        if rr == rows {
            break;
        }
        let Some(pr) = (rr..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rr, pr);
        let inv = fp_inv(m[rr][c], p);
        for j in 0..cols {
            m[rr][j] = m[rr][j] * inv % p;
        }
        for i in 0..rows {
            if i != rr && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + (p - f) % p * m[rr][j]) % p;
                }
            }
        }
        pivots.push(c);
        rr += 1;
    }
    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut out = Vec::new();
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![0u64; cols];
        v[free] = 1;
        for (r2, &c) in pivots.iter().enumerate() {
            v[c] = (p - m[r2][free]) % p;
        }
        out.push(v);
    }
    out
}

// ---------------------------------------------------------------------------
// localization
// ---------------------------------------------------------------------------

/// The cuspidal block localized at the maximal ideal of a rational eigenform.
#[derive(Debug, Clone)]
pub struct ModularBlock {
    pub dvr: Dvr,
    pub level: u64,
    pub weight: usize,
    pub label: String,
    /// The localized Hecke algebra with its eigenvalue character.
    pub algebra: FiniteFlatAlgebra,
    pub lambda: Character,
    /// The `±`-parts of the localized cuspidal lattice as `T`-modules.
    pub module_plus: AlgebraModule,
    pub module_minus: AlgebraModule,
    /// The localized lattice `Λ` in cuspidal coordinates.
    pub lattice: Lattice,
    /// Bases of `Λ^±` in `Λ`-coordinates (columns).
    pub plus_basis: Mat,
    pub minus_basis: Mat,
    /// An `f`-eigenvector in `Λ`-coordinates.
    pub eigenvector: Vec<Rat>,
    /// Coordinates of the restricted `T_ℓ` in the algebra basis.
    pub hecke_coords: Vec<(u64, Vec<Rat>)>,
    /// Number of congruent rational branches merged into the block.
    pub branches: usize,
}

/// Localize the cuspidal Hecke module at the maximal ideal carried by `f`
/// modulo `p`.
pub fn localize_at_eigenform(
    space: &ModularSymbolSpace,
    f: &EigenformData,
    p: u64,
) -> Result<ModularBlock> {
    let dvr = space.dvr;
    assert_eq!(dvr.prime(), p, "space lattice structure matches the prime");
    let n = space.level;
    let k = space.weight;
    if p == 2 {
        return Err(ModsymError::Unsupported(
            "p = 2: the standing hypothesis that p is odd fails".into(),
        ));
    }
    if n % p == 0 {
        return Err(ModsymError::Unsupported(format!(
            "p = {p} divides the level {n}: the good-reduction hypothesis p ∤ N fails"
        )));
    }
    if (p as usize) <= k - 2 {
        return Err(ModsymError::Unsupported(format!(
            "p = {p} ≤ k - 2 = {}: the standing hypothesis p > k - 2 fails",
            k - 2
        )));
    }
    let table = cuspidal_hecke_table(space);
    let check_primes: Vec<u64> = table.iter().map(|(ell, _)| *ell).collect();
    if check_primes.is_empty() {
        return Err(ModsymError::Unsupported(
            "no good primes below the Sturm bound to compare eigensystems".into(),
        ));
    }

    // Eisenstein refusal: a_ℓ ≡ 1 + ℓ^(k-1) (mod p) for all good ℓ ≤ Sturm
    let eisenstein = check_primes.iter().all(|ell| {
        let Some(&a) = f.aps.get(ell) else { return false };
        let mut pow: u64 = 1;
        for _ in 0..(k - 1) {
            pow = pow * (ell % p) % p;
        }
        a.rem_euclid(p as i64) as u64 == (1 + pow) % p
    });
    if eisenstein {
        return Err(ModsymError::EisensteinIdeal { level: n, weight: k, prime: p });
    }

    let systems = split_rational(space, &table)?;
    let congruent = |aps: &BTreeMap<u64, i64>| {
        check_primes.iter().all(|ell| match (aps.get(ell), f.aps.get(ell)) {
            (Some(&a), Some(&b)) => (a - b).rem_euclid(p as i64) == 0,
            _ => false,
        })
    };
    let matched: Vec<&RationalSystem> = systems.iter().filter(|s| congruent(&s.aps)).collect();
    if !matched.iter().any(|s| check_primes.iter().all(|ell| s.aps.get(ell) == f.aps.get(ell))) {
        return Err(ModsymError::NoRationalEigenform(format!(
            "the requested eigenform does not occur at level {n}, weight {k}"
        )));
    }
    let rational_dim: usize = matched.iter().map(|s| s.basis.cols).sum();

    // completeness of the rational description, certified mod p
    let r = space.cuspidal.rank();
    let mut fp_basis = fp_identity(r); // rows are basis vectors of the running subspace
    for (ell, t) in table.iter() {
        let tp = fp_from_rat(t, p);
        let a = f.aps[ell].rem_euclid(p as i64) as u64;
        let mut shifted = tp;
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] = (row[i] + p - a) % p;
        }
        let pw = fp_pow(&shifted, r, p);
        let cur: FpMat = transpose_fp(&fp_basis); // r × s, columns span the subspace
        let img = fp_mul(&pw, &cur, p);
        let mut newbasis: FpMat = Vec::new();
        for coef in fp_kernel(&img, p) {
            let mut v = vec![0u64; r];
            for (bi, b) in fp_basis.iter().enumerate() {
                if coef[bi] == 0 {
                    continue;
                }
                for (slot, &x) in v.iter_mut().zip(b.iter()) {
                    *slot = (*slot + coef[bi] * x) % p;
                }
            }
            newbasis.push(v);
        }
        fp_basis = newbasis;
        if fp_basis.is_empty() {
            break;
        }
    }
    let modp_dim = fp_basis.len();
    if modp_dim != rational_dim {
        return Err(ModsymError::Unsupported(format!(
            "the m-block at level {n}, weight {k}, p = {p} has mod-p rank {modp_dim} but only \
             {rational_dim} dimensions of rational eigensystems: an irrational congruent \
             eigensystem is present"
        )));
    }

    // Λ = cuspidal lattice ∩ span of the matched branches (saturated)
    let span_cols: Vec<Vec<Rat>> = matched
        .iter()
        .flat_map(|s| (0..s.basis.cols).map(|j| s.basis.col(j)).collect::<Vec<_>>())
        .collect();
    let ann_rows = Mat::from_cols(span_cols).transpose().kernel_basis();
    let lattice = if ann_rows.is_empty() {
        Lattice::standard(r)
    } else {
        Lattice::standard(r).kernel_sublattice(dvr, &Mat::from_rows(ann_rows))
    };
    let rl = lattice.rank();
    assert_eq!(rl, rational_dim);

    // restricted operators in Λ-coordinates
    let lb = lattice.basis_mat();
    let restrict_to_lambda = |op: &Mat| -> Mat {
        let res = lb.solve_mat(&op.mul(&lb)).expect("operator preserves Λ_K");
        assert!(res.is_integral(dvr), "operator preserves Λ");
        res
    };
    let hecke_restricted: Vec<(u64, Mat)> =
        table.iter().map(|(ell, t)| (*ell, restrict_to_lambda(t))).collect();

    // the Hecke algebra as an O-lattice in End(Λ), closed under products
    let vectorize = |m: &Mat| -> Vec<Rat> {
        let mut v = Vec::with_capacity(rl * rl);
        for i in 0..rl {
            for j in 0..rl {
                v.push(m[(i, j)].clone());
            }
        }
        v
    };
    let mut gens: Vec<Vec<Rat>> = vec![vectorize(&Mat::identity(rl))];
    gens.extend(hecke_restricted.iter().map(|(_, m)| vectorize(m)));
    let mut alg_lat = Lattice::from_generators(dvr, rl * rl, &gens);
    loop {
        let basis_mats: Vec<Mat> = alg_lat.basis().iter().map(|v| unvec(v, rl)).collect();
        let mut prods = Vec::new();
        for a in &basis_mats {
            for b in &basis_mats {
                prods.push(vectorize(&a.mul(b)));
            }
        }
        let closed = Lattice::from_generators(dvr, rl * rl, &prods);
        let sum = alg_lat.sum(dvr, &closed);
        if sum.same_lattice(dvr, &alg_lat) {
            break;
        }
        alg_lat = sum;
    }
    let t_rank = alg_lat.rank();
    let basis_mats: Vec<Mat> = alg_lat.basis().iter().map(|v| unvec(v, rl)).collect();
    let mut sc = Vec::with_capacity(t_rank * t_rank * t_rank);
    for a in &basis_mats {
        for b in &basis_mats {
            sc.extend(alg_lat.coords(&vectorize(&a.mul(b)))?);
        }
    }
    let unit = alg_lat.coords(&vectorize(&Mat::identity(rl)))?;
    let algebra = FiniteFlatAlgebra::new(dvr, t_rank, sc, unit)?;

    // the f-eigenvector and the character λ_f
    let eigenvector = {
        let mut stacked = Vec::new();
        for (ell, tm) in &hecke_restricted {
            let a = f.aps[ell];
            let mut shifted = tm.clone();
            for i in 0..rl {
                shifted[(i, i)] -= rat(a);
            }
            for i in 0..rl {
                stacked.push(shifted.row(i));
            }
        }
        let ker = Mat::from_rows(stacked).kernel_basis();
        ker.into_iter().next().ok_or_else(|| {
            ModsymError::NoRationalEigenform(
                "eigenvector for the requested eigensystem not found in the block".into(),
            )
        })?
    };
    let pivot = eigenvector.iter().position(|x| !x.is_zero()).unwrap();
    let lambda_values: Vec<Rat> = basis_mats
        .iter()
        .map(|m| &m.mul_vec(&eigenvector)[pivot] / &eigenvector[pivot])
        .collect();
    let lambda = Character::new(&algebra, lambda_values)?;

    // ±-parts of Λ and the module structures
    let star = restrict_to_lambda(&space.star_on_cuspidal());
    let id = Mat::identity(rl);
    let plus_lat = Lattice::standard(rl).kernel_sublattice(dvr, &star.sub(&id));
    let minus_lat = Lattice::standard(rl).kernel_sublattice(dvr, &star.add(&id));
    assert_eq!(plus_lat.rank() + minus_lat.rank(), rl);
    let module_of = |part: &Lattice| -> Result<AlgebraModule> {
        let pb = part.basis_mat();
        let actions: Vec<Mat> = basis_mats
            .iter()
            .map(|m| pb.solve_mat(&m.mul(&pb)).expect("T preserves the ±-part"))
            .collect();
        Ok(AlgebraModule::new(&algebra, part.rank(), actions)?)
    };
    let module_plus = module_of(&plus_lat)?;
    let module_minus = module_of(&minus_lat)?;

    let hecke_coords = hecke_restricted
        .iter()
        .map(|(ell, m)| (*ell, alg_lat.coords(&vectorize(m)).expect("T_ℓ lies in the algebra")))
        .collect();

    Ok(ModularBlock {
        dvr,
        level: n,
        weight: k,
        label: f.label.clone(),
        algebra,
        lambda,
        module_plus,
        module_minus,
        lattice,
        plus_basis: plus_lat.basis_mat(),
        minus_basis: minus_lat.basis_mat(),
        eigenvector,
        hecke_coords,
        branches: matched.len(),
    })
}

fn transpose_fp(rows: &FpMat) -> FpMat {
    if rows.is_empty() {
        return Vec::new();
    }
    let (n, m) = (rows.len(), rows[0].len());
    (0..m).map(|j| (0..n).map(|i| rows[i][j]).collect()).collect()
}

fn unvec(v: &[Rat], n: usize) -> Mat {
    let mut m = Mat::zero(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = v[i * n + j].clone();
        }
    }
    m
}

/// Independent congruence-number oracle from Sturm-bound eigenvalue lists
/// alone: the rational eigensystems of the space congruent to `f` mod `p`
/// give tuples `t_ℓ = (a_ℓ(μ))_μ ∈ O^r`; the `O`-algebra they generate is
/// the Hecke algebra of the block as a subring of `∏ O`, and
/// `η_f = {x : x·e_f ∈ T}` is read off from the dual coordinates of `e_f`
/// in an `O`-basis of `T`.  No module, idempotent, or Fitting-ideal
/// machinery is involved.
pub fn sturm_congruence_valuation(
    space: &ModularSymbolSpace,
    f: &EigenformData,
    p: u64,
) -> Result<u64> {
    let systems = rational_eigensystems(space)?;
    // good-prime eigenvalue tuples, deduplicated (oldform copies repeat)
    let mut tuples: Vec<BTreeMap<u64, i64>> = Vec::new();
    for sys in &systems {
        let good: BTreeMap<u64, i64> = sys
            .aps
            .iter()
            .filter(|(ell, _)| space.level % *ell != 0)
            .map(|(&ell, &a)| (ell, a))
            .collect();
        if !tuples.contains(&good) {
            tuples.push(good);
        }
    }
    let mine: BTreeMap<u64, i64> = f
        .aps
        .iter()
        .filter(|(ell, _)| space.level % *ell != 0)
        .map(|(&ell, &a)| (ell, a))
        .collect();
    let congruent_mod_p = |t: &BTreeMap<u64, i64>| {
        t.iter().all(|(ell, a)| match mine.get(ell) {
            Some(b) => (a - b).rem_euclid(p as i64) == 0,
            None => true,
        })
    };
    let mut branches: Vec<&BTreeMap<u64, i64>> = Vec::new();
    for t in &tuples {
        if t.iter().all(|(ell, a)| mine.get(ell) == Some(a)) {
            branches.insert(0, t);
        } else if congruent_mod_p(t) {
            branches.push(t);
        }
    }
    let r = branches.len();
    if r <= 1 {
        return Ok(0);
    }
    let dvr = space.dvr;
    let ells: Vec<u64> = branches[0].keys().copied().collect();
    let mut gens: Vec<Vec<Rat>> = vec![vec![Rat::one(); r]];
    for ell in &ells {
        gens.push(branches.iter().map(|b| rat(b[ell])).collect());
    }
    // close the O-span under multiplication by the generators
    let mut lat = Lattice::from_generators(dvr, r, &gens);
    loop {
        let mut next = lat.basis().to_vec();
        for b in lat.basis() {
            for g in &gens[1..] {
                next.push(b.iter().zip(g).map(|(x, y)| x * y).collect());
            }
        }
        let bigger = Lattice::from_generators(dvr, r, &next);
        if bigger.same_lattice(dvr, &lat) {
            break;
        }
        lat = bigger;
    }
    if lat.rank() != r {
        return Err(ModsymError::Unsupported(format!(
            "tuple algebra has rank {} < {} branches",
            lat.rank(),
            r
        )));
    }
    // x·e_f ∈ T ⟺ x·(dual coordinates of e_f) is integral
    let mut e1 = vec![Rat::zero(); r];
    e1[0] = Rat::one();
    let coords = Mat::from_cols(lat.basis().to_vec())
        .solve(&e1)
        .expect("basis spans K^r");
    let mut v = 0i64;
    for c in &coords {
        if let Some(val) = dvr.val(c) {
            v = v.max(-val);
        }
    }
    Ok(v as u64)
}

/// `η_f = λ_f(Ann_T ker λ_f)`, the congruence ideal of the block.
pub fn congruence_number(block: &ModularBlock) -> Result<PIdeal> {
    Ok(eta(&block.algebra, &block.lambda)?)
}

/// Cohomological congruence numbers `Fitt C0^λ(H^±)` and the pairing
/// cross-check.
#[derive(Debug, Clone)]
pub struct CohCongruence {
    pub plus: PIdeal,
    pub minus: PIdeal,
    /// Value ideal `([δ⁺, δ⁻])` of a perfect `T`-bilinear pairing between
    /// `H⁺` and `H⁻` when one was found; it agrees with both Fitting ideals.
    pub pairing_value: Option<PIdeal>,
}

pub fn cohomological_congruence_number(block: &ModularBlock) -> Result<CohCongruence> {
    let plus = eta_of_module(&block.algebra, &block.module_plus, &block.lambda)?;
    let minus = eta_of_module(&block.algebra, &block.module_minus, &block.lambda)?;
    let pairing =
        find_perfect_pairing(&block.module_plus, &block.module_minus, 64, 0x636f686f);
    let pairing_value = match pairing {
        Some(p) => {
            let (f1, f2, val) = duality_transfer(&block.algebra, &p, &block.lambda)?;
            if f1 != plus || f2 != minus || val != plus {
                return Err(ModsymError::Finalg(FinalgError::Inconsistent(format!(
                    "pairing transfer gave ({f1}, {f2}, {val}) against Fitting ideals \
                     ({plus}, {minus})"
                ))));
            }
            Some(val)
        }
        None => None,
    };
    if plus != minus {
        return Err(ModsymError::Finalg(FinalgError::Inconsistent(format!(
            "Fitt C0(H⁺) = {plus} differs from Fitt C0(H⁻) = {minus}"
        ))));
    }
    Ok(CohCongruence { plus, minus, pairing_value })
}

impl ModularBlock {
    /// Basis vector of the rank-1 image lattice `e_λ·H^ε` mapped into the
    /// ambient modular-symbol space (lattice coordinates).
    pub fn isotypic_image_generator(
        &self,
        space: &ModularSymbolSpace,
        sign: i64,
    ) -> Result<Vec<Rat>> {
        let e = idempotent_for_character(&self.algebra, &self.lambda)?;
        let module = if sign > 0 { &self.module_plus } else { &self.module_minus };
        let part_basis = if sign > 0 { &self.plus_basis } else { &self.minus_basis };
        let em = module.action_of(&e);
        let upper = Lattice::standard(module.dim).image(self.dvr, &em);
        if upper.rank() != 1 {
            return Err(ModsymError::Unsupported(format!(
                "e_λ·H^{} has rank {} ≠ 1",
                if sign > 0 { "+" } else { "-" },
                upper.rank()
            )));
        }
        // module coords → Λ coords → cuspidal coords → ambient coords
        let v_lambda = part_basis.mul_vec(&upper.basis()[0]);
        let v_cusp = self.lattice.basis_mat().mul_vec(&v_lambda);
        Ok(space.cuspidal.basis_mat().mul_vec(&v_cusp))
    }
}
