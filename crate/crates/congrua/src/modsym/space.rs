//! Construction of the weight-`k` modular symbol space for `Γ₀(N)`.
//!
//! Generators are Manin symbols `[X^i Y^(k-2-i), (c:d)]`; the two-term
//! relations are folded in by a signed union-find (they match generators in
//! pairs up to sign), the three-term relations by sparse Gauss–Jordan
//! elimination over `Q`.  The integral lattice is the `O`-span of the images
//! of the generators; the whole space is re-coordinatized so that this
//! lattice becomes the standard `O^d`.

use super::{ModsymError, Result};
use crate::dvr::{rat, Dvr, Lattice, Mat, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};

/// `P¹(Z/N)`: canonical representatives and a lookup table.
pub(super) struct P1 {
    pub n: u64,
    pub reps: Vec<(u64, u64)>,
    lookup: HashMap<(u64, u64), usize>,
}

fn gcd_u(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(super) fn gcd_i(a: i64, b: i64) -> i64 {
    gcd_u(a.unsigned_abs(), b.unsigned_abs()) as i64
}

impl P1 {
    pub fn new(n: u64) -> Self {
        let mut reps = Vec::new();
        let mut lookup = HashMap::new();
        if n == 1 {
            reps.push((0, 0));
            lookup.insert((0, 0), 0);
            return P1 { n, reps, lookup };
        }
        let units: Vec<u64> = (1..n).filter(|&u| gcd_u(u, n) == 1).collect();
        for c in 0..n {
            for d in 0..n {
                if gcd_u(gcd_u(c, d), n) != 1 || lookup.contains_key(&(c, d)) {
                    continue;
                }
                let idx = reps.len();
                reps.push((c, d));
                for &u in &units {
                    lookup.insert((c * u % n, d * u % n), idx);
                }
            }
        }
        P1 { n, reps, lookup }
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    /// Index of the class of `(c:d)`; `None` when `gcd(c,d,N) > 1`.
    pub fn index(&self, c: i64, d: i64) -> Option<usize> {
        let n = self.n as i64;
        let cr = c.rem_euclid(n) as u64;
        let dr = d.rem_euclid(n) as u64;
        self.lookup.get(&(cr, dr)).copied()
    }

    /// Right action `(c:d)·g` for `g = [a,b;c,d]` acting on row vectors.
    pub fn apply(&self, idx: usize, g: [i64; 4]) -> Option<usize> {
        let (c, d) = self.reps[idx];
        let (c, d) = (c as i64, d as i64);
        self.index(c * g[0] + d * g[2], c * g[1] + d * g[3])
    }

    /// A lift of the class to `g = [a,b;c,d] ∈ SL₂(Z)`.
    pub fn lift(&self, idx: usize) -> [i64; 4] {
        let (c0, d0) = self.reps[idx];
        let n = self.n as i64;
        let (mut c, mut d) = (c0 as i64, d0 as i64);
        if c == 0 && d == 0 {
            // only at N = 1
            return [1, 0, 0, 1];
        }
        if c == 0 {
            // class of (0:1)
            c = 0;
            d = 1;
        } else {
            let mut t = 0;
            while gcd_i(c, d + t * n) != 1 {
                t += 1;
                assert!(t <= c.abs() + 1, "coprime lift search failed");
            }
            d += t * n;
        }
        // a·d − b·c = 1 via the extended Euclidean algorithm
        let (_, a, mb) = ext_gcd(d, c);
        let (a, b) = (a, -mb);
        debug_assert_eq!(a * d - b * c, 1);
        [a, b, c, d]
    }
}

/// `(g, x, y)` with `x·a + y·b = g = gcd(a,b) ≥ 0`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return if a < 0 { (-a, -1, 0) } else { (a, 1, 0) };
    }
    let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
    (g, y, x - (a.div_euclid(b)) * y)
}

fn inv_mod(a: i64, m: i64) -> i64 {
    if m.abs() <= 1 {
        return 0;
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m.abs()), m.abs());
    assert_eq!(g, 1);
    x.rem_euclid(m.abs())
}

/// Coefficients of `(aX+bY)^i (cX+dY)^(m-i)` in the basis `X^j Y^(m-j)`.
pub(super) fn monomial_transform(m: usize, i: usize, g: [i64; 4]) -> Vec<i128> {
    let [a, b, c, d] = g.map(|x| x as i128);
    let expand = |u: i128, v: i128, e: usize| -> Vec<i128> {
        // (uX + vY)^e, X-degree ascending
        let mut out = vec![0i128; e + 1];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = binom(e, j) * u.pow(j as u32) * v.pow((e - j) as u32);
        }
        out
    };
    let p1 = expand(a, b, i);
    let p2 = expand(c, d, m - i);
    let mut out = vec![0i128; m + 1];
    for (j1, &c1) in p1.iter().enumerate() {
        for (j2, &c2) in p2.iter().enumerate() {
            out[j1 + j2] += c1 * c2;
        }
    }
    out
}

fn binom(n: usize, k: usize) -> i128 {
    let mut r: i128 = 1;
    for j in 0..k {
        r = r * (n - j) as i128 / (j + 1) as i128;
    }
    r
}

/// Union-find on generators with a sign relative to the root and a
/// "collapsed to zero" marker on roots.
struct SignedUf {
    parent: Vec<usize>,
    sign: Vec<i32>,
    zero: Vec<bool>,
}

impl SignedUf {
    fn new(n: usize) -> Self {
        SignedUf { parent: (0..n).collect(), sign: vec![1; n], zero: vec![false; n] }
    }

    fn find(&mut self, x: usize) -> (usize, i32) {
        if self.parent[x] == x {
            return (x, self.sign[x]);
        }
        let (r, s) = self.find(self.parent[x]);
        self.parent[x] = r;
        self.sign[x] *= s;
        (r, self.sign[x])
    }

    /// Impose `x_a = s·x_b`.
    fn union(&mut self, a: usize, b: usize, s: i32) {
        let (ra, sa) = self.find(a);
        let (rb, sb) = self.find(b);
        if ra == rb {
            if sa != s * sb {
                self.zero[ra] = true;
            }
            return;
        }
        self.parent[ra] = rb;
        self.sign[ra] = sa * s * sb; // x_ra = sa⁻¹·s·sb·x_rb, signs are ±1
        if self.zero[ra] {
            self.zero[rb] = true;
        }
    }
}

/// Sparse Gauss–Jordan elimination of relation rows over `Q`.
///
/// Returns, for every column, its expression in the free-column basis, plus
/// the list of free columns.
fn sparse_quotient(
    ncols: usize,
    mut rows: Vec<BTreeMap<usize, Rat>>,
) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); ncols];
    for (ri, row) in rows.iter().enumerate() {
        for (&c, _) in row.iter() {
            col_rows[c].push(ri);
        }
    }
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; rows.len()];
    let mut is_pivot_col = vec![false; ncols];
    loop {
        // pick the sparsest unused nonempty row
        let mut best: Option<(usize, usize)> = None;
        for (ri, row) in rows.iter().enumerate() {
            if pivot_of_row[ri].is_some() || row.is_empty() {
                continue;
            }
            if best.map_or(true, |(_, n)| row.len() < n) {
                best = Some((ri, row.len()));
            }
        }
        let Some((ri, _)) = best else { break };
        // pivot column: fewest occurrences in other rows
        let pc = *rows[ri]
            .keys()
            .min_by_key(|&&c| col_rows[c].iter().filter(|&&r| !rows[r].is_empty()).count())
            .unwrap();
        let inv = rows[ri][&pc].recip();
        let prow: BTreeMap<usize, Rat> =
            rows[ri].iter().map(|(&c, v)| (c, v * &inv)).collect();
        rows[ri] = prow.clone();
        pivot_of_row[ri] = Some(pc);
        is_pivot_col[pc] = true;
        // col_rows may hold duplicate entries from fill-in; dedupe so each
        // target row is eliminated exactly once
        let mut targets: Vec<usize> =
            col_rows[pc].iter().copied().filter(|&r| r != ri && rows[r].contains_key(&pc)).collect();
        targets.sort_unstable();
        targets.dedup();
        for t in targets {
            let f = rows[t][&pc].clone();
            for (&c, v) in prow.iter() {
                let entry = rows[t].entry(c).or_insert_with(Rat::zero);
                *entry -= v * &f;
                let dead = entry.is_zero();
                if dead {
                    rows[t].remove(&c);
                } else if c != pc {
                    col_rows[c].push(t);
                }
            }
            rows[t].remove(&pc);
        }
    }
    let free_cols: Vec<usize> = (0..ncols).filter(|&c| !is_pivot_col[c]).collect();
    let free_index: HashMap<usize, usize> =
        free_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let nfree = free_cols.len();
    let mut expr = vec![Vec::new(); ncols];
    for &c in &free_cols {
        let mut v = vec![Rat::zero(); nfree];
        v[free_index[&c]] = Rat::one();
        expr[c] = v;
    }
    for (ri, p) in pivot_of_row.iter().enumerate() {
        let Some(pc) = p else { continue };
        let mut v = vec![Rat::zero(); nfree];
        for (&c, coef) in rows[ri].iter() {
            if c != *pc {
                v[free_index[&c]] = -coef.clone();
            }
        }
        expr[*pc] = v;
    }
    (expr, free_cols)
}

/// The `O`-span of vectors that include the unit vectors, so that the span
/// `L ⊇ O^n` is the preimage of the finite subgroup `L/O^n ⊆ (p^{-A}O/O)^n`
/// with `A` the largest denominator exponent.  The subgroup is echelonized
/// over `Z/p^A` with minimal-valuation pivots, which keeps all arithmetic on
/// small residues; the lattice basis is then the echelon lifts at the pivot
/// rows and unit vectors elsewhere, a sparse triangular matrix.
fn span_over_standard(dvr: Dvr, n: usize, gens: &[Vec<Rat>]) -> Lattice {
    let mut amax = 0i64;
    for v in gens {
        for x in v {
            if let Some(val) = dvr.val(x) {
                amax = amax.max(-val);
            }
        }
    }
    if amax == 0 {
        return Lattice::standard(n);
    }
    let p = BigInt::from(dvr.prime());
    let q = p.pow(amax as u32);
    // residue of x·p^A in Z/p^A; the denominator is prime to p after scaling
    let reduce = |x: &Rat| -> BigInt {
        let y = x * Rat::new(p.pow(amax as u32), BigInt::one());
        let num = y.numer().mod_floor(&q);
        let den = y.denom().mod_floor(&q);
        let inv = mod_inverse(&den, &q);
        (num * inv).mod_floor(&q)
    };
    let val_q = |x: &BigInt| -> i64 {
        let mut v = 0;
        let mut x = x.clone();
        while v < amax && (&x % &p).is_zero() {
            x /= &p;
            v += 1;
        }
        v
    };
    let mut seen: HashSet<Vec<Rat>> = HashSet::new();
    let mut vecs: Vec<Vec<BigInt>> = Vec::new();
    for v in gens {
        if v.iter().all(|x| dvr.is_integral(x)) || !seen.insert(v.clone()) {
            continue;
        }
        let w: Vec<BigInt> = v.iter().map(&reduce).collect();
        if w.iter().any(|x| !x.is_zero()) {
            vecs.push(w);
        }
    }
    let mut used = vec![false; n];
    // (pivot row, pivot valuation, echelon vector with pivot entry p^c)
    let mut echelon: Vec<(usize, i64, Vec<BigInt>)> = Vec::new();
    loop {
        // minimal-valuation pivot over unused rows
        let mut best: Option<(i64, usize, usize)> = None;
        'search: for (vj, w) in vecs.iter().enumerate() {
            for (i, x) in w.iter().enumerate() {
                if used[i] || x.is_zero() {
                    continue;
                }
                let c = val_q(x);
                if best.map_or(true, |(bc, _, _)| c < bc) {
                    best = Some((c, i, vj));
                    if c == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((c, pi, pj)) = best else { break };
        let mut g = vecs.swap_remove(pj);
        // normalize so the pivot entry is exactly p^c
        let unit = &g[pi] / p.pow(c as u32);
        let inv = mod_inverse(&unit.mod_floor(&q), &q);
        for x in g.iter_mut() {
            *x = (&*x * &inv).mod_floor(&q);
        }
        // every entry of g in an unused row has valuation ≥ c, so the
        // elimination multipliers below are integral
        let pc = p.pow(c as u32);
        for w in vecs.iter_mut() {
            if !w[pi].is_zero() {
                let f = &w[pi] / &pc;
                for (x, y) in w.iter_mut().zip(g.iter()) {
                    if !y.is_zero() {
                        *x = (&*x - y * &f).mod_floor(&q);
                    }
                }
            }
        }
        vecs.retain(|w| w.iter().any(|x| !x.is_zero()));
        used[pi] = true;
        echelon.push((pi, c, g));
    }
    // triangular basis: echelon lifts g/p^A at pivot rows, units elsewhere
    let qr = Rat::new(q.clone(), BigInt::one());
    let mut basis: Vec<Vec<Rat>> = Vec::with_capacity(n);
    for i in 0..n {
        if let Some((_, _, g)) = echelon.iter().find(|&&(r, _, _)| r == i) {
            basis.push(g.iter().map(|x| Rat::new(x.clone(), BigInt::one()) / &qr).collect());
        } else {
            let mut e = vec![Rat::zero(); n];
            e[i] = Rat::one();
            basis.push(e);
        }
    }
    Lattice::from_basis_unchecked(n, basis)
}

/// Inverse of `a` modulo `m` for `gcd(a, m) = 1`.
fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = num_integer::Integer::extended_gcd(a, m);
    assert!(e.gcd.is_one(), "argument is a unit");
    e.x.mod_floor(m)
}

/// A normalized cusp `a/c` with `gcd(a,c) = 1`, `c ≥ 0`, `∞ = 1/0`.
pub(super) fn cusp_normalize(a: i64, c: i64) -> (i64, i64) {
    if c == 0 {
        return (1, 0);
    }
    let g = gcd_i(a, c);
    let (mut a, mut c) = (a / g, c / g);
    if c < 0 {
        a = -a;
        c = -c;
    }
    (a, c)
}

/// `Γ₀(N)`-equivalence of cusps: `a₁/c₁ ~ a₂/c₂` iff
/// `s₁c₂ ≡ s₂c₁ (mod gcd(c₁c₂, N))` with `aᵢsᵢ ≡ 1 (mod cᵢ)`.
pub(super) fn cusps_equivalent(n: u64, x: (i64, i64), y: (i64, i64)) -> bool {
    let n = n as i64;
    let s = |a: i64, c: i64| if c == 0 { a } else { inv_mod(a, c) };
    let s1 = s(x.0, x.1);
    let s2 = s(y.0, y.1);
    let g = gcd_i(x.1 * y.1, n);
    if g == 0 {
        return true; // both are ∞
    }
    (s1 * y.1 - s2 * x.1).rem_euclid(g) == 0
}

/// The weight-`k` modular symbol space for `Γ₀(N)`, in coordinates where the
/// integral Manin-symbol lattice is the standard `O^d`.
pub struct ModularSymbolSpace {
    pub dvr: Dvr,
    pub level: u64,
    pub weight: usize,
    pub(super) p1: P1,
    /// Dimension of the full (torsion-free) space over `Q`.
    pub dim: usize,
    /// Image of each Manin generator, in lattice coordinates.
    pub(super) gen_images: Vec<Vec<Rat>>,
    /// Root generator index carried by each free column.
    pub(super) free_roots: Vec<usize>,
    /// Lattice-basis matrix in free-column coordinates.
    pub(super) basis_free: Mat,
    /// Cuspidal lattice: saturated kernel of the boundary map, in `O^dim`.
    pub cuspidal: Lattice,
    /// Star involution in lattice coordinates.
    pub star: Mat,
    /// Boundary map (cusp classes × dim), lattice coordinates.
    pub boundary: Mat,
    pub cusps: Vec<(i64, i64)>,
}

impl ModularSymbolSpace {
    /// Number of Manin generators: `|P¹(Z/N)|·(k-1)`.
    pub fn num_generators(&self) -> usize {
        self.p1.len() * (self.weight - 1)
    }

    pub(super) fn gen_index(&self, p1_idx: usize, i: usize) -> usize {
        p1_idx * (self.weight - 1) + i
    }

    /// Build the space.  `weight` must be even and at least 2.
    pub fn new(dvr: Dvr, level: u64, weight: usize) -> Result<Self> {
        if weight < 2 || weight % 2 != 0 {
            return Err(ModsymError::Unsupported(format!(
                "weight {weight} is not an even integer ≥ 2"
            )));
        }
        let p1 = P1::new(level);
        let m = weight - 2;
        let w = weight - 1;
        let ngen = p1.len() * w;

        // two-term relations through the signed union-find
        let sigma = [0i64, -1, 1, 0];
        let tau = [0i64, -1, 1, -1];
        let tau2 = [-1i64, 1, -1, 0];
        let mut uf = SignedUf::new(ngen);
        for u in 0..p1.len() {
            let u2 = p1.apply(u, sigma).expect("σ is invertible mod N");
            for i in 0..=m {
                // [P,u] + [P|σ, uσ] = 0 with P|σ = (−1)^i X^(m−i) Y^i
                let s = if i % 2 == 0 { -1 } else { 1 };
                uf.union(u * w + i, u2 * w + (m - i), s);
            }
        }

        // three-term relations, mapped through the union-find
        let mut rows: Vec<BTreeMap<usize, Rat>> = Vec::new();
        for u in 0..p1.len() {
            let ut = p1.apply(u, tau).expect("τ is invertible mod N");
            let ut2 = p1.apply(u, tau2).expect("τ² is invertible mod N");
            for i in 0..=m {
                let mut row: BTreeMap<usize, Rat> = BTreeMap::new();
                let mut add = |uf: &mut SignedUf, g: usize, c: BigInt| {
                    let (r, s) = uf.find(g);
                    if uf.zero[r] || c.is_zero() {
                        return;
                    }
                    let v = Rat::from(c * BigInt::from(s));
                    let entry = row.entry(r).or_insert_with(Rat::zero);
                    *entry += v;
                    if entry.is_zero() {
                        row.remove(&r);
                    }
                };
                add(&mut uf, u * w + i, BigInt::one());
                for (j, &c) in monomial_transform(m, i, tau).iter().enumerate() {
                    add(&mut uf, ut * w + j, BigInt::from(c));
                }
                for (j, &c) in monomial_transform(m, i, tau2).iter().enumerate() {
                    add(&mut uf, ut2 * w + j, BigInt::from(c));
                }
                if !row.is_empty() {
                    rows.push(row);
                }
            }
        }

        // compact the live roots into columns
        let mut root_col: HashMap<usize, usize> = HashMap::new();
        let mut col_root: Vec<usize> = Vec::new();
        for g in 0..ngen {
            let (r, _) = uf.find(g);
            if uf.zero[r] || root_col.contains_key(&r) {
                continue;
            }
            root_col.insert(r, col_root.len());
            col_root.push(r);
        }
        let rows: Vec<BTreeMap<usize, Rat>> = rows
            .into_iter()
            .map(|row| row.into_iter().map(|(r, v)| (root_col[&r], v)).collect())
            .collect();

        let (expr, free_cols) = sparse_quotient(col_root.len(), rows);
        let nfree = free_cols.len();
        let free_roots: Vec<usize> = free_cols.iter().map(|&c| col_root[c]).collect();

        // image of each generator in free-column coordinates
        let gen_free = |uf: &mut SignedUf, g: usize| -> Vec<Rat> {
            let (r, s) = uf.find(g);
            if uf.zero[r] {
                return vec![Rat::zero(); nfree];
            }
            let e = &expr[root_col[&r]];
            e.iter().map(|x| x * rat(s as i64)).collect()
        };
        let images_free: Vec<Vec<Rat>> = (0..ngen).map(|g| gen_free(&mut uf, g)).collect();

        // integral structure: O-span of the generator images.  The free
        // columns are themselves generator images (the unit vectors), so the
        // span contains O^nfree and is determined by its image in
        // (p^{-A}O/O)^nfree, a finite p-group handled with small modular
        // arithmetic instead of exact rational elimination.
        let lat = span_over_standard(dvr, nfree, &images_free);
        assert_eq!(lat.rank(), nfree, "generators span the quotient space");
        let basis_free = lat.basis_mat();
        let basis_free_inv = basis_free.inverse().expect("full-rank basis");
        let gen_images: Vec<Vec<Rat>> =
            images_free.iter().map(|v| basis_free_inv.mul_vec(v)).collect();

        // cusps and the boundary map on the free columns
        let mut cusps: Vec<(i64, i64)> = Vec::new();
        let cusp_class = |c: (i64, i64), cusps: &mut Vec<(i64, i64)>| -> usize {
            for (i, &e) in cusps.iter().enumerate() {
                if cusps_equivalent(level, e, c) {
                    return i;
                }
            }
            cusps.push(c);
            cusps.len() - 1
        };
        let mut bd_gen: Vec<Vec<(usize, i64)>> = Vec::with_capacity(ngen);
        for u in 0..p1.len() {
            let [a, b, c, d] = p1.lift(u);
            let cu1 = cusp_normalize(a, c);
            let cu2 = cusp_normalize(b, d);
            for i in 0..=m {
                // ∂[X^i Y^(m−i), (c:d)] = P(1,0)·{a/c} − P(0,1)·{b/d}
                let mut terms = Vec::new();
                if i == m {
                    terms.push((cusp_class(cu1, &mut cusps), 1i64));
                }
                if i == 0 {
                    terms.push((cusp_class(cu2, &mut cusps), -1i64));
                }
                bd_gen.push(terms);
            }
        }
        let ncusps = cusps.len();
        let mut boundary_free = Mat::zero(ncusps, nfree);
        for (fc, &r) in free_roots.iter().enumerate() {
            for &(cl, s) in &bd_gen[r] {
                boundary_free[(cl, fc)] += rat(s);
            }
        }
        // well-definedness: the boundary of every generator, computed
        // directly, must agree with the linear extension from the free roots
        for g in 0..ngen {
            let via_quotient = boundary_free.mul_vec(&images_free[g]);
            let mut direct = vec![Rat::zero(); ncusps];
            for &(cl, s) in &bd_gen[g] {
                direct[cl] += rat(s);
            }
            assert_eq!(via_quotient, direct, "boundary map descends to the quotient");
        }
        let boundary = boundary_free.mul(&basis_free);
        let cuspidal = Lattice::standard(nfree).kernel_sublattice(dvr, &boundary);

        let mut space = ModularSymbolSpace {
            dvr,
            level,
            weight,
            p1,
            dim: nfree,
            gen_images,
            free_roots,
            basis_free,
            cuspidal,
            star: Mat::zero(0, 0),
            boundary,
            cusps,
        };
        let eta = [-1i64, 0, 0, 1];
        space.star = space.operator_from_action(|p1, u, i| {
            // [P,(c:d)] ↦ [P(−X,Y), (−c:d)]
            let u2 = p1.apply(u, eta).expect("η is invertible mod N");
            let s = if i % 2 == 0 { 1 } else { -1 };
            vec![(u2, i, rat(s))]
        });
        debug_assert_eq!(space.star.mul(&space.star), Mat::identity(nfree));
        Ok(space)
    }

    /// Matrix, in lattice coordinates, of the linear map defined on Manin
    /// generators by `action(u, i) = Σ coeff·[X^j Y^(m-j), u']`.
    pub(super) fn operator_from_action<F>(&self, action: F) -> Mat
    where
        F: Fn(&P1, usize, usize) -> Vec<(usize, usize, Rat)>,
    {
        let w = self.weight - 1;
        let mut cols = Vec::with_capacity(self.dim);
        for &root in &self.free_roots {
            let (u, i) = (root / w, root % w);
            let mut img = vec![Rat::zero(); self.dim];
            for (u2, j, coef) in action(&self.p1, u, i) {
                let gi = &self.gen_images[self.gen_index(u2, j)];
                for (slot, x) in img.iter_mut().zip(gi.iter()) {
                    *slot += x * &coef;
                }
            }
            cols.push(img);
        }
        // columns are images (already in lattice coordinates) of the free
        // basis vectors; precompose with the lattice → free coordinate change
        Mat::from_cols(cols).mul(&self.basis_free)
    }

    /// Image of the Manin generator `[X^i Y^(k-2-i), (c:d)]`.
    pub fn manin_generator(&self, c: i64, d: i64, i: usize) -> Option<&[Rat]> {
        let u = self.p1.index(c, d)?;
        Some(&self.gen_images[self.gen_index(u, i)])
    }

    /// Restrict an operator in lattice coordinates to the cuspidal lattice
    /// (requires that the operator preserve it).
    pub fn restrict_to_cuspidal(&self, op: &Mat) -> Mat {
        let b = self.cuspidal.basis_mat();
        let img = op.mul(&b);
        let res = b.solve_mat(&img).expect("operator preserves the cuspidal subspace");
        assert!(res.is_integral(self.dvr), "operator preserves the cuspidal lattice");
        res
    }

    /// `±`-eigenlattices of the star involution inside a star-stable
    /// sublattice given in cuspidal coordinates.
    pub fn star_on_cuspidal(&self) -> Mat {
        self.restrict_to_cuspidal(&self.star)
    }
}
