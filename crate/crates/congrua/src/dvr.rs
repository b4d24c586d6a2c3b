//! Exact linear algebra over `O = Z_(p)`, the localization of the integers
//! at an odd prime `p`.
//!
//! Scalars are arbitrary-precision rationals; an element is *p-integral*
//! when its reduced denominator is prime to `p`.  Every structural quantity
//! computed here (Fitting ideals, elementary divisors, saturations) is a
//! `p`-adic valuation, so exact rational arithmetic gives exact answers with
//! no precision management.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Exact rational scalar; `p`-integrality is a property, not a subtype.
pub type Rat = BigRational;

/// Convenience constructor for integer scalars.
pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational `n/d`.
pub fn ratio(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum DvrError {
    #[error("module has free rank > 0 after localization; Fitting ideal is zero")]
    NotFinite,
    #[error("matrix entry is not p-integral where required")]
    NotIntegral,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("vector does not lie in the span of the lattice")]
    NotInSpan,
}

/// The discrete valuation ring `Z_(p)` for an odd prime `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dvr {
    p: u64,
}

impl Dvr {
    pub fn new(p: u64) -> Self {
        assert!(p >= 3 && p % 2 == 1, "p must be an odd prime");
        Dvr { p }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    /// `p`-adic valuation of a nonzero integer.
    fn val_int(&self, n: &BigInt) -> i64 {
        debug_assert!(!n.is_zero());
        let p = self.p_big();
        let mut m = n.abs();
        let mut v = 0i64;
        loop {
            let (q, r) = num_integer::Integer::div_rem(&m, &p);
            if r.is_zero() {
                v += 1;
                m = q;
            } else {
                return v;
            }
        }
    }

    /// `p`-adic valuation; `None` encodes `+infinity` (the valuation of 0).
    pub fn val(&self, x: &Rat) -> Option<i64> {
        if x.is_zero() {
            None
        } else {
            Some(self.val_int(x.numer()) - self.val_int(x.denom()))
        }
    }

    pub fn is_integral(&self, x: &Rat) -> bool {
        self.val(x).map_or(true, |v| v >= 0)
    }

    /// A `p`-unit: valuation exactly zero.
    pub fn is_unit(&self, x: &Rat) -> bool {
        self.val(x) == Some(0)
    }

    /// `p^e` as a rational.
    pub fn power(&self, e: i64) -> Rat {
        let pe = BigInt::from(self.p_big().to_biguint().unwrap().pow(e.unsigned_abs() as u32));
        if e >= 0 {
            BigRational::from_integer(pe)
        } else {
            BigRational::new(BigInt::one(), pe)
        }
    }
}

/// An ideal of `O`: either `p^e` or the zero ideal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PIdeal {
    Power(u64),
    Zero,
}

impl PIdeal {
    pub fn unit() -> Self {
        PIdeal::Power(0)
    }

    pub fn valuation(&self) -> Option<u64> {
        match self {
            PIdeal::Power(e) => Some(*e),
            PIdeal::Zero => None,
        }
    }

    /// Product of ideals adds valuations; the zero ideal absorbs.
    pub fn mul(&self, other: &PIdeal) -> PIdeal {
        match (self, other) {
            (PIdeal::Power(a), PIdeal::Power(b)) => PIdeal::Power(a + b),
            _ => PIdeal::Zero,
        }
    }

    /// Containment `self ⊇ other`, i.e. `p^a ⊇ p^b ⟺ a ≤ b`; the zero
    /// ideal is contained in everything.
    pub fn contains(&self, other: &PIdeal) -> bool {
        match (self, other) {
            (_, PIdeal::Zero) => true,
            (PIdeal::Zero, PIdeal::Power(_)) => false,
            (PIdeal::Power(a), PIdeal::Power(b)) => a <= b,
        }
    }

    /// `self / other` when `other` divides `self` with finite quotient.
    pub fn quotient(&self, other: &PIdeal) -> Option<PIdeal> {
        match (self, other) {
            (PIdeal::Power(a), PIdeal::Power(b)) if a >= b => Some(PIdeal::Power(a - b)),
            _ => None,
        }
    }

    /// The ideal generated by a set of scalars.
    pub fn generated_by(dvr: Dvr, gens: &[Rat]) -> PIdeal {
        let mut best: Option<i64> = None;
        for g in gens {
            if let Some(v) = dvr.val(g) {
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        match best {
            Some(v) if v >= 0 => PIdeal::Power(v as u64),
            Some(_) => panic!("ideal generated by non-integral scalars"),
            None => PIdeal::Zero,
        }
    }
}

impl fmt::Display for PIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PIdeal::Power(0) => write!(f, "(1)"),
            PIdeal::Power(e) => write!(f, "p^{}", e),
            PIdeal::Zero => write!(f, "(0)"),
        }
    }
}

/// Dense matrix over the fraction field `K = Q`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    a: Vec<Rat>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, a: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        Mat { rows: r, cols: c, a: rows.into_iter().flatten().collect() }
    }

    pub fn from_cols(cols: Vec<Vec<Rat>>) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = Mat::zero(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r);
            for i in 0..r {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Rat> {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = &self[(i, k)];
                if x.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let y = &other[(k, j)];
                    if !y.is_zero() {
                        let prod = x * y;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Rat::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        s += &self[(i, j)] * &v[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Mat {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x *= c;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Row echelon form by exact Gaussian elimination.  Returns the list of
    /// pivot columns; `self` is reduced in place to reduced row echelon form.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            // pick a sparse-ish nonzero pivot in column c at row >= r
            let mut pr = None;
            for i in r..self.rows {
                if !self[(i, c)].is_zero() {
                    pr = Some(i);
                    break;
                }
            }
            let Some(pr) = pr else { continue };
            self.swap_rows(r, pr);
            let inv = self[(r, c)].recip();
            for j in c..self.cols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in c..self.cols {
                        let v = &self[(r, j)] * &f;
                        self[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel `{x : A x = 0}` over `K`.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -m[(r, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Exact solution of `A x = b`, if one exists.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, b.len());
        let mut aug = self.hcat(&Mat::from_cols(vec![b.to_vec()]));
        let pivots = aug.rref();
        // inconsistent iff a pivot lands in the last column
        if pivots.iter().any(|&c| c == self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Solve `A X = B` with a single reduction of `[A | B]`; `None` if any
    /// column is inconsistent.
    pub fn solve_mat(&self, b: &Mat) -> Option<Mat> {
        assert_eq!(self.rows, b.rows);
        let mut aug = self.hcat(b);
        let pivots = aug.rref();
        // inconsistent iff a pivot lands in the augmented block
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Mat::zero(self.cols, b.cols);
        for (r, &c) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(c, j)] = aug[(r, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = self.hcat(&Mat::identity(n));
        let pivots = aug.rref();
        // invertible iff the left block reduces to the identity
        if pivots.len() < n || pivots.iter().enumerate().any(|(r, &c)| c != r) {
            return None;
        }
        let mut inv = Mat::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = Rat::one();
        for c in 0..m.cols {
            let mut pr = None;
            for i in c..m.rows {
                if !m[(i, c)].is_zero() {
                    pr = Some(i);
                    break;
                }
            }
            let Some(pr) = pr else { return Rat::zero() };
            if pr != c {
                m.swap_rows(c, pr);
                det = -det;
            }
            det *= m[(c, c)].clone();
            let inv = m[(c, c)].recip();
            for i in (c + 1)..m.rows {
                if !m[(i, c)].is_zero() {
                    let f = &m[(i, c)] * &inv;
                    for j in c..m.cols {
                        let v = &m[(c, j)] * &f;
                        m[(i, j)] -= v;
                    }
                }
            }
        }
        det
    }

    pub fn is_integral(&self, dvr: Dvr) -> bool {
        self.a.iter().all(|x| dvr.is_integral(x))
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.a.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a.swap(r * self.cols + i, r * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.a[i * self.cols + j]
    }
}

/// Smith normal form data over `O`: `U A V = D` with `U, V` invertible over
/// `O` and `D` diagonal with nondecreasing entry valuations.
#[derive(Debug, Clone)]
pub struct Snf {
    pub u: Mat,
    pub d: Mat,
    pub v: Mat,
    pub u_inv: Mat,
    pub v_inv: Mat,
    pub rank: usize,
}

impl Snf {
    /// Valuations of the nonzero diagonal entries, in nondecreasing order.
    pub fn divisor_valuations(&self, dvr: Dvr) -> Vec<u64> {
        (0..self.rank)
            .map(|i| dvr.val(&self.d[(i, i)]).expect("nonzero divisor") as u64)
            .collect()
    }
}

/// Smith normal form over `O = Z_(p)`.
///
/// Pivoting rule: the entry of minimal `p`-valuation in the remaining
/// submatrix, ties broken by lexicographically smallest position.  Since `O`
/// is local, a single elimination pass per pivot suffices and the diagonal
/// valuations come out nondecreasing.
///
/// Requires all entries `p`-integral.
pub fn snf(dvr: Dvr, a: &Mat) -> Result<Snf, DvrError> {
    if !a.is_integral(dvr) {
        return Err(DvrError::NotIntegral);
    }
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = Mat::identity(m);
    let mut u_inv = Mat::identity(m);
    let mut v = Mat::identity(n);
    let mut v_inv = Mat::identity(n);
    let steps = m.min(n);
    let mut rank = 0;
    for t in 0..steps {
        // minimal-valuation pivot in the trailing submatrix
        let mut best: Option<(i64, usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if let Some(val) = dvr.val(&d[(i, j)]) {
                    if best.as_ref().map_or(true, |&(bv, _, _)| val < bv) {
                        best = Some((val, i, j));
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        // move pivot to (t, t)
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        u_inv.swap_cols(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        v_inv.swap_rows(t, pj);
        let pivot = d[(t, t)].clone();
        // clear column t below the pivot
        for i in (t + 1)..m {
            if !d[(i, t)].is_zero() {
                let f = &d[(i, t)] / &pivot;
                debug_assert!(dvr.is_integral(&f));
                for j in t..n {
                    let x = &d[(t, j)] * &f;
                    d[(i, j)] -= x;
                }
                for j in 0..m {
                    let x = &u[(t, j)] * &f;
                    u[(i, j)] -= x;
                    let y = &u_inv[(j, i)] * &f;
                    u_inv[(j, t)] += y;
                }
            }
        }
        // clear row t to the right of the pivot
        for j in (t + 1)..n {
            if !d[(t, j)].is_zero() {
                let f = &d[(t, j)] / &pivot;
                debug_assert!(dvr.is_integral(&f));
                for i in t..m {
                    let x = &d[(i, t)] * &f;
                    d[(i, j)] -= x;
                }
                for i in 0..n {
                    let x = &v[(i, t)] * &f;
                    v[(i, j)] -= x;
                    let y = &v_inv[(j, i)] * &f;
                    v_inv[(t, i)] += y;
                }
            }
        }
        rank += 1;
    }
    Ok(Snf { u, d, v, u_inv, v_inv, rank })
}

/// Column echelon reduction of an integral matrix by unimodular column
/// operations over `O`: returns basis columns of the column span together
/// with their pivot rows.  Each pivot is chosen of minimal valuation among
/// the entries in unused rows, so every entry of a basis column has
/// valuation at least that of its pivot and the elimination quotients stay
/// integral.  Unlike `snf`, no transformation matrices are maintained, which
/// keeps the cost at `O(rank · rows · cols)` ring operations.
fn column_echelon(dvr: Dvr, a: &Mat) -> Vec<(usize, Vec<Rat>)> {
    let m = a.rows;
    let mut cols: Vec<Vec<Rat>> = (0..a.cols).map(|j| a.col(j)).collect();
    cols.retain(|c| c.iter().any(|x| !x.is_zero()));
    let mut used = vec![false; m];
    let mut basis: Vec<(usize, Vec<Rat>)> = Vec::new();
    while !cols.is_empty() {
        // minimal-valuation pivot among unused rows; valuation 0 is minimal
        // for an integral matrix, so stop searching as soon as one appears
        let mut best: Option<(i64, usize, usize)> = None;
        'search: for (cj, c) in cols.iter().enumerate() {
            for (i, x) in c.iter().enumerate() {
                if used[i] {
                    continue;
                }
                if let Some(v) = dvr.val(x) {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, cj));
                        if v == 0 {
                            break 'search;
                        }
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        let pivot_col = cols.swap_remove(pj);
        let pivot = pivot_col[pi].clone();
        for c in cols.iter_mut() {
            if !c[pi].is_zero() {
                let f = &c[pi] / &pivot;
                debug_assert!(dvr.is_integral(&f));
                for (i, x) in pivot_col.iter().enumerate() {
                    if !x.is_zero() {
                        let y = x * &f;
                        c[i] -= y;
                    }
                }
            }
        }
        cols.retain(|c| c.iter().any(|x| !x.is_zero()));
        used[pi] = true;
        basis.push((pi, pivot_col));
    }
    basis
}

/// A finitely generated `O`-module presented as `O^g / (columns of R)`.
#[derive(Debug, Clone)]
pub struct FiniteModulePresentation {
    pub generators: usize,
    pub relations: Mat,
}

impl FiniteModulePresentation {
    pub fn new(generators: usize, relations: Mat) -> Self {
        assert_eq!(relations.rows, generators);
        FiniteModulePresentation { generators, relations }
    }

    pub fn zero_module() -> Self {
        FiniteModulePresentation { generators: 0, relations: Mat::zero(0, 0) }
    }

    /// Valuations of the nonzero elementary divisors (sorted), plus the free
    /// rank of the module after localization.
    pub fn elementary_divisors(&self, dvr: Dvr) -> Result<(Vec<u64>, usize), DvrError> {
        if self.generators == 0 {
            return Ok((Vec::new(), 0));
        }
        let s = snf(dvr, &self.relations)?;
        let divisors = s.divisor_valuations(dvr);
        let free_rank = self.generators - s.rank;
        Ok((divisors, free_rank))
    }

    pub fn is_finite(&self, dvr: Dvr) -> Result<bool, DvrError> {
        Ok(self.elementary_divisors(dvr)?.1 == 0)
    }

    /// The Fitting ideal `p^(sum of elementary-divisor valuations)`; the zero
    /// module has Fitting ideal `(1)`.
    pub fn fitting_ideal(&self, dvr: Dvr) -> Result<PIdeal, DvrError> {
        let (divs, free_rank) = self.elementary_divisors(dvr)?;
        if free_rank > 0 {
            return Err(DvrError::NotFinite);
        }
        Ok(PIdeal::Power(divs.iter().sum()))
    }

    /// Fitting ideal allowing infinite modules, reported as the zero ideal.
    pub fn fitting_ideal_or_zero(&self, dvr: Dvr) -> Result<PIdeal, DvrError> {
        match self.fitting_ideal(dvr) {
            Ok(i) => Ok(i),
            Err(DvrError::NotFinite) => Ok(PIdeal::Zero),
            Err(e) => Err(e),
        }
    }
}

/// A finitely generated `O`-sublattice of `K^n`, stored by a basis.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub dim: usize,
    basis: Vec<Vec<Rat>>,
}

impl Lattice {
    pub fn standard(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = vec![Rat::zero(); n];
            v[i] = Rat::one();
            basis.push(v);
        }
        Lattice { dim: n, basis }
    }

    pub fn from_basis_unchecked(dim: usize, basis: Vec<Vec<Rat>>) -> Self {
        assert!(basis.iter().all(|v| v.len() == dim));
        Lattice { dim, basis }
    }

    /// The `O`-span of arbitrary vectors in `K^n`.
    pub fn from_generators(dvr: Dvr, dim: usize, gens: &[Vec<Rat>]) -> Self {
        let gens: Vec<&Vec<Rat>> = gens.iter().filter(|v| v.iter().any(|x| !x.is_zero())).collect();
        if gens.is_empty() {
            return Lattice { dim, basis: Vec::new() };
        }
        // scale into O^n so SNF applies; scaling by p-units is free, so only
        // the p-part of the denominators matters
        let mut shift = 0i64;
        for v in &gens {
            for x in v.iter() {
                if let Some(val) = dvr.val(x) {
                    shift = shift.max(-val);
                }
            }
        }
        let scale = dvr.power(shift);
        let cols: Vec<Vec<Rat>> =
            gens.iter().map(|v| v.iter().map(|x| x * &scale).collect()).collect();
        let a = Mat::from_cols(cols);
        assert!(a.is_integral(dvr), "scaled generators are integral");
        let unscale = dvr.power(-shift);
        let mut basis = Vec::new();
        for (_, col) in column_echelon(dvr, &a) {
            let v: Vec<Rat> = col.iter().map(|x| x * &unscale).collect();
            basis.push(normalize_by_unit(dvr, v));
        }
        Lattice { dim, basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    pub fn basis_mat(&self) -> Mat {
        Mat::from_cols(self.basis.clone())
    }

    /// Saturation in the ambient `O^n`: a basis of `span_K(self) ∩ O^n`.
    pub fn saturation(&self, dvr: Dvr) -> Lattice {
        if self.basis.is_empty() {
            return self.clone();
        }
        let mut shift = 0i64;
        for v in &self.basis {
            for x in v.iter() {
                if let Some(val) = dvr.val(x) {
                    shift = shift.max(-val);
                }
            }
        }
        let scale = dvr.power(shift);
        let cols: Vec<Vec<Rat>> =
            self.basis.iter().map(|v| v.iter().map(|x| x * &scale).collect()).collect();
        let a = Mat::from_cols(cols);
        assert!(a.is_integral(dvr), "scaled basis is integral");
        // dividing an echelon basis column by its pivot valuation saturates:
        // minimal-valuation pivoting makes the pivot-row minor triangular
        // with entry valuations at most those of the rest of each column
        let mut basis = Vec::new();
        for (pi, col) in column_echelon(dvr, &a) {
            let unscale = dvr.power(-dvr.val(&col[pi]).expect("pivot is nonzero"));
            let v: Vec<Rat> = col.iter().map(|x| x * &unscale).collect();
            basis.push(normalize_by_unit(dvr, v));
        }
        Lattice { dim: self.dim, basis }
    }

    /// Coordinates of `v` in the basis of this lattice over `K`.
    pub fn coords(&self, v: &[Rat]) -> Result<Vec<Rat>, DvrError> {
        if self.basis.is_empty() {
            return if v.iter().all(|x| x.is_zero()) {
                Ok(Vec::new())
            } else {
                Err(DvrError::NotInSpan)
            };
        }
        self.basis_mat().solve(v).ok_or(DvrError::NotInSpan)
    }

    pub fn contains(&self, dvr: Dvr, v: &[Rat]) -> bool {
        match self.coords(v) {
            Ok(c) => c.iter().all(|x| dvr.is_integral(x)),
            Err(_) => false,
        }
    }

    /// Presentation of `self / sub` (requires `span_K(sub) ⊆ span_K(self)`
    /// and integral coordinates, i.e. `sub ⊆ self`).
    pub fn quotient_presentation(
        &self,
        dvr: Dvr,
        sub: &Lattice,
    ) -> Result<FiniteModulePresentation, DvrError> {
        let mut rel_cols = Vec::with_capacity(sub.rank());
        for v in sub.basis() {
            let c = self.coords(v)?;
            if !c.iter().all(|x| dvr.is_integral(x)) {
                return Err(DvrError::NotIntegral);
            }
            rel_cols.push(c);
        }
        let relations = if rel_cols.is_empty() {
            Mat::zero(self.rank(), 0)
        } else {
            Mat::from_cols(rel_cols)
        };
        Ok(FiniteModulePresentation::new(self.rank(), relations))
    }

    /// `{v ∈ self : A·v = 0}`, a saturated sublattice of `self`.
    pub fn kernel_sublattice(&self, dvr: Dvr, a: &Mat) -> Lattice {
        assert_eq!(a.cols, self.dim);
        if self.basis.is_empty() {
            return self.clone();
        }
        let ab = a.mul(&self.basis_mat());
        let ker = ab.kernel_basis();
        // saturate in coordinates, then map back through the basis
        let coord_lat =
            Lattice::from_generators(dvr, self.rank(), &ker).saturation(dvr);
        let b = self.basis_mat();
        let basis = coord_lat
            .basis()
            .iter()
            .map(|c| normalize_by_unit(dvr, b.mul_vec(c)))
            .collect();
        Lattice { dim: self.dim, basis }
    }

    /// The image lattice `A·self`.
    pub fn image(&self, dvr: Dvr, a: &Mat) -> Lattice {
        assert_eq!(a.cols, self.dim);
        let gens: Vec<Vec<Rat>> = self.basis.iter().map(|v| a.mul_vec(v)).collect();
        Lattice::from_generators(dvr, a.rows, &gens)
    }

    /// Sum of lattices in the same ambient space.
    pub fn sum(&self, dvr: Dvr, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        let mut gens = self.basis.clone();
        gens.extend(other.basis.iter().cloned());
        Lattice::from_generators(dvr, self.dim, &gens)
    }

    /// Do the two lattices span the same `O`-module?
    pub fn same_lattice(&self, dvr: Dvr, other: &Lattice) -> bool {
        self.rank() == other.rank()
            && other.basis().iter().all(|v| self.contains(dvr, v))
            && self.basis().iter().all(|v| other.contains(dvr, v))
    }
}

/// Scale a vector by a `p`-unit so entries become integers with small
/// non-`p` content; the lattice it generates is unchanged.
fn normalize_by_unit(dvr: Dvr, v: Vec<Rat>) -> Vec<Rat> {
    use num_integer::Integer;
    if v.iter().all(|x| x.is_zero()) {
        return v;
    }
    let mut denom_lcm = BigInt::one();
    for x in &v {
        if !x.is_zero() {
            denom_lcm = denom_lcm.lcm(x.denom());
        }
    }
    let mut numer_gcd = BigInt::zero();
    for x in &v {
        if !x.is_zero() {
            numer_gcd = numer_gcd.gcd(&(x.numer() * &denom_lcm / x.denom()));
        }
    }
    let mut c = BigRational::new(numer_gcd, denom_lcm);
    // keep only the p-unit part of the scaling factor
    let vp = dvr.val(&c).unwrap();
    c *= dvr.power(-vp);
    v.into_iter().map(|x| x / &c).collect()
}

/// `saturate`: basis of `span_K(S) ∩ O^n` for a spanning set `S ⊂ K^n`.
pub fn saturate(dvr: Dvr, dim: usize, spanning: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    Lattice::from_generators(dvr, dim, spanning).saturation(dvr).basis().to_vec()
}

/// `solve_linear`: exact solution of `A x = b` over `K`, or `None`.
pub fn solve_linear(a: &Mat, b: &[Rat]) -> Option<Vec<Rat>> {
    a.solve(b)
}

/// `p`-power part of a positive integer (used by oracles).
pub fn upow(base: u64, exp: u32) -> BigUint {
    BigUint::from(base).pow(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d5() -> Dvr {
        Dvr::new(5)
    }

    #[test]
    fn valuations() {
        let dvr = d5();
        assert_eq!(dvr.val(&rat(50)), Some(2));
        assert_eq!(dvr.val(&ratio(3, 25)), Some(-2));
        assert_eq!(dvr.val(&rat(0)), None);
        assert!(dvr.is_unit(&ratio(7, 3)));
    }

    #[test]
    fn pideal_arithmetic() {
        assert_eq!(PIdeal::Power(2).mul(&PIdeal::Power(3)), PIdeal::Power(5));
        assert_eq!(PIdeal::Zero.mul(&PIdeal::Power(3)), PIdeal::Zero);
        assert!(PIdeal::Power(1).contains(&PIdeal::Power(4)));
        assert!(!PIdeal::Power(4).contains(&PIdeal::Power(1)));
        assert!(PIdeal::Power(7).contains(&PIdeal::Zero));
    }

    #[test]
    fn snf_identity() {
        let dvr = d5();
        let a = Mat::identity(2);
        let s = snf(dvr, &a).unwrap();
        assert_eq!(s.d, Mat::identity(2));
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn snf_diagonal_valuations() {
        let dvr = d5();
        let a = Mat::from_rows(vec![vec![rat(5), rat(0)], vec![rat(0), rat(25)]]);
        let s = snf(dvr, &a).unwrap();
        assert_eq!(s.divisor_valuations(dvr), vec![1, 2]);
    }

    #[test]
    fn snf_mixed_matrix_matches_row_reduction_oracle() {
        let dvr = d5();
        // A = [[2, 5], [5, 25]]: det = 25, pivot valuation 0 at the 2,
        // so the second divisor valuation is v(det) - 0 = 2.
        let a = Mat::from_rows(vec![vec![rat(2), rat(5)], vec![rat(5), rat(25)]]);
        let s = snf(dvr, &a).unwrap();
        // independent oracle: Gaussian elimination over exact rationals
        // tracking valuations: after pivoting on the unit 2, the Schur
        // complement is 25 - 5*5/2 = 25/2 of valuation 2.
        assert_eq!(s.divisor_valuations(dvr), vec![0, 2]);
        // U A V = D and unit determinants
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
        assert!(dvr.is_unit(&s.u.det()));
        assert!(dvr.is_unit(&s.v.det()));
        assert_eq!(s.u.mul(&s.u_inv), Mat::identity(2));
        assert_eq!(s.v_inv.mul(&s.v), Mat::identity(2));
    }

    #[test]
    fn fitting_direct_sum_of_cyclics() {
        let dvr = d5();
        // O/p ⊕ O/p²
        let rels = Mat::from_rows(vec![vec![rat(5), rat(0)], vec![rat(0), rat(25)]]);
        let m = FiniteModulePresentation::new(2, rels);
        assert_eq!(m.fitting_ideal(dvr).unwrap(), PIdeal::Power(3));
    }

    #[test]
    fn fitting_zero_module() {
        let dvr = d5();
        assert_eq!(
            FiniteModulePresentation::zero_module().fitting_ideal(dvr).unwrap(),
            PIdeal::unit()
        );
    }

    #[test]
    fn fitting_cokernel_matches_enumeration_oracle() {
        let dvr = Dvr::new(3);
        // cokernel of [[p, 1], [0, p]] at p = 3
        let rels = Mat::from_rows(vec![vec![rat(3), rat(1)], vec![rat(0), rat(3)]]);
        let m = FiniteModulePresentation::new(2, rels);
        // oracle: enumerate Z^2 / columns mod 3^3 and count the order
        let p = 3i64;
        let md = p.pow(3);
        let mut seen = std::collections::HashSet::new();
        for a in 0..md {
            for b in 0..md {
                // reduce (a, b) modulo the column span: columns (3,0), (1,3)
                // brute force: canonical form = minimum over all integer
                // combinations within a bounded window
                let mut best = (a, b);
                for s in -md..=md {
                    for t in -md..=md {
                        let x = (a + 3 * s + t).rem_euclid(md);
                        let y = (b + 3 * t).rem_euclid(md);
                        if (x, y) < best {
                            best = (x, y);
                        }
                    }
                }
                seen.insert(best);
            }
        }
        let order = seen.len() as u64;
        // |M| = 3^e with e the fitting valuation (module is 3-primary here)
        let fit = m.fitting_ideal(dvr).unwrap();
        assert_eq!(order, 3u64.pow(fit.valuation().unwrap() as u32));
    }

    #[test]
    fn fitting_not_finite() {
        let dvr = d5();
        let rels = Mat::from_rows(vec![vec![rat(5)], vec![rat(0)]]);
        let m = FiniteModulePresentation::new(2, rels);
        assert_eq!(m.fitting_ideal(dvr), Err(DvrError::NotFinite));
        assert_eq!(m.fitting_ideal_or_zero(dvr).unwrap(), PIdeal::Zero);
    }

    #[test]
    fn saturate_content_extraction() {
        let dvr = d5();
        let b = saturate(dvr, 2, &[vec![rat(5), rat(0)]]);
        assert_eq!(b.len(), 1);
        // basis vector generates the same lattice as (1, 0)
        let l = Lattice::from_basis_unchecked(2, b);
        assert!(l.contains(dvr, &[rat(1), rat(0)]));
        assert!(!l.contains(dvr, &[rat(0), rat(1)]));
    }

    #[test]
    fn saturate_unit_determinant_spans_everything() {
        let dvr = d5();
        let b = saturate(dvr, 2, &[vec![rat(1), rat(1)], vec![rat(1), rat(-1)]]);
        let l = Lattice::from_basis_unchecked(2, b);
        assert!(l.contains(dvr, &[rat(1), rat(0)]));
        assert!(l.contains(dvr, &[rat(0), rat(1)]));
    }

    #[test]
    fn saturate_mixed_powers() {
        let dvr = d5();
        let b = saturate(dvr, 2, &[vec![rat(5), rat(25)]]);
        let l = Lattice::from_basis_unchecked(2, b);
        assert!(l.contains(dvr, &[rat(1), rat(5)]));
        assert!(!l.contains(dvr, &[rat(1), rat(0)]));
    }

    #[test]
    fn saturate_idempotent() {
        let dvr = d5();
        let gens = vec![vec![rat(10), rat(5), rat(0)], vec![rat(0), rat(25), rat(5)]];
        let s1 = Lattice::from_generators(dvr, 3, &gens).saturation(dvr);
        let s2 = s1.saturation(dvr);
        assert!(s1.same_lattice(dvr, &s2));
    }

    #[test]
    fn solve_identity_and_denominator() {
        let a = Mat::identity(3);
        let b = vec![rat(2), rat(-7), ratio(1, 3)];
        assert_eq!(a.solve(&b).unwrap(), b);
        let dvr = d5();
        let a = Mat::from_rows(vec![vec![rat(5)]]);
        let x = a.solve(&[rat(1)]).unwrap();
        assert_eq!(x, vec![ratio(1, 5)]);
        assert!(!dvr.is_integral(&x[0]));
    }

    #[test]
    fn solve_residual_check_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let n = 5;
            let mut a = Mat::zero(n, n);
            loop {
                for i in 0..n {
                    for j in 0..n {
                        a[(i, j)] = rat(rng.gen_range(-9..=9));
                    }
                }
                if !a.det().is_zero() {
                    break;
                }
            }
            let b: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(-9..=9))).collect();
            let x = a.solve(&b).unwrap();
            assert_eq!(a.mul_vec(&x), b);
        }
    }

    #[test]
    fn quotient_presentation_index() {
        let dvr = d5();
        let l = Lattice::standard(2);
        let sub = Lattice::from_generators(
            dvr,
            2,
            &[vec![rat(5), rat(0)], vec![rat(0), rat(25)]],
        );
        let pres = l.quotient_presentation(dvr, &sub).unwrap();
        assert_eq!(pres.fitting_ideal(dvr).unwrap(), PIdeal::Power(3));
    }
}
