//! Manin periods `Ω^±` of a rational newform.
//!
//! The period functional `Φ_f(γ) = ∫_γ f(z)·P(z,1) dz` is Hecke-equivariant
//! and therefore proportional, on each star-eigenspace, to the rational dual
//! eigenvector `w^±` of the transposed Hecke action.  The proportionality
//! constants evaluated on a basis of the rank-1 *image* lattice `e_λ·H^±`
//! are the Manin periods:
//!
//! ```text
//!   Ω^ε = Φ_f(s) · w^ε(b^ε) / w^ε(s)      for any symbol s with w^ε(s) ≠ 0.
//! ```
//!
//! For weight `k ≥ 4` the symbols `y_j = [X^j Y^(k-2-j), (0:1)] = {0,∞}⊗X^jY^…`
//! are used, whose periods are critical `L`-values:
//! `Φ_f(y_j) = i^(j+1)·j!·(2π)^(-j-1)·L(f, j+1)`.  For weight 2 (where only
//! `j = 0` exists and its value may vanish), loop symbols `{0, γ·0}` for
//! `γ ∈ Γ₀(N)` are used instead; these equal the homology classes
//! `{z₀, γ·z₀}`, whose periods are differences of the exponentially
//! convergent antiderivative `F(z) = (2πi)^(-1) Σ (a_n/n) e^(2πinz)` at the
//! balanced base point `z₀ = (-d+i)/c`.
//!
//! Complex conjugation forces `Φ_f` to be purely imaginary on the `+`-part
//! and real on the `-`-part; the returned `Ω^±` are the corresponding real
//! numbers, which represent the periods up to `p`-units (`2` and `i` are
//! units for odd `p`).  Each period is computed from at least two
//! independent symbols when available and cross-checked.

use super::block::ModularBlock;
use super::hecke::{hecke_matrix, hecke_on_vector};
use super::oracle::sturm_bound;
use super::space::ModularSymbolSpace;
use super::{EigenformData, ModsymError, Result};
use crate::dvr::{Mat, Rat};
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Multiplicative extension of prime eigenvalues to `a_1..a_n`.
pub fn q_expansion_from_aps(
    aps: &BTreeMap<u64, i64>,
    level: u64,
    weight: usize,
    nterms: usize,
) -> Result<Vec<i64>> {
    let mut a = vec![0i64; nterms + 1];
    if nterms >= 1 {
        a[1] = 1;
    }
    let mut spf = vec![0usize; nterms + 1]; // smallest prime factor
    for i in 2..=nterms {
        if spf[i] == 0 {
            let mut j = i;
            while j <= nterms {
                if spf[j] == 0 {
                    spf[j] = i;
                }
                j += i;
            }
        }
    }
    let need = |l: u64| -> Result<i64> {
        aps.get(&l).copied().ok_or_else(|| {
            ModsymError::Unsupported(format!("missing Hecke eigenvalue a_{l}"))
        })
    };
    for n in 2..=nterms {
        let p = spf[n];
        let mut pe = p;
        let mut m = n / p;
        while m % p == 0 {
            pe *= p;
            m /= p;
        }
        if m > 1 {
            a[n] = a[pe]
                .checked_mul(a[m])
                .ok_or_else(|| ModsymError::Unsupported("coefficient overflow".into()))?;
            continue;
        }
        // n = p^e
        let ap = need(p as u64)?;
        if n == p {
            a[n] = ap;
        } else if level % (p as u64) == 0 {
            a[n] = a[n / p]
                .checked_mul(ap)
                .ok_or_else(|| ModsymError::Unsupported("coefficient overflow".into()))?;
        } else {
            let pk = (p as i64).pow((weight - 1) as u32);
            let t1 = ap
                .checked_mul(a[n / p])
                .ok_or_else(|| ModsymError::Unsupported("coefficient overflow".into()))?;
            let t2 = pk
                .checked_mul(a[n / p / p])
                .ok_or_else(|| ModsymError::Unsupported("coefficient overflow".into()))?;
            a[n] = t1 - t2;
        }
    }
    Ok(a)
}

/// Extend the eigenvalue table of `f` up to prime `bound` by applying `T_ℓ`
/// to an ambient eigenvector.
pub fn extend_aps(
    space: &ModularSymbolSpace,
    ambient_eigenvector: &[Rat],
    f: &mut EigenformData,
    bound: u64,
) -> Result<()> {
    let pivot = ambient_eigenvector
        .iter()
        .position(|x| !x.is_zero())
        .ok_or_else(|| ModsymError::Unsupported("zero eigenvector".into()))?;
    for ell in 2..=bound {
        if !is_prime(ell) || f.aps.contains_key(&ell) {
            continue;
        }
        let img = hecke_on_vector(space, ambient_eigenvector, ell);
        let a = &img[pivot] / &ambient_eigenvector[pivot];
        if !a.is_integer() {
            return Err(ModsymError::Precision(format!(
                "a_{ell} is not an integer for a rational eigenform"
            )));
        }
        let ai = a.numer().to_i64().ok_or_else(|| {
            ModsymError::Unsupported(format!("a_{ell} overflows a machine integer"))
        })?;
        f.aps.insert(ell, ai);
    }
    Ok(())
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

/// The eigenvector of the block in ambient lattice coordinates.
pub fn ambient_eigenvector(space: &ModularSymbolSpace, block: &ModularBlock) -> Vec<Rat> {
    let v_cusp = block.lattice.basis_mat().mul_vec(&block.eigenvector);
    space.cuspidal.basis_mat().mul_vec(&v_cusp)
}

// ---------------------------------------------------------------------------
// numerics of L(f, s) through the completed Λ_N(s)
// ---------------------------------------------------------------------------

/// Real-analytic data of a rational newform: `a_n` as floats plus the level
/// and weight, with the standard completed-`L` machinery.
pub struct LSeries {
    pub level: u64,
    pub weight: usize,
    pub an: Vec<f64>,
}

impl LSeries {
    pub fn new(level: u64, weight: usize, an_int: &[i64]) -> Self {
        LSeries { level, weight, an: an_int.iter().map(|&a| a as f64).collect() }
    }

    /// Number of `q`-expansion terms adequate for the `Λ_N` series at
    /// level `N` in double precision.
    pub fn terms_needed(level: u64) -> usize {
        (8.0 * (level as f64).sqrt()).ceil() as usize + 50
    }

    /// `f(it) = Σ a_n e^(-2πnt)`.
    pub fn value_at_it(&self, t: f64) -> f64 {
        let mut s = 0.0;
        let q = (-2.0 * PI * t).exp();
        let mut qn = 1.0;
        for n in 1..self.an.len() {
            qn *= q;
            s += self.an[n] * qn;
        }
        s
    }

    /// Fricke (Atkin–Lehner `W_N`) eigenvalue, detected numerically from
    /// `f(-1/(Nz)) = w·N^(k/2)·z^k·f(z)`.
    pub fn fricke_sign(&self) -> Result<i64> {
        let n = self.level as f64;
        let k = self.weight as i32;
        for t in [1.3 / n.sqrt(), 1.7 / n.sqrt(), 2.3 / n.sqrt()] {
            let lhs = self.value_at_it(1.0 / (n * t));
            let rhs = if k % 4 == 0 { 1.0 } else { -1.0 }
                * n.powi(k / 2)
                * t.powi(k)
                * self.value_at_it(t);
            if rhs.abs() < 1e-9 {
                continue;
            }
            let w = lhs / rhs;
            if (w - 1.0).abs() < 1e-6 {
                return Ok(1);
            }
            if (w + 1.0).abs() < 1e-6 {
                return Ok(-1);
            }
            return Err(ModsymError::Precision(format!(
                "Fricke eigenvalue detection gave {w}, not ±1"
            )));
        }
        Err(ModsymError::Precision("Fricke detection found no usable sample point".into()))
    }

    /// Upper incomplete gamma `Γ(s, x)` for integer `s ≥ 1`.
    fn inc_gamma(s: usize, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0; // x^j / j!
        for j in 0..s {
            if j > 0 {
                term *= x / j as f64;
            }
            sum += term;
        }
        let mut fact = 1.0;
        for j in 2..s {
            fact *= j as f64;
        }
        fact * (-x).exp() * sum
    }

    /// `G(s) = Σ a_n Γ(s, 2πn/√N)/(2πn)^s = N^(-s/2) Σ a_n Γ(s,x_n)/x_n^s`.
    fn g_series(&self, s: usize) -> f64 {
        let rt = (self.level as f64).sqrt();
        let mut total = 0.0;
        for n in 1..self.an.len() {
            if self.an[n] == 0.0 {
                continue;
            }
            let x = 2.0 * PI * n as f64 / rt;
            total += self.an[n] * Self::inc_gamma(s, x) / x.powi(s as i32);
        }
        total * rt.powi(-(s as i32))
    }

    /// `Λ_N(s) = ∫_0^∞ f(it) t^(s-1) dt` for integer `1 ≤ s ≤ k-1`, using the
    /// Fricke functional equation to split the integral at `1/√N`.
    pub fn completed_lambda(&self, s: usize, fricke: i64) -> f64 {
        let k = self.weight;
        let sign = fricke as f64 * if k % 4 == 0 { 1.0 } else { -1.0 }; // w·i^k
        let n = self.level as f64;
        self.g_series(s) + sign * n.powf(k as f64 / 2.0 - s as f64) * self.g_series(k - s)
    }

    /// `L(f, s) = (2π)^s / Γ(s) · Λ_N(s)` at an integer critical point.
    pub fn lvalue(&self, s: usize, fricke: i64) -> f64 {
        let mut gamma = 1.0;
        for j in 2..s {
            gamma *= j as f64;
        }
        (2.0 * PI).powi(s as i32) / gamma * self.completed_lambda(s, fricke)
    }
}

// ---------------------------------------------------------------------------
// weight-2 loop symbols
// ---------------------------------------------------------------------------

/// Manin-symbol expression of the path `{0, b/d}` (weight 2), through the
/// continued-fraction convergents of `b/d`.
fn path_symbol_w2(space: &ModularSymbolSpace, b: i64, d: i64) -> Vec<Rat> {
    assert_eq!(space.weight, 2);
    let mut out = vec![Rat::zero(); space.dim];
    if b == 0 || d == 0 {
        if d == 0 {
            // {0, ∞} = -[X⁰, (0:1)]… actually {0,∞} is the symbol of (0:1)
            let g = space.manin_generator(0, 1, 0).expect("(0:1) exists");
            for (slot, x) in out.iter_mut().zip(g.iter()) {
                *slot += x;
            }
        }
        return out;
    }
    // convergents of b/d
    let (mut a0, mut a1) = (b, d);
    let mut quots = Vec::new();
    while a1 != 0 {
        let q = a0.div_euclid(a1);
        quots.push(q);
        let r = a0 - q * a1;
        a0 = a1;
        a1 = r;
    }
    // p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0
    let (mut pm2, mut qm2, mut pm1, mut qm1) = (0i64, 1i64, 1i64, 0i64);
    // (−1)^(k−1) for the k-th convergent, from p_k q_{k-1} − p_{k-1} q_k = (−1)^(k−1)
    let mut sign = -1i64;
    // k = −1 term: {0, ∞} = symbol of (q_{-1} : q_{-2}) = (0:1)
    {
        let g = space.manin_generator(0, 1, 0).expect("(0:1) exists");
        for (slot, x) in out.iter_mut().zip(g.iter()) {
            *slot += x;
        }
    }
    for &q in &quots {
        let pk = q * pm1 + pm2;
        let qk = q * qm1 + qm2;
        // {p_{k-1}/q_{k-1}, p_k/q_k} = symbol of (q_k : (−1)^(k−1) q_{k−1})
        let g = space
            .manin_generator(qk, sign * qm1, 0)
            .expect("convergent denominators are coprime");
        for (slot, x) in out.iter_mut().zip(g.iter()) {
            *slot += x;
        }
        pm2 = pm1;
        qm2 = qm1;
        pm1 = pk;
        qm1 = qk;
        sign = -sign;
    }
    debug_assert_eq!((pm1, qm1), (b / gcd64(b, d), d / gcd64(b, d)));
    out
}

fn gcd64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

/// `∫_{z₀}^{γ·z₀} f dz` for `γ = [a,b;c,d] ∈ Γ₀(N)` with `c > 0`, using the
/// balanced base point `z₀ = (−d + i)/c`.
fn loop_integral(ls: &LSeries, g: [i64; 4]) -> num_complex::Complex64 {
    use num_complex::Complex64 as C;
    let [a, _b, c, d] = g.map(|x| x as f64);
    let z0 = C::new(-d / c, 1.0 / c);
    let z1 = C::new(a / c, 1.0 / c);
    let f_anti = |z: C| -> C {
        let mut s = C::new(0.0, 0.0);
        let q = (C::new(0.0, 2.0 * PI) * z).exp();
        let mut qn = C::new(1.0, 0.0);
        for n in 1..ls.an.len() {
            qn *= q;
            s += qn * (ls.an[n] / n as f64);
        }
        s / C::new(0.0, 2.0 * PI)
    };
    f_anti(z1) - f_anti(z0)
}

// ---------------------------------------------------------------------------
// the periods
// ---------------------------------------------------------------------------

/// Manin periods of a rational newform, as real numbers defined up to sign
/// and `p`-unit factors.
#[derive(Debug, Clone)]
pub struct PeriodData {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub fricke: Option<i64>,
    /// Largest relative deviation among independent recomputations.
    pub consistency: f64,
    /// Method used: `"critical-lvalues"` or `"loop-symbols"`.
    pub method: &'static str,
}

/// Relative tolerance for internal cross-checks of the period numerics.
pub const PERIOD_TOL: f64 = 1e-9;

/// The rational dual eigenvector `w^ε` on the ambient space.
fn dual_eigenvector(
    space: &ModularSymbolSpace,
    f: &EigenformData,
    sign: i64,
) -> Result<Vec<Rat>> {
    let sturm = sturm_bound(space.level, space.weight).max(2);
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for ell in 2..=sturm {
        if !is_prime(ell) || space.level % ell == 0 {
            continue;
        }
        let Some(&a) = f.aps.get(&ell) else { continue };
        let mut tt = hecke_matrix(space, ell).transpose();
        for i in 0..space.dim {
            tt[(i, i)] -= crate::dvr::rat(a);
        }
        for i in 0..space.dim {
            rows.push(tt.row(i));
        }
    }
    let mut st = space.star.transpose();
    for i in 0..space.dim {
        st[(i, i)] -= crate::dvr::rat(sign);
    }
    for i in 0..space.dim {
        rows.push(st.row(i));
    }
    let ker = Mat::from_rows(rows).kernel_basis();
    if ker.len() != 1 {
        return Err(ModsymError::Unsupported(format!(
            "dual eigenspace of sign {sign} has dimension {} ≠ 1",
            ker.len()
        )));
    }
    Ok(ker.into_iter().next().unwrap())
}

#[cfg(test)]
pub(super) fn dual_eigenvector_for_tests(
    space: &ModularSymbolSpace,
    f: &EigenformData,
    sign: i64,
) -> Vec<Rat> {
    dual_eigenvector(space, f, sign).unwrap()
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |s, (x, y)| s + x * y)
}

/// Compute the Manin periods of the block's eigenform.
pub fn manin_periods(
    space: &ModularSymbolSpace,
    block: &ModularBlock,
    f: &EigenformData,
) -> Result<PeriodData> {
    let k = space.weight;
    let n = space.level;
    let mut f = f.clone();
    let nterms = LSeries::terms_needed(n);
    let evec = ambient_eigenvector(space, block);
    extend_aps(space, &evec, &mut f, nterms as u64)?;
    let an = q_expansion_from_aps(&f.aps, n, k, nterms)?;
    let ls = LSeries::new(n, k, &an);

    let w_plus = dual_eigenvector(space, &f, 1)?;
    let w_minus = dual_eigenvector(space, &f, -1)?;
    let b_plus = block.isotypic_image_generator(space, 1)?;
    let b_minus = block.isotypic_image_generator(space, -1)?;

    let mut consistency: f64 = 0.0;
    let record = |vals: &[f64], consistency: &mut f64| -> Result<f64> {
        let Some(&first) = vals.first() else {
            return Err(ModsymError::Precision(
                "no symbol with nonzero pairing against the dual eigenvector".into(),
            ));
        };
        for &v in vals {
            let dev = (v - first).abs() / first.abs().max(1e-300);
            *consistency = consistency.max(dev);
            if dev > PERIOD_TOL {
                return Err(ModsymError::Precision(format!(
                    "period recomputations disagree: {v} vs {first}"
                )));
            }
        }
        Ok(first)
    };

    if k >= 4 {
        let fricke = ls.fricke_sign()?;
        let m = k - 2;
        let period_from_lvalues = |sign: i64,
                                   w: &[Rat],
                                   b: &[Rat]|
         -> Result<Vec<f64>> {
            let wb = dot(w, b);
            let mut vals = Vec::new();
            for j in 0..=m {
                if (j % 2 == 0) != (sign > 0) {
                    continue;
                }
                let yj = space
                    .manin_generator(0, 1, j)
                    .ok_or_else(|| ModsymError::Unsupported("missing (0:1)".into()))?;
                let wy = dot(w, yj);
                if wy.is_zero() {
                    continue;
                }
                let lv = ls.lvalue(j + 1, fricke);
                let mut fact = 1.0;
                for t in 2..=j {
                    fact *= t as f64;
                }
                // Φ_f(y_j) = i^(j+1)·j!·(2π)^(-j-1)·L(f,j+1); keep the real
                // representative but track the sign of i^(j+1) across j
                let unit_sign = if j % 2 == 0 {
                    if (j / 2) % 2 == 0 { 1.0 } else { -1.0 }
                } else if ((j + 1) / 2) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let phi = unit_sign * fact / (2.0 * PI).powi(j as i32 + 1) * lv;
                let ratio = rat_to_f64(&wb) / rat_to_f64(&wy);
                let val = phi * ratio;
                if val.abs() > 1e-12 {
                    vals.push(val);
                }
            }
            Ok(vals)
        };
        let plus_vals = period_from_lvalues(1, &w_plus, &b_plus)?;
        let minus_vals = period_from_lvalues(-1, &w_minus, &b_minus)?;
        let omega_plus = record(&plus_vals, &mut consistency)?;
        let omega_minus = record(&minus_vals, &mut consistency)?;
        return Ok(PeriodData {
            omega_plus,
            omega_minus,
            fricke: Some(fricke),
            consistency,
            method: "critical-lvalues",
        });
    }

    // weight 2: loop symbols {0, γ·0} for γ ∈ Γ₀(N).  The integrals run at
    // height 1/c with c ≤ 2N, where the q-expansion decays like e^(-2πm/c),
    // so extend the coefficient table accordingly.
    let fricke = ls.fricke_sign().ok();
    let nloop = (5.8 * (2 * n) as f64).ceil() as usize + 60;
    extend_aps(space, &evec, &mut f, nloop as u64)?;
    let an = q_expansion_from_aps(&f.aps, n, k, nloop)?;
    let ls = LSeries::new(n, k, &an);
    let mut plus_vals = Vec::new();
    let mut minus_vals = Vec::new();
    let wb_plus = dot(&w_plus, &b_plus);
    let wb_minus = dot(&w_minus, &b_minus);
    'outer: for c_mult in 1..=2i64 {
        let c = n as i64 * c_mult;
        for a in 2..(2 * c) {
            if gcd64(a, c) != 1 {
                continue;
            }
            // γ = [a, b; c, d] with a·d − b·c = 1
            let d = mod_inverse(a, c);
            let b = (a * d - 1) / c;
            if b == 0 {
                continue;
            }
            let g = [a, b, c, d];
            let s = path_symbol_w2(space, b, d);
            if s.iter().all(|x| x.is_zero()) {
                continue;
            }
            // conjugate loop for the star projection: η γ η = [a,−b;−c,d]
            let s_star = space.star.mul_vec(&s);
            let i_g = loop_integral(&ls, g);
            let gs = [g[0], -g[1], -g[2], g[3]];
            let gs = normalize_c_positive(gs);
            let i_gs = loop_integral(&ls, gs);
            let phi_plus = 0.5 * (i_g + i_gs); // purely imaginary
            let phi_minus = 0.5 * (i_g - i_gs); // real
            let scale = i_g.norm().max(1e-12);
            if phi_plus.re.abs() > 1e-6 * scale {
                return Err(ModsymError::Precision(format!(
                    "plus-part loop integral is not purely imaginary: {phi_plus}"
                )));
            }
            if phi_minus.im.abs() > 1e-6 * scale {
                return Err(ModsymError::Precision(format!(
                    "minus-part loop integral is not real: {phi_minus}"
                )));
            }
            let sp = &s;
            let s_plus: Vec<Rat> =
                sp.iter().zip(&s_star).map(|(x, y)| (x + y) / crate::dvr::rat(2)).collect();
            let s_minus: Vec<Rat> =
                sp.iter().zip(&s_star).map(|(x, y)| (x - y) / crate::dvr::rat(2)).collect();
            let wy_p = dot(&w_plus, &s_plus);
            let wy_m = dot(&w_minus, &s_minus);
            if !wy_p.is_zero() && phi_plus.im.abs() > 1e-13 {
                plus_vals.push(phi_plus.im * rat_to_f64(&wb_plus) / rat_to_f64(&wy_p));
            }
            if !wy_m.is_zero() && phi_minus.re.abs() > 1e-13 {
                minus_vals.push(phi_minus.re * rat_to_f64(&wb_minus) / rat_to_f64(&wy_m));
            }
            if plus_vals.len() >= 2 && minus_vals.len() >= 2 {
                break 'outer;
            }
        }
    }
    let omega_plus = record(&plus_vals, &mut consistency)?;
    let omega_minus = record(&minus_vals, &mut consistency)?;
    Ok(PeriodData {
        omega_plus,
        omega_minus,
        fricke,
        consistency,
        method: "loop-symbols",
    })
}

fn normalize_c_positive(g: [i64; 4]) -> [i64; 4] {
    if g[2] < 0 {
        [-g[0], -g[1], -g[2], -g[3]]
    } else {
        g
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    // extended Euclid; gcd(a, m) = 1, result in (0, m)
    let (mut t, mut newt) = (0i64, 1i64);
    let (mut r, mut newr) = (m, a.rem_euclid(m));
    while newr != 0 {
        let q = r / newr;
        (t, newt) = (newt, t - q * newt);
        (r, newr) = (newr, r - q * newr);
    }
    assert_eq!(r, 1);
    t.rem_euclid(m)
}

pub(super) fn rat_to_f64(x: &Rat) -> f64 {
    let num = x.numer();
    let den = x.denom();
    match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if b != 0.0 && a.is_finite() && b.is_finite() => a / b,
        _ => {
            // fall back through a scaled quotient for very large entries
            let bits = num.bits().max(den.bits()) as i64 - 900;
            let shift = bits.max(0) as u64;
            let a = (num >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (den >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}
