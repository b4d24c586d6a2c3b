//! Classical closed-form invariants of `X₀(N)` used as independent checks:
//! index, elliptic-point and cusp counts, genus, `dim S_k(Γ₀(N))`, the Sturm
//! bound, and two eta-product `q`-expansions (the level-11 weight-2 form
//! `η(z)²η(11z)²` and `Δ = η(z)^24`).

/// Index `[SL₂(Z) : Γ₀(N)] = N·∏_{p|N}(1 + 1/p)`.
pub fn index_gamma0(n: u64) -> u64 {
    let mut mu = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            mu = mu / p * (p + 1);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        mu = mu / m * (m + 1);
    }
    mu
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Kronecker symbol `(-4/p)` resp. `(-3/p)` for a prime `p`.
fn kron_m4(p: u64) -> i64 {
    match p % 4 {
        1 => 1,
        3 => -1,
        _ => 0, // p = 2
    }
}

fn kron_m3(p: u64) -> i64 {
    if p == 3 {
        return 0;
    }
    match p % 3 {
        1 => 1,
        _ => -1, // includes p = 2 since −3 ≡ 5 (mod 8)
    }
}

/// Number of elliptic points of order 2 on `X₀(N)`.
pub fn nu2(n: u64) -> i64 {
    if n % 4 == 0 {
        return 0;
    }
    prime_divisors(n).iter().map(|&p| 1 + kron_m4(p)).product()
}

/// Number of elliptic points of order 3 on `X₀(N)`.
pub fn nu3(n: u64) -> i64 {
    if n % 9 == 0 {
        return 0;
    }
    prime_divisors(n).iter().map(|&p| 1 + kron_m3(p)).product()
}

fn euler_phi(mut n: u64) -> u64 {
    let mut phi = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            phi = phi / p * (p - 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        phi = phi / n * (n - 1);
    }
    phi
}

/// Number of cusps of `X₀(N)`: `Σ_{d|N} φ(gcd(d, N/d))`.
pub fn ncusps_gamma0(n: u64) -> u64 {
    let mut total = 0;
    for d in 1..=n {
        if n % d == 0 {
            total += euler_phi(gcd(d, n / d));
        }
    }
    total
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Genus of `X₀(N)`: `1 + μ/12 − ν₂/4 − ν₃/3 − ν_∞/2`.
pub fn genus_x0(n: u64) -> i64 {
    genus_exact(n)
}

/// `dim S_k(Γ₀(N))` for even `k ≥ 2`.
pub fn dim_cusp_forms(n: u64, k: usize) -> i64 {
    assert!(k >= 2 && k % 2 == 0);
    let g = genus_exact(n);
    if k == 2 {
        return g;
    }
    let k = k as i64;
    let c = ncusps_gamma0(n) as i64;
    (k - 1) * (g - 1) + (k / 2 - 1) * c + nu2(n) * (k / 4) + nu3(n) * (k / 3)
}

fn genus_exact(n: u64) -> i64 {
    let mu = index_gamma0(n) as i64;
    let num = mu - 3 * nu2(n) - 4 * nu3(n) - 6 * (ncusps_gamma0(n) as i64);
    debug_assert_eq!(num % 12, 0);
    1 + num / 12
}

/// Sturm bound for `M_k(Γ₀(N))`: `⌈k·[SL₂(Z):Γ₀(N)]/12⌉`.
pub fn sturm_bound(n: u64, k: usize) -> u64 {
    let mu = index_gamma0(n);
    (k as u64 * mu).div_ceil(12)
}

/// Coefficients `a_1..a_nterms` of `∏_{m≥1}(1 − q^m)` truncated at `q^nterms`
/// (index 0 is the constant term).
fn eta_quotient_base(nterms: usize) -> Vec<i64> {
    let mut f = vec![0i64; nterms + 1];
    f[0] = 1;
    for m in 1..=nterms {
        // multiply by (1 − q^m)
        for j in (m..=nterms).rev() {
            f[j] -= f[j - m];
        }
    }
    f
}

fn series_mul(a: &[i64], b: &[i64], nterms: usize) -> Vec<i64> {
    let mut out = vec![0i64; nterms + 1];
    for (i, &x) in a.iter().enumerate().take(nterms + 1) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(nterms + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_pow(base: &[i64], e: usize, nterms: usize) -> Vec<i64> {
    let mut out = vec![0i64; nterms + 1];
    out[0] = 1;
    for _ in 0..e {
        out = series_mul(&out, base, nterms);
    }
    out
}

fn dilate(a: &[i64], d: usize, nterms: usize) -> Vec<i64> {
    let mut out = vec![0i64; nterms + 1];
    for (i, &x) in a.iter().enumerate() {
        if i * d <= nterms {
            out[i * d] = x;
        }
    }
    out
}

/// `q`-expansion of `Δ = q·∏(1−q^m)^24` up to `q^nterms`
/// (entry `n` is `τ(n)`, entry 0 is 0).
pub fn delta_qexp(nterms: usize) -> Vec<i64> {
    let base = eta_quotient_base(nterms);
    let pow = series_pow(&base, 24, nterms);
    let mut out = vec![0i64; nterms + 1];
    for n in 1..=nterms {
        out[n] = pow[n - 1];
    }
    out
}

/// `q`-expansion of the level-11 weight-2 newform `η(z)²η(11z)²` up to
/// `q^nterms` (entry `n` is `a_n`).
pub fn eta_product_11_2(nterms: usize) -> Vec<i64> {
    let base = eta_quotient_base(nterms);
    let sq = series_mul(&base, &base, nterms);
    let sq11 = dilate(&sq, 11, nterms);
    let prod = series_mul(&sq, &sq11, nterms);
    let mut out = vec![0i64; nterms + 1];
    for n in 1..=nterms {
        out[n] = prod[n - 1];
    }
    out
}
