//! Modular symbols for `Γ₀(N)` and the Hecke lattices they carry.
//!
//! For an even weight `k ≥ 2` the space of weight-`k` modular symbols of
//! level `N` is generated by Manin symbols `[P, (c:d)]`, where `P` runs over
//! the monomials `X^i Y^{k-2-i}` and `(c:d)` over `P¹(Z/N)`, subject to the
//! two- and three-term relations
//!
//! ```text
//!   x + x·σ = 0,      x + x·τ + x·τ² = 0,
//!   σ = [0,-1;1,0],   τ = [0,-1;1,-1],
//! ```
//!
//! with `[P, u]·g = [P|g, u·g]` and `(P|g)(X,Y) = P(aX+bY, cX+dY)`.  The
//! integral structure is the image of the `O`-span of the Manin generators in
//! the torsion-free quotient; coordinates are chosen so that this lattice is
//! the standard `O^d`.
//!
//! The boundary map sends `[P,(c:d)]`, lifted to `g = [a,b;c,d] ∈ SL₂(Z)`, to
//! `P(1,0)·{a/c} − P(0,1)·{b/d}` in the free module on `Γ₀(N)`-classes of
//! cusps.  The *cuspidal* lattice is the saturated kernel of this map; its
//! rank is `2·dim S_k(Γ₀(N))`, which the construction checks against the
//! classical dimension formula.  The star involution (induced by
//! `[-1,0;0,1]`) splits the cuspidal part into `±`-eigenlattices of equal
//! rank, and Hecke operators `T_ℓ` act through Heilbronn matrices.
//!
//! On top of the raw space this module builds, for a rational eigenform `f`
//! and an odd prime `p` of good reduction:
//!
//! * the localized Hecke algebra `T` at the maximal ideal carried by `f`,
//!   packaged as a [`finalg::FiniteFlatAlgebra`](crate::finalg) with the
//!   augmentation `λ_f`,
//! * the `T`-modules `H^±` (the `±`-parts of the localized cuspidal
//!   lattice),
//! * the congruence number `η_f = λ_f(Ann_T ker λ_f)` and its cohomological
//!   counterpart `Fitt C0^λ(H^±)`, cross-checked through a perfect
//!   `T`-bilinear pairing when one is found,
//! * Manin periods `Ω^±`, normalized against a basis of the *image* lattice
//!   `e_λ·H^±`, evaluated through critical values `L(f, j+1)`.

mod block;
mod cache;
mod hecke;
mod oracle;
mod periods;
mod space;

pub use block::{
    cohomological_congruence_number, congruence_number, localize_at_eigenform,
    rational_eigensystems, rational_newforms, sturm_congruence_valuation, CohCongruence,
    EigenformData, ModularBlock, RationalSystem,
};
pub use cache::{cache_load, cache_store, QexpRecord};
pub use hecke::{heilbronn_matrices, hecke_matrix, hecke_on_vector};
pub use oracle::{
    delta_qexp, dim_cusp_forms, eta_product_11_2, genus_x0, index_gamma0, ncusps_gamma0,
    sturm_bound,
};
pub use periods::{
    ambient_eigenvector, extend_aps, manin_periods, q_expansion_from_aps, LSeries, PeriodData,
    PERIOD_TOL,
};
pub use space::ModularSymbolSpace;

use crate::dvr::DvrError;
use crate::finalg::FinalgError;
use thiserror::Error;

/// Errors and structured refusals from the modular-symbols layer.
#[derive(Debug, Error)]
pub enum ModsymError {
    /// The residual eigensystem is Eisenstein modulo `p`; congruence-module
    /// invariants of the cuspidal block are not defined in this situation.
    #[error("residual eigensystem at level {level}, weight {weight} is Eisenstein mod {prime}: a_ℓ ≡ 1 + ℓ^(k-1) for all good ℓ up to the Sturm bound")]
    EisensteinIdeal { level: u64, weight: usize, prime: u64 },

    /// A scope hypothesis is violated; the message names it.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// No rational eigensystem matches the request.
    #[error("no rational eigenform: {0}")]
    NoRationalEigenform(String),

    /// Numerical data failed an internal consistency bound.
    #[error("precision failure: {0}")]
    Precision(String),

    #[error("linear algebra: {0}")]
    Dvr(#[from] DvrError),

    #[error("algebra layer: {0}")]
    Finalg(#[from] FinalgError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModsymError>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::{Dvr, PIdeal};
    use num_traits::Zero;

    fn space(n: u64, k: usize) -> ModularSymbolSpace {
        ModularSymbolSpace::new(Dvr::new(3), n, k).unwrap()
    }

    #[test]
    fn generator_count_matches_index() {
        for n in [1u64, 2, 6, 11, 12, 25, 49] {
            let s = space(n, 2);
            assert_eq!(s.num_generators() as u64, index_gamma0(n));
        }
    }

    #[test]
    fn cusp_counts_match_formula() {
        for n in [1u64, 2, 4, 11, 12, 15, 27, 36, 49] {
            let s = space(n, 2);
            assert_eq!(s.cusps.len() as u64, ncusps_gamma0(n));
        }
    }

    #[test]
    fn cuspidal_rank_is_twice_dim_cusp_forms_weight_2() {
        for n in 1..=40u64 {
            let s = space(n, 2);
            assert_eq!(
                s.cuspidal.rank() as i64,
                2 * dim_cusp_forms(n, 2),
                "level {n}"
            );
        }
    }

    #[test]
    fn cuspidal_rank_is_twice_dim_cusp_forms_higher_weight() {
        for (n, k) in [(1u64, 12), (1, 16), (2, 8), (3, 6), (5, 4), (7, 4), (11, 4), (13, 6)] {
            let s = space(n, k);
            assert_eq!(
                s.cuspidal.rank() as i64,
                2 * dim_cusp_forms(n, k),
                "level {n}, weight {k}"
            );
        }
    }

    #[test]
    fn hecke_operators_commute_and_respect_star() {
        for (n, k) in [(11u64, 2), (14, 2), (5, 4)] {
            let s = space(n, k);
            let t2 = hecke_matrix(&s, 2);
            let t3 = hecke_matrix(&s, 3);
            assert_eq!(t2.mul(&t3), t3.mul(&t2), "level {n}, weight {k}");
            assert_eq!(t2.mul(&s.star), s.star.mul(&t2), "level {n}, weight {k}");
        }
    }

    #[test]
    fn heilbronn_matrices_have_determinant_ell() {
        for ell in [2u64, 3, 5, 7, 11] {
            for m in heilbronn_matrices(ell) {
                assert_eq!(m[0] * m[3] - m[1] * m[2], ell as i64);
            }
        }
    }

    #[test]
    fn delta_eigenvalues_match_eta_power_expansion() {
        let s = ModularSymbolSpace::new(Dvr::new(11), 1, 12).unwrap();
        let forms = rational_newforms(&s).unwrap();
        assert_eq!(forms.len(), 1);
        let (mut f, _) = forms.into_iter().next().unwrap();
        let evec = {
            let block = localize_at_eigenform(&s, &f, 11).unwrap();
            ambient_eigenvector(&s, &block)
        };
        extend_aps(&s, &evec, &mut f, 20).unwrap();
        let tau = delta_qexp(20);
        for ell in [2u64, 3, 5, 7, 11, 13, 17, 19] {
            assert_eq!(f.aps[&ell], tau[ell as usize], "τ({ell})");
        }
    }

    #[test]
    fn level_11_eigenvalues_match_eta_product() {
        let s = space(11, 2);
        let forms = rational_newforms(&s).unwrap();
        assert_eq!(forms.len(), 1);
        let (mut f, _) = forms.into_iter().next().unwrap();
        let block = localize_at_eigenform(&s, &f, 3).unwrap();
        let evec = ambient_eigenvector(&s, &block);
        extend_aps(&s, &evec, &mut f, 20).unwrap();
        let a = eta_product_11_2(20);
        for ell in [2u64, 3, 5, 7, 13, 17, 19] {
            assert_eq!(f.aps[&ell], a[ell as usize], "a_{ell}");
        }
        // U_11 eigenvalue from the newform data
        assert_eq!(f.aps[&11], a[11]);
    }

    #[test]
    fn multiplicative_extension_matches_delta_expansion() {
        let tau = delta_qexp(60);
        let aps = (2u64..=60)
            .filter(|&l| (2..l).all(|d| l % d != 0))
            .map(|l| (l, tau[l as usize]))
            .collect();
        let a = q_expansion_from_aps(&aps, 1, 12, 60).unwrap();
        assert_eq!(a[1..], tau[1..]);
    }

    #[test]
    fn eisenstein_refusals() {
        let s = ModularSymbolSpace::new(Dvr::new(5), 11, 2).unwrap();
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        match localize_at_eigenform(&s, &f, 5) {
            Err(ModsymError::EisensteinIdeal { level: 11, weight: 2, prime: 5 }) => {}
            other => panic!("expected Eisenstein refusal, got {other:?}"),
        }
        let s = ModularSymbolSpace::new(Dvr::new(691), 1, 12).unwrap();
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        match localize_at_eigenform(&s, &f, 691) {
            Err(ModsymError::EisensteinIdeal { level: 1, weight: 12, prime: 691 }) => {}
            other => panic!("expected Eisenstein refusal, got {other:?}"),
        }
    }

    #[test]
    fn bad_reduction_is_refused() {
        let s = ModularSymbolSpace::new(Dvr::new(11), 11, 2).unwrap();
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        assert!(matches!(localize_at_eigenform(&s, &f, 11), Err(ModsymError::Unsupported(_))));
    }

    #[test]
    fn level_11_block_has_trivial_congruence_number() {
        let s = space(11, 2);
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        let block = localize_at_eigenform(&s, &f, 3).unwrap();
        assert_eq!(block.branches, 1);
        assert_eq!(congruence_number(&block).unwrap(), PIdeal::unit());
        let coh = cohomological_congruence_number(&block).unwrap();
        assert_eq!(coh.plus, PIdeal::unit());
        assert_eq!(coh.minus, PIdeal::unit());
    }

    #[test]
    fn level_77_congruence_with_the_old_level_11_form_mod_3() {
        // level raising at ℓ = 7: a_7(11a) = -2 ≡ -(7+1) (mod 3), so some
        // newform of level 77 is congruent to 11a modulo 3
        let s = space(77, 2);
        let systems = rational_eigensystems(&s).unwrap();
        let a11 = eta_product_11_2(20);
        // the old 11a eigensystem occurs as a rank-4 branch (two copies)
        let old = systems
            .iter()
            .find(|sys| {
                !sys.is_new
                    && sys.basis.cols == 4
                    && sys.aps.iter().all(|(&l, &a)| a == a11[l as usize])
            })
            .expect("old 11a branch at level 77");
        // detect the congruent newform against the independent eta-product data
        let forms = rational_newforms(&s).unwrap();
        let congruent: Vec<&EigenformData> = forms
            .iter()
            .map(|(f, _)| f)
            .filter(|f| old.aps.iter().all(|(l, &a)| (a - f.aps[l]).rem_euclid(3) == 0))
            .collect();
        assert_eq!(congruent.len(), 1, "level raising produces one congruent rational newform");
        let f = congruent[0];
        let block = localize_at_eigenform(&s, f, 3).unwrap();
        assert_eq!(block.branches, 2, "the newform and the old 11a branch merge");
        let eta = congruence_number(&block).unwrap();
        assert_eq!(eta, PIdeal::Power(1), "η_f = (3) for this congruence");
        let coh = cohomological_congruence_number(&block).unwrap();
        assert_eq!(coh.plus, eta);
        assert_eq!(coh.minus, eta);
        // the tuple-algebra oracle from Sturm-bound eigenvalue lists agrees
        assert_eq!(sturm_congruence_valuation(&s, f, 3).unwrap(), 1);
        // a non-congruent rational newform at the same level has unit η
        let lonely = forms
            .iter()
            .map(|(g, _)| g)
            .find(|g| {
                g.label != f.label
                    && localize_at_eigenform(&s, g, 3).is_ok_and(|b| b.branches == 1)
            })
            .expect("a non-congruent newform exists at level 77");
        let b1 = localize_at_eigenform(&s, lonely, 3).unwrap();
        assert_eq!(congruence_number(&b1).unwrap(), PIdeal::unit());
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join(format!("congrua-cache-test-{}", std::process::id()));
        let path = dir.join("qexp.jsonl");
        let aps: std::collections::BTreeMap<u64, i64> =
            [(2u64, -2i64), (3, -1), (5, 1)].into_iter().collect();
        cache_store(&path, 11, 2, "11.2.0", &aps).unwrap();
        let loaded = cache_load(&path, 11, 2, "11.2.0").unwrap().unwrap();
        assert_eq!(loaded, aps);
        assert!(cache_load(&path, 11, 2, "11.2.1").unwrap().is_none());
        // later records supersede earlier ones
        let mut aps2 = aps.clone();
        aps2.insert(7, -2);
        cache_store(&path, 11, 2, "11.2.0", &aps2).unwrap();
        assert_eq!(cache_load(&path, 11, 2, "11.2.0").unwrap().unwrap(), aps2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn periods_level_11_agree_with_the_functional_equation() {
        let s = space(11, 2);
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        let block = localize_at_eigenform(&s, &f, 3).unwrap();
        let periods = manin_periods(&s, &block, &f).unwrap();
        assert_eq!(periods.method, "loop-symbols");
        assert!(periods.consistency < PERIOD_TOL);
        assert!(periods.omega_plus.is_finite() && periods.omega_plus != 0.0);
        assert!(periods.omega_minus.is_finite() && periods.omega_minus != 0.0);
        assert_eq!(periods.fricke, Some(-1));
        // independent route to Ω⁺: Φ_f(y₀) = i·(2π)^(-1)·L(f,1) on the
        // symbol y₀ = {0,∞}, evaluated through the completed L-function
        let mut f2 = f.clone();
        let evec = ambient_eigenvector(&s, &block);
        let nterms = LSeries::terms_needed(11);
        extend_aps(&s, &evec, &mut f2, nterms as u64).unwrap();
        let an = q_expansion_from_aps(&f2.aps, 11, 2, nterms).unwrap();
        let ls = LSeries::new(11, 2, &an);
        let lv = ls.lvalue(1, -1);
        assert!(lv.abs() > 1e-8, "L(11a, 1) ≠ 0");
        // Ω⁺ = Φ(y₀)·w⁺(b⁺)/w⁺(y₀); compare |L(f,1)/(2π)·w⁺(b⁺)/w⁺(y₀)|
        // against the loop-symbol value
        let alt = {
            use num_traits::ToPrimitive;
            let w = periods::dual_eigenvector_for_tests(&s, &f2, 1);
            let b = block.isotypic_image_generator(&s, 1).unwrap();
            let y0: Vec<_> = s.manin_generator(0, 1, 0).unwrap().to_vec();
            let dotp = |a: &[crate::dvr::Rat], b: &[crate::dvr::Rat]| {
                a.iter().zip(b).fold(crate::dvr::Rat::zero(), |acc, (x, y)| acc + x * y)
            };
            let wy = dotp(&w, &y0);
            assert!(!wy.is_zero());
            let ratio = dotp(&w, &b) / wy;
            lv / (2.0 * std::f64::consts::PI)
                * (ratio.numer().to_f64().unwrap() / ratio.denom().to_f64().unwrap())
        };
        let rel = (alt.abs() - periods.omega_plus.abs()).abs() / periods.omega_plus.abs();
        assert!(rel < 1e-6, "loop-symbol Ω⁺ {} vs L-value route {alt}", periods.omega_plus);
    }

    #[test]
    fn periods_weight_12_from_critical_values_are_consistent() {
        let s = ModularSymbolSpace::new(Dvr::new(11), 1, 12).unwrap();
        let (f, _) = rational_newforms(&s).unwrap().into_iter().next().unwrap();
        let block = localize_at_eigenform(&s, &f, 11).unwrap();
        let periods = manin_periods(&s, &block, &f).unwrap();
        assert_eq!(periods.method, "critical-lvalues");
        assert!(periods.consistency < PERIOD_TOL);
        assert_eq!(periods.fricke, Some(1));
        assert!(periods.omega_plus != 0.0 && periods.omega_minus != 0.0);
    }
}
