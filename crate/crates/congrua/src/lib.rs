//! Exact computation of congruence modules, congruence ideals and Wiles
//! defects over the localization `Z_(p)` of the integers at an odd prime,
//! together with a modular-symbols engine that produces real Hecke algebras
//! and a numerical evaluator for adjoint L-values.
//!
//! The crate is organized in layers:
//!
//! * [`dvr`] — exact linear algebra over `O = Z_(p)`: valuations, Smith
//!   normal form, Fitting ideals, lattice saturation.
//! * [`finalg`] — finite flat commutative `O`-algebras, characters,
//!   congruence modules `C0`, congruence ideals `eta` and `eta_sharp`,
//!   duality transfer and base-change factorizations.
//! * [`cotangent`] — the `C1` module, the Wiles–Lenstra complete-intersection
//!   criterion, Wiles defects and their computation from presentations.
//! * [`modsym`] — weight-`k` Manin symbols for `Gamma_0(N)`, Hecke operators,
//!   localized Hecke algebras, congruence numbers and Manin periods.
//! * [`lfunc`] — numerical adjoint L-values with gamma factors and Gauss-sum
//!   normalization, rational detection, congruence-prime prediction.
//! * [`cli`] — the batch command surface with reproducible JSON output.
//!
//! The [`guide`] module embeds the mdbook user guide so its examples run as
//! doc-tests.

pub mod cli;
pub mod cotangent;
pub mod dvr;
pub mod finalg;
pub mod guide;
pub mod lfunc;
pub mod modsym;
