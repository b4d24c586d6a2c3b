//! The book, compiled.
//!
//! The user guide lives in `book/` at the repository root and is rendered
//! with mdbook.  Each chapter is also included here as a module doc, so
//! every code block in the book is built and executed by `cargo test` as a
//! doc-test: the prose cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/congruence-modules.md")]
pub mod congruence_modules {}

#[doc = include_str!("../../../book/src/wiles-defects.md")]
pub mod wiles_defects {}

#[doc = include_str!("../../../book/src/base-change.md")]
pub mod base_change {}

#[doc = include_str!("../../../book/src/modular-symbols.md")]
pub mod modular_symbols {}

#[doc = include_str!("../../../book/src/adjoint-l-value.md")]
pub mod adjoint_l_value {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
