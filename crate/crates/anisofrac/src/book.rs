//! Doctest shim that keeps the book's code snippets compiling against the
//! current API: every chapter is included verbatim as a doc comment, so
//! `cargo test --doc` runs each fenced Rust block.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/constitutive.md")]
pub mod constitutive {}
#[doc = include_str!("../../../book/src/integration.md")]
pub mod integration {}
#[doc = include_str!("../../../book/src/tangent.md")]
pub mod tangent {}
#[doc = include_str!("../../../book/src/orientation.md")]
pub mod orientation {}
#[doc = include_str!("../../../book/src/phasefield.md")]
pub mod phasefield {}
#[doc = include_str!("../../../book/src/fem.md")]
pub mod fem {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
