//! Anisotropic viscoelastic-viscoplastic phase-field fracture of short
//! fiber-reinforced polymers at finite deformation.
//!
//! The crate provides, bottom up:
//!
//! - [`tensor`]: the 3x3 algebra the constitutive layer is built on;
//! - [`material`]: the hygrothermally sensitive free energy, Cauchy stress
//!   and flow rates of the fiber-reinforced viscoelastic-viscoplastic solid;
//! - [`integrator`]: the fixed-point exponential-map update of the internal
//!   variables over a time step;
//! - [`tangent`]: perturbation-based Jaumann tangent moduli and their
//!   conversion to the spatial tangent of the FE weak form;
//! - [`orientation`]: fiber orientation tensors and principal fiber
//!   families;
//! - [`phasefield`]: degradation, anisotropic crack resistance and the
//!   history field;
//! - [`fem`]: the 2D plane-strain staggered finite-element solver;
//! - [`appio`]: job configuration, CSV/VTK writers, material-point drivers
//!   and the `anisofrac` command-line interface.
//!
//! The `book/` directory of the repository walks through the theory with
//! runnable examples; those snippets compile as doctests of this crate.

pub mod appio;
pub mod fem;
pub mod integrator;
pub mod material;
pub mod orientation;
pub mod phasefield;
pub mod tangent;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

#[cfg(doctest)]
mod book;
