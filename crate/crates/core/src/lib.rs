//! Steklov-Lamé eigenvalues of planar domains.
//!
//! The crate computes eigenpairs of the linear elasticity problem
//!
//! ```text
//! -div A e(u) = 0      in Ω
//!  A e(u) n   = Λ u    on ∂Ω
//! ```
//!
//! with a method-of-fundamental-solutions (MFS) discretization built on the
//! Kelvin tensor, certifies every computed eigenvalue with a boundary residual
//! bound, and provides the shape gradients and the projected ascent loop used
//! to maximize a chosen eigenvalue under an area (and optionally convexity)
//! constraint.
//!
//! Modules:
//!
//! - [`geometry`]: Fourier and support-function boundaries, sampling, quadrature.
//! - [`kernel`]: Hooke's law, strains, the Kelvin tensor and its traction.
//! - [`disk`]: closed-form spectrum and eigenfunctions of the disk.
//! - [`mfs`]: pencil assembly, the oversampled QR + QZ solve, certification.
//! - [`shape`]: shape derivatives, coefficient gradients, convex projection, ascent.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the
//! command-line front end live in the `steklame` crate.

#![no_std]
// `!(x >= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod disk;
mod error;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod mfs;
pub mod shape;
mod small;

pub use error::{Error, Result};
pub use field::DisplacementField;
pub use kernel::LameParameters;
pub use small::{Matrix2, Vector2};
