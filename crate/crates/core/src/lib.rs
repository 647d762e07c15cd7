//! Two-level overlapping Schwarz preconditioners with spectral coarse spaces.
//!
//! Q1 finite element systems for `-div(α ∇u) = f` on the unit square are
//! split into overlapping subdomains. The two-level additive Schwarz
//! preconditioner then uses either the GenEO coarse space (local
//! eigenproblems on whole subdomains) or the R-GenEO coarse space (local
//! eigenproblems on a strip around the overlap, completed by an a-harmonic
//! extension into the subdomain core).
//!
//! Modules, bottom-up:
//!
//! - [`la`]: sparse symmetric matrices, envelope Cholesky, generalized
//!   eigensolver for semidefinite pencils.
//! - [`fem`]: mesh, coefficient generators, assembly, Dirichlet rows.
//! - [`decomp`]: overlapping subdomains, overlap zones, strips, partition of
//!   unity.
//! - [`coarse`]: local eigenproblems, harmonic extension, coarse basis.
//! - [`precond`]: the additive Schwarz operator.
//! - [`krylov`]: preconditioned CG with a Lanczos condition estimate.
//! - [`analysis`]: numerical checks of the stability and condition bounds.
//! - [`mod@bench`]: experiment configuration, runs and reports.

// `!(x > 0.0)` rejects NaN as well, which is intended. Index loops mirror
// the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod bench;
pub mod coarse;
pub mod decomp;
pub mod error;
pub mod fem;
pub mod krylov;
pub mod la;
pub mod precond;

pub use error::{Error, Result};
