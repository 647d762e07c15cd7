//! Sparse and dense linear algebra kernels.

mod cholesky;
pub(crate) mod dense;
mod eigen;
mod sparse;

pub use cholesky::{rcm_ordering, Factorization};
pub use dense::{independent_columns, symmetric_eigen, DenseCholesky, DenseMatrix};
pub use eigen::{gen_sym_eig, EigenOptions, EigenPairs, INFINITE_THETA_GAP};
pub use sparse::SparseSymMatrix;
