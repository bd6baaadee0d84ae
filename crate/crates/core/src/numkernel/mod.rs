//! Dense linear-algebra kernels: storage, Gram matrices, symmetric
//! eigen-decomposition, method-of-snapshots SVD and LU solves.

mod eig;
mod lu;
mod matrix;
mod svd;

pub use eig::{gram, reconstruct, sym_eig, EigenPairs};
pub use lu::{lu_solve, LuFactor, PIVOT_TOL};
pub(crate) use matrix::CompressedRows;
pub use matrix::{axpy, dot, max_abs, max_abs_diff, norm2, DenseMatrix};
pub use svd::{thin_svd_snapshots, ThinSvd, DEFAULT_RANK_TOL};
