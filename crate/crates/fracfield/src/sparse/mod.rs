//! Sparse and small-dense symmetric linear algebra: SPD solves,
//! Cholesky factorizations, and the dense generalized eigensolver that
//! backs the reference oracles.

mod cg;
mod cholesky;
mod csr;
mod dense;

pub use cg::cg_solve;
pub use cholesky::{cholesky_sparse, solve_lower};
pub use csr::{spmv, SparseMatrix};
pub use dense::{
    generalized_eig_dense, generalized_eig_dense_capped, m_operator_norm, m_operator_norm_capped,
    symmetric_eig, DenseEig, DenseMatrix, DEFAULT_DENSE_CAP,
};
