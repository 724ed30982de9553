//! Sparse symmetric eigensolver (LOBPCG) and its dense oracle.

mod dense;
mod lobpcg;
mod sparse;

pub use dense::{dense_eig, dense_eig_capped, symmetric_eigen, DenseEigen, DENSE_ORDER_CAP};
pub use lobpcg::{block_size, lobpcg, lobpcg_with, EigResult, LobpcgOptions};
pub use sparse::{CsrMatrix, SparseSym, SymBuilder, SymOperator};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigError {
    #[error("eigensolver did not converge after {} iterations", result.iterations)]
    NotConverged { result: Box<EigResult> },
    #[error("order {order} exceeds the dense cap {cap}")]
    TooLarge { order: usize, cap: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dense QL iteration stalled at index {index}")]
    DenseNoConvergence { index: usize },
}
