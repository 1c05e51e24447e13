//! OCP-structured QPs: storage, condensing and dense solution.

mod condensing;
mod data;
mod dense;

pub use condensing::{
    condense_and_solve, condense_lhs, condense_rhs_and_solve, condense_rhs_and_solve_with, CondensedLhs,
    QpSolution,
};
pub use data::{OcpDims, OcpQpData, QpMatrices, QpVectors};
pub use dense::{
    factor_pd, solve_dense_qp, solve_dense_qp_with, DenseQpSolution, QpOptions, DEFAULT_MAX_ITER, REGULARIZATION,
};
