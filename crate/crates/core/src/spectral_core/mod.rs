//! Dense linear-algebra kernels: Hermitian splitting, logarithmic norms,
//! matrix exponentials, finite-difference stencils and block-norm bounds.

mod blocks;
mod dense;
mod expm;
mod fd;
mod sparse;

pub use blocks::{block_norm_bound, weyl_gap_bound, BlockMatrix};
pub use dense::{
    hermitian_split, identity, is_hermitian, log_norm, lu_solve, lu_solve_mat, one_norm,
    singular_values, spectral_norm, sym_eigh, sym_eigvals, sym_extreme_eigs,
};
pub use expm::{expm_unitary, matrix_exp, EXPM_NORM_CAP};
pub use fd::{
    central_difference_eigenvalues, central_difference_matrix, kron, kron_sum, second_derivative_eigenvalues,
    second_derivative_matrix,
};
pub use sparse::Csr;
