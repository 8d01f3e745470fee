//! Dense complex linear-algebra kernel: LU, rank-revealing QR, cyclic Jacobi,
//! power iteration, and the matrix exponential. Everything else in the crate
//! is built on these primitives.

pub mod expm;
pub mod jacobi;
pub mod lu;
pub mod matrix;
pub mod norms;
pub mod qr;

pub use expm::{EXP_NORM_CAP, matrix_exp};
pub use jacobi::{hermitian_eigen, hermitian_eigen_with, hermitian_fn, hermitian_inv_sqrt, hermitian_sqrt};
pub use lu::{LuFactors, inverse, lu_solve, lu_solve_with};
pub use matrix::{C64, ComplexMatrix, dot, vec_norm};
pub use norms::{
    max_principal_angle, op_norm, op_norm_with, principal_angles, principal_angles_with,
    smallest_singular_value, subspaces_equal,
};
pub use qr::{Subspace, least_squares, null_space, orthogonal_complement, orthonormalize, orthonormalize_scaled, orthonormalize_with, rank};
