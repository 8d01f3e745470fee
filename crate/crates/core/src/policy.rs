/// Numeric tolerances threaded through constructors.
///
/// Every threshold used by validation lives here so a scenario can tighten or
/// relax the whole stack through one record. The defaults are the contract
/// values; individual operations never invent their own magic numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Columns with trailing norm below `rank_tol` times the leading norm are
    /// dropped during rank-revealing orthonormalization.
    pub rank_tol: f64,
    /// Relative Hermitian-defect bound for `hermitian_eigen` inputs.
    pub herm_tol: f64,
    /// LU pivots below `pivot_tol * ||a||` signal a singular operator.
    pub pivot_tol: f64,
    /// Idempotent defect bound `||P^2 - P||`.
    pub idempotent_tol: f64,
    /// Subspace-equality bound on principal angles.
    pub angle_tol: f64,
    /// Invertibility floor for fiber matrices (J, T).
    pub invertibility_floor: f64,
    /// Contour quadrature: stop refining when successive results differ by
    /// less than this; fail after `quadrature_max_refinements` doublings if
    /// the correction still exceeds `quadrature_fail_tol`.
    pub quadrature_tol: f64,
    pub quadrature_fail_tol: f64,
    pub quadrature_max_refinements: usize,
    /// Relative tolerance and iteration cap for the power iteration.
    pub power_tol: f64,
    pub power_max_iter: usize,
    /// Eigenvalues with |lambda| below this threshold do not count toward a
    /// signature.
    pub signature_threshold: f64,
    /// Rank decisions in subspace arithmetic (intersections, kernels).
    pub subspace_rank_tol: f64,
    /// Transfer-matrix step control target and halving budget.
    pub transfer_tol: f64,
    pub transfer_max_halvings: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            rank_tol: 1e-10,
            herm_tol: 1e-10,
            pivot_tol: 1e-13,
            idempotent_tol: 1e-8,
            angle_tol: 1e-7,
            invertibility_floor: 1e-8,
            quadrature_tol: 1e-9,
            quadrature_fail_tol: 1e-8,
            quadrature_max_refinements: 6,
            power_tol: 1e-10,
            power_max_iter: 10_000,
            signature_threshold: 1e-9,
            subspace_rank_tol: 1e-8,
            transfer_tol: 1e-9,
            transfer_max_halvings: 20,
        }
    }
}
