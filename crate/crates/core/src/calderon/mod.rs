//! The invertible double `A (+) (-A^t)` with coupling condition
//! `r f_- = T r f_+`, its canonical boundary maps T, the solution operators,
//! and the Poisson / Calderon operators built from kernel transfer data.

pub mod double;
pub mod pair;
pub mod shapiro;

use crate::collar::CollarOperator;
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, hermitian_eigen_with, hermitian_inv_sqrt, lu_solve_with};
use crate::policy::NumericPolicy;

pub use double::{DoubleSolution, solve_double, wellposed_resolvent};
pub use pair::{CalderonPair, calderon_pair, poisson_apply};
pub use shapiro::{ShapiroLopatinskiiReport, fiber_positive_projection, shapiro_lopatinskii_check};

/// Canonical choices for the coupling map T, all built from the boundary
/// matrix `J_S`.
#[derive(Debug, Clone)]
pub enum BoundaryChoice {
    /// `T = J_S`.
    J,
    /// `T = (J_S^*)^{-1}`; makes the Calderon projections orthogonal.
    JtInv,
    /// `T = (J_S J_S^*)^{-1/2} J_S`, the unitary choice.
    UnitaryJ,
    /// Arbitrary invertible map; positivity of `J_S^* T` is still required.
    Custom(ComplexMatrix),
    /// Arbitrary invertible map with the positivity check skipped, for
    /// diagnostic paths that exercise failure modes.
    CustomUnchecked(ComplexMatrix),
}

/// Invertible coupling condition `r f_- = T r f_+` for the double, with the
/// positivity witness of `J_S^* T`.
#[derive(Debug, Clone)]
pub struct BoundaryConditionT {
    matrix: ComplexMatrix,
    inverse: ComplexMatrix,
    boundary_j: ComplexMatrix,
    positivity_witness: Option<f64>,
}

impl BoundaryConditionT {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &ComplexMatrix {
        &self.inverse
    }

    pub fn boundary_j(&self) -> &ComplexMatrix {
        &self.boundary_j
    }

    /// Smallest eigenvalue of the Hermitian part of `J_S^* T` when the
    /// positivity check ran.
    pub fn positivity_witness(&self) -> Option<f64> {
        self.positivity_witness
    }

    pub fn is_positive(&self) -> bool {
        self.positivity_witness.map(|w| w > 0.0).unwrap_or(false)
    }
}

/// Builds the coupling condition for `d` per the requested choice, checking
/// invertibility and (unless explicitly skipped) that `J_S^* T` is Hermitian
/// positive definite.
pub fn make_boundary_condition(
    d: &CollarOperator,
    choice: &BoundaryChoice,
    policy: &NumericPolicy,
) -> Result<BoundaryConditionT> {
    let j_s = d.boundary_j();
    let dim = j_s.rows();
    let t = match choice {
        BoundaryChoice::J => j_s.clone(),
        BoundaryChoice::JtInv => {
            lu_solve_with(&j_s.adjoint(), &ComplexMatrix::identity(dim), policy)?
        }
        BoundaryChoice::UnitaryJ => {
            let gram = &j_s * &j_s.adjoint();
            let root = hermitian_inv_sqrt(&gram, policy.invertibility_floor.powi(2))?;
            &root * &j_s
        }
        BoundaryChoice::Custom(t) | BoundaryChoice::CustomUnchecked(t) => {
            if t.rows() != dim || t.cols() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "T is {}x{}, boundary dimension is {dim}",
                    t.rows(),
                    t.cols()
                )));
            }
            t.clone()
        }
    };
    let inverse = match lu_solve_with(&t, &ComplexMatrix::identity(dim), policy) {
        Ok(inv) => inv,
        Err(Error::Singular { pivot, threshold }) => {
            return Err(Error::Singular { pivot, threshold });
        }
        Err(e) => return Err(e),
    };
    let positivity_witness = if matches!(choice, BoundaryChoice::CustomUnchecked(_)) {
        None
    } else {
        let h = &j_s.adjoint() * &t;
        let herm_defect = h.hermitian_defect();
        if herm_defect > 1e-9 * h.max_abs().max(1.0) {
            return Err(Error::PositivityFailed(format!(
                "J_S^* T is not Hermitian: defect {herm_defect:.3e}"
            )));
        }
        let hermitized = (&h + &h.adjoint()).scale_real(0.5);
        let (eigenvalues, _) = hermitian_eigen_with(&hermitized, policy)?;
        let min_eig = eigenvalues.first().copied().unwrap_or(f64::NEG_INFINITY);
        if min_eig < policy.invertibility_floor {
            return Err(Error::PositivityFailed(format!(
                "smallest eigenvalue of J_S^* T is {min_eig:.3e}"
            )));
        }
        Some(min_eig)
    };
    Ok(BoundaryConditionT { matrix: t, inverse, boundary_j: j_s, positivity_witness })
}

/// The dual coupling condition `-J_S^{-1} (T^*)^{-1} J_S^*`; under
/// positivity this equals `-T^{-1}`, which is asserted.
pub fn dual_condition(
    bc: &BoundaryConditionT,
    policy: &NumericPolicy,
) -> Result<BoundaryConditionT> {
    let dim = bc.matrix.rows();
    let id = ComplexMatrix::identity(dim);
    let t_adj_inv = lu_solve_with(&bc.matrix.adjoint(), &id, policy)?;
    let j_inv = lu_solve_with(&bc.boundary_j, &id, policy)?;
    let dual = (&(&j_inv * &t_adj_inv) * &bc.boundary_j.adjoint()).scale_real(-1.0);
    if bc.is_positive() {
        let minus_t_inv = bc.inverse.scale_real(-1.0);
        let defect = (&dual - &minus_t_inv).max_abs();
        if defect > 1e-9 * dual.max_abs().max(1.0) {
            return Err(Error::RelationViolated(defect));
        }
    }
    let inverse = lu_solve_with(&dual, &id, policy)?;
    // the dual condition pairs with the adjoint double whose boundary matrix
    // is -J_S^*; its positivity witness is inherited (eq. level: J_S T^{-1})
    Ok(BoundaryConditionT {
        matrix: dual,
        inverse,
        boundary_j: bc.boundary_j.adjoint().scale_real(-1.0),
        positivity_witness: bc.positivity_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collar::fixtures::selfadjoint_collar;

    #[test]
    fn jtinv_choice_is_positive_with_unit_witness() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let bc = make_boundary_condition(&d, &BoundaryChoice::JtInv, &policy).unwrap();
        // J_S^* (J_S^*)^{-1} = Id: witness exactly 1
        assert!((bc.positivity_witness().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn j_choice_is_positive_for_rotation_boundary() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let bc = make_boundary_condition(&d, &BoundaryChoice::J, &policy).unwrap();
        // rotation blocks are orthogonal, so J_S^* J_S = Id
        assert!((bc.positivity_witness().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_choice_is_unitary() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let bc = make_boundary_condition(&d, &BoundaryChoice::UnitaryJ, &policy).unwrap();
        let t = bc.matrix();
        let gram = &t.adjoint() * t;
        assert!((&gram - &ComplexMatrix::identity(t.rows())).max_abs() < 1e-10);
        assert!(bc.is_positive());
    }

    #[test]
    fn sign_flipped_custom_t_fails_positivity() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let jtinv = make_boundary_condition(&d, &BoundaryChoice::JtInv, &policy).unwrap();
        let bad = make_boundary_condition(
            &d,
            &BoundaryChoice::Custom(jtinv.matrix().scale_real(-1.0)),
            &policy,
        );
        assert!(matches!(bad, Err(Error::PositivityFailed(_))));
    }

    #[test]
    fn dual_of_jtinv_is_minus_j_adjoint() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let bc = make_boundary_condition(&d, &BoundaryChoice::JtInv, &policy).unwrap();
        let dual = dual_condition(&bc, &policy).unwrap();
        let want = d.boundary_j().adjoint().scale_real(-1.0);
        assert!((dual.matrix() - &want).max_abs() < 1e-10);
    }

    #[test]
    fn dual_is_involutive_up_to_sign_convention() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let bc = make_boundary_condition(&d, &BoundaryChoice::UnitaryJ, &policy).unwrap();
        let dual = dual_condition(&bc, &policy).unwrap();
        // dual(dual) = -(-T^{-1})^{-1} = T when positivity holds throughout
        let t_again = dual.inverse().scale_real(-1.0);
        assert!((&t_again - bc.matrix()).max_abs() < 1e-9);
    }
}
