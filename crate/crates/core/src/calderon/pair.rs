//! Calderon projections through the direct-sum characterization: `C_+` is
//! the idempotent with range the Cauchy data space `N_+` and kernel
//! `T^{-1} N_-`, and `C_- = Id - C_+`.

use super::BoundaryConditionT;
use crate::collar::{CollarOperator, Section, kernel_transfer, propagate_kernel_element};
use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, Subspace, max_principal_angle, orthonormalize_with, vec_norm,
};
use crate::policy::NumericPolicy;
use crate::sectorial::{Idempotent, projection_along_with};

/// The pair `C_+`, `C_-` with the Cauchy data spaces they project onto.
#[derive(Clone)]
pub struct CalderonPair {
    pub c_plus: Idempotent,
    pub c_minus: Idempotent,
    /// Cauchy data of the kernel of A.
    pub n_plus: Subspace,
    /// Cauchy data of the kernel of A^t (not yet transported by T^{-1}).
    pub n_minus: Subspace,
    pub t_used: BoundaryConditionT,
}

impl CalderonPair {
    /// Verifies the algebra `C_+ + C_- = Id`, idempotency, and the range
    /// characterizations; called on construction.
    pub fn verify(&self, policy: &NumericPolicy) -> Result<()> {
        let dim = self.c_plus.dim();
        let sum = self.c_plus.matrix() + self.c_minus.matrix();
        let sum_defect = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if sum_defect > policy.idempotent_tol {
            return Err(Error::NotIdempotent { defect: sum_defect, tol: policy.idempotent_tol });
        }
        if self.c_plus.defect() > policy.idempotent_tol
            || self.c_minus.defect() > policy.idempotent_tol
        {
            return Err(Error::NotIdempotent {
                defect: self.c_plus.defect().max(self.c_minus.defect()),
                tol: policy.idempotent_tol,
            });
        }
        let range_plus = self.c_plus.range(policy);
        let angle_plus = max_principal_angle(&range_plus, &self.n_plus)?;
        let transported = orthonormalize_with(
            &(self.t_used.inverse() * self.n_minus.frame()),
            policy,
        );
        let range_minus = self.c_minus.range(policy);
        let angle_minus = max_principal_angle(&range_minus, &transported)?;
        if angle_plus > policy.angle_tol || angle_minus > policy.angle_tol {
            return Err(Error::NotTransversal(format!(
                "range angles {angle_plus:.3e} / {angle_minus:.3e} exceed {}",
                policy.angle_tol
            )));
        }
        Ok(())
    }
}

/// Builds the Calderon pair of `d` for the coupling condition `bc`.
pub fn calderon_pair(
    d: &CollarOperator,
    bc: &BoundaryConditionT,
    policy: &NumericPolicy,
) -> Result<CalderonPair> {
    let n_plus = kernel_transfer(d, policy)?.cauchy_data;
    let d_adj = d.formal_adjoint(policy)?;
    let n_minus = kernel_transfer(&d_adj, policy)?.cauchy_data;
    let transported = orthonormalize_with(&(bc.inverse() * n_minus.frame()), policy);
    if transported.dim() != n_minus.dim() {
        return Err(Error::NotTransversal(
            "T^{-1} collapsed the adjoint Cauchy data space".into(),
        ));
    }
    let c_plus = projection_along_with(&n_plus, &transported, policy)?;
    let c_minus = c_plus.complement();
    let pair = CalderonPair { c_plus, c_minus, n_plus, n_minus, t_used: bc.clone() };
    pair.verify(policy)?;
    Ok(pair)
}

/// Poisson application: the interior kernel element whose trace is `C_+ xi`.
pub fn poisson_apply(
    pair: &CalderonPair,
    d: &CollarOperator,
    xi: &[C64],
    policy: &NumericPolicy,
) -> Result<Section> {
    let dim = d.sigma_dim();
    if xi.len() != 2 * dim {
        return Err(Error::ShapeMismatch("boundary datum must live on both circles".into()));
    }
    let eta = pair.c_plus.matrix().apply(xi);
    let u = propagate_kernel_element(d, &eta[..dim], policy)?;
    let trace = u.trace();
    let defect: f64 = trace
        .iter()
        .zip(&eta)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = vec_norm(xi).max(1e-30);
    if defect > 1e-7 * scale {
        return Err(Error::NotTransversal(format!(
            "Poisson trace defect {defect:.3e} exceeds 1e-7 |xi|"
        )));
    }
    Ok(u)
}
