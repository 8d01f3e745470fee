//! Contour-integral functional calculus: sectorial spectral projections, the
//! semigroups Q+/Q-, oblique projections and the idempotent algebra.

use super::contour::Contour;
use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, LuFactors, Subspace, lu_solve_with, max_principal_angle, op_norm_with,
    orthonormalize_with,
};
use crate::policy::NumericPolicy;

/// Square matrix certified to satisfy `||P^2 - P|| <= tol`.
#[derive(Debug, Clone)]
pub struct Idempotent {
    mat: ComplexMatrix,
    tol: f64,
}

impl Idempotent {
    pub fn new(mat: ComplexMatrix, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::ShapeMismatch("idempotent must be square".into()));
        }
        let defect = (&mat.matmul(&mat) - &mat).max_abs();
        if defect > tol {
            return Err(Error::NotIdempotent { defect, tol });
        }
        Ok(Idempotent { mat, tol })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn defect(&self) -> f64 {
        (&self.mat.matmul(&self.mat) - &self.mat).max_abs()
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// The complementary idempotent `Id - P`.
    pub fn complement(&self) -> Idempotent {
        let id = ComplexMatrix::identity(self.dim());
        Idempotent { mat: &id - &self.mat, tol: self.tol }
    }

    /// Orthonormal basis of the range (column space at the policy rank
    /// tolerance).
    pub fn range(&self, policy: &NumericPolicy) -> Subspace {
        orthonormalize_with(&self.mat, policy)
    }

    pub fn kernel(&self, policy: &NumericPolicy) -> Subspace {
        orthonormalize_with(self.complement().matrix(), policy)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.mat.hermitian_defect() <= tol * self.mat.max_abs().max(1.0)
    }
}

/// Contour integral `1/(2 pi i) \oint f(z) dz` with automatic node doubling.
/// Refinement stops once successive results differ by at most the policy's
/// quadrature tolerance; exceeding the refinement budget with a correction
/// above the failure tolerance is an error.
pub fn contour_integral(
    contour: &Contour,
    policy: &NumericPolicy,
    mut integrand: impl FnMut(C64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut previous: Option<ComplexMatrix> = None;
    let mut last_correction = f64::INFINITY;
    for level in 0..=policy.quadrature_max_refinements {
        let mut acc: Option<ComplexMatrix> = None;
        for (z, dz) in contour.nodes_at_level(level) {
            let val = integrand(z)?.scale(dz / two_pi_i);
            acc = Some(match acc {
                None => val,
                Some(sum) => &sum + &val,
            });
        }
        let current = acc.expect("contour has nodes");
        if let Some(prev) = &previous {
            last_correction = (&current - prev).max_abs();
            let scale = current.max_abs().max(1.0);
            if last_correction <= policy.quadrature_tol * scale {
                return Ok(current);
            }
        }
        previous = Some(current);
    }
    let scale = previous.as_ref().map(|m| m.max_abs().max(1.0)).unwrap_or(1.0);
    if last_correction > policy.quadrature_fail_tol * scale {
        return Err(Error::QuadratureNotConverged(last_correction));
    }
    Ok(previous.unwrap())
}

/// Positive sectorial spectral projection of `b`: the contour integral of the
/// resolvent over the supplied positive contour.
pub fn sectorial_projection(b: &ComplexMatrix, gamma_plus: &Contour) -> Result<Idempotent> {
    sectorial_projection_with(b, gamma_plus, &NumericPolicy::default())
}

pub fn sectorial_projection_with(
    b: &ComplexMatrix,
    gamma_plus: &Contour,
    policy: &NumericPolicy,
) -> Result<Idempotent> {
    let n = b.rows();
    let id = ComplexMatrix::identity(n);
    let p = contour_integral(gamma_plus, policy, |z| {
        let shifted = &ComplexMatrix::diag(&vec![z; n]) - b;
        lu_solve_with(&shifted, &id, policy)
    })?;
    Idempotent::new(p, policy.idempotent_tol)
}

/// `Q_+(x) = 1/(2 pi i) \oint_{Gamma_+} e^{-lambda x} (lambda - b)^{-1} d lambda`
/// for `x > 0`.
pub fn q_plus(b: &ComplexMatrix, gamma_plus: &Contour, x: f64) -> Result<ComplexMatrix> {
    q_plus_with(b, gamma_plus, x, &NumericPolicy::default())
}

pub fn q_plus_with(
    b: &ComplexMatrix,
    gamma_plus: &Contour,
    x: f64,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    if x <= 0.0 {
        return Err(Error::ShapeMismatch("q_plus needs x > 0".into()));
    }
    weighted_resolvent_integral(b, gamma_plus, x, policy)
}

/// The mirrored semigroup over the negative contour, defined for `x < 0`.
pub fn q_minus_with(
    b: &ComplexMatrix,
    gamma_minus: &Contour,
    x: f64,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    if x >= 0.0 {
        return Err(Error::ShapeMismatch("q_minus needs x < 0".into()));
    }
    weighted_resolvent_integral(b, gamma_minus, x, policy)
}

fn weighted_resolvent_integral(
    b: &ComplexMatrix,
    contour: &Contour,
    x: f64,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    let n = b.rows();
    let id = ComplexMatrix::identity(n);
    contour_integral(contour, policy, |z| {
        let shifted = &ComplexMatrix::diag(&vec![z; n]) - b;
        let resolvent = lu_solve_with(&shifted, &id, policy)?;
        Ok(resolvent.scale((-z * x).exp()))
    })
}

/// The idempotent with prescribed range and kernel: `P_{along, onto}` in the
/// pair notation, built by solving against the stacked frame `[onto | along]`.
pub fn projection_along(onto: &Subspace, along: &Subspace) -> Result<Idempotent> {
    projection_along_with(onto, along, &NumericPolicy::default())
}

pub fn projection_along_with(
    onto: &Subspace,
    along: &Subspace,
    policy: &NumericPolicy,
) -> Result<Idempotent> {
    if onto.ambient_dim() != along.ambient_dim() {
        return Err(Error::DimensionMismatch("projection_along ambient dims".into()));
    }
    let n = onto.ambient_dim();
    if onto.dim() + along.dim() != n {
        return Err(Error::NotTransversal(format!(
            "dim {} + {} != ambient {}",
            onto.dim(),
            along.dim(),
            n
        )));
    }
    let stacked = onto.frame().hcat(along.frame());
    let factors = match LuFactors::factor(&stacked, policy) {
        Ok(f) => f,
        Err(Error::Singular { .. }) => {
            return Err(Error::NotTransversal("stacked frame is singular".into()));
        }
        Err(e) => return Err(e),
    };
    let inv = factors.inverse()?;
    // condition guard kappa <= 1e8
    let kappa = op_norm_with(&stacked, policy)? * op_norm_with(&inv, policy)?;
    if kappa > 1e8 {
        return Err(Error::NotTransversal(format!(
            "stacked frame condition number {kappa:.3e} exceeds 1e8"
        )));
    }
    let coords = inv.submatrix(0, 0, onto.dim(), n);
    let p = onto.frame().matmul(&coords);
    Idempotent::new(p, policy.idempotent_tol)
}

/// Orthogonalization `P_ort = P (P + Id - P*)^{-1}`: the Hermitian idempotent
/// with the same range.
pub fn orthogonalize(p: &Idempotent) -> Result<Idempotent> {
    orthogonalize_with(p, &NumericPolicy::default())
}

pub fn orthogonalize_with(p: &Idempotent, policy: &NumericPolicy) -> Result<Idempotent> {
    let id = ComplexMatrix::identity(p.dim());
    let mix = &(&p.matrix().adjoint().scale_real(-1.0) + &id) + p.matrix();
    let inv = lu_solve_with(&mix, &id, policy)?;
    let ort = p.matrix().matmul(&inv);
    let result = Idempotent::new(ort, policy.idempotent_tol)?;
    // contract: Hermitian and range-preserving
    let herm_defect = result.matrix().hermitian_defect();
    if herm_defect > 1e-9 * result.matrix().max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect: herm_defect, tol: 1e-9 });
    }
    let angle = max_principal_angle(&p.range(policy), &result.range(policy))?;
    if angle > 1e-8 {
        return Err(Error::NotTransversal(format!(
            "orthogonalization moved the range by angle {angle:.3e}"
        )));
    }
    Ok(result)
}
