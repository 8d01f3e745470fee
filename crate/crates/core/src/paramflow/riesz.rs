//! The Riesz map `B -> B (Id + B^2)^{-1/2}`, its Lipschitz bound in the
//! half-order weighted norm, and the contour route to `1_{[c, inf)}(B)`.

use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, hermitian_eigen_with, hermitian_fn, lu_solve_with, op_norm_with,
};
use crate::policy::NumericPolicy;
use crate::sectorial::{Contour, ContourPiece, Idempotent, contour_integral};

/// `B (Id + B^2)^{-1/2}` for Hermitian `B`; the spectrum of the image lies
/// in [-1, 1].
pub fn riesz_map(b: &ComplexMatrix, policy: &NumericPolicy) -> Result<ComplexMatrix> {
    let defect = b.hermitian_defect();
    if defect > policy.herm_tol * b.max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect, tol: policy.herm_tol });
    }
    hermitian_fn(b, |l| l / (1.0 + l * l).sqrt())
}

#[derive(Debug, Clone)]
pub struct RieszLipschitzReport {
    pub q: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Measures `q` from the resolvent-difference bounds and checks the
/// half-order Lipschitz inequality
/// `|| F(B) - F(B~) ||_{1/2,1/2} <= q (1 + (1+q)/(1-q))`.
pub fn riesz_lipschitz_check(
    b: &ComplexMatrix,
    b_tilde: &ComplexMatrix,
    q_bound: f64,
    policy: &NumericPolicy,
) -> Result<RieszLipschitzReport> {
    let dim = b.rows();
    let id = ComplexMatrix::identity(dim);
    let delta = b - b_tilde;
    let mut q = 0.0f64;
    for sign in [1.0, -1.0] {
        let shifted = b + &id.scale(C64::new(0.0, sign));
        let resolvent = lu_solve_with(&shifted, &id, policy)?;
        q = q.max(
            op_norm_with(&(&delta * &resolvent), policy)?
                + op_norm_with(&(&resolvent * &delta), policy)?,
        );
    }
    if q >= 0.5 || q > q_bound {
        return Err(Error::QTooLarge(q));
    }
    // |i + B|^{1/2} = (Id + B^2)^{1/4}
    let weight = hermitian_fn(b, |l| (1.0 + l * l).powf(0.25))?;
    let weight_inv = hermitian_fn(b, |l| (1.0 + l * l).powf(-0.25))?;
    let f_b = riesz_map(b, policy)?;
    let f_bt = riesz_map(b_tilde, policy)?;
    let lhs = op_norm_with(&(&(&weight * &(&f_b - &f_bt)) * &weight_inv), policy)?;
    let rhs = q * (1.0 + (1.0 + q) / (1.0 - q));
    Ok(RieszLipschitzReport { q, lhs, rhs, holds: lhs <= rhs })
}

/// `1_{[c, inf)}(B)` for Hermitian `B` with `c` clear of the spectrum, via
/// the contour integral of the Riesz transform over the circle
/// `|z - (F(c) + 2)| = 2`, cross-checked against direct eigen-thresholding.
pub fn spectral_projection_above(
    b: &ComplexMatrix,
    c: f64,
    policy: &NumericPolicy,
) -> Result<Idempotent> {
    let (eigenvalues, vectors) = hermitian_eigen_with(b, policy)?;
    let dist = eigenvalues.iter().map(|l| (l - c).abs()).fold(f64::INFINITY, f64::min);
    if dist < 1e-6 {
        return Err(Error::CNearSpectrum { c, dist });
    }
    let f_b = riesz_map(b, policy)?;
    let f_c = c / (1.0 + c * c).sqrt();
    let circle = Contour::new(
        vec![ContourPiece::Arc {
            center: C64::new(f_c + 2.0, 0.0),
            radius: 2.0,
            angle_start: 0.0,
            angle_end: std::f64::consts::TAU,
        }],
        Contour::MIN_NODES_PER_PIECE,
    )?;
    let dim = b.rows();
    let id = ComplexMatrix::identity(dim);
    // the Riesz transform compresses gaps near +-1, so poles can sit close
    // to the circle; give the quadrature a deeper refinement budget
    let mut deep = *policy;
    deep.quadrature_max_refinements = 10;
    let p = contour_integral(&circle, &deep, |z| {
        lu_solve_with(&(&ComplexMatrix::diag(&vec![z; dim]) - &f_b), &id, policy)
    })?;
    // oracle: eigen-thresholding on the same decomposition
    let thresholds: Vec<f64> =
        eigenvalues.iter().map(|&l| if l >= c { 1.0 } else { 0.0 }).collect();
    let oracle = &(&vectors * &ComplexMatrix::diag_real(&thresholds)) * &vectors.adjoint();
    let agreement = (&p - &oracle).max_abs();
    if agreement > 1e-9 {
        return Err(Error::QuadratureNotConverged(agreement));
    }
    Idempotent::new(p, policy.idempotent_tol)
}
