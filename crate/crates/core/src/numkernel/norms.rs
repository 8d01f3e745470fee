//! Operator norms by power iteration and principal angles between subspaces.

use super::jacobi::hermitian_eigen_with;
use super::lu::LuFactors;
use super::matrix::{C64, ComplexMatrix, vec_norm};
use super::qr::Subspace;
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

fn seed_vector(n: usize) -> Vec<C64> {
    // deterministic, not orthogonal to anything structured
    let v: Vec<C64> = (0..n)
        .map(|k| C64::new(1.0 + (k as f64) / (n as f64 + 1.0), 0.25 + 0.5 * (k as f64).sin()))
        .collect();
    let norm = vec_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// Largest singular value via block power iteration on a* a (block size 4
/// with Rayleigh-Ritz extraction, which stays fast when the top singular
/// values cluster, e.g. for mode-symmetric operators).
pub fn op_norm(a: &ComplexMatrix) -> Result<f64> {
    op_norm_with(a, &NumericPolicy::default())
}

pub fn op_norm_with(a: &ComplexMatrix, policy: &NumericPolicy) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 || a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let n = a.cols();
    let block = 4.min(n);
    let adj = a.adjoint();
    let seed = seed_vector(n);
    let mut q = ComplexMatrix::from_fn(n, block, |r, c| {
        seed[r] + C64::new((r + 2 * c + 1) as f64 / (n + c + 1) as f64, 0.3 * (c as f64 + 1.0))
    });
    let mut sigma_sq = 0.0f64;
    // power iteration resolves clustered top singular values only at the
    // cluster gap rate; past this many stalled iterations the Gram route
    // below finishes the job exactly
    let stall_cap = 300.min(policy.power_max_iter);
    for iter in 0..stall_cap {
        let z = adj.matmul(&a.matmul(&q));
        let s = super::qr::orthonormalize_with(&z, policy);
        if s.dim() == 0 {
            return Ok(0.0);
        }
        q = s.frame().clone();
        // Rayleigh-Ritz on the block: top eigenvalue of (A Q)* (A Q)
        let w = a.matmul(&q);
        let gram = &w.adjoint() * &w;
        let (eigenvalues, _) = super::jacobi::hermitian_eigen_with(&gram, policy)?;
        let new_sigma_sq = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        if new_sigma_sq == 0.0 {
            return Ok(0.0);
        }
        let relative_change = (new_sigma_sq - sigma_sq).abs() / new_sigma_sq;
        sigma_sq = new_sigma_sq;
        if relative_change < policy.power_tol && iter > 2 {
            return Ok(sigma_sq.sqrt());
        }
    }
    // stalled on a cluster: diagonalize the smaller Gram matrix instead,
    // which is exact for every matrix this crate produces
    let gram = if a.cols() <= a.rows() { &adj * a } else { a * &adj };
    match super::jacobi::hermitian_eigen_with(&gram, policy) {
        Ok((eigenvalues, _)) => Ok(eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt()),
        Err(_) => Err(Error::NoConvergence(sigma_sq.sqrt(), policy.power_max_iter)),
    }
}

/// Smallest singular value, through inverse iteration on (a* a)^{-1}.
/// Returns 0.0 when the factorization detects exact singularity.
pub fn smallest_singular_value(a: &ComplexMatrix, policy: &NumericPolicy) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("smallest_singular_value needs square input".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= 24 {
        // small matrices: the Gram eigendecomposition is exact and cheaper
        // than iterating, and it cannot stall on degenerate singular values
        let gram = &a.adjoint() * a;
        let (eigenvalues, _) = super::jacobi::hermitian_eigen_with(&gram, policy)?;
        return Ok(eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt());
    }
    let factors = match LuFactors::factor(a, policy) {
        Ok(f) => f,
        Err(Error::Singular { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut v = ComplexMatrix::from_columns(n, &[seed_vector(n)]);
    let mut mu = 0.0f64; // dominant eigenvalue of (a a*)^{-1} via a^{-1}, a^{-*} steps
    // clusters of small singular values stall the iteration; the estimate is
    // then already accurate to the cluster width, which is all callers need
    let cap = 500.min(policy.power_max_iter);
    for iter in 0..cap {
        let w = factors.solve_adjoint(&factors.solve(&v)?)?;
        let new_mu = w.frobenius_norm();
        if new_mu == 0.0 {
            return Ok(0.0);
        }
        let relative_change = (new_mu - mu).abs() / new_mu;
        mu = new_mu;
        v = w.scale_real(1.0 / mu);
        if relative_change < policy.power_tol && iter > 2 {
            break;
        }
    }
    Ok(1.0 / mu.sqrt())
}

/// Principal angles between two subspaces of the same ambient space, in
/// ascending order (arccos of the descending singular values of u* v),
/// clamped to [0, pi/2]. Returns min(dim u, dim v) angles.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    principal_angles_with(u, v, &NumericPolicy::default())
}

pub fn principal_angles_with(
    u: &Subspace,
    v: &Subspace,
    policy: &NumericPolicy,
) -> Result<Vec<f64>> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "ambient {} vs {}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    let count = u.dim().min(v.dim());
    if count == 0 {
        return Ok(Vec::new());
    }
    // cosines from u* v; arccos is ill-conditioned near 0 angle, so small
    // angles are recomputed from the sine route (I - u u*) v
    let m = &u.frame().adjoint() * v.frame();
    let gram = &m.adjoint() * &m;
    let (cos_eigs, _) = hermitian_eigen_with(&gram, policy)?;
    let cosines: Vec<f64> = cos_eigs
        .iter()
        .rev()
        .take(count)
        .map(|&l| l.max(0.0).sqrt().clamp(0.0, 1.0))
        .collect(); // descending
    let residual = v.frame() - &u.frame().matmul(&m);
    let res_gram = &residual.adjoint() * &residual;
    let (sin_eigs, _) = hermitian_eigen_with(&res_gram, policy)?;
    let sines: Vec<f64> = sin_eigs
        .iter()
        .take(count)
        .map(|&l| l.max(0.0).sqrt().clamp(0.0, 1.0))
        .collect(); // ascending, aligned with descending cosines
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c >= 0.5 { s.asin() } else { c.acos() })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Largest principal angle, the subspace-equality metric.
pub fn max_principal_angle(u: &Subspace, v: &Subspace) -> Result<f64> {
    Ok(principal_angles(u, v)?.last().copied().unwrap_or(0.0))
}

/// True when the two subspaces have equal dimension and coincide within the
/// policy's angle tolerance.
pub fn subspaces_equal(u: &Subspace, v: &Subspace, tol: f64) -> Result<bool> {
    if u.dim() != v.dim() {
        return Ok(false);
    }
    Ok(max_principal_angle(u, v)? <= tol)
}
