//! Rank-revealing orthonormalization and the `Subspace` frame type that
//! carries Cauchy data spaces, Lagrangians and spectral subspaces.

use super::matrix::{C64, ComplexMatrix, dot, vec_norm};
use crate::error::Result;
use crate::policy::NumericPolicy;

/// Orthonormal column frame spanning a subspace of C^ambient_dim.
#[derive(Debug, Clone)]
pub struct Subspace {
    frame: ComplexMatrix,
    ambient_dim: usize,
    dropped_columns: usize,
}

impl Subspace {
    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.frame.cols()
    }

    /// Number of input columns discarded as numerically dependent; never
    /// silent, always carried with the result.
    pub fn dropped_columns(&self) -> usize {
        self.dropped_columns
    }

    /// Orthonormality defect `||frame* frame - Id||`.
    pub fn frame_defect(&self) -> f64 {
        let g = &self.frame.adjoint() * &self.frame;
        (&g - &ComplexMatrix::identity(self.dim())).max_abs()
    }

    /// Orthogonal projection matrix onto the subspace.
    pub fn projector(&self) -> ComplexMatrix {
        &self.frame * &self.frame.adjoint()
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { frame: ComplexMatrix::zeros(ambient_dim, 0), ambient_dim, dropped_columns: 0 }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            frame: ComplexMatrix::identity(ambient_dim),
            ambient_dim,
            dropped_columns: 0,
        }
    }

    /// Basis vectors e_{i} for i in `indices`.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut frame = ComplexMatrix::zeros(ambient_dim, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            frame[(i, c)] = C64::new(1.0, 0.0);
        }
        Subspace { frame, ambient_dim, dropped_columns: 0 }
    }
}

/// Orthonormalizes the columns of `cols` by modified Gram-Schmidt with greedy
/// column pivoting and one re-orthogonalization pass. Columns whose residual
/// norm falls below `rank_tol` times the leading column norm are dropped and
/// counted in the result.
pub fn orthonormalize(cols: &ComplexMatrix) -> Subspace {
    orthonormalize_with(cols, &NumericPolicy::default())
}

pub fn orthonormalize_with(cols: &ComplexMatrix, policy: &NumericPolicy) -> Subspace {
    orthonormalize_scaled(cols, policy, None)
}

/// Like `orthonormalize_with`, but ranks against an externally supplied
/// reference scale. Needed when the input may consist entirely of numerical
/// noise (columns of `Id - P` for a full projector), where the largest
/// residual column is not a meaningful reference.
pub fn orthonormalize_scaled(
    cols: &ComplexMatrix,
    policy: &NumericPolicy,
    reference_scale: Option<f64>,
) -> Subspace {
    let n = cols.rows();
    let mut remaining: Vec<Vec<C64>> = (0..cols.cols()).map(|c| cols.column(c)).collect();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut leading_norm: Option<f64> = reference_scale;
    let mut dropped = 0;

    while !remaining.is_empty() {
        // greedy pivot: take the largest remaining residual
        let (best, best_norm) = remaining
            .iter()
            .enumerate()
            .map(|(i, v)| (i, vec_norm(v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let lead = *leading_norm.get_or_insert(best_norm);
        if best_norm < policy.rank_tol * lead.max(f64::MIN_POSITIVE) {
            dropped += remaining.len();
            break;
        }
        let mut v = remaining.swap_remove(best);
        // two MGS passes keep orthogonality near machine precision
        for _ in 0..2 {
            for q in &basis {
                let coeff = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= coeff * qi;
                }
            }
        }
        let norm = vec_norm(&v);
        if norm < policy.rank_tol * lead.max(f64::MIN_POSITIVE) {
            dropped += 1;
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= C64::new(norm, 0.0);
        }
        // deflate the survivors once against the new direction
        for w in remaining.iter_mut() {
            let coeff = dot(&v, w);
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi -= coeff * vi;
            }
        }
        basis.push(v);
    }

    Subspace {
        frame: ComplexMatrix::from_columns(n, &basis),
        ambient_dim: n,
        dropped_columns: dropped,
    }
}

/// Orthonormal basis of the orthogonal complement of `s`.
pub fn orthogonal_complement(s: &Subspace, policy: &NumericPolicy) -> Subspace {
    let n = s.ambient_dim();
    let p = s.projector();
    let residual = &ComplexMatrix::identity(n) - &p;
    // projector entries are O(1), so rank against the ambient scale
    let mut c = orthonormalize_scaled(&residual, policy, Some(1.0));
    debug_assert_eq!(c.dim(), n - s.dim());
    c.dropped_columns = 0;
    c
}

/// Orthonormal basis of the null space of `m` at the policy's subspace rank
/// tolerance, via the Hermitian eigendecomposition of m* m.
pub fn null_space(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<Subspace> {
    let gram = &m.adjoint() * m;
    let (eigenvalues, vectors) = super::jacobi::hermitian_eigen_with(&gram, policy)?;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    // the squared tolerance can dip below the Jacobi roundoff floor of the
    // Gram matrix, so genuine null directions must not be rejected there
    let threshold = (policy.subspace_rank_tol * scale)
        .powi(2)
        .max(1e-13 * gram.max_abs());
    let mut cols = Vec::new();
    for (i, &lam) in eigenvalues.iter().enumerate() {
        if lam.abs() <= threshold {
            cols.push(vectors.column(i));
        }
    }
    Ok(Subspace {
        frame: ComplexMatrix::from_columns(m.cols(), &cols),
        ambient_dim: m.cols(),
        dropped_columns: 0,
    })
}

/// Numerical rank at the policy's subspace tolerance.
pub fn rank(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<usize> {
    Ok(m.cols() - null_space(m, policy)?.dim())
}

/// Least-squares solve of the (possibly overdetermined) system `m x = b`
/// through the normal equations. Returns (solution, residual norm).
pub fn least_squares(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let mt = m.adjoint();
    let gram = &mt * m;
    let rhs = &mt * b;
    let x = super::lu::lu_solve(&gram, &rhs)?;
    let residual = (&(m * &x) - b).frobenius_norm();
    Ok((x, residual))
}
