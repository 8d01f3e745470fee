//! LU factorization with partial pivoting; the workhorse behind every
//! resolvent application.

use super::matrix::{C64, ComplexMatrix};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

/// Packed LU factors of a square matrix with row pivoting.
pub struct LuFactors {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    scale: f64,
}

impl LuFactors {
    pub fn factor(a: &ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "lu needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let threshold = policy.pivot_tol * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // pivot search down column k
            let mut best = k;
            let mut best_mag = lu[(k, k)].norm();
            for r in k + 1..n {
                let mag = lu[(r, k)].norm();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag < threshold {
                return Err(Error::Singular { pivot: best_mag, threshold });
            }
            if best != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(best, c)];
                    lu[(best, c)] = tmp;
                }
                perm.swap(k, best);
            }
            let pivot = lu[(k, k)];
            for r in k + 1..n {
                let factor = lu[(r, k)] / pivot;
                lu[(r, k)] = factor;
                for c in k + 1..n {
                    let sub = factor * lu[(k, c)];
                    lu[(r, c)] -= sub;
                }
            }
        }
        Ok(LuFactors { lu, perm, scale })
    }

    pub fn order(&self) -> usize {
        self.lu.rows()
    }

    /// Solves a x = rhs for each column of rhs.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.order();
        if rhs.rows() != n {
            return Err(Error::ShapeMismatch(format!(
                "rhs has {} rows, operator order is {}",
                rhs.rows(),
                n
            )));
        }
        let mut x = ComplexMatrix::zeros(n, rhs.cols());
        for col in 0..rhs.cols() {
            let mut b: Vec<C64> = (0..n).map(|r| rhs[(self.perm[r], col)]).collect();
            // forward substitution, unit lower triangle
            for r in 1..n {
                for c in 0..r {
                    let sub = self.lu[(r, c)] * b[c];
                    b[r] -= sub;
                }
            }
            // back substitution
            for r in (0..n).rev() {
                for c in r + 1..n {
                    let sub = self.lu[(r, c)] * b[c];
                    b[r] -= sub;
                }
                b[r] /= self.lu[(r, r)];
            }
            x.set_column(col, &b);
        }
        Ok(x)
    }

    /// Solves a* x = rhs, reusing the same factorization.
    pub fn solve_adjoint(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.order();
        if rhs.rows() != n {
            return Err(Error::ShapeMismatch("adjoint solve rhs rows".into()));
        }
        // a = P^T L U, so a* = U* L* P and a* x = b  <=>  x = P^T (L*)^-1 (U*)^-1 b.
        let mut x = ComplexMatrix::zeros(n, rhs.cols());
        for col in 0..rhs.cols() {
            let mut b = rhs.column(col);
            // (U*)^{-1}: forward substitution with conjugated pivots
            for r in 0..n {
                for c in 0..r {
                    let sub = self.lu[(c, r)].conj() * b[c];
                    b[r] -= sub;
                }
                b[r] /= self.lu[(r, r)].conj();
            }
            // (L*)^{-1}: back substitution, unit diagonal
            for r in (0..n).rev() {
                for c in r + 1..n {
                    let sub = self.lu[(c, r)].conj() * b[c];
                    b[r] -= sub;
                }
            }
            let mut out = vec![C64::new(0.0, 0.0); n];
            for r in 0..n {
                out[self.perm[r]] = b[r];
            }
            x.set_column(col, &out);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve(&ComplexMatrix::identity(self.order()))
    }

    pub fn input_scale(&self) -> f64 {
        self.scale
    }
}

/// Solves `a x = rhs` by partial-pivoting LU.
pub fn lu_solve(a: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    lu_solve_with(a, rhs, &NumericPolicy::default())
}

pub fn lu_solve_with(
    a: &ComplexMatrix,
    rhs: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    LuFactors::factor(a, policy)?.solve(rhs)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    LuFactors::factor(a, &NumericPolicy::default())?.inverse()
}
