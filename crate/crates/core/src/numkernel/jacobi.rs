//! Cyclic Jacobi eigendecomposition for Hermitian matrices, plus the
//! functional calculus built on it (square roots, Riesz-type transforms,
//! signatures). No general non-Hermitian eigensolver exists in this crate.

use super::matrix::{C64, ComplexMatrix, vec_norm};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

/// Eigenvalues (ascending) and a unitary eigenvector matrix of a Hermitian
/// matrix, by cyclic Jacobi sweeps with complex rotations.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    hermitian_eigen_with(h, &NumericPolicy::default())
}

pub fn hermitian_eigen_with(
    h: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch("hermitian_eigen needs a square matrix".into()));
    }
    let n = h.rows();
    let scale = h.max_abs();
    let defect = h.hermitian_defect();
    if defect > policy.herm_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { defect, tol: policy.herm_tol * scale });
    }
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }

    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let off_tol = 1e-15 * a.frobenius_norm().max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 60;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= off_tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= off_tol / (n as f64) {
                    continue;
                }
                // phase so the 2x2 block becomes real symmetric
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // unitary W: W[p][p]=c, W[p][q]=s, W[q][p]=-s/phase*, W[q][q]=c/phase*
                let wc = C64::new(c, 0.0);
                let ws = C64::new(s, 0.0);
                let phase_conj = phase.conj();
                // right multiplication a <- a W, v <- v W
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = wc * arp - ws * phase_conj * arq;
                    a[(r, q)] = ws * arp + wc * phase_conj * arq;
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = wc * vrp - ws * phase_conj * vrq;
                    v[(r, q)] = ws * vrp + wc * phase_conj * vrq;
                }
                // left multiplication a <- W* a
                for col in 0..n {
                    let apc = a[(p, col)];
                    let aqc = a[(q, col)];
                    a[(p, col)] = wc * apc - ws * phase * aqc;
                    a[(q, col)] = ws * apc + wc * phase * aqc;
                }
                // keep the block exactly Hermitian against drift
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_columns(
        n,
        &order.iter().map(|&i| v.column(i)).collect::<Vec<_>>(),
    );

    // residual contract: ||h v - lambda v|| <= herm_tol * ||h|| per pair
    let cap = policy.herm_tol * scale.max(f64::MIN_POSITIVE);
    for (k, &lam) in eigenvalues.iter().enumerate() {
        let col = vectors.column(k);
        let hv = h.apply(&col);
        let residual: Vec<C64> =
            hv.iter().zip(&col).map(|(a, b)| a - C64::new(lam, 0.0) * b).collect();
        let r = vec_norm(&residual);
        if r > cap * 10.0 {
            return Err(Error::NoConvergence(r, MAX_SWEEPS));
        }
    }
    Ok((eigenvalues, vectors))
}

/// Applies a real scalar function to a Hermitian matrix through its
/// eigendecomposition.
pub fn hermitian_fn(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (eigenvalues, v) = hermitian_eigen(h)?;
    let d = ComplexMatrix::diag_real(&eigenvalues.iter().map(|&l| f(l)).collect::<Vec<_>>());
    Ok(&(&v * &d) * &v.adjoint())
}

/// Hermitian square root of a positive semi-definite matrix.
pub fn hermitian_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_fn(h, |l| l.max(0.0).sqrt())
}

/// Inverse Hermitian square root; fails on eigenvalues at or below the floor.
pub fn hermitian_inv_sqrt(h: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let (eigenvalues, v) = hermitian_eigen(h)?;
    if let Some(&bad) = eigenvalues.iter().find(|&&l| l <= floor) {
        return Err(Error::NotPositive(format!("eigenvalue {bad:.3e} at floor {floor:.1e}")));
    }
    let d = ComplexMatrix::diag_real(
        &eigenvalues.iter().map(|&l| 1.0 / l.sqrt()).collect::<Vec<_>>(),
    );
    Ok(&(&v * &d) * &v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_is_sorted_ascending() {
        let h = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let (vals, _) = hermitian_eigen(&h).unwrap();
        assert_eq!(vals, vec![-1.0, 1.0]);
    }

    #[test]
    fn identity_eigenvalues() {
        let h = ComplexMatrix::identity(3);
        let (vals, _) = hermitian_eigen(&h).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_closed_form() {
        // [[0,1],[1,0]] has eigenpairs (-1, (1,-1)/sqrt 2), (1, (1,1)/sqrt 2)
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let v0 = vecs.column(0);
        // components of the -1 eigenvector have opposite sign
        assert!((v0[0] + v0[1]).norm() < 1e-10);
    }

    #[test]
    fn complex_hermitian_residuals() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.5, 1.5), c(0.0, -0.7)],
            vec![c(0.5, -1.5), c(-1.0, 0.0), c(0.3, 0.0)],
            vec![c(0.0, 0.7), c(0.3, 0.0), c(0.4, 0.0)],
        ]);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        for (k, &val) in vals.iter().enumerate() {
            let col = vecs.column(k);
            let hv = h.apply(&col);
            let res: Vec<C64> =
                hv.iter().zip(&col).map(|(a, b)| a - C64::new(val, 0.0) * b).collect();
            assert!(vec_norm(&res) < 1e-10 * h.max_abs());
        }
        // unitarity of the eigenvector matrix
        let g = &vecs.adjoint() * &vecs;
        assert!((&g - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(matches!(hermitian_eigen(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_squares_back() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.3, 0.4)],
            vec![c(0.3, -0.4), c(1.0, 0.0)],
        ]);
        let s = hermitian_sqrt(&h).unwrap();
        assert!((&(&s * &s) - &h).max_abs() < 1e-11);
    }
}
