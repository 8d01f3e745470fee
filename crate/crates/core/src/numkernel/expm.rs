//! Matrix exponential by scaling and squaring around a Taylor core.

use super::matrix::ComplexMatrix;
use super::norms::op_norm;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Hard cap on the accepted input norm; callers with larger generators must
/// subdivide the interval themselves.
pub const EXP_NORM_CAP: f64 = 50.0;

/// exp(a) for square `a` with relative accuracy around 1e-10 for norms up to
/// the cap. Scaling brings the norm below 1/4, the Taylor series then runs to
/// machine precision, and repeated squaring undoes the scaling.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("matrix_exp needs a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let norm = op_norm(a)?;
    if norm > EXP_NORM_CAP {
        return Err(Error::NormTooLarge(norm, EXP_NORM_CAP));
    }
    let squarings = if norm <= 0.25 { 0 } else { (norm / 0.25).log2().ceil() as u32 };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));

    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..64 {
        term = term.matmul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        result = &result + &term;
        if term.max_abs() <= 1e-18 * result.max_abs().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result.validate_finite()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    #[test]
    fn exp_zero_is_identity() {
        let e = matrix_exp(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert!((&e - &ComplexMatrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn exp_diag_ln2() {
        let a = ComplexMatrix::diag_real(&[LN_2, 0.0]);
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)] - C::new(2.0, 0.0)).norm() < 1e-12);
        assert!((e[(1, 1)] - C::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exp_rotation_generator() {
        // exp([[0,-pi/2],[pi/2,0]]) is the quarter-turn [[0,-1],[1,0]]
        let a = ComplexMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(-FRAC_PI_2, 0.0)],
            vec![C::new(FRAC_PI_2, 0.0), C::new(0.0, 0.0)],
        ]);
        let e = matrix_exp(&a).unwrap();
        let want = ComplexMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
        ]);
        assert!((&e - &want).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_norm() {
        let a = ComplexMatrix::diag_real(&[60.0]);
        assert!(matches!(matrix_exp(&a), Err(Error::NormTooLarge(..))));
    }
}
