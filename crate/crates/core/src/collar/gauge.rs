//! Metric gauge: the multiplication operator `(rho theta)^{-1/2}` that turns
//! a change of volume density and bundle metric into an isometry.

use super::{FiberField, Section};
use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix, dot, hermitian_eigen_with, hermitian_inv_sqrt};
use crate::policy::NumericPolicy;

/// Pointwise multiplication operator `Psi(x) = (rho(x) theta(x))^{-1/2}`
/// together with the weight it inverts.
#[derive(Clone)]
pub struct MetricGauge {
    psi: FiberField,
    weight: FiberField,
}

impl MetricGauge {
    pub fn psi_at(&self, x: f64) -> ComplexMatrix {
        self.psi.eval(x)
    }

    pub fn weight_at(&self, x: f64) -> ComplexMatrix {
        self.weight.eval(x)
    }

    /// Applies the gauge to a section sampled on `grid` (fiberwise across
    /// every mode).
    pub fn apply(&self, grid: &[f64], fiber_dim: usize, u: &Section) -> Section {
        let values = grid
            .iter()
            .zip(u.values())
            .map(|(&x, row)| {
                let psi = self.psi.eval(x);
                row.chunks(fiber_dim)
                    .flat_map(|chunk| psi.apply(chunk))
                    .collect::<Vec<C64>>()
            })
            .collect();
        Section::new(values)
    }

    /// Weighted inner product `<w u, v>` at one grid point, fiberwise.
    pub fn weighted_dot(&self, x: f64, fiber_dim: usize, u: &[C64], v: &[C64]) -> C64 {
        let w = self.weight.eval(x);
        u.chunks(fiber_dim)
            .zip(v.chunks(fiber_dim))
            .map(|(a, b)| dot(&w.apply(a), b))
            .sum()
    }
}

/// Builds the gauge from a positive scalar density field and a positive
/// definite Hermitian fiber field, verifying the isometry on sample data.
pub fn metric_gauge(
    rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
    theta: FiberField,
    sample_grid: &[f64],
    fiber_dim: usize,
    policy: &NumericPolicy,
) -> Result<MetricGauge> {
    // validate positivity on the sample grid
    for &x in sample_grid {
        let r = rho(x);
        // NaN-safe positivity check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r > 0.0) {
            return Err(Error::NotPositive(format!("rho({x}) = {r}")));
        }
        let th = theta.eval(x);
        let defect = th.hermitian_defect();
        if defect > 1e-10 * th.max_abs().max(1.0) {
            return Err(Error::NotPositive(format!(
                "theta({x}) is not Hermitian (defect {defect:.3e})"
            )));
        }
        let (eigenvalues, _) = hermitian_eigen_with(&th, policy)?;
        if eigenvalues.first().copied().unwrap_or(-1.0) <= 0.0 {
            return Err(Error::NotPositive(format!("theta({x}) is not positive definite")));
        }
    }
    let rho_arc = std::sync::Arc::new(rho);
    let (theta2, rho2) = (theta.clone(), rho_arc.clone());
    let psi = FiberField::new(move |x| {
        let w = theta2.eval(x).scale_real(rho2(x));
        hermitian_inv_sqrt(&w, 0.0).expect("validated positive definite")
    });
    let weight = FiberField::new(move |x| theta.eval(x).scale_real(rho_arc(x)));
    let gauge = MetricGauge { psi, weight };

    // isometry check on deterministic test vectors at the sample nodes
    for (i, &x) in sample_grid.iter().enumerate() {
        let u: Vec<C64> = (0..fiber_dim)
            .map(|k| C64::new(0.3 + k as f64 + i as f64 * 0.1, 0.2 * k as f64 - 0.4))
            .collect();
        let v: Vec<C64> = (0..fiber_dim)
            .map(|k| C64::new(1.0 - 0.2 * k as f64, 0.1 * (i as f64 + 1.0)))
            .collect();
        let psi_x = gauge.psi_at(x);
        let lhs = gauge.weighted_dot(x, fiber_dim, &psi_x.apply(&u), &psi_x.apply(&v));
        let rhs = dot(&u, &v);
        if (lhs - rhs).norm() > 1e-9 * (rhs.norm() + 1.0) {
            return Err(Error::NotPositive(format!(
                "gauge is not an isometry at x = {x}: defect {:.3e}",
                (lhs - rhs).norm()
            )));
        }
    }
    Ok(gauge)
}
