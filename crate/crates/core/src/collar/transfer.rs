//! Kernel transfer matrices: the x-propagator of `u' = -M(x) u` across the
//! cylinder, integrated by RK4 with step halving, and the UCP rank tests
//! built on it.

use super::{CollarOperator, Section};
use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix, Subspace, null_space, orthonormalize_with};
use crate::policy::NumericPolicy;

/// Which boundary circle a trace condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySelector {
    /// The circle at `x = lo`.
    Start,
    /// The circle at `x = hi`.
    End,
    Both,
}

/// Transfer matrix with the Cauchy-data frame it generates.
#[derive(Debug, Clone)]
pub struct TransferResult {
    /// Propagator `T(hi, lo)` of the kernel ODE.
    pub transfer: ComplexMatrix,
    /// Orthonormalized stacked frame `[Id; T]`: the Cauchy data space of
    /// interior solutions inside `L^2(S_lo) + L^2(S_hi)`.
    pub cauchy_data: Subspace,
    /// Steps used on the accepted refinement level.
    pub steps: usize,
    /// Last correction between refinement levels.
    pub correction: f64,
}

fn rk4_transfer(
    d: &CollarOperator,
    steps: usize,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    let dim = d.sigma_dim();
    let h = d.length() / steps as f64;
    let mut u = ComplexMatrix::identity(dim);
    let rhs = |x: f64, m: &ComplexMatrix, policy: &NumericPolicy| -> Result<ComplexMatrix> {
        Ok(d.kernel_coefficient(x, policy)?.matmul(m).scale_real(-1.0))
    };
    let mut x = d.lo();
    for _ in 0..steps {
        let k1 = rhs(x, &u, policy)?;
        let k2 = rhs(x + 0.5 * h, &(&u + &k1.scale_real(0.5 * h)), policy)?;
        let k3 = rhs(x + 0.5 * h, &(&u + &k2.scale_real(0.5 * h)), policy)?;
        let k4 = rhs(x + h, &(&u + &k3.scale_real(h)), policy)?;
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
        u = &u + &incr.scale_real(h / 6.0);
        x += h;
    }
    u.validate_finite()?;
    Ok(u)
}

/// Integrates the kernel ODE from `lo` to `hi`, halving the step until the
/// transfer stabilizes at the policy tolerance.
pub fn kernel_transfer(d: &CollarOperator, policy: &NumericPolicy) -> Result<TransferResult> {
    let mut steps = (d.grid().len() - 1).max(4);
    let mut current = rk4_transfer(d, steps, policy)?;
    let mut correction = f64::INFINITY;
    for _ in 0..policy.transfer_max_halvings {
        let finer = rk4_transfer(d, steps * 2, policy)?;
        correction = (&finer - &current).max_abs();
        current = finer;
        steps *= 2;
        if correction <= policy.transfer_tol * current.max_abs().max(1.0) {
            let dim = d.sigma_dim();
            let stacked = ComplexMatrix::identity(dim).vcat(&current);
            let cauchy_data = orthonormalize_with(&stacked, policy);
            return Ok(TransferResult {
                transfer: current,
                cauchy_data,
                steps,
                correction,
            });
        }
    }
    let _ = correction;
    Err(Error::StepLimit(policy.transfer_max_halvings))
}

/// Dimension of kernel elements whose trace vanishes on the selected
/// boundary part, computed by a rank test on the propagated trace map.
pub fn ucp_defect_from_transfer(
    transfer: &ComplexMatrix,
    which: BoundarySelector,
    policy: &NumericPolicy,
) -> Result<usize> {
    let dim = transfer.rows();
    let id = ComplexMatrix::identity(dim);
    let map = match which {
        BoundarySelector::Start => id,
        BoundarySelector::End => transfer.clone(),
        BoundarySelector::Both => id.vcat(transfer),
    };
    Ok(null_space(&map, policy)?.dim())
}

/// UCP defect of the collar operator on the selected boundary part; always
/// computed by the rank test, never assumed.
pub fn ucp_defect(
    d: &CollarOperator,
    which: BoundarySelector,
    policy: &NumericPolicy,
) -> Result<usize> {
    let t = kernel_transfer(d, policy)?;
    ucp_defect_from_transfer(&t.transfer, which, policy)
}

/// Transfer matrices from `lo` to each requested station, by one RK4 march
/// with fixed substeps between consecutive stations.
pub fn transfer_to_stations(
    d: &CollarOperator,
    stations: &[f64],
    policy: &NumericPolicy,
) -> Result<Vec<ComplexMatrix>> {
    let dim = d.sigma_dim();
    let mut out = Vec::with_capacity(stations.len());
    let mut sorted: Vec<(usize, f64)> = stations.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    for &(_, x) in &sorted {
        if x < d.lo() - 1e-12 || x > d.hi() + 1e-12 {
            return Err(Error::GridInvalid(format!("station {x} outside the collar")));
        }
    }
    let mut results = vec![ComplexMatrix::identity(dim); stations.len()];
    let mut u = ComplexMatrix::identity(dim);
    let mut x_cur = d.lo();
    let substeps_per_unit = 64.0 / d.length().max(1e-9);
    for &(orig_idx, x) in &sorted {
        if x > x_cur + 1e-14 {
            let steps = ((x - x_cur) * substeps_per_unit).ceil() as usize + 4;
            let h = (x - x_cur) / steps as f64;
            for k in 0..steps {
                let xs = x_cur + k as f64 * h;
                let rhs = |y: f64, m: &ComplexMatrix| -> Result<ComplexMatrix> {
                    Ok(d.kernel_coefficient(y, policy)?.matmul(m).scale_real(-1.0))
                };
                let k1 = rhs(xs, &u)?;
                let k2 = rhs(xs + 0.5 * h, &(&u + &k1.scale_real(0.5 * h)))?;
                let k3 = rhs(xs + 0.5 * h, &(&u + &k2.scale_real(0.5 * h)))?;
                let k4 = rhs(xs + h, &(&u + &k3.scale_real(h)))?;
                let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
                u = &u + &incr.scale_real(h / 6.0);
            }
            x_cur = x;
        }
        results[orig_idx] = u.clone();
    }
    out.extend(results);
    Ok(out)
}

/// Propagates an initial trace through the kernel ODE, sampling on the
/// operator grid: the kernel element with `u(lo) = a`.
pub fn propagate_kernel_element(
    d: &CollarOperator,
    a: &[C64],
    policy: &NumericPolicy,
) -> Result<Section> {
    let dim = d.sigma_dim();
    if a.len() != dim {
        return Err(Error::ShapeMismatch("initial trace dimension".into()));
    }
    // march between grid nodes with enough RK4 substeps per interval
    let substeps = 16;
    let mut values = Vec::with_capacity(d.grid().len());
    let mut u: Vec<C64> = a.to_vec();
    values.push(u.clone());
    let rhs = |x: f64, v: &[C64]| -> Result<Vec<C64>> {
        let m = d.kernel_coefficient(x, policy)?;
        Ok(m.apply(v).into_iter().map(|z| -z).collect())
    };
    let grid = d.grid().to_vec();
    for w in grid.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let h = (x1 - x0) / substeps as f64;
        let mut x = x0;
        for _ in 0..substeps {
            let k1 = rhs(x, &u)?;
            let u2: Vec<C64> = u.iter().zip(&k1).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k2 = rhs(x + 0.5 * h, &u2)?;
            let u3: Vec<C64> = u.iter().zip(&k2).map(|(a, k)| a + k * (0.5 * h)).collect();
            let k3 = rhs(x + 0.5 * h, &u3)?;
            let u4: Vec<C64> = u.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
            let k4 = rhs(x + h, &u4)?;
            for i in 0..dim {
                u[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            x += h;
        }
        values.push(u.clone());
    }
    Ok(Section::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circleop::TrigPoly;
    use crate::collar::fixtures::{c, i_sigma, rotation_j, selfadjoint_collar};
    use crate::collar::{CollarOperator, FiberField, TangentialField, ThetaField};
    use crate::numkernel::{max_principal_angle, vec_norm};

    /// Scalar-fiber collar with constant diagonal tangential values; the
    /// fiber must still be elliptic, so the diagonal is placed in V and the
    /// Gamma part carries i d_theta.
    fn diag_collar(policy: &NumericPolicy, values: [f64; 2], ell: f64) -> CollarOperator {
        CollarOperator::new(
            0.0,
            ell,
            9,
            2,
            2,
            FiberField::constant(rotation_j()),
            TangentialField::constant(
                TrigPoly::constant(i_sigma()),
                TrigPoly::constant(ComplexMatrix::diag_real(&[values[0], values[1]])),
            ),
            ThetaField::zero(),
            false,
            policy,
        )
        .unwrap()
    }

    #[test]
    fn zero_tangential_gives_identity_on_mode_zero() {
        // B concentrated on nonzero modes: the mode-0 block of the transfer
        // is exactly the identity when V = 0 there
        let policy = NumericPolicy::default();
        let op = selfadjoint_collar(&policy);
        let t = kernel_transfer(&op, &policy).unwrap();
        let layout = op.layout();
        let s = layout.block_start(0);
        for r in 0..2 {
            for cc in 0..2 {
                let want = if r == cc { 1.0 } else { 0.0 };
                assert!((t.transfer[(s + r, s + cc)] - c(want, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_diagonal_tangential_exponentiates() {
        // V = diag(1, -1) on every mode, Gamma contributes i sigma d_theta:
        // on mode 0 the kernel ODE reduces to u' = -diag(1,-1) u, so the
        // transfer block is diag(e^{-l}, e^{l})
        let policy = NumericPolicy::default();
        let ell = 1.0;
        let op = diag_collar(&policy, [1.0, -1.0], ell);
        let t = kernel_transfer(&op, &policy).unwrap();
        let layout = op.layout();
        let s = layout.block_start(0);
        assert!((t.transfer[(s, s)] - c((-ell).exp(), 0.0)).norm() < 1e-8);
        assert!((t.transfer[(s + 1, s + 1)] - c(ell.exp(), 0.0)).norm() < 1e-8);
        assert!(t.transfer[(s, s + 1)].norm() < 1e-9);
    }

    #[test]
    fn short_cylinder_transfer_approaches_identity() {
        let policy = NumericPolicy::default();
        let op = diag_collar(&policy, [1.0, -1.0], 1e-4);
        let t = kernel_transfer(&op, &policy).unwrap();
        assert!(
            (&t.transfer - &ComplexMatrix::identity(op.sigma_dim())).max_abs() < 2e-3
        );
    }

    #[test]
    fn cauchy_data_columns_satisfy_the_transfer_relation() {
        let policy = NumericPolicy::default();
        let op = diag_collar(&policy, [1.0, -1.0], 1.0);
        let t = kernel_transfer(&op, &policy).unwrap();
        let dim = op.sigma_dim();
        let frame = t.cauchy_data.frame();
        assert_eq!(t.cauchy_data.dim(), dim);
        for col in 0..frame.cols() {
            let full = frame.column(col);
            let (top, bottom) = full.split_at(dim);
            let propagated = t.transfer.apply(top);
            let defect: f64 = propagated
                .iter()
                .zip(bottom)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(defect <= 1e-7 * vec_norm(top).max(1e-30), "col {col}: {defect}");
        }
    }

    #[test]
    fn ucp_defect_is_zero_for_the_ode_model() {
        let policy = NumericPolicy::default();
        let op = diag_collar(&policy, [1.0, -1.0], 1.0);
        assert_eq!(ucp_defect(&op, BoundarySelector::Both, &policy).unwrap(), 0);
        assert_eq!(ucp_defect(&op, BoundarySelector::Start, &policy).unwrap(), 0);
        assert_eq!(ucp_defect(&op, BoundarySelector::End, &policy).unwrap(), 0);
    }

    #[test]
    fn injected_rank_deficient_transfer_reports_positive_defect() {
        let policy = NumericPolicy::default();
        let mut t = ComplexMatrix::identity(4);
        t[(2, 2)] = c(0.0, 0.0);
        assert_eq!(
            ucp_defect_from_transfer(&t, BoundarySelector::End, &policy).unwrap(),
            1
        );
        assert_eq!(
            ucp_defect_from_transfer(&t, BoundarySelector::Both, &policy).unwrap(),
            0
        );
    }

    #[test]
    fn propagated_element_matches_transfer_at_the_far_end() {
        let policy = NumericPolicy::default();
        let op = diag_collar(&policy, [0.7, -0.3], 1.0);
        let t = kernel_transfer(&op, &policy).unwrap();
        let dim = op.sigma_dim();
        let a: Vec<C64> = (0..dim).map(|i| c(0.1 * i as f64 + 0.2, -0.05 * i as f64)).collect();
        let u = propagate_kernel_element(&op, &a, &policy).unwrap();
        let want = t.transfer.apply(&a);
        let defect: f64 = u
            .last()
            .iter()
            .zip(&want)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(defect < 1e-8, "{defect}");
    }

    #[test]
    fn variable_coefficients_need_finer_steps_but_converge() {
        let policy = NumericPolicy::default();
        let op = CollarOperator::new(
            0.0,
            1.0,
            9,
            2,
            2,
            FiberField::constant(rotation_j()),
            TangentialField::new(
                ThetaField::constant(TrigPoly::constant(i_sigma())),
                ThetaField::chebyshev(
                    0.0,
                    1.0,
                    vec![
                        TrigPoly::constant(ComplexMatrix::diag_real(&[0.5, -0.5])),
                        TrigPoly::constant(ComplexMatrix::diag_real(&[0.3, 0.1])),
                    ],
                ),
            ),
            ThetaField::zero(),
            false,
            &policy,
        )
        .unwrap();
        let t = kernel_transfer(&op, &policy).unwrap();
        assert!(t.correction <= 1e-9 * t.transfer.max_abs().max(1.0));
        // the cauchy frame is orthonormal and spans dim columns
        assert!(t.cauchy_data.frame_defect() < 1e-10);
        let again = kernel_transfer(&op, &policy).unwrap();
        assert!(
            max_principal_angle(&t.cauchy_data, &again.cauchy_data).unwrap() < 1e-10
        );
    }
}
