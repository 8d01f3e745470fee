//! Operators on the model cylinder `[lo, hi] x S^1` in the normal form
//! `D = J(x)(d/dx + B(x)) + 1/2 J'(x) + C(x)`: sampled coefficient fields,
//! the formal adjoint, Green's formula, kernel transfer matrices and the
//! metric gauge.
//!
//! `J(x)` is a theta-independent invertible fiber matrix acting identically
//! on every Fourier mode; `B(x)` is a first-order circle operator and `C(x)`
//! an order-zero multiplication field. The x-differentiation stack is fixed:
//! 4th-order finite differences at the stored grid spacing, one-sided at the
//! interval ends; x-quadrature is composite Simpson on the odd-count grid.

pub mod gauge;
pub mod green;
pub mod transfer;

use crate::circleop::{CircleOperator, ModeLayout, TrigPoly, parametric_ellipticity_check};
use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix, smallest_singular_value, vec_norm};
use crate::policy::NumericPolicy;
use std::sync::Arc;

pub use gauge::{MetricGauge, metric_gauge};
pub use green::{greens_defect, inner_product, section_norm};
pub use transfer::{
    BoundarySelector, TransferResult, kernel_transfer, propagate_kernel_element,
    transfer_to_stations, ucp_defect, ucp_defect_from_transfer,
};

/// Smooth field of fiber matrices over x.
#[derive(Clone)]
pub struct FiberField(Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>);

impl FiberField {
    pub fn new(f: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        FiberField(Arc::new(f))
    }

    pub fn constant(m: ComplexMatrix) -> Self {
        FiberField::new(move |_| m.clone())
    }

    /// Chebyshev series on [lo, hi] with matrix coefficients.
    pub fn chebyshev(lo: f64, hi: f64, coeffs: Vec<ComplexMatrix>) -> Self {
        FiberField::new(move |x| eval_chebyshev_matrix(&coeffs, lo, hi, x))
    }

    pub fn eval(&self, x: f64) -> ComplexMatrix {
        (self.0)(x)
    }
}

/// Smooth field of order-zero theta coefficients over x.
#[derive(Clone)]
pub struct ThetaField(Arc<dyn Fn(f64) -> TrigPoly + Send + Sync>);

impl ThetaField {
    pub fn new(f: impl Fn(f64) -> TrigPoly + Send + Sync + 'static) -> Self {
        ThetaField(Arc::new(f))
    }

    pub fn zero() -> Self {
        ThetaField::new(|_| TrigPoly::zero())
    }

    pub fn constant(p: TrigPoly) -> Self {
        ThetaField::new(move |_| p.clone())
    }

    pub fn chebyshev(lo: f64, hi: f64, coeffs: Vec<TrigPoly>) -> Self {
        ThetaField::new(move |x| eval_chebyshev_trig(&coeffs, lo, hi, x))
    }

    pub fn eval(&self, x: f64) -> TrigPoly {
        (self.0)(x)
    }
}

/// Smooth field of tangential circle-operator coefficients `(Gamma, V)`.
#[derive(Clone)]
pub struct TangentialField {
    gamma: ThetaField,
    v: ThetaField,
}

impl TangentialField {
    pub fn new(gamma: ThetaField, v: ThetaField) -> Self {
        TangentialField { gamma, v }
    }

    pub fn constant(gamma: TrigPoly, v: TrigPoly) -> Self {
        TangentialField { gamma: ThetaField::constant(gamma), v: ThetaField::constant(v) }
    }

    pub fn gamma_field(&self) -> &ThetaField {
        &self.gamma
    }

    pub fn v_field(&self) -> &ThetaField {
        &self.v
    }

    pub fn eval(&self, x: f64) -> (TrigPoly, TrigPoly) {
        (self.gamma.eval(x), self.v.eval(x))
    }

    pub fn operator_at(&self, x: f64, m: usize, n: i64) -> Result<CircleOperator> {
        let (gamma, v) = self.eval(x);
        CircleOperator::assemble(gamma, v, m, n)
    }
}

fn chebyshev_values(t: f64, count: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(count);
    for k in 0..count {
        let v = match k {
            0 => 1.0,
            1 => t,
            _ => 2.0 * t * vals[k - 1] - vals[k - 2],
        };
        vals.push(v);
    }
    vals
}

fn eval_chebyshev_matrix(coeffs: &[ComplexMatrix], lo: f64, hi: f64, x: f64) -> ComplexMatrix {
    let t = (2.0 * x - lo - hi) / (hi - lo);
    let tk = chebyshev_values(t, coeffs.len());
    let mut acc = ComplexMatrix::zeros(coeffs[0].rows(), coeffs[0].cols());
    for (c, &v) in coeffs.iter().zip(&tk) {
        acc = &acc + &c.scale_real(v);
    }
    acc
}

fn eval_chebyshev_trig(coeffs: &[TrigPoly], lo: f64, hi: f64, x: f64) -> TrigPoly {
    let t = (2.0 * x - lo - hi) / (hi - lo);
    let tk = chebyshev_values(t, coeffs.len());
    let mut acc = TrigPoly::zero();
    for (c, &v) in coeffs.iter().zip(&tk) {
        acc = acc.add(&c.scale(C64::new(v, 0.0)));
    }
    acc
}

/// Discrete section: one Fourier-coefficient stack per x-grid point.
#[derive(Debug, Clone)]
pub struct Section {
    values: Vec<Vec<C64>>,
}

impl Section {
    pub fn new(values: Vec<Vec<C64>>) -> Self {
        Section { values }
    }

    pub fn from_fn(grid: &[f64], dim: usize, mut f: impl FnMut(f64) -> Vec<C64>) -> Self {
        let values: Vec<Vec<C64>> = grid
            .iter()
            .map(|&x| {
                let v = f(x);
                assert_eq!(v.len(), dim);
                v
            })
            .collect();
        Section { values }
    }

    pub fn zeros(points: usize, dim: usize) -> Self {
        Section { values: vec![vec![C64::new(0.0, 0.0); dim]; points] }
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &[C64] {
        &self.values[i]
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn first(&self) -> &[C64] {
        self.values.first().expect("nonempty section")
    }

    pub fn last(&self) -> &[C64] {
        self.values.last().expect("nonempty section")
    }

    /// Boundary trace `(u(lo), u(hi))` as one stacked vector.
    pub fn trace(&self) -> Vec<C64> {
        let mut t = self.first().to_vec();
        t.extend_from_slice(self.last());
        t
    }

    pub fn scale(&self, z: C64) -> Section {
        Section {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|&v| v * z).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Section) -> Section {
        assert_eq!(self.points(), other.points());
        Section {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Section) -> Section {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

/// Collar operator `D = J(x)(d/dx + B(x)) + 1/2 J'(x) + C(x)` with sampled
/// coefficient fields on a uniform odd-count grid over `[lo, hi]`.
#[derive(Clone)]
pub struct CollarOperator {
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    fiber_dim: usize,
    truncation: i64,
    j: FiberField,
    b: TangentialField,
    c: ThetaField,
    selfadjoint: bool,
}

impl CollarOperator {
    /// Validates invertibility of J on the grid, parametric ellipticity of
    /// the tangential symbol over x, and (when flagged) the formal
    /// selfadjointness relations.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lo: f64,
        hi: f64,
        grid_points: usize,
        fiber_dim: usize,
        truncation: i64,
        j: FiberField,
        b: TangentialField,
        c: ThetaField,
        selfadjoint: bool,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        // NaN-safe: rejects NaN bounds as well as hi <= lo
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(hi > lo) {
            return Err(Error::GridInvalid("need hi > lo".into()));
        }
        if grid_points < 5 || grid_points.is_multiple_of(2) {
            return Err(Error::GridInvalid(format!(
                "grid needs an odd point count >= 5, got {grid_points}"
            )));
        }
        let grid: Vec<f64> = (0..grid_points)
            .map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64)
            .collect();
        let op = CollarOperator {
            lo,
            hi,
            grid,
            fiber_dim,
            truncation,
            j,
            b,
            c,
            selfadjoint,
        };
        op.validate(policy)?;
        Ok(op)
    }

    fn validate(&self, policy: &NumericPolicy) -> Result<()> {
        for &x in &self.grid {
            let jx = self.j.eval(x);
            if jx.rows() != self.fiber_dim || jx.cols() != self.fiber_dim {
                return Err(Error::ShapeMismatch("J fiber dimension".into()));
            }
            let sv = smallest_singular_value(&jx, policy)?;
            if sv < policy.invertibility_floor {
                return Err(Error::NotPositive(format!(
                    "J({x:.4}) has smallest singular value {sv:.3e}"
                )));
            }
        }
        // ellipticity of the tangential symbol at both ends and midpoint
        for &x in [self.lo, 0.5 * (self.lo + self.hi), self.hi].iter() {
            let bx = self.b.operator_at(x, self.fiber_dim, self.truncation)?;
            let report = parametric_ellipticity_check(&bx, 0.2, 32, 64, policy)?;
            if !report.ok {
                return Err(Error::NotPositive(format!(
                    "tangential symbol degenerates at x = {x:.4}: min sv {:.3e}",
                    report.min_singular_value
                )));
            }
        }
        if self.selfadjoint {
            self.check_selfadjoint_relations(1e-9)?;
        }
        Ok(())
    }

    /// Field-level residuals of `J* = -J` and `(JB + C) = (-B*J + C*)`,
    /// checked coefficient by coefficient at every grid node.
    pub fn check_selfadjoint_relations(&self, tol: f64) -> Result<()> {
        for &x in &self.grid {
            let jx = self.j.eval(x);
            let scale = jx.max_abs().max(1.0);
            let skew_defect = (&jx.adjoint() + &jx).max_abs();
            if skew_defect > tol * scale {
                return Err(Error::RelationViolated(skew_defect));
            }
            let (gamma, v) = self.b.eval(x);
            let cx = self.c.eval(x);
            // B* = -Gamma* d_theta - (Gamma*)' + V*
            let gamma_adj = gamma.adjoint();
            let v_adj = v.adjoint();
            // first-order part: J Gamma - Gamma* J must vanish
            let first = gamma
                .left_mul(&jx)
                .add(&gamma_adj.right_mul(&jx).scale(C64::new(-1.0, 0.0)));
            // zeroth part: J V + C + (V* - (Gamma*)') J - C*
            let zero = v
                .left_mul(&jx)
                .add(&cx)
                .add(&v_adj.right_mul(&jx))
                .add(&gamma_adj.derivative().right_mul(&jx).scale(C64::new(-1.0, 0.0)))
                .add(&cx.adjoint().scale(C64::new(-1.0, 0.0)));
            let defect = first.max_abs().max(zero.max_abs());
            if defect > tol * scale.max(gamma.max_abs() + v.max_abs() + cx.max_abs()) {
                return Err(Error::RelationViolated(defect));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> ModeLayout {
        ModeLayout::new(self.fiber_dim, self.truncation)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn sigma_dim(&self) -> usize {
        self.layout().dim()
    }

    pub fn is_selfadjoint_flagged(&self) -> bool {
        self.selfadjoint
    }

    pub fn j_field(&self) -> &FiberField {
        &self.j
    }

    pub fn b_field(&self) -> &TangentialField {
        &self.b
    }

    pub fn c_field(&self) -> &ThetaField {
        &self.c
    }

    /// 4th-order derivative of the J field at the stored grid spacing.
    pub fn j_prime(&self, x: f64) -> ComplexMatrix {
        let h = self.grid_spacing();
        fiber_derivative(&self.j, x, h, self.lo, self.hi)
    }

    /// Boundary matrix `J_S = diag(J(lo), -J(hi))` on the two boundary
    /// circles (the sign carries the inward orientation at the far end).
    pub fn boundary_j(&self) -> ComplexMatrix {
        let layout = self.layout();
        let j_lo = layout.expand_fiber(&self.j.eval(self.lo));
        let j_hi = layout.expand_fiber(&self.j.eval(self.hi).scale_real(-1.0));
        ComplexMatrix::block_diag(&[&j_lo, &j_hi])
    }

    /// Realized tangential operator at `x`.
    pub fn b_at(&self, x: f64) -> Result<CircleOperator> {
        self.b.operator_at(x, self.fiber_dim, self.truncation)
    }

    /// Realized zeroth+first order Sigma-part `J B + 1/2 J' + C` at `x`.
    pub fn sigma_part(&self, x: f64) -> Result<ComplexMatrix> {
        let layout = self.layout();
        let jx = layout.expand_fiber(&self.j.eval(x));
        let b = self.b_at(x)?;
        let jp = layout.expand_fiber(&self.j_prime(x).scale_real(0.5));
        let c = layout.realize_multiplication(&self.c.eval(x));
        Ok(&(&(&jx * b.realized()) + &jp) + &c)
    }

    /// Kernel ODE coefficient `M(x) = B + J^{-1}(1/2 J' + C)`: sections of
    /// the kernel satisfy `u' = -M(x) u`.
    pub fn kernel_coefficient(&self, x: f64, policy: &NumericPolicy) -> Result<ComplexMatrix> {
        let layout = self.layout();
        let jx = self.j.eval(x);
        let j_inv = crate::numkernel::lu_solve_with(
            &jx,
            &ComplexMatrix::identity(self.fiber_dim),
            policy,
        )?;
        let correction = j_inv.matmul(&self.j_prime(x).scale_real(0.5));
        let b = self.b_at(x)?;
        let c = layout.realize_multiplication(&self.c.eval(x).left_mul(&j_inv));
        Ok(&(b.realized() + &layout.expand_fiber(&correction)) + &c)
    }

    /// Applies the collar operator to a discrete section with the 4th-order
    /// finite-difference stack.
    pub fn apply(&self, u: &Section) -> Result<Section> {
        if u.points() != self.grid.len() || u.dim() != self.sigma_dim() {
            return Err(Error::ShapeMismatch(
                "section does not match the operator grid".into(),
            ));
        }
        let layout = self.layout();
        let du = section_derivative(u, self.grid_spacing());
        let mut out = Vec::with_capacity(u.points());
        for (i, &x) in self.grid.iter().enumerate() {
            let jx = layout.expand_fiber(&self.j.eval(x));
            let b = self.b_at(x)?;
            let jp = layout.expand_fiber(&self.j_prime(x).scale_real(0.5));
            let c = layout.realize_multiplication(&self.c.eval(x));
            let inner: Vec<C64> = du[i]
                .iter()
                .zip(b.realized().apply(u.at(i)))
                .map(|(d, bu)| d + bu)
                .collect();
            let mut val = jx.apply(&inner);
            let rest = (&jp + &c).apply(u.at(i));
            for (v, r) in val.iter_mut().zip(rest) {
                *v += r;
            }
            out.push(val);
        }
        Ok(Section::new(out))
    }

    /// Formal adjoint in the same normal form: `J~ = -J*`,
    /// `B~ = -(J*)^{-1} B* J*`, `C~ = C*`.
    pub fn formal_adjoint(&self, policy: &NumericPolicy) -> Result<CollarOperator> {
        let j = self.j.clone();
        let j_new = FiberField::new(move |x| j.eval(x).adjoint().scale_real(-1.0));
        let (j2, b2, m_dim) = (self.j.clone(), self.b.clone(), self.fiber_dim);
        let policy2 = *policy;
        let gamma_new = ThetaField::new(move |x| {
            let j_adj = j2.eval(x).adjoint();
            let j_adj_inv = crate::numkernel::lu_solve_with(
                &j_adj,
                &ComplexMatrix::identity(m_dim),
                &policy2,
            )
            .expect("J* invertible by construction");
            let (gamma, _) = b2.eval(x);
            // first-order part of -(J*)^{-1} B* J*: (J*)^{-1} Gamma* J*
            gamma.adjoint().left_mul(&j_adj_inv).right_mul(&j_adj)
        });
        let (j3, b3) = (self.j.clone(), self.b.clone());
        let policy3 = *policy;
        let v_new = ThetaField::new(move |x| {
            let j_adj = j3.eval(x).adjoint();
            let j_adj_inv = crate::numkernel::lu_solve_with(
                &j_adj,
                &ComplexMatrix::identity(m_dim),
                &policy3,
            )
            .expect("J* invertible by construction");
            let (gamma, v) = b3.eval(x);
            // zeroth part of -(J*)^{-1} B* J*: (J*)^{-1} ((Gamma*)' - V*) J*
            gamma
                .adjoint()
                .derivative()
                .add(&v.adjoint().scale(C64::new(-1.0, 0.0)))
                .left_mul(&j_adj_inv)
                .right_mul(&j_adj)
        });
        let c = self.c.clone();
        let c_new = ThetaField::new(move |x| c.eval(x).adjoint());
        CollarOperator::new(
            self.lo,
            self.hi,
            self.grid.len(),
            self.fiber_dim,
            self.truncation,
            j_new,
            TangentialField::new(gamma_new, v_new),
            c_new,
            self.selfadjoint,
            policy,
        )
    }

    /// Maximal field difference against another operator at shared nodes.
    pub fn field_distance(&self, other: &CollarOperator) -> f64 {
        let mut worst = 0.0f64;
        for &x in &self.grid {
            if x < other.lo - 1e-12 || x > other.hi + 1e-12 {
                continue;
            }
            worst = worst.max((&self.j.eval(x) - &other.j.eval(x)).max_abs());
            let (g1, v1) = self.b.eval(x);
            let (g2, v2) = other.b.eval(x);
            worst = worst.max(g1.add(&g2.scale(C64::new(-1.0, 0.0))).max_abs());
            worst = worst.max(v1.add(&v2.scale(C64::new(-1.0, 0.0))).max_abs());
            worst = worst.max(
                self.c
                    .eval(x)
                    .add(&other.c.eval(x).scale(C64::new(-1.0, 0.0)))
                    .max_abs(),
            );
        }
        worst
    }
}

/// 4th-order finite difference of a fiber field at spacing `h`, one-sided
/// within two steps of the interval ends.
pub fn fiber_derivative(
    field: &FiberField,
    x: f64,
    h: f64,
    lo: f64,
    hi: f64,
) -> ComplexMatrix {
    let f = |y: f64| field.eval(y);
    if x - 2.0 * h >= lo - 1e-12 && x + 2.0 * h <= hi + 1e-12 {
        // centered: (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h
        let acc = &(&f(x - 2.0 * h) - &f(x - h).scale_real(8.0))
            + &(&f(x + h).scale_real(8.0) - &f(x + 2.0 * h));
        acc.scale_real(1.0 / (12.0 * h))
    } else if x - 2.0 * h < lo - 1e-12 {
        // forward 5-point
        let acc = &(&(&f(x).scale_real(-25.0) + &f(x + h).scale_real(48.0))
            + &(&f(x + 2.0 * h).scale_real(-36.0) + &f(x + 3.0 * h).scale_real(16.0)))
            + &f(x + 4.0 * h).scale_real(-3.0);
        acc.scale_real(1.0 / (12.0 * h))
    } else {
        // backward 5-point
        let acc = &(&(&f(x).scale_real(25.0) + &f(x - h).scale_real(-48.0))
            + &(&f(x - 2.0 * h).scale_real(36.0) + &f(x - 3.0 * h).scale_real(-16.0)))
            + &f(x - 4.0 * h).scale_real(3.0);
        acc.scale_real(1.0 / (12.0 * h))
    }
}

/// 4th-order finite-difference x-derivative of a section on its grid.
#[allow(clippy::needless_range_loop)]
pub fn section_derivative(u: &Section, h: f64) -> Vec<Vec<C64>> {
    let n = u.points();
    let dim = u.dim();
    assert!(n >= 5, "derivative stencils need at least 5 grid points");
    let mut out = vec![vec![C64::new(0.0, 0.0); dim]; n];
    let scale = 1.0 / (12.0 * h);
    for i in 0..n {
        for d in 0..dim {
            let v = |k: usize| u.at(k)[d];
            out[i][d] = if i >= 2 && i + 2 < n {
                (v(i - 2) - v(i - 1) * 8.0 + v(i + 1) * 8.0 - v(i + 2)) * scale
            } else if i < 2 {
                (v(i) * -25.0 + v(i + 1) * 48.0 - v(i + 2) * 36.0 + v(i + 3) * 16.0
                    - v(i + 4) * 3.0)
                    * scale
            } else {
                (v(i) * 25.0 - v(i - 1) * 48.0 + v(i - 2) * 36.0 - v(i - 3) * 16.0
                    + v(i - 4) * 3.0)
                    * scale
            };
        }
    }
    out
}

/// Convenience: smooth test section from trig modes in theta and a
/// polynomial profile in x.
pub fn polynomial_test_section(
    op: &CollarOperator,
    mode_amplitudes: &[(i64, usize, C64)],
    poly_coeffs: &[f64],
) -> Section {
    let layout = op.layout();
    Section::from_fn(op.grid(), op.sigma_dim(), |x| {
        let p: f64 = poly_coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * x.powi(k as i32))
            .sum();
        let mut v = vec![C64::new(0.0, 0.0); op.sigma_dim()];
        for &(k, fiber_idx, amp) in mode_amplitudes {
            v[layout.block_start(k) + fiber_idx] += amp * C64::new(p, 0.0);
        }
        v
    })
}

pub fn section_norm_sup(u: &Section) -> f64 {
    u.values().iter().map(|row| vec_norm(row)).fold(0.0, f64::max)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn selfadjoint_relations_accepted() {
        let policy = NumericPolicy::default();
        let _ = selfadjoint_collar(&policy);
    }

    #[test]
    fn selfadjoint_flag_rejects_broken_relations() {
        let policy = NumericPolicy::default();
        // Gamma = i Id commutes with J instead of satisfying J Gamma = Gamma* J
        let bad = CollarOperator::new(
            0.0,
            1.0,
            9,
            2,
            2,
            FiberField::constant(rotation_j()),
            TangentialField::constant(
                TrigPoly::constant(ComplexMatrix::diag(&[c(0.0, 1.0), c(0.0, 1.0)])),
                TrigPoly::zero(),
            ),
            ThetaField::zero(),
            true,
            &policy,
        );
        assert!(matches!(bad, Err(Error::RelationViolated(_))));
    }

    #[test]
    fn adjoint_involution_on_fields() {
        let policy = NumericPolicy::default();
        let j0 = rotation_j();
        let op = CollarOperator::new(
            0.0,
            1.0,
            9,
            2,
            4,
            FiberField::chebyshev(0.0, 1.0, vec![j0.clone(), j0.scale_real(0.3)]),
            TangentialField::new(
                ThetaField::constant(TrigPoly::constant(i_sigma())),
                ThetaField::chebyshev(
                    0.0,
                    1.0,
                    vec![
                        TrigPoly::new(vec![(
                            1,
                            ComplexMatrix::diag(&[c(0.1, 0.0), c(0.0, 0.2)]),
                        )]),
                        TrigPoly::constant(ComplexMatrix::diag(&[c(0.0, 0.1), c(0.05, 0.0)])),
                    ],
                ),
            ),
            ThetaField::constant(TrigPoly::constant(ComplexMatrix::diag(&[
                c(0.2, 0.1),
                c(-0.1, 0.0),
            ]))),
            false,
            &policy,
        )
        .unwrap();
        let adj2 = op
            .formal_adjoint(&policy)
            .unwrap()
            .formal_adjoint(&policy)
            .unwrap();
        assert!(op.field_distance(&adj2) < 1e-8);
    }

    #[test]
    fn formally_selfadjoint_normal_form_is_fixed_by_adjoint() {
        let policy = NumericPolicy::default();
        let op = selfadjoint_collar(&policy);
        let adj = op.formal_adjoint(&policy).unwrap();
        assert!(op.field_distance(&adj) < 1e-10);
    }

    #[test]
    fn adjoint_of_plain_derivative_flips_sign() {
        // D = d/dx on a scalar fiber with elliptic tangential i d_theta:
        // the adjoint's J field is -1
        let policy = NumericPolicy::default();
        let op = CollarOperator::new(
            0.0,
            1.0,
            9,
            1,
            2,
            FiberField::constant(ComplexMatrix::identity(1)),
            TangentialField::constant(
                TrigPoly::constant(ComplexMatrix::from_rows(&[vec![c(0.0, 1.0)]])),
                TrigPoly::zero(),
            ),
            ThetaField::zero(),
            false,
            &policy,
        )
        .unwrap();
        let adj = op.formal_adjoint(&policy).unwrap();
        assert!((&adj.j_field().eval(0.5) + &ComplexMatrix::identity(1)).max_abs() < 1e-12);
    }

    #[test]
    fn variable_j_adjoint_matches_product_rule() {
        // J(x) = (1+x) J0: adjoint twice restores the original fields
        let policy = NumericPolicy::default();
        let j0 = rotation_j();
        let op = CollarOperator::new(
            0.0,
            1.0,
            9,
            2,
            2,
            FiberField::new(move |x| rotation_j().scale_real(1.0 + x)),
            TangentialField::constant(TrigPoly::constant(i_sigma()), TrigPoly::zero()),
            ThetaField::zero(),
            false,
            &policy,
        )
        .unwrap();
        let adj = op.formal_adjoint(&policy).unwrap();
        // J~ = -((1+x) J0)* = (1+x) J0 for skew J0
        assert!((&adj.j_field().eval(0.25) - &j0.scale_real(1.25)).max_abs() < 1e-12);
        let back = adj.formal_adjoint(&policy).unwrap();
        assert!(op.field_distance(&back) < 1e-10);
    }

    #[test]
    fn section_derivative_is_exact_on_cubics() {
        let policy = NumericPolicy::default();
        let op = selfadjoint_collar(&policy);
        let u = polynomial_test_section(&op, &[(1, 0, c(1.0, 0.0))], &[0.5, -1.0, 2.0, 1.0]);
        let du = section_derivative(&u, op.grid_spacing());
        let layout = op.layout();
        for (i, &x) in op.grid().iter().enumerate() {
            let want = -1.0 + 4.0 * x + 3.0 * x * x;
            let got = du[i][layout.block_start(1)];
            assert!((got - c(want, 0.0)).norm() < 1e-10, "x = {x}");
        }
    }
}
