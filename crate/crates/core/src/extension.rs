//! Symmetric constant-coefficient continuation across an attached collar:
//! the gauge unitary for `J^2 = -Id` paths, and the extension
//! `D~ = phi D_0 + (1 - phi) D~_2 + 1/2 phi' (J_0 - J~)` with Taylor-cubic
//! coefficient continuation, field-level symmetrization and an ellipticity
//! guard with delta-halving.

use crate::circleop::TrigPoly;
use crate::collar::{CollarOperator, FiberField, TangentialField, ThetaField};
use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, lu_solve_with, op_norm_with, smallest_singular_value,
};
use crate::policy::NumericPolicy;

/// Gauge data along a path of skew matrices with `J_x^2 = -Id`.
#[derive(Debug, Clone)]
pub struct GaugePath {
    pub samples: Vec<f64>,
    pub unitaries: Vec<ComplexMatrix>,
    pub conjugation_defect: f64,
    pub unitarity_defect: f64,
    /// Sup of finite-difference derivatives of U over the samples.
    pub derivative_bound: f64,
}

/// Unitary polar factor `U(x) = Z_x (Z_x Z_x^*)^{-1/2}` of
/// `Z_x = (Id - J_x J_0)/2`; requires `||Id + J_x J_0|| < 2` along the path
/// and returns the verified unitaries with `J_x = U(x) J_0 U(x)^*` and
/// `U(0) = Id`. (The inverse-order product conjugates the other way and
/// straightens `J_x` to `J_0` instead.)
pub fn gauge_unitary(
    j_path: &FiberField,
    samples: &[f64],
    policy: &NumericPolicy,
) -> Result<GaugePath> {
    if samples.is_empty() {
        return Err(Error::ShapeMismatch("gauge path needs samples".into()));
    }
    let j0 = j_path.eval(samples[0]);
    let dim = j0.rows();
    let id = ComplexMatrix::identity(dim);
    let mut unitaries = Vec::with_capacity(samples.len());
    let mut conjugation_defect = 0.0f64;
    let mut unitarity_defect = 0.0f64;
    for &x in samples {
        let jx = j_path.eval(x);
        let anti_involution = (&(&jx * &jx) + &id).max_abs();
        if anti_involution > 1e-10 {
            return Err(Error::RelationViolated(anti_involution));
        }
        let closeness = op_norm_with(&(&id + &(&jx * &j0)), policy)?;
        if closeness >= 2.0 {
            return Err(Error::PathTooFar(closeness));
        }
        let z = (&id - &(&jx * &j0)).scale_real(0.5);
        let root_inv = crate::numkernel::hermitian_inv_sqrt(
            &(&z * &z.adjoint()),
            policy.invertibility_floor.powi(2),
        )?;
        let u = &z * &root_inv;
        unitarity_defect =
            unitarity_defect.max((&(&u.adjoint() * &u) - &id).max_abs());
        conjugation_defect =
            conjugation_defect.max((&(&(&u * &j0) * &u.adjoint()) - &jx).max_abs());
        unitaries.push(u);
    }
    if unitarity_defect > 1e-10 || conjugation_defect > 1e-10 {
        return Err(Error::RelationViolated(unitarity_defect.max(conjugation_defect)));
    }
    let mut derivative_bound = 0.0f64;
    for w in unitaries.windows(2).zip(samples.windows(2)) {
        let (us, xs) = w;
        let step = (xs[1] - xs[0]).abs().max(1e-12);
        derivative_bound = derivative_bound.max((&us[1] - &us[0]).max_abs() / step);
    }
    Ok(GaugePath {
        samples: samples.to_vec(),
        unitaries,
        conjugation_defect,
        unitarity_defect,
        derivative_bound,
    })
}

/// Which additional relations hold on which part of the extension.
#[derive(Debug, Clone, Default)]
pub struct CaseTags {
    /// `J^2 = -Id` with constant J on the whole extension.
    pub dirac_constant_j: bool,
    /// `B(-delta) = B(0)` exactly (constant-coefficient rewind).
    pub rewind_matches_b0: bool,
    /// `B = B*` and `J B + B J` of order 0, on the constant segment.
    pub symmetric_b_on_constant_segment: bool,
    /// Same relations on the blend region `(-2 delta/3, 0)`.
    pub symmetric_b_on_blend: bool,
    /// `B = B*, JB + BJ = 0, C = C*` on the constant segment.
    pub clifford_on_constant_segment: bool,
    pub clifford_on_blend: bool,
}

/// The verified extension and its certificates.
pub struct ExtensionResult {
    pub delta: f64,
    pub extended: CollarOperator,
    /// `phi = 1` below `-2 delta/3`, `0` above `-delta/3`.
    pub cutoff_plateau_end: f64,
    pub cutoff_support_end: f64,
    pub case_tags: CaseTags,
    pub symmetry_residual: f64,
    pub ellipticity_min: f64,
    pub halvings_used: usize,
}

/// One-sided derivative stencils at the left end of the stored grid
/// (orders 4, 3, 2 for the first, second and third derivative).
fn taylor_coefficients<T, F>(eval: F, h: f64) -> (T, T, T, T)
where
    T: Clone,
    F: Fn(usize) -> T,
    T: TaylorOps,
{
    let f: Vec<T> = (0..6).map(eval).collect();
    let d1 = T::combine(
        &[(-25.0, &f[0]), (48.0, &f[1]), (-36.0, &f[2]), (16.0, &f[3]), (-3.0, &f[4])],
        1.0 / (12.0 * h),
    );
    let d2 = T::combine(
        &[
            (45.0, &f[0]),
            (-154.0, &f[1]),
            (214.0, &f[2]),
            (-156.0, &f[3]),
            (61.0, &f[4]),
            (-10.0, &f[5]),
        ],
        1.0 / (12.0 * h * h),
    );
    let d3 = T::combine(
        &[(-5.0, &f[0]), (18.0, &f[1]), (-24.0, &f[2]), (14.0, &f[3]), (-3.0, &f[4])],
        1.0 / (2.0 * h * h * h),
    );
    (f[0].clone(), d1, d2, d3)
}

trait TaylorOps: Sized {
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self;
    fn taylor(value: &Self, d1: &Self, d2: &Self, d3: &Self, x: f64) -> Self;
}

impl TaylorOps for ComplexMatrix {
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self {
        let mut acc = ComplexMatrix::zeros(terms[0].1.rows(), terms[0].1.cols());
        for (w, m) in terms {
            acc = &acc + &m.scale_real(*w);
        }
        acc.scale_real(scale)
    }
    fn taylor(value: &Self, d1: &Self, d2: &Self, d3: &Self, x: f64) -> Self {
        let mut acc = value.clone();
        acc = &acc + &d1.scale_real(x);
        acc = &acc + &d2.scale_real(x * x / 2.0);
        &acc + &d3.scale_real(x * x * x / 6.0)
    }
}

impl TaylorOps for TrigPoly {
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self {
        let mut acc = TrigPoly::zero();
        for (w, p) in terms {
            acc = acc.add(&p.scale(C64::new(*w, 0.0)));
        }
        acc.scale(C64::new(scale, 0.0))
    }
    fn taylor(value: &Self, d1: &Self, d2: &Self, d3: &Self, x: f64) -> Self {
        value
            .add(&d1.scale(C64::new(x, 0.0)))
            .add(&d2.scale(C64::new(x * x / 2.0, 0.0)))
            .add(&d3.scale(C64::new(x * x * x / 6.0, 0.0)))
    }
}

/// Ellipticity sweep of the full collar symbol
/// `J(x)(i lambda + Gamma(x, theta) i xi)` over the extension.
fn extended_symbol_min_sv(d: &CollarOperator, policy: &NumericPolicy) -> Result<(f64, f64)> {
    let m = d.fiber_dim();
    let mut min_sv = f64::INFINITY;
    let mut worst_x = d.lo();
    for &x in d.grid() {
        let jx = d.j_field().eval(x);
        let (gamma, _) = d.b_field().eval(x);
        for it in 0..16 {
            let theta = std::f64::consts::TAU * it as f64 / 16.0;
            let gamma_theta = gamma.eval(theta, m);
            for iq in 0..16 {
                let t = std::f64::consts::FRAC_PI_2 * iq as f64 / 15.0;
                let (lam, xi) = (t.cos(), t.sin());
                for xi_sign in [1.0, -1.0] {
                    let symbol = &ComplexMatrix::identity(m).scale(C64::new(0.0, lam))
                        + &gamma_theta.scale(C64::new(0.0, xi_sign * xi));
                    let full = &jx * &symbol;
                    let sv = smallest_singular_value(&full, policy)?;
                    if sv < min_sv {
                        min_sv = sv;
                        worst_x = x;
                    }
                }
            }
        }
    }
    Ok((min_sv, worst_x))
}

/// Extends a formally selfadjoint collar operator across `[-delta, 0]` with
/// constant coefficients near the new boundary, halving `delta` until the
/// extended symbol stays elliptic (at most `max_halvings` times).
pub fn extend_symmetric(
    d: &CollarOperator,
    delta: f64,
    max_halvings: usize,
    policy: &NumericPolicy,
) -> Result<ExtensionResult> {
    if !d.is_selfadjoint_flagged() {
        return Err(Error::PreconditionFailed(
            "extension needs a formally selfadjoint operator".into(),
        ));
    }
    let h = d.grid_spacing();
    let mut steps = ((delta / h).round() as usize).max(4);
    if steps % 2 == 1 {
        steps += 1;
    }
    let mut last_err: Option<Error> = None;
    for halvings in 0..=max_halvings {
        match try_extension(d, steps, policy) {
            Ok(mut result) => {
                result.halvings_used = halvings;
                return Ok(result);
            }
            Err(e @ Error::EllipticityLost { .. }) => {
                last_err = Some(e);
                steps = (steps / 2).max(4);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::StepLimit(max_halvings)))
}

fn try_extension(
    d: &CollarOperator,
    steps: usize,
    policy: &NumericPolicy,
) -> Result<ExtensionResult> {
    let h = d.grid_spacing();
    let delta = steps as f64 * h;
    let lo_new = d.lo() - delta;

    // Taylor data of every field at the old boundary
    let grid = d.grid().to_vec();
    let j_field = d.j_field().clone();
    let (j0_val, j_d1, j_d2, j_d3) =
        taylor_coefficients(|i| j_field.eval(grid[i]), h);
    let b_field = d.b_field().clone();
    let (g0, g1, g2, g3) = taylor_coefficients(|i| b_field.eval(grid[i]).0, h);
    let (v0, v1, v2, v3) = taylor_coefficients(|i| b_field.eval(grid[i]).1, h);
    let c_field = d.c_field().clone();
    let (c0, c1, c2, c3) = taylor_coefficients(|i| c_field.eval(grid[i]), h);

    let lo_old = d.lo();
    let m = d.fiber_dim();
    let plateau_end = lo_old - 2.0 * delta / 3.0; // phi = 1 below this
    let support_end = lo_old - delta / 3.0; // phi = 0 above this
    let phi = move |x: f64| -> f64 {
        if x <= plateau_end {
            1.0
        } else if x >= support_end {
            0.0
        } else {
            1.0 - crate::util::smoothstep7((x - plateau_end) / (delta / 3.0))
        }
    };

    // raw Taylor continuations, J skew-enforced
    let j_raw = {
        let (j0c, d1, d2, d3) = (j0_val.clone(), j_d1, j_d2, j_d3);
        move |x: f64| {
            let raw = ComplexMatrix::taylor(&j0c, &d1, &d2, &d3, x);
            (&raw - &raw.adjoint()).scale_real(0.5)
        }
    };
    let gamma_raw = move |x: f64| TrigPoly::taylor(&g0, &g1, &g2, &g3, x);
    let v_raw = move |x: f64| TrigPoly::taylor(&v0, &v1, &v2, &v3, x);
    let c_raw = move |x: f64| TrigPoly::taylor(&c0, &c1, &c2, &c3, x);

    // symmetrized continuation D~_2: B_2 = (B~ - J~^{-1} B~* J~)/2, C_2 = Re C~
    let policy_c = *policy;
    let j_for_b = j_raw.clone();
    let gamma2 = {
        let gamma_raw = gamma_raw.clone();
        move |x: f64| -> TrigPoly {
            let j = j_for_b(x);
            let j_inv = lu_solve_with(&j, &ComplexMatrix::identity(m), &policy_c)
                .expect("skew-enforced J stays invertible for admissible delta");
            let g = gamma_raw(x);
            // first-order part of -J^{-1} B* J: J^{-1} Gamma* J
            let conj = g.adjoint().left_mul(&j_inv).right_mul(&j);
            g.add(&conj).scale(C64::new(0.5, 0.0))
        }
    };
    let j_for_v = j_raw.clone();
    let v2_field = {
        let gamma_raw = gamma_raw.clone();
        let v_raw = v_raw.clone();
        move |x: f64| -> TrigPoly {
            let j = j_for_v(x);
            let j_inv = lu_solve_with(&j, &ComplexMatrix::identity(m), &policy_c)
                .expect("skew-enforced J stays invertible for admissible delta");
            let g = gamma_raw(x);
            let v = v_raw(x);
            // zeroth part of -J^{-1} B* J: J^{-1}((Gamma*)' - V*) J
            let conj = g
                .adjoint()
                .derivative()
                .add(&v.adjoint().scale(C64::new(-1.0, 0.0)))
                .left_mul(&j_inv)
                .right_mul(&j);
            v.add(&conj).scale(C64::new(0.5, 0.0))
        }
    };
    let c2_field = {
        let c_raw = c_raw.clone();
        move |x: f64| -> TrigPoly {
            let c = c_raw(x);
            c.add(&c.adjoint()).scale(C64::new(0.5, 0.0))
        }
    };

    // constant rewind coefficients of D_0
    let (gamma0_const, v0_const) = d.b_field().eval(lo_old);
    let c0_const = d.c_field().eval(lo_old);
    let j0_const = d.j_field().eval(lo_old);

    // blended extension fields
    let j_ext = {
        let (j_field, j_raw, j0_const) = (j_field.clone(), j_raw.clone(), j0_const.clone());
        FiberField::new(move |x| {
            if x >= lo_old {
                j_field.eval(x)
            } else {
                let p = phi(x);
                &j0_const.scale_real(p) + &j_raw(x).scale_real(1.0 - p)
            }
        })
    };
    let gamma_ext = {
        let b_field = d.b_field().clone();
        let (j0c, g0c) = (j0_const.clone(), gamma0_const.clone());
        let (j_raw2, gamma2c) = (j_raw.clone(), gamma2);
        let j_ext2 = j_ext.clone();
        ThetaField::new(move |x| {
            if x >= lo_old {
                b_field.eval(x).0
            } else {
                let p = phi(x);
                // first-order theta part of phi J0 B0 + (1-phi) J~ B_2,
                // divided by the blended J
                let num = g0c
                    .left_mul(&j0c)
                    .scale(C64::new(p, 0.0))
                    .add(&gamma2c(x).left_mul(&j_raw2(x)).scale(C64::new(1.0 - p, 0.0)));
                let j_blend = j_ext2.eval(x);
                let j_inv = lu_solve_with(&j_blend, &ComplexMatrix::identity(m), &policy_c)
                    .expect("checked blended J invertibility");
                num.left_mul(&j_inv)
            }
        })
    };
    let v_ext = {
        let b_field = d.b_field().clone();
        let (j0c, v0c) = (j0_const.clone(), v0_const.clone());
        let (j_raw3, v2c) = (j_raw.clone(), v2_field);
        let j_ext3 = j_ext.clone();
        ThetaField::new(move |x| {
            if x >= lo_old {
                b_field.eval(x).1
            } else {
                let p = phi(x);
                let num = v0c
                    .left_mul(&j0c)
                    .scale(C64::new(p, 0.0))
                    .add(&v2c(x).left_mul(&j_raw3(x)).scale(C64::new(1.0 - p, 0.0)));
                let j_blend = j_ext3.eval(x);
                let j_inv = lu_solve_with(&j_blend, &ComplexMatrix::identity(m), &policy_c)
                    .expect("checked blended J invertibility");
                num.left_mul(&j_inv)
            }
        })
    };
    let c_ext = {
        let c_field = d.c_field().clone();
        let c0c = c0_const.clone();
        ThetaField::new(move |x| {
            if x >= lo_old {
                c_field.eval(x)
            } else {
                let p = phi(x);
                c0c.scale(C64::new(p, 0.0)).add(&c2_field(x).scale(C64::new(1.0 - p, 0.0)))
            }
        })
    };

    // blended J must stay invertible before the constructor sees it
    let points = d.grid().len() + steps;
    for i in 0..points {
        let x = lo_new + (d.hi() - lo_new) * i as f64 / (points - 1) as f64;
        let sv = smallest_singular_value(&j_ext.eval(x), policy)?;
        if sv < policy.invertibility_floor {
            return Err(Error::EllipticityLost { min_sv: sv, x, halvings: 0 });
        }
    }

    let extended = match CollarOperator::new(
        lo_new,
        d.hi(),
        points,
        m,
        d.truncation(),
        j_ext,
        TangentialField::new(gamma_ext, v_ext),
        c_ext,
        true,
        policy,
    ) {
        Ok(op) => op,
        // a degenerate tangential symbol surfaces as NotPositive from the
        // constructor's ellipticity validation
        Err(Error::NotPositive(_)) => {
            return Err(Error::EllipticityLost { min_sv: 0.0, x: f64::NAN, halvings: 0 });
        }
        Err(e) => return Err(e),
    };

    let (ellipticity_min, worst_x) = extended_symbol_min_sv(&extended, policy)?;
    if ellipticity_min < 1e-6 {
        return Err(Error::EllipticityLost { min_sv: ellipticity_min, x: worst_x, halvings: 0 });
    }

    // certificates
    let mut restriction = 0.0f64;
    restriction = restriction.max(d.field_distance(&extended));
    if restriction > 1e-12 {
        return Err(Error::RelationViolated(restriction));
    }
    let mut constant_defect = 0.0f64;
    for &x in extended.grid() {
        if x <= plateau_end + 1e-14 {
            constant_defect = constant_defect
                .max((&extended.j_field().eval(x) - &j0_const).max_abs());
            let (g, v) = extended.b_field().eval(x);
            constant_defect = constant_defect
                .max(g.add(&gamma0_const.scale(C64::new(-1.0, 0.0))).max_abs())
                .max(v.add(&v0_const.scale(C64::new(-1.0, 0.0))).max_abs())
                .max(
                    extended
                        .c_field()
                        .eval(x)
                        .add(&c0_const.scale(C64::new(-1.0, 0.0)))
                        .max_abs(),
                );
        }
    }
    if constant_defect > 1e-12 {
        return Err(Error::RelationViolated(constant_defect));
    }
    extended.check_selfadjoint_relations(1e-10)?;
    let symmetry_residual = {
        // report the measured residual at the tighter tolerance
        let mut worst = 0.0f64;
        for &x in extended.grid() {
            let jx = extended.j_field().eval(x);
            worst = worst.max((&jx.adjoint() + &jx).max_abs());
        }
        worst
    };

    let case_tags = compute_case_tags(d, &extended, lo_old, plateau_end);

    Ok(ExtensionResult {
        delta,
        extended,
        cutoff_plateau_end: plateau_end,
        cutoff_support_end: support_end,
        case_tags,
        symmetry_residual,
        ellipticity_min,
        halvings_used: 0,
    })
}

fn compute_case_tags(
    d: &CollarOperator,
    extended: &CollarOperator,
    lo_old: f64,
    plateau_end: f64,
) -> CaseTags {
    let m = d.fiber_dim();
    let id = ComplexMatrix::identity(m);
    let tol = 1e-9;
    let mut tags = CaseTags::default();

    // case II: J^2 = -Id and constant along the whole extension
    let j_start = extended.j_field().eval(extended.lo());
    tags.dirac_constant_j = extended.grid().iter().all(|&x| {
        let j = extended.j_field().eval(x);
        (&(&j * &j) + &id).max_abs() <= tol && (&j - &j_start).max_abs() <= tol
    });

    // case III marker: the rewound tangential coefficients equal B(0)
    let (g_new, v_new) = extended.b_field().eval(extended.lo());
    let (g_old, v_old) = d.b_field().eval(lo_old);
    tags.rewind_matches_b0 = g_new.add(&g_old.scale(C64::new(-1.0, 0.0))).max_abs() <= 1e-12
        && v_new.add(&v_old.scale(C64::new(-1.0, 0.0))).max_abs() <= 1e-12;

    // cases IV/V relation sweeps on the two regions
    let mut iv_const = true;
    let mut iv_blend = true;
    let mut v_const = true;
    let mut v_blend = true;
    for &x in extended.grid() {
        if x >= lo_old {
            continue;
        }
        let (gamma, v) = extended.b_field().eval(x);
        let c = extended.c_field().eval(x);
        let j = extended.j_field().eval(x);
        // B = B*: Gamma* = -Gamma (first order) and V* - (Gamma*)' = V
        let b_sym = gamma.adjoint().add(&gamma).max_abs().max(
            v.adjoint()
                .add(&gamma.adjoint().derivative().scale(C64::new(-1.0, 0.0)))
                .add(&v.scale(C64::new(-1.0, 0.0)))
                .max_abs(),
        );
        // JB + BJ order 0: first-order part J Gamma + Gamma J
        let anti_first = gamma.left_mul(&j).add(&gamma.right_mul(&j)).max_abs();
        // JB + BJ = 0 needs the zeroth part too
        let anti_zero = v.left_mul(&j).add(&v.right_mul(&j)).max_abs();
        let c_sym = c.adjoint().add(&c.scale(C64::new(-1.0, 0.0))).max_abs();
        let iv_ok = b_sym <= tol && anti_first <= tol;
        let v_ok = iv_ok && anti_zero <= tol && c_sym <= tol;
        if x <= plateau_end + 1e-14 {
            iv_const &= iv_ok;
            v_const &= v_ok;
        } else {
            iv_blend &= iv_ok;
            v_blend &= v_ok;
        }
    }
    tags.symmetric_b_on_constant_segment = iv_const;
    tags.symmetric_b_on_blend = iv_blend;
    tags.clifford_on_constant_segment = v_const;
    tags.clifford_on_blend = v_blend;
    tags
}

/// UCP defect at each station along the extension: the dimension of kernel
/// elements vanishing on the parallel circle there, by transfer rank tests.
pub fn ucp_defect_along_extension(
    res: &ExtensionResult,
    stations: &[f64],
    policy: &NumericPolicy,
) -> Result<Vec<usize>> {
    let transfers = crate::collar::transfer::transfer_to_stations(&res.extended, stations, policy)?;
    let mut out = Vec::with_capacity(stations.len());
    for t in &transfers {
        out.push(crate::collar::ucp_defect_from_transfer(
            t,
            crate::collar::BoundarySelector::End,
            policy,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collar::fixtures::{c, i_sigma, rotation_j, selfadjoint_collar};

    #[test]
    fn gauge_of_constant_path_is_identity() {
        let policy = NumericPolicy::default();
        let path = FiberField::constant(rotation_j());
        let samples: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        let gauge = gauge_unitary(&path, &samples, &policy).unwrap();
        for u in &gauge.unitaries {
            assert!((u - &ComplexMatrix::identity(2)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_recovers_rotated_conjugation() {
        let policy = NumericPolicy::default();
        let path = FiberField::new(|x| {
            let t = 0.4 * x;
            let r = ComplexMatrix::from_rows(&[
                vec![c(t.cos(), 0.0), c(-t.sin(), 0.0)],
                vec![c(t.sin(), 0.0), c(t.cos(), 0.0)],
            ]);
            // r commutes with the rotation J here, so this path is constant;
            // conjugate by a non-commuting unitary instead
            let mix = ComplexMatrix::from_rows(&[
                vec![c(t.cos(), 0.0), c(t.sin(), 0.0)],
                vec![c(t.sin(), 0.0), c(-t.cos(), 0.0)],
            ]);
            let _ = r;
            &(&mix * &rotation_j()) * &mix.adjoint()
        });
        let samples: Vec<f64> = (0..6).map(|i| i as f64 * 0.08).collect();
        let gauge = gauge_unitary(&path, &samples, &policy).unwrap();
        assert!(gauge.conjugation_defect <= 1e-10);
        assert!(gauge.unitarity_defect <= 1e-10);
        assert!(gauge.derivative_bound.is_finite());
    }

    #[test]
    fn gauge_on_exponential_conjugation_in_dim_four() {
        let policy = NumericPolicy::default();
        let j_base = ComplexMatrix::block_diag(&[&rotation_j(), &rotation_j()]);
        let generator = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.1), c(0.05, 0.0), c(0.0, 0.0), c(0.02, 0.01)],
            vec![c(-0.05, 0.0), c(0.0, -0.1), c(0.03, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-0.03, 0.0), c(0.0, 0.05), c(0.01, 0.0)],
            vec![c(-0.02, 0.01), c(0.0, 0.0), c(-0.01, 0.0), c(0.0, -0.05)],
        ]);
        let skew_gen = (&generator - &generator.adjoint()).scale_real(0.5);
        let path = FiberField::new(move |x| {
            let u = crate::numkernel::matrix_exp(&skew_gen.scale_real(x)).unwrap();
            &(&u * &j_base) * &u.adjoint()
        });
        let samples: Vec<f64> = (0..5).map(|i| i as f64 * 0.2).collect();
        let gauge = gauge_unitary(&path, &samples, &policy).unwrap();
        assert!(gauge.conjugation_defect <= 1e-10);
        assert!(gauge.unitarity_defect <= 1e-10);
    }

    #[test]
    fn constant_coefficient_input_extends_to_itself() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let res = extend_symmetric(&d, 0.5, 8, &policy).unwrap();
        // fields on the whole extension equal the constants
        for &x in res.extended.grid() {
            assert!(
                (&res.extended.j_field().eval(x) - &rotation_j()).max_abs() < 1e-12,
                "J at {x}"
            );
            let (g, v) = res.extended.b_field().eval(x);
            assert!(g.add(&crate::circleop::TrigPoly::constant(i_sigma()).scale(c(-1.0, 0.0))).max_abs() < 1e-12);
            assert!(v.max_abs() < 1e-12);
        }
        assert!(res.case_tags.dirac_constant_j);
        assert!(res.case_tags.rewind_matches_b0);
        assert_eq!(res.halvings_used, 0);
        assert!(res.symmetry_residual <= 1e-10);
    }

    #[test]
    fn linear_b_extension_is_symmetric_and_rewinds_exactly() {
        // J = J0 constant, B = B0 + x B1 with the relations kept at every x
        let policy = NumericPolicy::default();
        let d = CollarOperator::new(
            0.0,
            1.0,
            9,
            2,
            2,
            FiberField::constant(rotation_j()),
            TangentialField::new(
                ThetaField::constant(crate::circleop::TrigPoly::constant(i_sigma())),
                ThetaField::chebyshev(
                    0.0,
                    1.0,
                    vec![
                        crate::circleop::TrigPoly::constant(ComplexMatrix::diag_real(&[0.5, -0.5])),
                        crate::circleop::TrigPoly::constant(ComplexMatrix::diag_real(&[0.2, -0.2])),
                    ],
                ),
            ),
            ThetaField::zero(),
            true,
            &policy,
        )
        .unwrap();
        let res = extend_symmetric(&d, 0.5, 8, &policy).unwrap();
        assert!(res.case_tags.rewind_matches_b0);
        assert!(res.symmetry_residual <= 1e-10);
        assert!(res.ellipticity_min >= 1e-6);
        // near-boundary fields exactly (J0, B0, C0)
        let (g, v) = res.extended.b_field().eval(res.extended.lo());
        let (g0, v0) = d.b_field().eval(0.0);
        assert!(g.add(&g0.scale(c(-1.0, 0.0))).max_abs() < 1e-12);
        assert!(v.add(&v0.scale(c(-1.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn degenerating_gamma_halves_delta_until_elliptic() {
        // Gamma(x) = (0.25 + x) i sigma: the Taylor continuation degenerates
        // near x = -0.25, so large delta must fail and halving must rescue
        let policy = NumericPolicy::default();
        let d = CollarOperator::new(
            0.0,
            1.0,
            17,
            2,
            2,
            FiberField::constant(rotation_j()),
            TangentialField::new(
                ThetaField::chebyshev(
                    0.0,
                    1.0,
                    vec![
                        crate::circleop::TrigPoly::constant(i_sigma().scale_real(0.75)),
                        crate::circleop::TrigPoly::constant(i_sigma().scale_real(0.5)),
                    ],
                ),
                ThetaField::zero(),
            ),
            ThetaField::zero(),
            true,
            &policy,
        )
        .unwrap();
        // Gamma(x) = (0.25 + x) i sigma via the Chebyshev pair above
        let strict = extend_symmetric(&d, 1.2, 0, &policy);
        assert!(
            matches!(strict, Err(Error::EllipticityLost { .. })),
            "large delta with no halving budget must lose ellipticity"
        );
        let rescued = extend_symmetric(&d, 1.2, 8, &policy).unwrap();
        assert!(rescued.halvings_used >= 1);
        assert!(rescued.ellipticity_min >= 1e-6);
        assert!(rescued.delta < 1.25);
    }

    #[test]
    fn ucp_defects_vanish_along_the_extension() {
        let policy = NumericPolicy::default();
        let d = selfadjoint_collar(&policy);
        let res = extend_symmetric(&d, 0.5, 8, &policy).unwrap();
        let stations: Vec<f64> = vec![
            res.extended.lo(),
            res.cutoff_plateau_end,
            0.0,
            0.5,
            res.extended.hi(),
        ];
        let defects = ucp_defect_along_extension(&res, &stations, &policy).unwrap();
        assert!(defects.iter().all(|&d| d == 0), "defects {defects:?}");
    }

    #[test]
    fn injected_rank_deficiency_is_reported() {
        let policy = NumericPolicy::default();
        let mut t = ComplexMatrix::identity(4);
        t[(1, 1)] = c(0.0, 0.0);
        let defect = crate::collar::ucp_defect_from_transfer(
            &t,
            crate::collar::BoundarySelector::End,
            &policy,
        )
        .unwrap();
        assert_eq!(defect, 1);
    }
}
