//! Experiment suites: each runs one named group of checks on a built
//! scenario and returns an `ExperimentRecord` whose checks carry measured
//! values, bounds and tolerances. The CLI serializes these records; the
//! acceptance tests assert on them.

use crate::calderon::{
    BoundaryChoice, calderon_pair, dual_condition, make_boundary_condition, poisson_apply,
    shapiro_lopatinskii_check, solve_double, wellposed_resolvent,
};
use crate::circleop::ModeLayout;
use crate::cobordism::{
    FlowSample, cobordism_signature, coisotropy_check, grading_split_index,
    guarded_circle_index, signature_flow_experiment, spectral_split,
};
use crate::collar::{Section, kernel_transfer, section_norm};
use crate::error::Result;
use crate::numkernel::{
    C64, ComplexMatrix, dot, hermitian_eigen_with, max_principal_angle, op_norm_with,
    orthonormalize_with, vec_norm,
};
use crate::paramflow::{
    ContinuityTarget, continuity_experiment, cut_crossing_family, domain_transport,
    geometric_steps, lower_order_projection_stability, resolvent_perturbation_probe,
    riesz_lipschitz_check, rotation_family, sectorial_stability_probe,
};
use crate::policy::NumericPolicy;
use crate::report::{CheckRecord, CurveRecord, ExperimentRecord};
use crate::rng::random_complex;
use crate::scenario::{BuiltScenario, builtin_gapped_selfadjoint_with_length};
use crate::sectorial::{
    CutoffBump, build_negative_contour_with, build_positive_contour_with,
    projection_norm_ladder, q_minus_with, q_plus_with, random_conjugated_normal_form,
    sectorial_projection_with,
};
use crate::symplectic::{
    SymplecticSpace, is_lagrangian, random_coisotropic_with_split, random_lagrangian,
    random_symplectic_space, random_transversal_isotropic_pair, symplectic_reduce,
    transversal_isotropic_upgrade_check,
};
use crate::util::fit_line;
use rand::Rng;

fn record_error(name: &str, e: crate::error::Error) -> ExperimentRecord {
    let mut rec = ExperimentRecord::new(name);
    rec.error = Some(format!("{} ({})", e, e.reason_code()));
    rec
}

// ---------------------------------------------------------------------------
// sectorial
// ---------------------------------------------------------------------------

pub fn sectorial_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match sectorial_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("sectorial", e),
    }
}

fn sectorial_suite_inner(
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("sectorial");
    let b0 = s.operator.b_at(s.operator.lo())?.realized().clone();
    let dim = b0.rows();
    let id = ComplexMatrix::identity(dim);
    let gamma_plus = build_positive_contour_with(&b0, &s.cut, policy)?;
    let gamma_minus = build_negative_contour_with(&b0, &s.cut, policy)?;
    let p_plus = sectorial_projection_with(&b0, &gamma_plus, policy)?;
    let p_minus = sectorial_projection_with(&b0, &gamma_minus, policy)?;
    rec.push(CheckRecord::le("p_plus_idempotent", p_plus.defect(), 1e-8));
    rec.push(CheckRecord::le(
        "p_plus_plus_p_minus_is_id",
        (&(p_plus.matrix() + p_minus.matrix()) - &id).max_abs(),
        1e-8,
    ));

    // semigroup laws over the fixed grid x, y in {0.1, ..., 1.0}
    let xs: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let mut q_cache: std::collections::BTreeMap<i64, ComplexMatrix> = Default::default();
    let mut q_at = |t: f64, policy: &NumericPolicy| -> Result<ComplexMatrix> {
        let key = (t * 10.0).round() as i64;
        if let Some(q) = q_cache.get(&key) {
            return Ok(q.clone());
        }
        let q = q_plus_with(&b0, &gamma_plus, t, policy)?;
        q_cache.insert(key, q.clone());
        Ok(q)
    };
    let mut semigroup_defect = 0.0f64;
    for &x in &xs {
        for &y in &xs {
            let lhs = q_at(x, policy)?.matmul(&q_at(y, policy)?);
            let rhs = q_at(x + y, policy)?;
            semigroup_defect = semigroup_defect.max((&lhs - &rhs).max_abs());
        }
    }
    rec.push(CheckRecord::le("semigroup_q_plus", semigroup_defect, 1e-6));

    // derivative law dQ/dx = -B Q with centered differences at step 1e-4
    let mut derivative_defect = 0.0f64;
    for &x in &[0.3, 0.7, 1.0] {
        let h = 1e-4;
        let dq = (&q_plus_with(&b0, &gamma_plus, x + h, policy)?
            - &q_plus_with(&b0, &gamma_plus, x - h, policy)?)
            .scale_real(1.0 / (2.0 * h));
        let rhs = (&b0 * &q_at(x, policy)?).scale_real(-1.0);
        derivative_defect = derivative_defect.max((&dq - &rhs).max_abs());
    }
    rec.push(CheckRecord::le("semigroup_derivative", derivative_defect, 1e-6));

    // annihilation Q+(x) Q-(-y) = Q-(-y) Q+(x) = 0
    let mut annihilation = 0.0f64;
    for &(x, y) in &[(0.5, 0.5), (0.3, 0.8), (1.0, 0.2)] {
        let qp = q_at(x, policy)?;
        let qm = q_minus_with(&b0, &gamma_minus, -y, policy)?;
        annihilation = annihilation
            .max((&qp * &qm).max_abs())
            .max((&qm * &qp).max_abs());
    }
    rec.push(CheckRecord::le("annihilation", annihilation, 1e-6));

    // adjoint symmetry Q+(x, B)^* = Q+(x, B^*)
    let b0_adj = b0.adjoint();
    let gamma_adj = build_positive_contour_with(&b0_adj, &s.cut, policy)?;
    let mut adjoint_defect = 0.0f64;
    for &x in &[0.4, 1.0] {
        let lhs = q_at(x, policy)?.adjoint();
        let rhs = q_plus_with(&b0_adj, &gamma_adj, x, policy)?;
        adjoint_defect = adjoint_defect.max((&lhs - &rhs).max_abs());
    }
    rec.push(CheckRecord::le("adjoint_symmetry", adjoint_defect, 1e-8));

    // oracle equivalence on conjugated normal forms
    let mut rng = s.seed.substream("sectorial-oracle");
    let mut worst_oracle = 0.0f64;
    // conjugated similarities push resolvent peaks up by the condition
    // number, so these integrals get a deeper refinement budget
    let mut deep = *policy;
    deep.quadrature_max_refinements = 10;
    for _ in 0..s.counts.oracle_trials {
        let form = random_conjugated_normal_form(&mut rng, 8, 0.3, 0.5, 50.0)?;
        let norm = op_norm_with(&form.matrix, policy)?;
        let cfg = crate::sectorial::SpectralCutConfig::new(0.5, 2.0 * norm + 4.0, 2e-3)?;
        let gamma = build_positive_contour_with(&form.matrix, &cfg, policy)?;
        let p = sectorial_projection_with(&form.matrix, &gamma, &deep)?;
        worst_oracle = worst_oracle
            .max(op_norm_with(&(p.matrix() - &form.exact_positive_projection), policy)?);
    }
    rec.push(CheckRecord::le("oracle_equivalence", worst_oracle, 1e-7));

    // unboundedness exhibit; the asymptotic exponent is fitted on the tail
    // of the ladder, where the bounded O(1) part of ||P+|| has faded
    let truncations = [16usize, 24, 32, 40, 48, 56, 64];
    let norms_half = projection_norm_ladder(&truncations, 0.5, policy)?;
    let tail = 3usize;
    let xs_fit: Vec<f64> = truncations[tail..].iter().map(|&n| (n as f64).ln()).collect();
    let ys_fit: Vec<f64> = norms_half[tail..].iter().map(|v| v.ln()).collect();
    let (exponent, _, _) = fit_line(&xs_fit, &ys_fit);
    rec.push(CheckRecord::close("unboundedness_exponent_alpha_half", exponent, 0.5, 0.05));
    let norms_one = projection_norm_ladder(&truncations, 1.0, policy)?;
    let ratio = norms_one.last().unwrap() / norms_one.first().unwrap();
    rec.push(CheckRecord::le("bounded_ratio_alpha_one", ratio, 1.2));
    rec.curves.push(CurveRecord {
        name: "unboundedness_ladder".into(),
        columns: vec!["truncation".into(), "norm_alpha_half".into(), "norm_alpha_one".into()],
        rows: truncations
            .iter()
            .zip(norms_half.iter().zip(&norms_one))
            .map(|(&n, (&a, &b))| vec![n as f64, a, b])
            .collect(),
        flags: vec![None; truncations.len()],
    });
    Ok(rec)
}

// ---------------------------------------------------------------------------
// calderon
// ---------------------------------------------------------------------------

pub fn calderon_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match calderon_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("calderon", e),
    }
}

fn calderon_suite_inner(s: &BuiltScenario, policy: &NumericPolicy) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("calderon");
    let d = &s.operator;
    let dim = d.sigma_dim();

    // Sapiro-Lopatinskii for the scenario's condition and the dual
    let bc = make_boundary_condition(d, &s.boundary_choice, policy)?;
    let sl = shapiro_lopatinskii_check(d, &bc, 16, policy)?;
    rec.push(CheckRecord::boolean("shapiro_lopatinskii_ok", sl.ok));
    let dual = dual_condition(&bc, policy)?;
    rec.push(CheckRecord::le(
        "dual_condition_is_minus_t_inverse",
        (dual.matrix() - &bc.inverse().scale_real(-1.0)).max_abs(),
        1e-9,
    ));

    // pairs for all three canonical choices
    let choices = [BoundaryChoice::JtInv, BoundaryChoice::J, BoundaryChoice::UnitaryJ];
    let mut pairs = Vec::new();
    for choice in &choices {
        let bci = make_boundary_condition(d, choice, policy)?;
        pairs.push(calderon_pair(d, &bci, policy)?);
    }
    let mut worst_idem = 0.0f64;
    let mut worst_sum = 0.0f64;
    for pair in &pairs {
        worst_idem = worst_idem.max(pair.c_plus.defect()).max(pair.c_minus.defect());
        let sum = pair.c_plus.matrix() + pair.c_minus.matrix();
        worst_sum = worst_sum.max((&sum - &ComplexMatrix::identity(dim * 2)).max_abs());
    }
    rec.push(CheckRecord::le("calderon_idempotent", worst_idem, 1e-8));
    rec.push(CheckRecord::le("calderon_complement_sum", worst_sum, 1e-8));

    // JtInv: Hermitian projection and orthogonal data spaces
    let jtinv_pair = &pairs[0];
    rec.push(CheckRecord::le(
        "jtinv_hermitian",
        jtinv_pair.c_plus.matrix().hermitian_defect(),
        1e-8,
    ));
    let transported = orthonormalize_with(
        &(jtinv_pair.t_used.inverse() * jtinv_pair.n_minus.frame()),
        policy,
    );
    let overlap = &jtinv_pair.n_plus.frame().adjoint() * transported.frame();
    rec.push(CheckRecord::le("jtinv_data_spaces_orthogonal", overlap.max_abs(), 1e-7));

    // range independence of T
    let mut worst_range_angle = 0.0f64;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let ri = pairs[i].c_plus.range(policy);
            let rj = pairs[j].c_plus.range(policy);
            worst_range_angle = worst_range_angle.max(max_principal_angle(&ri, &rj)?);
        }
    }
    rec.push(CheckRecord::le("range_independent_of_t", worst_range_angle, 1e-7));

    // oracle agreement: range(C+) is the transfer Cauchy data space
    let transfer = kernel_transfer(d, policy)?;
    let mut worst_oracle_angle = 0.0f64;
    for pair in &pairs {
        let range = pair.c_plus.range(policy);
        worst_oracle_angle =
            worst_oracle_angle.max(max_principal_angle(&range, &transfer.cauchy_data)?);
    }
    rec.push(CheckRecord::le("range_matches_transfer_oracle", worst_oracle_angle, 1e-7));

    // double solves on seeded right-hand sides; residual = march error plus
    // coupling defect relative to the data
    let mut rng = s.seed.substream("calderon-solve");
    let mut worst_residual = 0.0f64;
    for _ in 0..s.counts.solve_rhs_count {
        let coeffs: Vec<Vec<C64>> =
            (0..3).map(|_| (0..dim).map(|_| random_complex(&mut rng)).collect()).collect();
        let g_plus = Section::from_fn(d.grid(), dim, |x| {
            (0..dim)
                .map(|k| coeffs[0][k] + coeffs[1][k] * x + coeffs[2][k] * (1.7 * x).sin())
                .collect()
        });
        let g_minus = g_plus.scale(C64::new(-0.4, 0.2));
        let sol = solve_double(d, &bc, &g_plus, &g_minus, policy)?;
        let scale = section_norm(&g_plus, d.grid_spacing())
            .max(section_norm(&g_minus, d.grid_spacing()))
            .max(1e-30);
        worst_residual =
            worst_residual.max((sol.coupling_residual + sol.march_error) / scale);
    }
    rec.push(CheckRecord::le("double_solve_residual", worst_residual, 1e-7));

    // Poisson identities on the JtInv pair
    let mut rng_p = s.seed.substream("calderon-poisson");
    let xi: Vec<C64> = (0..2 * dim).map(|_| random_complex(&mut rng_p)).collect();
    let u = poisson_apply(jtinv_pair, d, &xi, policy)?;
    let eta = jtinv_pair.c_plus.matrix().apply(&xi);
    let trace_defect: f64 = u
        .trace()
        .iter()
        .zip(&eta)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    rec.push(CheckRecord::le(
        "poisson_trace_identity",
        trace_defect / vec_norm(&xi).max(1e-30),
        1e-7,
    ));

    if d.is_selfadjoint_flagged() {
        // Green-kernel isotropy feeding the Lagrangian claim
        let j_s = d.boundary_j();
        let frame = transfer.cauchy_data.frame();
        let mut isotropy = 0.0f64;
        for i in 0..frame.cols() {
            for j in 0..frame.cols() {
                isotropy = isotropy
                    .max(dot(&j_s.apply(&frame.column(i)), &frame.column(j)).norm());
            }
        }
        rec.push(CheckRecord::le("green_kernel_isotropy", isotropy, 1e-7));

        // well-posed resolvent identities are continuum statements measured
        // through Simpson quadrature, so they run on a refined grid where
        // the O(h^4) quadrature floor sits below the 1e-7 bar
        let fine = crate::collar::CollarOperator::new(
            d.lo(),
            d.hi(),
            65,
            d.fiber_dim(),
            d.truncation(),
            d.j_field().clone(),
            d.b_field().clone(),
            d.c_field().clone(),
            true,
            policy,
        )?;
        let bc_fine = make_boundary_condition(&fine, &BoundaryChoice::JtInv, policy)?;
        let pair_fine = calderon_pair(&fine, &bc_fine, policy)?;
        let p = crate::sectorial::orthogonalize_with(&pair_fine.c_plus, policy)?;
        let g = Section::from_fn(fine.grid(), dim, |x| {
            (0..dim)
                .map(|k| C64::new(0.4 + 0.1 * k as f64, 0.2 * x))
                .collect()
        });
        let u_plus = wellposed_resolvent(&fine, &p, &g, 1.0, policy)?;
        // symmetric realization: <Au, u> = <g, u> + i ||u||^2 is real, so
        // Im <g, u> + ||u||^2 must vanish
        let h = fine.grid_spacing();
        let inner_gu = crate::collar::inner_product(&g, &u_plus, h);
        let norm_u = section_norm(&u_plus, h);
        let im_defect = (inner_gu.im + norm_u * norm_u).abs();
        let scale = section_norm(&g, h).max(1.0);
        rec.push(CheckRecord::le("symmetric_realization_real_energy", im_defect / scale, 1e-7));

        // resolvent adjoint identity <R+ g, h> = <g, R- h>
        let h_rhs = Section::from_fn(fine.grid(), dim, |x| {
            (0..dim)
                .map(|k| C64::new(0.1 * (k as f64) - 0.3, (1.3 * x).cos() * 0.2))
                .collect()
        });
        let u_minus = wellposed_resolvent(&fine, &p, &h_rhs, -1.0, policy)?;
        let lhs = crate::collar::inner_product(&u_plus, &h_rhs, h);
        let rhs = crate::collar::inner_product(&g, &u_minus, h);
        rec.push(CheckRecord::le(
            "resolvent_adjoint_identity",
            (lhs - rhs).norm() / scale,
            1e-7,
        ));
    }

    // product-case exponential closeness for constant-coefficient
    // selfadjoint scenarios
    if d.is_selfadjoint_flagged() && is_x_constant(d) {
        let b0 = d.b_at(d.lo())?.realized().clone();
        let (eigenvalues, _) = hermitian_eigen_with(&b0, policy)?;
        let min_pos = eigenvalues.iter().copied().filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min);
        let min_neg = eigenvalues
            .iter()
            .copied()
            .filter(|l| *l < 0.0)
            .fold(f64::INFINITY, |acc, l| acc.min(-l));
        let gap = min_pos + min_neg;
        let p_plus = {
            let gamma = build_positive_contour_with(&b0, &s.cut, policy)?;
            sectorial_projection_with(&b0, &gamma, policy)?
        };
        let lengths = [1.0f64, 2.0, 3.0, 4.0];
        let mut log_norms = Vec::new();
        for &ell in &lengths {
            let scen = builtin_gapped_like(d, ell, policy)?;
            let bci = make_boundary_condition(&scen, &BoundaryChoice::JtInv, policy)?;
            let pair = calderon_pair(&scen, &bci, policy)?;
            let block = pair.c_plus.matrix().submatrix(0, 0, dim, dim);
            let diff = op_norm_with(&(&block - p_plus.matrix()), policy)?;
            log_norms.push(diff.max(1e-300).ln());
        }
        let (slope, _, _) = fit_line(&lengths, &log_norms);
        rec.push(CheckRecord::close("product_case_decay_slope", slope, -gap, 0.1 * gap));
        rec.curves.push(CurveRecord {
            name: "product_case_decay".into(),
            columns: vec!["length".into(), "log_norm_diff".into()],
            rows: lengths.iter().zip(&log_norms).map(|(&l, &n)| vec![l, n]).collect(),
            flags: vec![None; lengths.len()],
        });
    }
    Ok(rec)
}

fn is_x_constant(d: &crate::collar::CollarOperator) -> bool {
    let (lo, hi) = (d.lo(), d.hi());
    let probes = [lo, 0.5 * (lo + hi), hi];
    let j0 = d.j_field().eval(lo);
    let (g0, v0) = d.b_field().eval(lo);
    let c0 = d.c_field().eval(lo);
    probes.iter().all(|&x| {
        (&d.j_field().eval(x) - &j0).max_abs() < 1e-13
            && {
                let (g, v) = d.b_field().eval(x);
                g.add(&g0.scale(C64::new(-1.0, 0.0))).max_abs() < 1e-13
                    && v.add(&v0.scale(C64::new(-1.0, 0.0))).max_abs() < 1e-13
            }
            && d.c_field().eval(x).add(&c0.scale(C64::new(-1.0, 0.0))).max_abs() < 1e-13
    })
}

/// Rebuilds a constant-coefficient operator like `d` on `[0, ell]` with a
/// grid of matching spacing.
fn builtin_gapped_like(
    d: &crate::collar::CollarOperator,
    ell: f64,
    policy: &NumericPolicy,
) -> Result<crate::collar::CollarOperator> {
    let spacing = d.grid_spacing();
    let mut points = ((ell / spacing).round() as usize).max(8) + 1;
    if points.is_multiple_of(2) {
        points += 1;
    }
    let (g0, v0) = d.b_field().eval(d.lo());
    crate::collar::CollarOperator::new(
        0.0,
        ell,
        points,
        d.fiber_dim(),
        d.truncation(),
        crate::collar::FiberField::constant(d.j_field().eval(d.lo())),
        crate::collar::TangentialField::constant(g0, v0),
        crate::collar::ThetaField::constant(d.c_field().eval(d.lo())),
        d.is_selfadjoint_flagged(),
        policy,
    )
}

// ---------------------------------------------------------------------------
// cobordism
// ---------------------------------------------------------------------------

pub fn cobordism_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match cobordism_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("cobordism", e),
    }
}

fn cobordism_suite_inner(s: &BuiltScenario, policy: &NumericPolicy) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("cobordism");
    let d = &s.operator;
    if !d.is_selfadjoint_flagged() {
        rec.push(
            CheckRecord::boolean("selfadjoint_scenario", false)
                .with_flag("cobordism suite needs a selfadjoint scenario"),
        );
        return Ok(rec);
    }
    let sig = cobordism_signature(d, s.cut.cut_radius, policy)?;
    rec.push(CheckRecord::exact_int("cobordism_signature_zero", sig, 0));

    // Lagrangian property of im C+ for T = J0 (-J0^2)^{-1/2}
    let bc = make_boundary_condition(d, &BoundaryChoice::UnitaryJ, policy)?;
    let pair = calderon_pair(d, &bc, policy)?;
    let gamma = d.boundary_j().scale_real(-1.0);
    let sp = SymplecticSpace::new(
        (&gamma - &gamma.adjoint()).scale_real(0.5),
        policy,
    )?;
    let range = pair.c_plus.range(policy);
    let verdict = is_lagrangian(&sp, &range, policy)?;
    rec.push(CheckRecord::boolean("im_c_plus_lagrangian", verdict.lagrangian));
    rec.push(CheckRecord::le(
        "im_c_plus_lagrangian_angle",
        if verdict.max_angle.is_nan() { 1.0 } else { verdict.max_angle },
        1e-7,
    ));

    // graded index: fiber model and guarded circle operator
    let j_fiber = d.j_field().eval(d.lo());
    let (_, v_fiber) = d.b_field().eval(d.lo());
    let v0 = v_fiber.eval(0.0, d.fiber_dim());
    let v0_herm = (&v0 + &v0.adjoint()).scale_real(0.5);
    if (&(&j_fiber * &v0_herm) + &(&v0_herm * &j_fiber)).max_abs() < 1e-8 && v0_herm.max_abs() > 1e-8
    {
        let split = grading_split_index(&v0_herm, &j_fiber, policy)?;
        rec.push(CheckRecord::exact_int("fiber_grading_index_zero", split.index, 0));
    }
    let b0_op = d.b_at(d.lo())?;
    let guarded = guarded_circle_index(&b0_op, &j_fiber, policy)?;
    rec.push(CheckRecord::boolean("circle_grading_conclusive", guarded.conclusive));
    rec.push(CheckRecord::exact_int("circle_grading_index_zero", guarded.split_index, 0));

    // spectral splitting and co-isotropy of the realized tangential operator
    let b0 = b0_op.realized().clone();
    let split = spectral_split(&b0, &s.cut, policy)?;
    split.verify(1e-8)?;
    rec.push(CheckRecord::boolean("spectral_split_verified", true));
    let j_expanded = d.layout().expand_fiber(&j_fiber);
    let coiso = coisotropy_check(&split, &j_expanded, &b0, policy)?;
    rec.push(CheckRecord::boolean("coisotropy_identities", coiso.ok));

    // signature flow along a rotating family with the scenario fiber data
    let samples: Vec<FlowSample> = (0..5)
        .map(|i| {
            let t = i as f64 * 0.2;
            let rot = crate::numkernel::matrix_exp(&j_fiber.scale_real(t)).unwrap();
            let b = &(&rot * &v0_herm) * &rot.adjoint();
            let j = &(&rot * &j_fiber) * &rot.adjoint();
            FlowSample { j, b: (&b + &b.adjoint()).scale_real(0.5), s: None }
        })
        .collect();
    let flow = signature_flow_experiment(&samples, policy)?;
    rec.push(CheckRecord::boolean("signature_flow_constant", flow.constant));
    Ok(rec)
}

// ---------------------------------------------------------------------------
// symplectic
// ---------------------------------------------------------------------------

pub fn symplectic_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match symplectic_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("symplectic", e),
    }
}

fn symplectic_suite_inner(
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("symplectic");
    let mut rng = s.seed.substream("symplectic-upgrade");
    let dims = [2usize, 4, 6, 8];
    let trials_per_dim = s.counts.symplectic_upgrade_trials.div_ceil(dims.len());
    let mut upgrade_failures = 0usize;
    let mut total = 0usize;
    for &dim in &dims {
        let sp = random_symplectic_space(&mut rng, dim, policy)?;
        for _ in 0..trials_per_dim {
            total += 1;
            let (lam, mu) = random_transversal_isotropic_pair(&sp, &mut rng, policy)?;
            if !transversal_isotropic_upgrade_check(&sp, &lam, &mu, policy)? {
                upgrade_failures += 1;
            }
        }
    }
    rec.push(CheckRecord::exact_int(
        format!("upgrade_failures_of_{total}"),
        upgrade_failures as i64,
        0,
    ));

    let mut rng_r = s.seed.substream("symplectic-reduce");
    let reduce_dims = [4usize, 6, 8, 12];
    let reduce_per_dim = s.counts.symplectic_reduce_trials.div_ceil(reduce_dims.len());
    let mut reduce_failures = 0usize;
    let mut reduce_total = 0usize;
    for &dim in &reduce_dims {
        let sp = random_symplectic_space(&mut rng_r, dim, policy)?;
        for _ in 0..reduce_per_dim {
            reduce_total += 1;
            let lam = random_lagrangian(&sp, &mut rng_r, policy)?;
            let iso = rng_r.gen_range(0..=dim / 2);
            let (w, w0) = random_coisotropic_with_split(&sp, &mut rng_r, iso, policy)?;
            if symplectic_reduce(&sp, &lam, &w, &w0, policy).is_err() {
                reduce_failures += 1;
            }
        }
    }
    rec.push(CheckRecord::exact_int(
        format!("reduction_failures_of_{reduce_total}"),
        reduce_failures as i64,
        0,
    ));

    // frozen dim-4 brute-force oracle
    let sp4 = SymplecticSpace::standard(4, policy)?;
    let lam = crate::numkernel::Subspace::coordinate(4, &[0, 2]);
    let w = crate::numkernel::Subspace::coordinate(4, &[0, 1, 2]);
    let w0 = crate::numkernel::Subspace::coordinate(4, &[0, 1]);
    let red = symplectic_reduce(&sp4, &lam, &w, &w0, policy)?;
    let oracle = crate::numkernel::Subspace::coordinate(2, &[0]);
    let oracle_angle = max_principal_angle(&red.reduced, &oracle)?;
    rec.push(CheckRecord::le("dim4_bruteforce_oracle", oracle_angle, 1e-8));
    Ok(rec)
}

// ---------------------------------------------------------------------------
// perturbation
// ---------------------------------------------------------------------------

pub fn perturbation_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match perturbation_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("perturbation", e),
    }
}

fn perturbation_suite_inner(
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("perturbation");
    // mode ladder with a first-order perturbation saturating the decay envelope
    let layout = ModeLayout::new(1, 16);
    let blocks: Vec<ComplexMatrix> = layout
        .modes()
        .map(|k| {
            ComplexMatrix::diag_real(&[if k >= 0 { 1.0 + k as f64 } else { -1.0 + k as f64 }])
        })
        .collect();
    let b = ComplexMatrix::block_diag(&blocks.iter().collect::<Vec<_>>());
    let v = crate::sectorial::order_alpha_multiplier(&ComplexMatrix::diag_real(&[0.02]), 16, 1.0);
    let cfg = crate::sectorial::SpectralCutConfig::new(0.5, 2.0 * 17.0 + 4.0, 0.15)?;
    for (s_in, s_out) in [(0.0, 0.0), (0.0, 0.5)] {
        let fit = resolvent_perturbation_probe(layout, &b, &v, s_in, s_out, &cfg, policy)?;
        rec.push(CheckRecord::close(
            format!("resolvent_slope_s{s_in}_sp{s_out}"),
            fit.slope,
            -1.0 + s_out - s_in,
            0.1,
        ));
    }

    // sectorial mixed-norm stability is first order
    let layout2 = ModeLayout::new(2, 2);
    let blocks2: Vec<ComplexMatrix> = layout2
        .modes()
        .map(|k| ComplexMatrix::diag_real(&[1.0 + k.abs() as f64, -1.0 - k.abs() as f64]))
        .collect();
    let b2 = ComplexMatrix::block_diag(&blocks2.iter().collect::<Vec<_>>());
    let v2 = crate::sectorial::order_alpha_multiplier(&ComplexMatrix::diag_real(&[0.3, 0.2]), 2, 0.0);
    let cfg2 = crate::sectorial::SpectralCutConfig::new(0.5, 2.0 * 3.0 + 4.0, 0.15)?;
    let cutoff = CutoffBump { plateau_end: 0.4, support_end: 1.0 };
    let stability =
        sectorial_stability_probe(layout2, &b2, &v2, 0.0, 0.25, &cutoff, &cfg2, policy)?;
    rec.push(CheckRecord::close(
        "sectorial_stability_exponent",
        stability.fitted_exponent,
        1.0,
        0.1,
    ));

    // Riesz-Lipschitz audit
    let mut rng = s.seed.substream("riesz-audit");
    let mut accepted = 0usize;
    let mut failures = 0usize;
    while accepted < s.counts.riesz_trials {
        let raw = ComplexMatrix::from_fn(6, 6, |_, _| random_complex(&mut rng));
        let b_h = (&raw + &raw.adjoint()).scale_real(0.5);
        let raw_v = ComplexMatrix::from_fn(6, 6, |_, _| random_complex(&mut rng));
        let scale: f64 = rng.gen_range(0.005..0.05);
        let v_h = (&raw_v + &raw_v.adjoint()).scale_real(0.5 * scale);
        match riesz_lipschitz_check(&b_h, &(&b_h + &v_h), 0.3, policy) {
            Ok(report) => {
                accepted += 1;
                if !report.holds {
                    failures += 1;
                }
            }
            Err(crate::error::Error::QTooLarge(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    rec.push(CheckRecord::exact_int(
        format!("riesz_lipschitz_failures_of_{accepted}"),
        failures as i64,
        0,
    ));

    // lower-order projection stability
    let layout3 = ModeLayout::new(2, 3);
    let blocks3: Vec<ComplexMatrix> = layout3
        .modes()
        .map(|k| ComplexMatrix::diag_real(&[1.0 + k.abs() as f64, -1.0 - k.abs() as f64]))
        .collect();
    let b3 = ComplexMatrix::block_diag(&blocks3.iter().collect::<Vec<_>>());
    let v3 = crate::sectorial::order_alpha_multiplier(&ComplexMatrix::diag_real(&[0.2, 0.1]), 3, 0.5);
    let cfg3 = crate::sectorial::SpectralCutConfig::new(0.5, 2.0 * 4.0 + 4.0, 0.15)?;
    let scales: Vec<f64> = (1..=5).map(|k| 0.02 * k as f64).collect();
    let fit = lower_order_projection_stability(layout3, &b3, &v3, 0.5, &scales, &cfg3, policy)?;
    let (_, intercept, _) = {
        let xs: Vec<f64> = fit.samples.iter().map(|(x, _)| *x).collect();
        let ys: Vec<f64> = fit.samples.iter().map(|(_, y)| *y).collect();
        fit_line(&xs, &ys)
    };
    rec.push(CheckRecord::le("lower_order_intercept", intercept.abs(), 1e-8));
    rec.push(CheckRecord::boolean("lower_order_slope_finite", fit.slope.is_finite()));
    Ok(rec)
}

// ---------------------------------------------------------------------------
// continuity
// ---------------------------------------------------------------------------

pub fn continuity_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match continuity_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("continuity", e),
    }
}

fn continuity_suite_inner(
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("continuity");
    let ts = geometric_steps(0.0, 8, 0.064);
    let family = rotation_family(
        crate::scenario::i_sigma(),
        ComplexMatrix::diag_real(&[0.5, -0.5]),
        crate::scenario::rotation_j(),
        &ts,
        1.0,
        9,
        2,
        true,
        &BoundaryChoice::JtInv,
        policy,
    )?;
    let targets = [
        ContinuityTarget::Calderon { selfadjoint_leading: true },
        ContinuityTarget::DoubleInverse,
        ContinuityTarget::Poisson,
        ContinuityTarget::WellposedResolvent,
    ];
    for target in targets {
        let curve = continuity_experiment(&family, target, 0.25, &s.seed, policy)?;
        rec.push(CheckRecord::boolean(
            format!("{}_modulus_monotone", curve.target),
            curve.monotone,
        ));
        rec.push(CheckRecord::le(
            format!("{}_finest_step", curve.target),
            curve.finest_diff,
            1e-3,
        ));
        rec.curves.push(CurveRecord {
            name: format!("continuity_{}", curve.target),
            columns: vec!["z_i".into(), "z_j".into(), "d_str".into(), "diff_norm".into()],
            rows: curve
                .rows
                .iter()
                .map(|r| vec![r.z_i, r.z_j, r.d_str, r.diff_norm])
                .collect(),
            flags: curve.rows.iter().map(|r| r.flag.clone()).collect(),
        });
    }

    // engineered cut crossing must be flagged at the crossing sample
    let crossing_ts = [-0.2, -0.1, 0.0, 0.1, 0.2];
    let crossing = cut_crossing_family(0.25, &crossing_ts, policy)?;
    let curve = continuity_experiment(
        &crossing,
        ContinuityTarget::Calderon { selfadjoint_leading: false },
        0.25,
        &s.seed,
        policy,
    )?;
    let crossing_flagged = curve
        .rows
        .iter()
        .any(|r| r.flag.as_deref() == Some("cut_crossed") && (r.z_i == 0.0 || r.z_j == 0.0));
    rec.push(CheckRecord::boolean("cut_crossing_flagged", crossing_flagged));

    // transport identities with a measured constant
    let d = &s.operator;
    let t = make_boundary_condition(d, &BoundaryChoice::JtInv, policy)?;
    let t_prime = make_boundary_condition(d, &BoundaryChoice::UnitaryJ, policy)?;
    let (_, transport_report) = domain_transport(d, &t, &t_prime, policy)?;
    rec.push(CheckRecord::le(
        "transport_cocycle",
        transport_report.cocycle_defect,
        1e-10,
    ));
    rec.push(CheckRecord::le(
        "transport_inverse",
        transport_report.inverse_defect,
        1e-10,
    ));
    rec.push(CheckRecord::le(
        "transport_coupling_map",
        transport_report.coupling_transport_defect,
        1e-9,
    ));
    Ok(rec)
}

// ---------------------------------------------------------------------------
// extension
// ---------------------------------------------------------------------------

pub fn extension_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match extension_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("extension", e),
    }
}

fn extension_suite_inner(
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("extension");
    let d = if s.operator.is_selfadjoint_flagged() {
        s.operator.clone()
    } else {
        builtin_gapped_selfadjoint_with_length(s.seed_value, 1.0, 9, policy)?.operator
    };
    let res = crate::extension::extend_symmetric(&d, 0.5, 8, policy)?;
    rec.push(CheckRecord::le("halvings_within_budget", res.halvings_used as f64, 8.0));
    rec.push(CheckRecord::le("restriction_identity", d.field_distance(&res.extended), 1e-12));
    // constant near the new boundary
    let j0 = d.j_field().eval(d.lo());
    let mut const_defect = 0.0f64;
    for &x in res.extended.grid() {
        if x <= res.cutoff_plateau_end + 1e-14 {
            const_defect =
                const_defect.max((&res.extended.j_field().eval(x) - &j0).max_abs());
        }
    }
    rec.push(CheckRecord::le("constant_near_new_boundary", const_defect, 1e-12));
    rec.push(CheckRecord::le("symmetry_residual", res.symmetry_residual, 1e-10));
    rec.push(CheckRecord::le("extended_ellipticity", 1e-6, res.ellipticity_min));

    // gauge identities on constant and conjugated paths
    let path = crate::collar::FiberField::constant(j0.clone());
    let samples: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
    let gauge = crate::extension::gauge_unitary(&path, &samples, policy)?;
    rec.push(CheckRecord::le("gauge_unitarity", gauge.unitarity_defect, 1e-10));
    rec.push(CheckRecord::le("gauge_conjugation", gauge.conjugation_defect, 1e-10));

    // UCP defects vanish along the extension
    let stations = vec![res.extended.lo(), res.cutoff_plateau_end, 0.0, res.extended.hi()];
    let defects = crate::extension::ucp_defect_along_extension(&res, &stations, policy)?;
    rec.push(CheckRecord::exact_int(
        "ucp_defects_along_extension",
        defects.iter().map(|&v| v as i64).sum(),
        0,
    ));
    Ok(rec)
}

// ---------------------------------------------------------------------------
// greens
// ---------------------------------------------------------------------------

pub fn greens_suite(s: &BuiltScenario, policy: &NumericPolicy) -> ExperimentRecord {
    match greens_suite_inner(s, policy) {
        Ok(rec) => rec,
        Err(e) => record_error("greens", e),
    }
}

fn greens_suite_inner(s: &BuiltScenario, policy: &NumericPolicy) -> Result<ExperimentRecord> {
    let mut rec = ExperimentRecord::new("greens");
    let d = &s.operator;
    // the same fields at three fine resolutions; the reported order is the
    // finest local rate, where coarse transients of the defect expansion
    // have died out
    let resolutions = [65usize, 129, 257];
    let mut operators = Vec::new();
    for &points in &resolutions {
        let op = crate::collar::CollarOperator::new(
            d.lo(),
            d.hi(),
            points,
            d.fiber_dim(),
            d.truncation(),
            d.j_field().clone(),
            d.b_field().clone(),
            d.c_field().clone(),
            d.is_selfadjoint_flagged(),
            policy,
        )?;
        let adjoint = op.formal_adjoint(policy)?;
        operators.push((op, adjoint));
    }
    let layout = d.layout();
    let mut rng = s.seed.substream("greens-pairs");
    let mut worst_order_error = 0.0f64;
    let mut orders = Vec::new();
    for _ in 0..s.counts.green_pairs {
        // dense random smooth pair: every (mode, fiber) slot carries a
        // trigonometric x-profile, so no structural pairing can vanish
        let slot_count = ((2 * d.truncation() + 1) as usize) * d.fiber_dim();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<(C64, f64, f64)> {
            (0..slot_count)
                .map(|_| {
                    (
                        random_complex(rng),
                        rng.gen_range(0.4..1.5),
                        rng.gen_range(0.0..std::f64::consts::PI),
                    )
                })
                .collect()
        };
        let amplitudes = draw(&mut rng);
        let amplitudes_v = draw(&mut rng);
        let build = |op: &crate::collar::CollarOperator, amps: &[(C64, f64, f64)]| {
            Section::from_fn(op.grid(), op.sigma_dim(), |x| {
                let mut v = vec![C64::new(0.0, 0.0); op.sigma_dim()];
                let mut slot = 0usize;
                for k in layout.modes() {
                    for fiber in 0..layout.fiber_dim {
                        let (amp, freq, phase) = amps[slot];
                        v[layout.block_start(k) + fiber] =
                            amp * C64::new((freq * x + phase).sin(), 0.0);
                        slot += 1;
                    }
                }
                v
            })
        };
        let mut defects = Vec::new();
        for (op, adjoint) in &operators {
            let u = build(op, &amplitudes);
            let v = build(op, &amplitudes_v);
            let h = op.grid_spacing();
            let du = op.apply(&u)?;
            let dtv = adjoint.apply(&v)?;
            let defect = crate::collar::inner_product(&du, &v, h)
                - crate::collar::inner_product(&u, &dtv, h)
                + dot(&op.boundary_j().apply(&u.trace()), &v.trace());
            defects.push(defect.norm().max(1e-300));
        }
        let n = defects.len();
        let order = (defects[n - 2] / defects[n - 1]).log2();
        orders.push(order);
        worst_order_error = worst_order_error.max((order - 4.0).abs());
    }
    rec.push(CheckRecord::le("green_defect_order_error", worst_order_error, 0.3));
    rec.curves.push(CurveRecord {
        name: "green_orders".into(),
        columns: vec!["pair".into(), "fitted_order".into()],
        rows: orders.iter().enumerate().map(|(i, &o)| vec![i as f64, o]).collect(),
        flags: vec![None; orders.len()],
    });
    Ok(rec)
}

// ---------------------------------------------------------------------------
// dispatcher
// ---------------------------------------------------------------------------

pub fn run_experiment(
    name: &str,
    s: &BuiltScenario,
    policy: &NumericPolicy,
) -> ExperimentRecord {
    match name {
        "sectorial" => sectorial_suite(s, policy),
        "calderon" => calderon_suite(s, policy),
        "cobordism" => cobordism_suite(s, policy),
        "symplectic" => symplectic_suite(s, policy),
        "perturbation" => perturbation_suite(s, policy),
        "continuity" => continuity_suite(s, policy),
        "extension" => extension_suite(s, policy),
        "greens" => greens_suite(s, policy),
        other => {
            let mut rec = ExperimentRecord::new(other);
            rec.error = Some(format!("unknown experiment '{other}'"));
            rec
        }
    }
}

/// The experiment catalog with one-line descriptions, for `cylab list`.
pub fn experiment_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("sectorial", "spectral projections, semigroup laws, oracle equivalence, unboundedness exhibit"),
        ("calderon", "boundary conditions, Calderon algebra, double solves, Poisson identities, product-case decay"),
        ("cobordism", "signature vanishing, Lagrangian range, graded index, spectral splitting"),
        ("symplectic", "random isotropic-upgrade and reduction property suites with a frozen oracle"),
        ("perturbation", "resolvent and projection perturbation bounds, Riesz-Lipschitz audit"),
        ("continuity", "modulus curves for double/Poisson/Calderon/resolvent targets, cut-crossing flags, transports"),
        ("extension", "symmetric constant-coefficient continuation, gauge unitary, UCP stations"),
        ("greens", "Green-formula defect convergence order under grid refinement"),
    ]
}
