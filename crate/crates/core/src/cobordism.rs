//! The cobordism suite: three-way spectral splitting along the imaginary
//! axis, co-isotropy of the outer pieces, the vanishing signature on the
//! imaginary-spectrum subspace, the graded index split, and the
//! signature-flow experiment.

use crate::collar::CollarOperator;
use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, Subspace, hermitian_eigen_with, hermitian_inv_sqrt, hermitian_sqrt,
    lu_solve_with, max_principal_angle, null_space, orthonormalize_with, smallest_singular_value,
};
use crate::policy::NumericPolicy;
use crate::sectorial::{Contour, Idempotent, SpectralCutConfig, sectorial_projection_with};
use crate::symplectic::form_signature;

/// The three-way split `W_< (+) W_0 (+) W_>` from the contours around the
/// left, imaginary-axis, and right parts of the spectrum.
#[derive(Clone)]
pub struct SpectralSplit {
    pub p_less: Idempotent,
    pub p_zero: Idempotent,
    pub p_greater: Idempotent,
    pub w_less: Subspace,
    pub w_zero: Subspace,
    pub w_greater: Subspace,
}

impl SpectralSplit {
    /// `P_< + P_0 + P_> = Id` and pairwise products vanish.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let dim = self.p_less.dim();
        let sum = &(self.p_less.matrix() + self.p_zero.matrix()) + self.p_greater.matrix();
        let sum_defect = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if sum_defect > tol {
            return Err(Error::NotIdempotent { defect: sum_defect, tol });
        }
        let pairs = [
            (self.p_less.matrix(), self.p_zero.matrix()),
            (self.p_less.matrix(), self.p_greater.matrix()),
            (self.p_zero.matrix(), self.p_greater.matrix()),
        ];
        for (a, b) in pairs {
            let prod = (a * b).max_abs().max((b * a).max_abs());
            if prod > tol {
                return Err(Error::NotIdempotent { defect: prod, tol });
            }
        }
        Ok(())
    }
}

/// Builds the three contour-integral idempotents of `b` for the given cut
/// geometry and returns them with their range subspaces.
pub fn spectral_split(
    b: &ComplexMatrix,
    cfg: &SpectralCutConfig,
    policy: &NumericPolicy,
) -> Result<SpectralSplit> {
    cfg.validate_for(b, policy)?;
    let nodes = Contour::MIN_NODES_PER_PIECE;
    let gamma_zero = Contour::new(cfg.zero_pieces(), nodes)?;
    let gamma_greater = Contour::new(cfg.greater_pieces(), nodes)?;
    let gamma_less = Contour::new(cfg.less_pieces(), nodes)?;
    let p_zero = sectorial_projection_with(b, &gamma_zero, policy)?;
    let p_greater = sectorial_projection_with(b, &gamma_greater, policy)?;
    let p_less = sectorial_projection_with(b, &gamma_less, policy)?;
    let split = SpectralSplit {
        w_less: range_of(&p_less, policy),
        w_zero: range_of(&p_zero, policy),
        w_greater: range_of(&p_greater, policy),
        p_less,
        p_zero,
        p_greater,
    };
    split.verify(policy.idempotent_tol)?;
    Ok(split)
}

fn range_of(p: &Idempotent, policy: &NumericPolicy) -> Subspace {
    crate::numkernel::orthonormalize_scaled(p.matrix(), policy, Some(1.0))
}

/// Report of the co-isotropy identities `W_>^omega = W_0 (+) W_>` and
/// `W_<^omega = W_< (+) W_0`.
#[derive(Debug, Clone)]
pub struct CoisotropyReport {
    pub greater_angle: f64,
    pub less_angle: f64,
    pub ok: bool,
}

/// Verifies the annihilator identities of the splitting for a skew `j`
/// anticommuting with `b` in the formal-adjoint sense `j b = -b* j`.
pub fn coisotropy_check(
    split: &SpectralSplit,
    j: &ComplexMatrix,
    b: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<CoisotropyReport> {
    let relation = (&(j * b) + &(&b.adjoint() * j)).max_abs();
    if relation > 1e-8 * (j.max_abs() * b.max_abs()).max(1.0) {
        return Err(Error::RelationViolated(relation));
    }
    let sp = crate::symplectic::SymplecticSpace::new(
        (j - &j.adjoint()).scale_real(0.5),
        policy,
    )?;
    let ann_greater = crate::symplectic::annihilator(&sp, &split.w_greater, policy)?;
    let union_gz = orthonormalize_with(
        &split.w_greater.frame().hcat(split.w_zero.frame()),
        policy,
    );
    let greater_angle = if ann_greater.dim() == union_gz.dim() {
        max_principal_angle(&ann_greater, &union_gz)?
    } else {
        f64::INFINITY
    };
    let ann_less = crate::symplectic::annihilator(&sp, &split.w_less, policy)?;
    let union_lz = orthonormalize_with(
        &split.w_less.frame().hcat(split.w_zero.frame()),
        policy,
    );
    let less_angle = if ann_less.dim() == union_lz.dim() {
        max_principal_angle(&ann_less, &union_lz)?
    } else {
        f64::INFINITY
    };
    let ok = greater_angle <= policy.angle_tol && less_angle <= policy.angle_tol;
    Ok(CoisotropyReport { greater_angle, less_angle, ok })
}

/// Locates imaginary-axis spectrum of a realized tangential operator by a
/// singular-value scan of `(b - it)` over `t in [-c, c]`, then integrates
/// over small circles around the detected dips. Constructed suite operators
/// place `W_0` by design; scan results on general operators are heuristic.
pub fn imaginary_spectrum_projection(
    b: &ComplexMatrix,
    cut_radius: f64,
    policy: &NumericPolicy,
) -> Result<Idempotent> {
    let dim = b.rows();
    let scan_points = 400usize;
    let mut dips: Vec<f64> = Vec::new();
    let mut values = Vec::with_capacity(scan_points + 1);
    for i in 0..=scan_points {
        let t = -cut_radius + 2.0 * cut_radius * i as f64 / scan_points as f64;
        let shifted = b - &ComplexMatrix::diag(&vec![C64::new(0.0, t); dim]);
        values.push((t, smallest_singular_value(&shifted, policy)?));
    }
    let dip_threshold = 1e-3;
    for w in values.windows(3) {
        let (tm, vm) = w[1];
        if vm < dip_threshold && vm <= w[0].1 && vm <= w[2].1 {
            dips.push(tm);
        }
    }
    if values[0].1 < dip_threshold && values[0].1 < values[1].1 {
        dips.insert(0, values[0].0);
    }
    if values[scan_points].1 < dip_threshold
        && values[scan_points].1 < values[scan_points - 1].1
    {
        dips.push(values[scan_points].0);
    }
    if dips.is_empty() {
        return Idempotent::new(ComplexMatrix::zeros(dim, dim), policy.idempotent_tol);
    }
    // merge nearby dips and integrate over small circles around each
    dips.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for t in dips {
        if merged.last().map(|&last| t - last > 0.05).unwrap_or(true) {
            merged.push(t);
        }
    }
    let radius = {
        let mut gaps = vec![cut_radius.max(0.1)];
        for w in merged.windows(2) {
            gaps.push((w[1] - w[0]) / 2.0);
        }
        gaps.into_iter().fold(f64::INFINITY, f64::min).clamp(0.02, 0.2)
    };
    let mut total = ComplexMatrix::zeros(dim, dim);
    for &t in &merged {
        let circle = Contour::new(
            vec![crate::sectorial::ContourPiece::Arc {
                center: C64::new(0.0, t),
                radius,
                angle_start: 0.0,
                angle_end: std::f64::consts::TAU,
            }],
            Contour::MIN_NODES_PER_PIECE,
        )?;
        let id = ComplexMatrix::identity(dim);
        let p = crate::sectorial::contour_integral(&circle, policy, |z| {
            lu_solve_with(&(&ComplexMatrix::diag(&vec![z; dim]) - b), &id, policy)
        })?;
        total = &total + &p;
    }
    Idempotent::new(total, policy.idempotent_tol)
}

/// The cobordism signature: `sign( i P_0 J_0 restricted to W_0 )` for the
/// tangential operator of a formally selfadjoint collar operator. The
/// cobordism invariance makes this vanish; the value is computed, never
/// assumed.
pub fn cobordism_signature(
    d: &CollarOperator,
    cut_radius: f64,
    policy: &NumericPolicy,
) -> Result<i64> {
    if !d.is_selfadjoint_flagged() {
        return Err(Error::PreconditionFailed(
            "cobordism signature needs the selfadjoint flag".into(),
        ));
    }
    let layout = d.layout();
    let b0 = d.b_at(d.lo())?.realized().clone();
    let j0 = layout.expand_fiber(&d.j_field().eval(d.lo()));
    let relation = (&(&j0 * &b0) + &(&b0.adjoint() * &j0)).max_abs();
    if relation > 1e-8 * (j0.max_abs() * b0.max_abs()).max(1.0) {
        return Err(Error::RelationViolated(relation));
    }
    let p0 = imaginary_spectrum_projection(&b0, cut_radius, policy)?;
    let w0 = range_of(&p0, policy);
    if w0.dim() == 0 {
        return Ok(0);
    }
    // orthogonal projection onto W_0 composed with J_0, compressed to W_0
    let frame = w0.frame();
    let form = &(&frame.adjoint() * &j0) * frame;
    let hermitian = (&form.scale(C64::new(0.0, 1.0))
        + &form.scale(C64::new(0.0, 1.0)).adjoint())
        .scale_real(0.5);
    form_signature(&hermitian, policy)
}

/// Graded split of a Hermitian `b0` anticommuting with an invertible skew
/// `j`: the grading `alpha = i j (-j^2)^{-1/2}` splits the space, `b0` maps
/// the +1 eigenspace to the -1 eigenspace, and the finite-rank index of that
/// block is reported.
#[derive(Debug, Clone)]
pub struct GradingSplit {
    pub b_plus: ComplexMatrix,
    pub index: i64,
    pub dim_plus: usize,
    pub dim_minus: usize,
}

pub fn grading_split_index(
    b0: &ComplexMatrix,
    j: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<GradingSplit> {
    let scale = (j.max_abs() * b0.max_abs()).max(1.0);
    if b0.hermitian_defect() > 1e-8 * b0.max_abs().max(1.0) {
        return Err(Error::RelationViolated(b0.hermitian_defect()));
    }
    let anti = (&(j * b0) + &(b0 * j)).max_abs();
    if anti > 1e-8 * scale {
        return Err(Error::RelationViolated(anti));
    }
    let minus_j_sq = (j * j).scale_real(-1.0);
    let root_inv = hermitian_inv_sqrt(&minus_j_sq, policy.invertibility_floor.powi(2))?;
    let alpha = (j * &root_inv).scale(C64::new(0.0, 1.0));
    let (eigenvalues, vectors) = hermitian_eigen_with(&alpha, policy)?;
    let mut plus_cols = Vec::new();
    let mut minus_cols = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l > 0.0 {
            plus_cols.push(vectors.column(i));
        } else {
            minus_cols.push(vectors.column(i));
        }
    }
    let dim = b0.rows();
    let v_plus = ComplexMatrix::from_columns(dim, &plus_cols);
    let v_minus = ComplexMatrix::from_columns(dim, &minus_cols);
    let b_plus = &(&v_minus.adjoint() * b0) * &v_plus;
    let (dim_plus, dim_minus) = (plus_cols.len(), minus_cols.len());
    let kernel = null_space(&b_plus, policy)?.dim();
    let cokernel = null_space(&b_plus.adjoint(), policy)?.dim();
    let index = kernel as i64 - cokernel as i64;
    if dim_plus != dim_minus {
        return Err(Error::GradingUnbalanced { dim_plus, dim_minus });
    }
    Ok(GradingSplit { b_plus, index, dim_plus, dim_minus })
}

/// Mode-mass guard for circle operators: the kernel and cokernel of the
/// graded block must not live in the outer quarter of the mode window,
/// otherwise the truncated index is inconclusive.
#[derive(Debug, Clone)]
pub struct GuardedIndex {
    pub split_index: i64,
    pub guard_band_mass: f64,
    pub conclusive: bool,
}

pub fn guarded_circle_index(
    b: &crate::circleop::CircleOperator,
    j_fiber: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<GuardedIndex> {
    let layout = b.layout();
    let j = layout.expand_fiber(j_fiber);
    let realized = b.realized().clone();
    let split = grading_split_index(&realized, &j, policy)?;
    // mass of the kernel/cokernel on modes |k| > N - N/4
    let guard_start = layout.truncation - layout.truncation / 4;
    let kernel = null_space(&split.b_plus, policy)?;
    let cokernel = null_space(&split.b_plus.adjoint(), policy)?;
    // kernel vectors live in the graded coordinates; transport back
    let minus_j_sq = (&j * &j).scale_real(-1.0);
    let root_inv = hermitian_inv_sqrt(&minus_j_sq, policy.invertibility_floor.powi(2))?;
    let alpha = (&j * &root_inv).scale(C64::new(0.0, 1.0));
    let (eigenvalues, vectors) = hermitian_eigen_with(&alpha, policy)?;
    let mut plus_cols = Vec::new();
    let mut minus_cols = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l > 0.0 {
            plus_cols.push(vectors.column(i));
        } else {
            minus_cols.push(vectors.column(i));
        }
    }
    let dim = realized.rows();
    let v_plus = ComplexMatrix::from_columns(dim, &plus_cols);
    let v_minus = ComplexMatrix::from_columns(dim, &minus_cols);
    let mut guard_mass = 0.0f64;
    let mut band_indicator = vec![false; dim];
    for k in layout.modes() {
        if k.abs() > guard_start {
            let s = layout.block_start(k);
            for f in 0..layout.fiber_dim {
                band_indicator[s + f] = true;
            }
        }
    }
    let mass_of = |frame: &ComplexMatrix, basis: &ComplexMatrix| -> f64 {
        let mut mass = 0.0f64;
        for col in 0..frame.cols() {
            let ambient = basis.apply(&frame.column(col));
            let m: f64 = ambient
                .iter()
                .enumerate()
                .filter(|(i, _)| band_indicator[*i])
                .map(|(_, z)| z.norm_sqr())
                .sum();
            mass = mass.max(m.sqrt());
        }
        mass
    };
    guard_mass = guard_mass.max(mass_of(kernel.frame(), &v_plus));
    guard_mass = guard_mass.max(mass_of(cokernel.frame(), &v_minus));
    Ok(GuardedIndex {
        split_index: split.index,
        guard_band_mass: guard_mass,
        conclusive: guard_mass <= 1e-6,
    })
}

/// One sample of the signature-flow family.
pub struct FlowSample {
    pub j: ComplexMatrix,
    pub b: ComplexMatrix,
    /// Positive definite metric implementing the sample inner product.
    pub s: Option<ComplexMatrix>,
}

#[derive(Debug, Clone)]
pub struct FlowReport {
    pub signatures: Vec<Option<i64>>,
    /// Samples flagged indeterminate: the kernel rank decision was within a
    /// factor 10 of the threshold.
    pub flagged: Vec<usize>,
    pub constant: bool,
}

/// Computes `sign(i J_t restricted to ker B_t)` along the family and asserts
/// constancy over the unflagged samples.
pub fn signature_flow_experiment(
    samples: &[FlowSample],
    policy: &NumericPolicy,
) -> Result<FlowReport> {
    let mut signatures: Vec<Option<i64>> = Vec::with_capacity(samples.len());
    let mut flagged = Vec::new();
    for (idx, sample) in samples.iter().enumerate() {
        // reduce to the flat metric: conjugate by S^{1/2}
        let (j, b) = match &sample.s {
            None => (sample.j.clone(), sample.b.clone()),
            Some(s) => {
                let root = hermitian_sqrt(s)?;
                let root_inv = hermitian_inv_sqrt(s, policy.invertibility_floor.powi(2))?;
                (&(&root * &sample.j) * &root_inv, &(&root * &sample.b) * &root_inv)
            }
        };
        let scale = (j.max_abs() * b.max_abs()).max(1.0);
        let anti = (&(&j * &b) + &(&b * &j)).max_abs();
        if anti > 1e-8 * scale {
            return Err(Error::RelationViolated(anti));
        }
        let ij = j.scale(C64::new(0.0, 1.0));
        if ij.hermitian_defect() > 1e-8 * ij.max_abs().max(1.0)
            || b.hermitian_defect() > 1e-8 * b.max_abs().max(1.0)
        {
            return Err(Error::PreconditionFailed(format!(
                "sample {idx}: iJ or B not Hermitian in the sample metric"
            )));
        }
        // kernel of b with a guard band on the rank decision
        let (eigenvalues, vectors) = hermitian_eigen_with(&b, policy)?;
        let threshold = policy.subspace_rank_tol * b.max_abs().max(1.0);
        let smallest_nonzero = eigenvalues
            .iter()
            .map(|l| l.abs())
            .filter(|a| *a > threshold)
            .fold(f64::INFINITY, f64::min);
        if smallest_nonzero < 10.0 * threshold {
            flagged.push(idx);
            signatures.push(None);
            continue;
        }
        let kernel_cols: Vec<Vec<C64>> = eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, l)| l.abs() <= threshold)
            .map(|(i, _)| vectors.column(i))
            .collect();
        if kernel_cols.is_empty() {
            signatures.push(Some(0));
            continue;
        }
        let frame = ComplexMatrix::from_columns(b.rows(), &kernel_cols);
        let compressed = &(&frame.adjoint() * &ij) * &frame;
        let hermitized = (&compressed + &compressed.adjoint()).scale_real(0.5);
        signatures.push(Some(form_signature(&hermitized, policy)?));
    }
    let present: Vec<i64> = signatures.iter().flatten().copied().collect();
    let constant = present.windows(2).all(|w| w[0] == w[1]);
    Ok(FlowReport { signatures, flagged, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calderon::pair::tests::gapped_selfadjoint_collar;
    use crate::sectorial::weakly_sectorial_example;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rotation() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
    }

    #[test]
    fn split_of_diag_three() {
        let policy = NumericPolicy::default();
        let b = ComplexMatrix::diag_real(&[1.0, -1.0, 0.0]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        split.verify(1e-8).unwrap();
        assert!(
            max_principal_angle(&split.w_greater, &Subspace::coordinate(3, &[0]))
                .unwrap()
                < 1e-8
        );
        assert!(
            max_principal_angle(&split.w_less, &Subspace::coordinate(3, &[1])).unwrap() < 1e-8
        );
        assert!(
            max_principal_angle(&split.w_zero, &Subspace::coordinate(3, &[2])).unwrap() < 1e-8
        );
    }

    #[test]
    fn split_catches_jordan_block_on_the_axis() {
        // conjugated Jordan block at i: the generalized eigenspace has dim 2
        let policy = NumericPolicy::default();
        let jordan = ComplexMatrix::from_rows(&[
            vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
        ]);
        let v = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.3, 0.1), c(0.0, 0.2)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(-0.2, 0.0)],
            vec![c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        let v_inv = crate::numkernel::inverse(&v).unwrap();
        let b = &(&v * &jordan) * &v_inv;
        let cfg = SpectralCutConfig::new(2.0, 8.0, 0.2).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        assert_eq!(split.w_zero.dim(), 2);
        assert_eq!(split.w_greater.dim(), 1);
        assert_eq!(split.w_less.dim(), 0);
    }

    #[test]
    fn weakly_sectorial_blocks_have_empty_axis_spectrum() {
        let policy = NumericPolicy::default();
        let b = weakly_sectorial_example(&[1.0, 2.0], 0.5);
        let cfg = SpectralCutConfig::new(0.5, 2.0 * 8.0 + 4.0, 0.05).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        assert_eq!(split.w_zero.dim(), 0);
        assert_eq!(split.w_greater.dim(), 2);
        assert_eq!(split.w_less.dim(), 2);
    }

    #[test]
    fn coisotropy_for_anticommuting_pair() {
        // j = rotation, b = diag(1, -1): j b = -b* j and W_0 = 0
        let policy = NumericPolicy::default();
        let b = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        let report = coisotropy_check(&split, &rotation(), &b, &policy).unwrap();
        assert!(report.ok, "angles {} {}", report.greater_angle, report.less_angle);
    }

    #[test]
    fn coisotropy_with_nontrivial_axis_part() {
        // b = diag(1, -1, 0, 0) with j = rotation (+) rotation acting on the
        // paired kernel block: relations hold blockwise
        let policy = NumericPolicy::default();
        let b = ComplexMatrix::diag_real(&[1.0, -1.0, 0.0, 0.0]);
        let j = ComplexMatrix::block_diag(&[&rotation(), &rotation()]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        assert_eq!(split.w_zero.dim(), 2);
        let report = coisotropy_check(&split, &j, &b, &policy).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn coisotropy_rejects_commuting_pair() {
        let policy = NumericPolicy::default();
        let b = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let j = ComplexMatrix::diag(&[c(0.0, 1.0), c(0.0, 1.0)]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        let split = spectral_split(&b, &cfg, &policy).unwrap();
        let got = coisotropy_check(&split, &j, &b, &policy);
        assert!(matches!(got, Err(Error::RelationViolated(_))));
    }

    #[test]
    fn random_anticommuting_pairs_pass_coisotropy() {
        // constructive generator: b = diag over +-pairs, j pairing them
        let policy = NumericPolicy::default();
        let mut rng = crate::rng::SeedStream::new(9).substream("coisotropy");
        use rand::Rng;
        for _ in 0..25 {
            let pairs = rng.gen_range(1..=3usize);
            let mut b_blocks = Vec::new();
            let mut j_blocks = Vec::new();
            for _ in 0..pairs {
                let mu: f64 = rng.gen_range(0.4..2.0);
                b_blocks.push(ComplexMatrix::diag_real(&[mu, -mu]));
                j_blocks.push(rotation());
            }
            let b = ComplexMatrix::block_diag(&b_blocks.iter().collect::<Vec<_>>());
            let j = ComplexMatrix::block_diag(&j_blocks.iter().collect::<Vec<_>>());
            let cfg = SpectralCutConfig::new(0.2, 6.0, 0.1).unwrap();
            let split = spectral_split(&b, &cfg, &policy).unwrap();
            let report = coisotropy_check(&split, &j, &b, &policy).unwrap();
            assert!(report.ok);
        }
    }

    #[test]
    fn cobordism_signature_vanishes_on_selfadjoint_scenario() {
        let policy = NumericPolicy::default();
        let d = gapped_selfadjoint_collar(&policy, 1.0);
        // spectrum is +-|1/2 - k|: the scan inside |t| <= 0.3 finds nothing
        let sig = cobordism_signature(&d, 0.3, &policy).unwrap();
        assert_eq!(sig, 0);
    }

    #[test]
    fn cobordism_signature_with_kernel_pairing() {
        // B = i sigma d_theta has a two-dimensional kernel at mode 0 paired
        // by the rotation J: the signature of iJ there is 0
        let policy = NumericPolicy::default();
        let d = crate::collar::fixtures::selfadjoint_collar(&policy);
        let sig = cobordism_signature(&d, 0.4, &policy).unwrap();
        assert_eq!(sig, 0);
    }

    #[test]
    fn grading_split_on_swap_and_zero() {
        let policy = NumericPolicy::default();
        let b0 = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let split = grading_split_index(&b0, &rotation(), &policy).unwrap();
        assert_eq!((split.dim_plus, split.dim_minus), (1, 1));
        assert_eq!(split.index, 0);
        assert!(split.b_plus.max_abs() > 0.5);

        let zero = ComplexMatrix::zeros(2, 2);
        let split0 = grading_split_index(&zero, &rotation(), &policy).unwrap();
        assert_eq!(split0.index, 0); // 1 - 1 on the 1x1 zero block

        let b_sum = ComplexMatrix::block_diag(&[&b0, &zero]);
        let j_sum = ComplexMatrix::block_diag(&[&rotation(), &rotation()]);
        let split_sum = grading_split_index(&b_sum, &j_sum, &policy).unwrap();
        assert_eq!(split_sum.index, 0);
    }

    #[test]
    fn guarded_circle_index_is_conclusive_for_centered_kernel() {
        let policy = NumericPolicy::default();
        let gamma = crate::collar::fixtures::i_sigma();
        let b = crate::circleop::CircleOperator::assemble(
            crate::circleop::TrigPoly::constant(gamma),
            crate::circleop::TrigPoly::zero(),
            2,
            8,
        )
        .unwrap();
        let guarded = guarded_circle_index(&b, &rotation(), &policy).unwrap();
        assert!(guarded.conclusive, "guard mass {}", guarded.guard_band_mass);
        assert_eq!(guarded.split_index, 0);
    }

    #[test]
    fn signature_flow_constant_families() {
        let policy = NumericPolicy::default();
        // constant family
        let constant: Vec<FlowSample> = (0..4)
            .map(|_| FlowSample {
                j: rotation(),
                b: ComplexMatrix::zeros(2, 2),
                s: None,
            })
            .collect();
        let report = signature_flow_experiment(&constant, &policy).unwrap();
        assert!(report.constant);
        assert!(report.flagged.is_empty());

        // rotating eigenvectors with fixed spectrum
        let mut samples = Vec::new();
        for i in 0..5 {
            let t = i as f64 * 0.3;
            let u = ComplexMatrix::from_rows(&[
                vec![c(t.cos(), 0.0), c(-t.sin(), 0.0)],
                vec![c(t.sin(), 0.0), c(t.cos(), 0.0)],
            ]);
            let b0 = ComplexMatrix::diag_real(&[0.0, 0.0]);
            let b = &(&u * &b0) * &u.adjoint();
            let j = &(&u * &rotation()) * &u.adjoint();
            samples.push(FlowSample { j, b, s: None });
        }
        let report2 = signature_flow_experiment(&samples, &policy).unwrap();
        assert!(report2.constant);
    }

    #[test]
    fn signature_flow_flags_indeterminate_crossings() {
        // an eigenvalue pair crossing zero symmetrically: at the crossing the
        // kernel is 2-dimensional and J-paired; points too close to the
        // crossing are flagged rather than asserted
        let policy = NumericPolicy::default();
        let mut samples = Vec::new();
        for i in 0..7 {
            let t = -0.3 + i as f64 * 0.1; // crosses zero at i = 3
            let b = ComplexMatrix::diag_real(&[t, -t]);
            samples.push(FlowSample { j: rotation(), b, s: None });
        }
        let report = signature_flow_experiment(&samples, &policy).unwrap();
        assert!(report.constant, "signatures {:?}", report.signatures);
        // the exact-crossing sample has a genuine 2-dim kernel with
        // signature 0; others have trivial kernel with signature 0
        for s in report.signatures.iter().flatten() {
            assert_eq!(*s, 0);
        }
    }

    #[test]
    fn signature_flow_with_supplied_metric() {
        let policy = NumericPolicy::default();
        let s = ComplexMatrix::diag_real(&[2.0, 0.5]);
        // in the S-metric, iJ and B must be selfadjoint; conjugating the
        // rotation appropriately: pick J with S^{1/2} J S^{-1/2} skew
        let root_inv = hermitian_inv_sqrt(&s, 0.0).unwrap();
        let root = hermitian_sqrt(&s).unwrap();
        // S^{1/2} J S^{-1/2} = rotation (skew) for J = S^{-1/2} R S^{1/2}
        let j = &(&root_inv * &rotation()) * &root;
        let sample = FlowSample { j, b: ComplexMatrix::zeros(2, 2), s: Some(s) };
        let report = signature_flow_experiment(&[sample], &policy).unwrap();
        assert_eq!(report.signatures[0], Some(0));
    }
}
