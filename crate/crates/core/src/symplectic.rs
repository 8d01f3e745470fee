//! Finite-dimensional complex symplectic linear algebra: annihilators,
//! Lagrangian subspaces, algebraic Fredholm pairs, reduction and signatures.
//!
//! Conventions: the form is sesquilinear, conjugate-linear in the first
//! argument, `omega(x, y) = <gamma x, y>` with an invertible skew-adjoint
//! `gamma` (the strong case), and `omega(y, x) = -conj omega(x, y)`.

use crate::error::{Error, Result};
use crate::numkernel::{
    C64, ComplexMatrix, Subspace, dot, hermitian_eigen_with, max_principal_angle, null_space,
    orthogonal_complement, orthonormalize_with, smallest_singular_value,
};
use crate::policy::NumericPolicy;
use rand::Rng;

/// Strongly symplectic space `(C^dim, <gamma ., .>)`.
#[derive(Debug, Clone)]
pub struct SymplecticSpace {
    gamma: ComplexMatrix,
}

impl SymplecticSpace {
    pub fn new(gamma: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        if !gamma.is_square() {
            return Err(Error::ShapeMismatch("gamma must be square".into()));
        }
        let scale = gamma.max_abs().max(f64::MIN_POSITIVE);
        let skew_defect = (&gamma.adjoint() + &gamma).max_abs();
        if skew_defect > 1e-10 * scale {
            return Err(Error::RelationViolated(skew_defect));
        }
        if gamma.rows() == 0 {
            return Ok(SymplecticSpace { gamma });
        }
        let sv = smallest_singular_value(&gamma, policy)?;
        if sv < policy.invertibility_floor {
            return Err(Error::NotPositive(format!(
                "gamma is only weakly symplectic: smallest singular value {sv:.3e}"
            )));
        }
        Ok(SymplecticSpace { gamma })
    }

    /// Standard form: block diagonal rotations [[0,-1],[1,0]], dim even.
    pub fn standard(dim: usize, policy: &NumericPolicy) -> Result<Self> {
        assert!(dim.is_multiple_of(2));
        let block = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ]);
        let blocks: Vec<&ComplexMatrix> = std::iter::repeat_n(&block, dim / 2).collect();
        SymplecticSpace::new(ComplexMatrix::block_diag(&blocks), policy)
    }

    pub fn gamma(&self) -> &ComplexMatrix {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.gamma.rows()
    }

    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        dot(&self.gamma.apply(x), y)
    }

    /// Gram matrix of the form on the columns of a frame.
    pub fn gram(&self, frame: &ComplexMatrix) -> ComplexMatrix {
        &(&frame.adjoint() * &self.gamma.adjoint()) * frame
    }

    /// The unitary reflection `gamma (-gamma^2)^{-1/2}` implementing the form
    /// in the equivalent scalar product.
    pub fn unitary_reflection(&self, policy: &NumericPolicy) -> Result<ComplexMatrix> {
        let minus_square = (&self.gamma * &self.gamma).scale_real(-1.0);
        let root_inv = crate::numkernel::hermitian_inv_sqrt(
            &minus_square,
            policy.invertibility_floor.powi(2),
        )?;
        Ok(&self.gamma * &root_inv)
    }
}

/// Symplectic annihilator `lam^omega = (gamma lam)^perp`.
pub fn annihilator(
    sp: &SymplecticSpace,
    lam: &Subspace,
    policy: &NumericPolicy,
) -> Result<Subspace> {
    if lam.ambient_dim() != sp.dim() {
        return Err(Error::DimensionMismatch("annihilator ambient".into()));
    }
    let image = orthonormalize_with(&(sp.gamma() * lam.frame()), policy);
    Ok(orthogonal_complement(&image, policy))
}

/// Lagrangian verdict with its defect measurements.
#[derive(Debug, Clone)]
pub struct LagrangianReport {
    pub lagrangian: bool,
    pub max_angle: f64,
    pub dim_defect: i64,
}

/// `lam` is Lagrangian iff it equals its annihilator.
pub fn is_lagrangian(
    sp: &SymplecticSpace,
    lam: &Subspace,
    policy: &NumericPolicy,
) -> Result<LagrangianReport> {
    let ann = annihilator(sp, lam, policy)?;
    let dim_defect = lam.dim() as i64 - ann.dim() as i64;
    if dim_defect != 0 {
        return Ok(LagrangianReport { lagrangian: false, max_angle: f64::NAN, dim_defect });
    }
    let max_angle = max_principal_angle(lam, &ann)?;
    Ok(LagrangianReport {
        lagrangian: max_angle <= policy.angle_tol,
        max_angle,
        dim_defect,
    })
}

/// Numerical rank of the stacked frame `[lam | mu]` at the subspace rank
/// tolerance.
fn sum_rank(lam: &Subspace, mu: &Subspace, policy: &NumericPolicy) -> Result<usize> {
    if lam.dim() + mu.dim() == 0 {
        return Ok(0);
    }
    let stacked = lam.frame().hcat(mu.frame());
    Ok(stacked.cols() - null_space(&stacked, policy)?.dim())
}

/// Algebraic Fredholm index `dim(lam cap mu) - codim(lam + mu)`.
pub fn fredholm_pair_index(
    lam: &Subspace,
    mu: &Subspace,
    policy: &NumericPolicy,
) -> Result<i64> {
    if lam.ambient_dim() != mu.ambient_dim() {
        return Err(Error::DimensionMismatch("fredholm pair ambient".into()));
    }
    let rank = sum_rank(lam, mu, policy)?;
    let intersection = lam.dim() + mu.dim() - rank;
    let codim = lam.ambient_dim() - rank;
    Ok(intersection as i64 - codim as i64)
}

/// Isotropy defect: largest absolute value of the form on a frame.
pub fn isotropy_defect(sp: &SymplecticSpace, lam: &Subspace) -> f64 {
    sp.gram(lam.frame()).max_abs()
}

/// Transversal isotropic subspaces of a strongly symplectic space are
/// Lagrangian; checks the preconditions and then asserts both verdicts.
pub fn transversal_isotropic_upgrade_check(
    sp: &SymplecticSpace,
    lam: &Subspace,
    mu: &Subspace,
    policy: &NumericPolicy,
) -> Result<bool> {
    let iso_tol = 1e-8;
    let d_lam = isotropy_defect(sp, lam);
    if d_lam > iso_tol {
        return Err(Error::PreconditionFailed(format!(
            "lam is not isotropic: defect {d_lam:.3e}"
        )));
    }
    let d_mu = isotropy_defect(sp, mu);
    if d_mu > iso_tol {
        return Err(Error::PreconditionFailed(format!(
            "mu is not isotropic: defect {d_mu:.3e}"
        )));
    }
    let rank = sum_rank(lam, mu, policy)?;
    if rank != sp.dim() {
        return Err(Error::PreconditionFailed(format!(
            "lam + mu spans rank {rank} of {}",
            sp.dim()
        )));
    }
    if lam.dim() + mu.dim() != sp.dim() {
        return Err(Error::PreconditionFailed("lam cap mu is nonzero".into()));
    }
    let a = is_lagrangian(sp, lam, policy)?;
    let b = is_lagrangian(sp, mu, policy)?;
    Ok(a.lagrangian && b.lagrangian)
}

/// Result of a symplectic reduction: the reduced space `(W_0, omega|W_0)`
/// and the reduced Lagrangian inside it, in `w0`-frame coordinates.
#[derive(Debug, Clone)]
pub struct ReducedLagrangian {
    pub reduced_space: SymplecticSpace,
    pub reduced: Subspace,
}

/// Symplectic reduction `Q_0(lam cap W)` for a co-isotropic `W` with chosen
/// complement `W = W_0 (+) W^omega`; the result is verified Lagrangian in
/// the reduced form before returning.
pub fn symplectic_reduce(
    sp: &SymplecticSpace,
    lam: &Subspace,
    w: &Subspace,
    w0: &Subspace,
    policy: &NumericPolicy,
) -> Result<ReducedLagrangian> {
    let report = is_lagrangian(sp, lam, policy)?;
    if !report.lagrangian {
        return Err(Error::PreconditionFailed("lam is not Lagrangian".into()));
    }
    let w_ann = annihilator(sp, w, policy)?;
    // co-isotropy: W^omega contained in W
    if w_ann.dim() > 0 {
        let containment = (&(&ComplexMatrix::identity(sp.dim()) - &w.projector())
            * w_ann.frame())
        .max_abs();
        if containment > 1e-8 {
            return Err(Error::NotCoisotropic(format!(
                "W^omega leaks out of W by {containment:.3e}"
            )));
        }
    }
    // complement: W = W_0 (+) W^omega
    if w0.dim() + w_ann.dim() != w.dim() {
        return Err(Error::NotComplement(format!(
            "dim W_0 {} + dim W^omega {} != dim W {}",
            w0.dim(),
            w_ann.dim(),
            w.dim()
        )));
    }
    let rank = sum_rank(w0, &w_ann, policy)?;
    if rank != w.dim() {
        return Err(Error::NotComplement("stacked frame is rank deficient".into()));
    }
    let w0_containment =
        (&(&ComplexMatrix::identity(sp.dim()) - &w.projector()) * w0.frame()).max_abs();
    if w0_containment > 1e-8 {
        return Err(Error::NotComplement("W_0 leaks out of W".into()));
    }

    // lam cap W via the null space of [F_lam | -F_W]
    let stacked = lam.frame().hcat(&w.frame().scale_real(-1.0));
    let ns = null_space(&stacked, policy)?;
    let mut generators: Vec<Vec<C64>> = Vec::new();
    for col in 0..ns.dim() {
        let coeffs = ns.frame().column(col);
        let v = lam.frame().apply(&coeffs[..lam.dim()]);
        generators.push(v);
    }

    // project along W^omega onto W_0: solve [F_W0 | F_Wann] (a; b) = v
    let basis_change = if w_ann.dim() > 0 {
        w0.frame().hcat(w_ann.frame())
    } else {
        w0.frame().clone()
    };
    let mut reduced_cols: Vec<Vec<C64>> = Vec::new();
    for v in &generators {
        let rhs = ComplexMatrix::from_columns(sp.dim(), std::slice::from_ref(v));
        let (coeffs, residual) = crate::numkernel::least_squares(&basis_change, &rhs)?;
        if residual > 1e-8 * (1.0 + rhs.max_abs()) {
            return Err(Error::NotComplement(format!(
                "intersection vector leaves W (residual {residual:.3e})"
            )));
        }
        reduced_cols.push((0..w0.dim()).map(|i| coeffs[(i, 0)]).collect());
    }
    let reduced = orthonormalize_with(
        &ComplexMatrix::from_columns(w0.dim(), &reduced_cols),
        policy,
    );

    // reduced form gamma_red = F_0^* gamma F_0
    let gamma_red = &(&w0.frame().adjoint() * sp.gamma()) * w0.frame();
    let reduced_space = SymplecticSpace::new(gamma_red, policy)?;
    let verdict = is_lagrangian(&reduced_space, &reduced, policy)?;
    if !verdict.lagrangian {
        return Err(Error::NotCoisotropic(format!(
            "reduction failed the Lagrangian check (angle {:.3e}, dim defect {})",
            verdict.max_angle, verdict.dim_defect
        )));
    }
    Ok(ReducedLagrangian { reduced_space, reduced })
}

/// Signature of a Hermitian form: positive minus negative eigenvalue counts
/// beyond the policy threshold.
pub fn form_signature(h: &ComplexMatrix, policy: &NumericPolicy) -> Result<i64> {
    let (eigenvalues, _) = hermitian_eigen_with(h, policy)?;
    let pos = eigenvalues.iter().filter(|&&l| l > policy.signature_threshold).count();
    let neg = eigenvalues.iter().filter(|&&l| l < -policy.signature_threshold).count();
    Ok(pos as i64 - neg as i64)
}

/// Constructs a Lagrangian from a zero-signature nondegenerate form `h = i gamma`
/// by pairing positive and negative eigenvectors with 1/sqrt(|eigenvalue|)
/// weights; the result is verified.
pub fn lagrangian_from_zero_signature(
    h: &ComplexMatrix,
    sp: &SymplecticSpace,
    policy: &NumericPolicy,
) -> Result<Subspace> {
    let expected = (&sp.gamma().scale(C64::new(0.0, 1.0)) - h).max_abs();
    if expected > 1e-9 * h.max_abs().max(1.0) {
        return Err(Error::PreconditionFailed(
            "h must implement the form: h = i gamma".into(),
        ));
    }
    let (eigenvalues, vectors) = hermitian_eigen_with(h, policy)?;
    if eigenvalues.iter().any(|l| l.abs() <= policy.signature_threshold) {
        return Err(Error::PreconditionFailed("form is degenerate".into()));
    }
    let signature = form_signature(h, policy)?;
    if signature != 0 {
        return Err(Error::SignatureNonzero(signature));
    }
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l > 0.0 {
            positives.push((l, vectors.column(i)));
        } else {
            negatives.push((-l, vectors.column(i)));
        }
    }
    let cols: Vec<Vec<C64>> = positives
        .iter()
        .zip(&negatives)
        .map(|((a, u), (b, w))| {
            u.iter()
                .zip(w)
                .map(|(ui, wi)| ui / C64::new(a.sqrt(), 0.0) + wi / C64::new(b.sqrt(), 0.0))
                .collect()
        })
        .collect();
    let lam = orthonormalize_with(&ComplexMatrix::from_columns(sp.dim(), &cols), policy);
    let verdict = is_lagrangian(sp, &lam, policy)?;
    if !verdict.lagrangian {
        return Err(Error::PreconditionFailed(format!(
            "pairing construction failed verification (angle {:.3e})",
            verdict.max_angle
        )));
    }
    Ok(lam)
}

/// Random strongly symplectic form admitting Lagrangians: a unitary
/// conjugate of `diag(i a_1..i a_p, -i b_1..-i b_p)` with balanced halves,
/// so the signature of `i gamma` vanishes.
pub fn random_symplectic_space(
    rng: &mut impl Rng,
    dim: usize,
    policy: &NumericPolicy,
) -> Result<SymplecticSpace> {
    assert!(dim.is_multiple_of(2));
    let u = crate::sectorial::random_unitary(rng, dim, policy);
    let spectrum: Vec<C64> = (0..dim)
        .map(|i| {
            let magnitude = rng.gen_range(0.3..2.0);
            if i < dim / 2 {
                C64::new(0.0, magnitude)
            } else {
                C64::new(0.0, -magnitude)
            }
        })
        .collect();
    let gamma = &(&u * &ComplexMatrix::diag(&spectrum)) * &u.adjoint();
    // the unitary conjugation keeps gamma exactly skew up to roundoff;
    // symmetrize the tail
    let gamma = (&gamma - &gamma.adjoint()).scale_real(0.5);
    let sv = smallest_singular_value(&gamma, policy)?;
    debug_assert!(sv > 0.1);
    SymplecticSpace::new(gamma, policy)
}

/// Random Lagrangian via the eigenvector pairing of `i gamma` with a random
/// unitary mixing of the negative block.
pub fn random_lagrangian(
    sp: &SymplecticSpace,
    rng: &mut impl Rng,
    policy: &NumericPolicy,
) -> Result<Subspace> {
    let h = sp.gamma().scale(C64::new(0.0, 1.0));
    let (eigenvalues, vectors) = hermitian_eigen_with(&h, policy)?;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l > 0.0 {
            positives.push((l, vectors.column(i)));
        } else {
            negatives.push((-l, vectors.column(i)));
        }
    }
    if positives.len() != negatives.len() {
        return Err(Error::SignatureNonzero(
            positives.len() as i64 - negatives.len() as i64,
        ));
    }
    let p = positives.len();
    let mixing = crate::sectorial::random_unitary(rng, p, policy);
    let dim = sp.dim();
    let cols: Vec<Vec<C64>> = (0..p)
        .map(|j| {
            let (a, u) = &positives[j];
            let mut col: Vec<C64> = u.iter().map(|ui| ui / C64::new(a.sqrt(), 0.0)).collect();
            for (k, (b, w)) in negatives.iter().enumerate() {
                let c = mixing[(j, k)];
                for (ci, wi) in col.iter_mut().zip(w) {
                    *ci += c * wi / C64::new(b.sqrt(), 0.0);
                }
            }
            col
        })
        .collect();
    Ok(orthonormalize_with(&ComplexMatrix::from_columns(dim, &cols), policy))
}

/// Random transversal isotropic pair from two independent mixings; resamples
/// on (rare) accidental degeneracy.
pub fn random_transversal_isotropic_pair(
    sp: &SymplecticSpace,
    rng: &mut impl Rng,
    policy: &NumericPolicy,
) -> Result<(Subspace, Subspace)> {
    for _ in 0..32 {
        let lam = random_lagrangian(sp, rng, policy)?;
        let mu = random_lagrangian(sp, rng, policy)?;
        let rank = sum_rank(&lam, &mu, policy)?;
        if rank == sp.dim() && lam.dim() + mu.dim() == sp.dim() {
            return Ok((lam, mu));
        }
    }
    Err(Error::PreconditionFailed(
        "could not sample a transversal pair in 32 draws".into(),
    ))
}

/// Random co-isotropic subspace with its canonical complement split
/// `W = W_0 (+) W^omega`, built as the annihilator of a random isotropic.
pub fn random_coisotropic_with_split(
    sp: &SymplecticSpace,
    rng: &mut impl Rng,
    isotropic_dim: usize,
    policy: &NumericPolicy,
) -> Result<(Subspace, Subspace)> {
    assert!(isotropic_dim <= sp.dim() / 2);
    let lam = random_lagrangian(sp, rng, policy)?;
    let mu_cols: Vec<Vec<C64>> = (0..isotropic_dim).map(|i| lam.frame().column(i)).collect();
    let mu = orthonormalize_with(&ComplexMatrix::from_columns(sp.dim(), &mu_cols), policy);
    let w = annihilator(sp, &mu, policy)?;
    // W^omega = mu; take W_0 as the orthogonal complement of mu inside W
    let residual = &(&ComplexMatrix::identity(sp.dim()) - &mu.projector()) * w.frame();
    let w0 = crate::numkernel::orthonormalize_scaled(&residual, policy, Some(1.0));
    Ok((w, w0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStream, random_complex};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn standard2() -> (SymplecticSpace, NumericPolicy) {
        let policy = NumericPolicy::default();
        (SymplecticSpace::standard(2, &policy).unwrap(), policy)
    }

    #[test]
    fn annihilator_of_e1_in_dim_two() {
        let (sp, policy) = standard2();
        let e1 = Subspace::coordinate(2, &[0]);
        let ann = annihilator(&sp, &e1, &policy).unwrap();
        assert_eq!(ann.dim(), 1);
        // gamma e1 = e2, so the annihilator is e2^perp = span e1
        assert!(max_principal_angle(&ann, &e1).unwrap() < 1e-10);
    }

    #[test]
    fn annihilator_extremes() {
        let (sp, policy) = standard2();
        let full = Subspace::full(2);
        assert_eq!(annihilator(&sp, &full, &policy).unwrap().dim(), 0);
        let zero = Subspace::zero(2);
        assert_eq!(annihilator(&sp, &zero, &policy).unwrap().dim(), 2);
    }

    #[test]
    fn e1_is_lagrangian_in_standard_two() {
        // omega(e1, e1) = <gamma e1, e1> = <e2, e1> = 0 and dims match
        let (sp, policy) = standard2();
        let e1 = Subspace::coordinate(2, &[0]);
        assert!(is_lagrangian(&sp, &e1, &policy).unwrap().lagrangian);
        let diag = orthonormalize_with(
            &ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]),
            &policy,
        );
        assert!(is_lagrangian(&sp, &diag, &policy).unwrap().lagrangian);
        assert!(!is_lagrangian(&sp, &Subspace::full(2), &policy).unwrap().lagrangian);
    }

    #[test]
    fn strong_case_dimension_law_on_random_subspaces() {
        let policy = NumericPolicy::default();
        let mut rng = SeedStream::new(11).substream("dim-law");
        for dim in [2usize, 4, 6, 8] {
            let sp = random_symplectic_space(&mut rng, dim, &policy).unwrap();
            for _ in 0..25 {
                let d = rng.gen_range(0..=dim);
                let raw = ComplexMatrix::from_fn(dim, d, |_, _| random_complex(&mut rng));
                let lam = orthonormalize_with(&raw, &policy);
                let ann = annihilator(&sp, &lam, &policy).unwrap();
                assert_eq!(ann.dim(), dim - lam.dim());
            }
        }
    }

    #[test]
    fn fredholm_indices_on_coordinate_pairs() {
        let policy = NumericPolicy::default();
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(fredholm_pair_index(&e1, &e2, &policy).unwrap(), 0);
        assert_eq!(fredholm_pair_index(&e1, &e1, &policy).unwrap(), 0);
        assert_eq!(fredholm_pair_index(&e1, &Subspace::full(2), &policy).unwrap(), 1);
    }

    #[test]
    fn upgrade_check_on_plus_minus_diagonals() {
        let (sp, policy) = standard2();
        let plus = orthonormalize_with(
            &ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]),
            &policy,
        );
        let minus = orthonormalize_with(
            &ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]]),
            &policy,
        );
        assert!(transversal_isotropic_upgrade_check(&sp, &plus, &minus, &policy).unwrap());
    }

    #[test]
    fn upgrade_check_rejects_non_isotropic_input() {
        let policy = NumericPolicy::default();
        let sp = SymplecticSpace::standard(4, &policy).unwrap();
        let bad = Subspace::coordinate(4, &[0, 1]); // omega(e1, e2) = 1
        let mu = Subspace::coordinate(4, &[2, 3]);
        let got = transversal_isotropic_upgrade_check(&sp, &bad, &mu, &policy);
        assert!(matches!(got, Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn upgrade_property_holds_for_generated_pairs() {
        let policy = NumericPolicy::default();
        let mut rng = SeedStream::new(23).substream("upgrade");
        for dim in [2usize, 4, 6, 8] {
            let sp = random_symplectic_space(&mut rng, dim, &policy).unwrap();
            for _ in 0..20 {
                let (lam, mu) =
                    random_transversal_isotropic_pair(&sp, &mut rng, &policy).unwrap();
                assert!(
                    transversal_isotropic_upgrade_check(&sp, &lam, &mu, &policy).unwrap()
                );
            }
        }
    }

    #[test]
    fn reduce_with_full_space_returns_lam_itself() {
        let policy = NumericPolicy::default();
        let sp = SymplecticSpace::standard(4, &policy).unwrap();
        let mut rng = SeedStream::new(5).substream("reduce-full");
        let lam = random_lagrangian(&sp, &mut rng, &policy).unwrap();
        let w = Subspace::full(4);
        let w0 = Subspace::full(4);
        let red = symplectic_reduce(&sp, &lam, &w, &w0, &policy).unwrap();
        assert_eq!(red.reduced.dim(), 2);
        assert!(max_principal_angle(&red.reduced, &lam).unwrap() < 1e-8);
    }

    #[test]
    fn reduce_by_lagrangian_gives_zero_quotient() {
        let policy = NumericPolicy::default();
        let sp = SymplecticSpace::standard(4, &policy).unwrap();
        let mut rng = SeedStream::new(6).substream("reduce-lag");
        let lam = random_lagrangian(&sp, &mut rng, &policy).unwrap();
        // W Lagrangian: W^omega = W, to complement W_0 = 0
        let other = random_lagrangian(&sp, &mut rng, &policy).unwrap();
        let w0 = Subspace::zero(4);
        let red = symplectic_reduce(&sp, &lam, &other, &w0, &policy);
        // dim W_0 = 0 and the reduced space is trivial; SymplecticSpace of
        // dim 0 is fine, the reduced Lagrangian is empty
        match red {
            Ok(r) => assert_eq!(r.reduced.dim(), 0),
            Err(e) => panic!("zero quotient should pass, got {e}"),
        }
    }

    #[test]
    fn frozen_dim_four_reduction() {
        // gamma = J (+) J, lam = span{e1, e3}, W = span{e1, e2, e3}:
        // W^omega = span{e3}, W_0 = span{e1, e2}, reduction = span{e1}
        let policy = NumericPolicy::default();
        let sp = SymplecticSpace::standard(4, &policy).unwrap();
        let lam = Subspace::coordinate(4, &[0, 2]);
        let w = Subspace::coordinate(4, &[0, 1, 2]);
        let w0 = Subspace::coordinate(4, &[0, 1]);
        let red = symplectic_reduce(&sp, &lam, &w, &w0, &policy).unwrap();
        assert_eq!(red.reduced.dim(), 1);
        let e1_red = Subspace::coordinate(2, &[0]);
        assert!(max_principal_angle(&red.reduced, &e1_red).unwrap() < 1e-9);
    }

    #[test]
    fn reduction_property_suite() {
        let policy = NumericPolicy::default();
        let mut rng = SeedStream::new(31).substream("reduce-prop");
        for dim in [4usize, 6, 8, 12] {
            let sp = random_symplectic_space(&mut rng, dim, &policy).unwrap();
            for _ in 0..10 {
                let lam = random_lagrangian(&sp, &mut rng, &policy).unwrap();
                let iso_dim = rng.gen_range(0..=dim / 2);
                let (w, w0) =
                    random_coisotropic_with_split(&sp, &mut rng, iso_dim, &policy).unwrap();
                // verified internally: symplectic_reduce errors if the output
                // fails the reduced Lagrangian check
                symplectic_reduce(&sp, &lam, &w, &w0, &policy).unwrap();
            }
        }
    }

    #[test]
    fn signature_cases() {
        let policy = NumericPolicy::default();
        let (sp, _) = standard2();
        // i gamma for the rotation has eigenvalues +-1
        let h = sp.gamma().scale(c(0.0, 1.0));
        assert_eq!(form_signature(&h, &policy).unwrap(), 0);
        assert_eq!(
            form_signature(&ComplexMatrix::diag_real(&[1.0, 1.0]), &policy).unwrap(),
            2
        );
        // sub-threshold entries are excluded
        assert_eq!(
            form_signature(&ComplexMatrix::diag_real(&[1.0, -1.0, 1e-12]), &policy).unwrap(),
            0
        );
    }

    #[test]
    fn pairing_construction_in_dim_two_and_four() {
        let policy = NumericPolicy::default();
        let (sp, _) = standard2();
        let h = sp.gamma().scale(c(0.0, 1.0));
        let lam = lagrangian_from_zero_signature(&h, &sp, &policy).unwrap();
        assert_eq!(lam.dim(), 1);

        let sp4 = SymplecticSpace::standard(4, &policy).unwrap();
        let h4 = sp4.gamma().scale(c(0.0, 1.0));
        let lam4 = lagrangian_from_zero_signature(&h4, &sp4, &policy).unwrap();
        assert_eq!(lam4.dim(), 2);
    }

    #[test]
    fn pairing_rejects_nonzero_signature() {
        let policy = NumericPolicy::default();
        // gamma = i diag(1, 1) is skew? (i Id)^* = -i Id = -(i Id): yes, and
        // h = i gamma = -Id... use gamma = -i Id so h = i gamma = Id, sig 2
        let gamma = ComplexMatrix::diag(&[c(0.0, -1.0), c(0.0, -1.0)]);
        let sp = SymplecticSpace::new(gamma, &policy).unwrap();
        let h = sp.gamma().scale(c(0.0, 1.0));
        let got = lagrangian_from_zero_signature(&h, &sp, &policy);
        assert!(matches!(got, Err(Error::SignatureNonzero(2))));
    }

    #[test]
    fn unitary_reflection_is_skew_and_unitary() {
        let policy = NumericPolicy::default();
        let mut rng = SeedStream::new(77).substream("reflection");
        for dim in [2usize, 4, 6] {
            let sp = random_symplectic_space(&mut rng, dim, &policy).unwrap();
            let r = sp.unitary_reflection(&policy).unwrap();
            assert!((&r.adjoint() + &r).max_abs() < 1e-9);
            let gram = &r.adjoint() * &r;
            assert!((&gram - &ComplexMatrix::identity(dim)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn fredholm_pair_for_nearby_idempotents() {
        // constructed P, Q with small-rank difference: index of
        // (ker P, im Q) matches the brute-force rank computation
        let policy = NumericPolicy::default();
        let p = ComplexMatrix::diag_real(&[1.0, 1.0, 0.0, 0.0]);
        let mut q = p.clone();
        q[(2, 2)] = c(1.0, 0.0); // rank-one perturbation
        let ker_p = Subspace::coordinate(4, &[2, 3]);
        let im_q = Subspace::coordinate(4, &[0, 1, 2]);
        let index = fredholm_pair_index(&ker_p, &im_q, &policy).unwrap();
        // dim cap = |{2}| = 1, codim(sum) = 0: index 1
        assert_eq!(index, 1);
        let _ = q;
    }
}
