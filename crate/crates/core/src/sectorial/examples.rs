//! Constructed operators with known spectral data: the weakly sectorial
//! block family, conjugated normal forms for oracle tests, and diagonal
//! Fourier-multiplier surrogates for lower-order perturbations.

use super::calculus::{Idempotent, sectorial_projection_with};
use super::contour::{SpectralCutConfig, build_positive_contour_with};
use crate::error::Result;
use crate::numkernel::{C64, ComplexMatrix, lu_solve_with, op_norm_with, orthonormalize_with};
use crate::policy::NumericPolicy;
use crate::rng::random_complex;
use rand::Rng;

/// Finite truncation of the block operator `B(u, v) = (Du - D^{2-alpha} v, -Dv)`:
/// one 2x2 block `[[l, -l^{2-alpha}], [0, -l]]` per listed eigenvalue.
pub fn weakly_sectorial_example(lambdas: &[f64], alpha: f64) -> ComplexMatrix {
    assert!(
        lambdas.windows(2).all(|w| w[0] < w[1]) && lambdas.iter().all(|&l| l > 0.0),
        "lambdas must be positive ascending"
    );
    assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1]");
    let blocks: Vec<ComplexMatrix> = lambdas
        .iter()
        .map(|&l| {
            ComplexMatrix::from_rows(&[
                vec![C64::new(l, 0.0), C64::new(-l.powf(2.0 - alpha), 0.0)],
                vec![C64::new(0.0, 0.0), C64::new(-l, 0.0)],
            ])
        })
        .collect();
    ComplexMatrix::block_diag(&blocks.iter().collect::<Vec<_>>())
}

/// Closed-form positive projection of one block `[[l, -l^{2-alpha}], [0, -l]]`:
/// the -l eigenvector is (1, 2 l^{alpha-1}), so P+ projects onto e1 along
/// that graph line and carries -l^{1-alpha}/2 in the corner.
pub fn weakly_sectorial_block_projection(lambda: f64, alpha: f64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![C64::new(1.0, 0.0), C64::new(-lambda.powf(1.0 - alpha) / 2.0, 0.0)],
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    ])
}

/// Contour-integral positive projection of the truncated example, assembled
/// block by block (each block gets its own validated cut geometry, which
/// computes the same projection by homotopy of contours).
pub fn weakly_sectorial_projection(
    lambdas: &[f64],
    alpha: f64,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    let mut blocks = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let block = ComplexMatrix::from_rows(&[
            vec![C64::new(l, 0.0), C64::new(-l.powf(2.0 - alpha), 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(-l, 0.0)],
        ]);
        // spectrum is {l, -l}; sigma_min on the cut circle scales like
        // l / ||block||, so the margin must follow suit
        let norm = op_norm_with(&block, policy)?;
        let margin = (0.25 * l / norm.max(1.0)).min(0.25);
        let cfg = SpectralCutConfig::new(0.5_f64.min(l / 2.0), 2.0 * norm + 4.0, margin)?;
        let gamma = build_positive_contour_with(&block, &cfg, policy)?;
        blocks.push(sectorial_projection_with(&block, &gamma, policy)?.matrix().clone());
    }
    Ok(ComplexMatrix::block_diag(&blocks.iter().collect::<Vec<_>>()))
}

/// A matrix with fully known spectral decomposition: `V D V^{-1}` with
/// diagonal `D` and a conditioned similarity `V`.
pub struct ConjugatedNormalForm {
    pub matrix: ComplexMatrix,
    pub exact_positive_projection: ComplexMatrix,
    pub eigenvalues: Vec<C64>,
}

/// Draws a conjugated normal form: eigenvalues keep a real-part margin of at
/// least `spectral_margin` from the imaginary axis unless they are placed
/// inside the cut disc of radius `cut_radius`; the similarity has condition
/// number at most `max_condition`.
pub fn random_conjugated_normal_form(
    rng: &mut impl Rng,
    dim: usize,
    spectral_margin: f64,
    cut_radius: f64,
    max_condition: f64,
) -> Result<ConjugatedNormalForm> {
    let policy = NumericPolicy::default();
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut selector = Vec::with_capacity(dim);
    for _ in 0..dim {
        let kind = rng.gen_range(0u8..4);
        let (lambda, positive) = match kind {
            // right half plane, clear of the axis
            0 | 1 => {
                let re = spectral_margin + rng.gen_range(0.0..2.0);
                (C64::new(re, rng.gen_range(-2.0..2.0)), true)
            }
            // left half plane, kept clear of the cut disc: eigenvalues
            // inside |z| <= c join the positive side by convention, so a
            // negative-side draw must stay outside it
            2 => loop {
                let re = -(spectral_margin + rng.gen_range(0.0..2.0));
                let lambda = C64::new(re, rng.gen_range(-2.0..2.0));
                if lambda.norm() > cut_radius + 0.25 {
                    break (lambda, false);
                }
            },
            // inside the cut disc: joins the positive side by convention
            _ => {
                let r = rng.gen_range(0.0..0.5 * cut_radius);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                (C64::from_polar(r, phi), true)
            }
        };
        eigenvalues.push(lambda);
        selector.push(positive);
    }

    // V = Q1 S Q2 with unitary Q's and a spread of singular values
    let q1 = random_unitary(rng, dim, &policy);
    let q2 = random_unitary(rng, dim, &policy);
    let spread: Vec<f64> = (0..dim)
        .map(|k| {
            let t = if dim == 1 { 0.0 } else { k as f64 / (dim - 1) as f64 };
            max_condition.powf(t * 0.5) // kappa(V) = max_condition^{1/2} <= requested cap
        })
        .collect();
    let v = &(&q1 * &ComplexMatrix::diag_real(&spread)) * &q2;
    let v_inv = lu_solve_with(&v, &ComplexMatrix::identity(dim), &policy)?;

    let d = ComplexMatrix::diag(&eigenvalues);
    let matrix = &(&v * &d) * &v_inv;
    let sel = ComplexMatrix::diag_real(
        &selector.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
    );
    let exact = &(&v * &sel) * &v_inv;
    Ok(ConjugatedNormalForm { matrix, exact_positive_projection: exact, eigenvalues })
}

pub fn random_unitary(rng: &mut impl Rng, dim: usize, policy: &NumericPolicy) -> ComplexMatrix {
    let raw = ComplexMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    let s = orthonormalize_with(&raw, policy);
    debug_assert_eq!(s.dim(), dim);
    s.frame().clone()
}

/// Diagonal Fourier-multiplier surrogate of an operator of order `alpha`:
/// block diagonal over modes `-n..=n` with block `(1+|k|)^alpha * fiber`.
pub fn order_alpha_multiplier(fiber: &ComplexMatrix, n_modes: i64, alpha: f64) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> = (-n_modes..=n_modes)
        .map(|k| fiber.scale_real((1.0 + (k.abs() as f64)).powf(alpha)))
        .collect();
    ComplexMatrix::block_diag(&blocks.iter().collect::<Vec<_>>())
}

/// Helper shared by the unboundedness exhibit and acceptance: operator norm
/// of the contour-computed projection per truncation size.
pub fn projection_norm_ladder(
    truncations: &[usize],
    alpha: f64,
    policy: &NumericPolicy,
) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(truncations.len());
    for &n in truncations {
        let lambdas: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let p = weakly_sectorial_projection(&lambdas, alpha, policy)?;
        norms.push(op_norm_with(&p, policy)?);
    }
    Ok(norms)
}

/// Certified idempotent wrapper around the block-assembled projection.
pub fn weakly_sectorial_projection_idempotent(
    lambdas: &[f64],
    alpha: f64,
    policy: &NumericPolicy,
) -> Result<Idempotent> {
    Idempotent::new(weakly_sectorial_projection(lambdas, alpha, policy)?, policy.idempotent_tol)
}
