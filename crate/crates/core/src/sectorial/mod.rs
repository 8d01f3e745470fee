//! Contour geometry and the contour-integral sectorial calculus: spectral
//! projections P+/P-, the semigroups Q+(x)/Q-(x), idempotent algebra, and
//! the weakly sectorial counterexample with its unboundedness exhibit.

pub mod calculus;
pub mod probes;
pub mod contour;
pub mod examples;


pub use calculus::{
    Idempotent, contour_integral, orthogonalize, orthogonalize_with, projection_along,
    projection_along_with, q_minus_with, q_plus, q_plus_with, sectorial_projection,
    sectorial_projection_with,
};
pub use contour::{
    Contour, ContourPiece, SpectralCutConfig, build_negative_contour_with,
    build_positive_contour, build_positive_contour_with,
};
pub use examples::{
    ConjugatedNormalForm, order_alpha_multiplier, projection_norm_ladder,
    random_conjugated_normal_form, random_unitary, weakly_sectorial_block_projection,
    weakly_sectorial_example, weakly_sectorial_projection,
    weakly_sectorial_projection_idempotent,
};
pub use probes::{CutoffBump, DecayFit, ModeOperator, SmoothingReport, auto_positive_contour, collar_smoothing_probe, mixed_norm_grid, resolvent_decay_probe};
