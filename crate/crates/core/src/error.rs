use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the layer that raises them; the CLI maps each
/// variant to a machine-readable reason code.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    // dense kernel
    #[error("matrix entries must be finite, found {0} at ({1}, {2})")]
    NonFinite(String, usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    Singular { pivot: f64, threshold: f64 },
    #[error("rank deficient input: {0}")]
    RankDeficient(String),
    #[error("power iteration did not converge: residual {0:.3e} after {1} iterations")]
    NoConvergence(f64, usize),
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix norm {0:.3e} exceeds the exponential cap {1}; subdivide the interval")]
    NormTooLarge(f64, f64),

    // contours and sectorial calculus
    #[error("spectral cut invalid: minimal singular value {min_sv:.3e} at contour node {node} is below margin {margin:.3e}")]
    CutInvalid { min_sv: f64, node: String, margin: f64 },
    #[error("contour quadrature did not converge: last correction {0:.3e}")]
    QuadratureNotConverged(f64),
    #[error("subspaces are not transversal: {0}")]
    NotTransversal(String),
    #[error("idempotent defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotIdempotent { defect: f64, tol: f64 },

    // circle / collar operators
    #[error("coefficient trig degree {degree} exceeds the representable window N/2 = {max}")]
    DegreeTooHigh { degree: i64, max: i64 },
    #[error("step control exhausted after {0} halvings without meeting tolerance")]
    StepLimit(usize),
    #[error("field is not positive definite: {0}")]
    NotPositive(String),
    #[error("grid invalid: {0}")]
    GridInvalid(String),

    // boundary conditions and the double
    #[error("J_S^* T is not positive: {0}")]
    PositivityFailed(String),
    #[error("coupling system not invertible: {0}")]
    NotInvertible(String),
    #[error("realization is not well-posed at this truncation: {0}")]
    NotWellPosed(String),

    // symplectic layer
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("subspace is not co-isotropic: {0}")]
    NotCoisotropic(String),
    #[error("W_0 does not complement W^omega: {0}")]
    NotComplement(String),
    #[error("form signature is nonzero: {0}")]
    SignatureNonzero(i64),
    #[error("anticommutation relation violated: defect {0:.3e}")]
    RelationViolated(f64),
    #[error("grading eigenspaces unbalanced: dim+ = {dim_plus}, dim- = {dim_minus}")]
    GradingUnbalanced { dim_plus: usize, dim_minus: usize },

    // parameter flow
    #[error("Neumann series diverges: perturbation proxy {0:.3e} >= 1/2")]
    NeumannDiverges(f64),
    #[error("measured q = {0:.3e} too large for the Lipschitz bound")]
    QTooLarge(f64),
    #[error("cut circle |z| = {c} crossed by the spectrum along the ladder")]
    CutCrossed { c: f64 },
    #[error("c = {c} is within {dist:.3e} of the spectrum")]
    CNearSpectrum { c: f64, dist: f64 },

    // appendix extension
    #[error("gauge path too far from J_0: ||Id + J_x J_0|| = {0:.3} >= 2")]
    PathTooFar(f64),
    #[error("extended symbol lost ellipticity: min singular value {min_sv:.3e} at x = {x:.4}, after {halvings} delta-halvings")]
    EllipticityLost { min_sv: f64, x: f64, halvings: usize },

    // scenarios
    #[error("scenario schema error: {0}")]
    SchemaError(String),
    #[error("reports are incompatible: {0}")]
    IncompatibleReports(String),
}

impl Error {
    /// Stable machine-readable reason code used in reports and exit paths.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::NonFinite(..) => "non_finite",
            Error::ShapeMismatch(..) => "shape_mismatch",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::Singular { .. } => "singular",
            Error::RankDeficient(..) => "rank_deficient",
            Error::NoConvergence(..) => "no_convergence",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NormTooLarge(..) => "norm_too_large",
            Error::CutInvalid { .. } => "cut_invalid",
            Error::QuadratureNotConverged(..) => "quadrature_not_converged",
            Error::NotTransversal(..) => "not_transversal",
            Error::NotIdempotent { .. } => "not_idempotent",
            Error::DegreeTooHigh { .. } => "degree_too_high",
            Error::StepLimit(..) => "step_limit",
            Error::NotPositive(..) => "not_positive",
            Error::GridInvalid(..) => "grid_invalid",
            Error::PositivityFailed(..) => "positivity_failed",
            Error::NotInvertible(..) => "not_invertible",
            Error::NotWellPosed(..) => "not_well_posed",
            Error::PreconditionFailed(..) => "precondition_failed",
            Error::NotCoisotropic(..) => "not_coisotropic",
            Error::NotComplement(..) => "not_complement",
            Error::SignatureNonzero(..) => "signature_nonzero",
            Error::RelationViolated(..) => "relation_violated",
            Error::GradingUnbalanced { .. } => "grading_unbalanced",
            Error::NeumannDiverges(..) => "neumann_diverges",
            Error::QTooLarge(..) => "q_too_large",
            Error::CutCrossed { .. } => "cut_crossed",
            Error::CNearSpectrum { .. } => "c_near_spectrum",
            Error::PathTooFar(..) => "path_too_far",
            Error::EllipticityLost { .. } => "ellipticity_lost",
            Error::SchemaError(..) => "schema_error",
            Error::IncompatibleReports(..) => "incompatible_reports",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
