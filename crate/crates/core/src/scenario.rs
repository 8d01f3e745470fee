//! Scenario schema: JSON descriptions of collar operators, cut geometry and
//! experiment selections, plus the bundled builders used by the test suites.

use crate::calderon::BoundaryChoice;
use crate::circleop::TrigPoly;
use crate::collar::{CollarOperator, FiberField, TangentialField, ThetaField};
use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix};
use crate::policy::NumericPolicy;
use crate::rng::SeedStream;
use crate::sectorial::SpectralCutConfig;
use serde::{Deserialize, Serialize};

/// Complex matrix as rows of [re, im] pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigTermJson {
    pub mode: i64,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub fiber_dim: usize,
    pub truncation: i64,
    pub length: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientsJson {
    /// Chebyshev-in-x coefficient list for the fiber matrix J.
    pub j: Vec<MatrixJson>,
    /// Chebyshev lists of theta trig polynomials for Gamma, V and C.
    pub b_gamma: Vec<Vec<TrigTermJson>>,
    pub b_v: Vec<Vec<TrigTermJson>>,
    #[serde(default)]
    pub c: Vec<Vec<TrigTermJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryChoiceJson {
    J,
    JtInv,
    UnitaryJ,
    Custom { matrix: MatrixJson },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutJson {
    pub cut_radius: f64,
    /// Omitted: chosen as `2 ||B_0|| + 4`.
    #[serde(default)]
    pub outer_radius: Option<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteCountsJson {
    #[serde(default = "default_oracle_trials")]
    pub oracle_trials: usize,
    #[serde(default = "default_upgrade_trials")]
    pub symplectic_upgrade_trials: usize,
    #[serde(default = "default_reduce_trials")]
    pub symplectic_reduce_trials: usize,
    #[serde(default = "default_riesz_trials")]
    pub riesz_trials: usize,
    #[serde(default = "default_green_pairs")]
    pub green_pairs: usize,
    #[serde(default = "default_solve_rhs")]
    pub solve_rhs_count: usize,
}

fn default_oracle_trials() -> usize {
    100
}
fn default_upgrade_trials() -> usize {
    500
}
fn default_reduce_trials() -> usize {
    200
}
fn default_riesz_trials() -> usize {
    100
}
fn default_green_pairs() -> usize {
    20
}
fn default_solve_rhs() -> usize {
    20
}

impl Default for SuiteCountsJson {
    fn default() -> Self {
        SuiteCountsJson {
            oracle_trials: default_oracle_trials(),
            symplectic_upgrade_trials: default_upgrade_trials(),
            symplectic_reduce_trials: default_reduce_trials(),
            riesz_trials: default_riesz_trials(),
            green_pairs: default_green_pairs(),
            solve_rhs_count: default_solve_rhs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub name: String,
    pub seed: u64,
    pub model: ModelJson,
    pub coefficients: CoefficientsJson,
    #[serde(default)]
    pub selfadjoint: bool,
    pub boundary_condition: BoundaryChoiceJson,
    pub cut: CutJson,
    /// Experiment selection: any of "sectorial", "calderon", "cobordism",
    /// "symplectic", "perturbation", "continuity", "extension", "greens",
    /// or "all".
    pub experiments: Vec<String>,
    #[serde(default)]
    pub counts: SuiteCountsJson,
}

fn matrix_from_json(m: &MatrixJson) -> Result<ComplexMatrix> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::SchemaError("ragged matrix rows".into()));
    }
    let entries: Vec<C64> = m
        .iter()
        .flat_map(|row| row.iter().map(|&[re, im]| C64::new(re, im)))
        .collect();
    ComplexMatrix::new(rows, cols, entries)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn trig_from_json(terms: &[TrigTermJson], fiber_dim: usize) -> Result<TrigPoly> {
    let mut parsed = Vec::with_capacity(terms.len());
    for t in terms {
        let m = matrix_from_json(&t.matrix)?;
        if m.rows() != fiber_dim || m.cols() != fiber_dim {
            return Err(Error::SchemaError(format!(
                "trig coefficient for mode {} is {}x{}, fiber dim is {}",
                t.mode,
                m.rows(),
                m.cols(),
                fiber_dim
            )));
        }
        parsed.push((t.mode, m));
    }
    Ok(TrigPoly::new(parsed))
}

/// A loaded, validated scenario ready for the suites.
pub struct BuiltScenario {
    pub name: String,
    pub seed: SeedStream,
    pub seed_value: u64,
    pub operator: CollarOperator,
    pub boundary_choice: BoundaryChoice,
    pub cut: SpectralCutConfig,
    pub experiments: Vec<String>,
    pub counts: SuiteCountsJson,
}

impl ScenarioJson {
    pub fn parse(text: &str) -> Result<ScenarioJson> {
        serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))
    }

    pub fn build(&self, policy: &NumericPolicy) -> Result<BuiltScenario> {
        let m = self.model.fiber_dim;
        if self.coefficients.j.is_empty() || self.coefficients.b_gamma.is_empty() {
            return Err(Error::SchemaError("J and Gamma coefficient lists are required".into()));
        }
        let j_coeffs: Result<Vec<ComplexMatrix>> =
            self.coefficients.j.iter().map(matrix_from_json).collect();
        let j_coeffs = j_coeffs?;
        if j_coeffs.iter().any(|c| c.rows() != m || c.cols() != m) {
            return Err(Error::SchemaError("J coefficients must be fiber-square".into()));
        }
        let gamma_coeffs: Result<Vec<TrigPoly>> = self
            .coefficients
            .b_gamma
            .iter()
            .map(|t| trig_from_json(t, m))
            .collect();
        let v_coeffs: Result<Vec<TrigPoly>> =
            self.coefficients.b_v.iter().map(|t| trig_from_json(t, m)).collect();
        let c_coeffs: Result<Vec<TrigPoly>> =
            self.coefficients.c.iter().map(|t| trig_from_json(t, m)).collect();
        let (lo, hi) = (0.0, self.model.length);
        let operator = CollarOperator::new(
            lo,
            hi,
            self.model.grid_points,
            m,
            self.model.truncation,
            FiberField::chebyshev(lo, hi, j_coeffs),
            TangentialField::new(
                ThetaField::chebyshev(lo, hi, gamma_coeffs?),
                ThetaField::chebyshev(
                    lo,
                    hi,
                    {
                        let v = v_coeffs?;
                        if v.is_empty() { vec![TrigPoly::zero()] } else { v }
                    },
                ),
            ),
            ThetaField::chebyshev(lo, hi, {
                let c = c_coeffs?;
                if c.is_empty() { vec![TrigPoly::zero()] } else { c }
            }),
            self.selfadjoint,
            policy,
        )?;
        let boundary_choice = match &self.boundary_condition {
            BoundaryChoiceJson::J => BoundaryChoice::J,
            BoundaryChoiceJson::JtInv => BoundaryChoice::JtInv,
            BoundaryChoiceJson::UnitaryJ => BoundaryChoice::UnitaryJ,
            BoundaryChoiceJson::Custom { matrix } => {
                BoundaryChoice::Custom(matrix_from_json(matrix)?)
            }
        };
        let outer = match self.cut.outer_radius {
            Some(r) => r,
            None => {
                let b0 = operator.b_at(operator.lo())?.realized().clone();
                2.0 * crate::numkernel::op_norm_with(&b0, policy)? + 4.0
            }
        };
        let cut = SpectralCutConfig::new(self.cut.cut_radius, outer, self.cut.margin)?;
        let known = [
            "sectorial",
            "calderon",
            "cobordism",
            "symplectic",
            "perturbation",
            "continuity",
            "extension",
            "greens",
        ];
        let experiments: Vec<String> = if self.experiments.iter().any(|e| e == "all") {
            known.iter().map(|s| s.to_string()).collect()
        } else {
            for e in &self.experiments {
                if !known.contains(&e.as_str()) {
                    return Err(Error::SchemaError(format!("unknown experiment '{e}'")));
                }
            }
            self.experiments.clone()
        };
        Ok(BuiltScenario {
            name: self.name.clone(),
            seed: SeedStream::new(self.seed),
            seed_value: self.seed,
            operator,
            boundary_choice,
            cut,
            experiments,
            counts: self.counts.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// bundled builders (shared between the CLI fixtures and the acceptance suite)
// ---------------------------------------------------------------------------

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rotation_j() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![c(0.0, 0.0), c(-1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ])
}

pub fn i_sigma() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![c(0.0, 1.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, -1.0)],
    ])
}

/// Non-selfadjoint toy: `B = i sigma d_theta + diag(1, -1)`; mode-k
/// eigenvalues are +-(1 + |k|)-style, well away from the cut.
pub fn builtin_diag_toy(seed: u64, policy: &NumericPolicy) -> Result<BuiltScenario> {
    let operator = CollarOperator::new(
        0.0,
        1.0,
        9,
        2,
        2,
        FiberField::constant(rotation_j()),
        TangentialField::constant(
            TrigPoly::constant(i_sigma()),
            TrigPoly::constant(ComplexMatrix::diag_real(&[1.0, -1.0])),
        ),
        ThetaField::zero(),
        false,
        policy,
    )?;
    Ok(BuiltScenario {
        name: "diag-toy".into(),
        seed: SeedStream::new(seed),
        seed_value: seed,
        operator,
        boundary_choice: BoundaryChoice::JtInv,
        cut: SpectralCutConfig::new(0.5, 2.0 * 3.1 + 4.0, 0.2)?,
        experiments: vec!["sectorial".into(), "calderon".into(), "greens".into()],
        counts: SuiteCountsJson::default(),
    })
}

/// Formally selfadjoint scenario with spectral gap 1 across the axis:
/// `B = i sigma d_theta + sigma/2` has mode-k eigenvalues +-|1/2 - k|.
pub fn builtin_gapped_selfadjoint(seed: u64, policy: &NumericPolicy) -> Result<BuiltScenario> {
    builtin_gapped_selfadjoint_with_length(seed, 1.0, 9, policy)
}

pub fn builtin_gapped_selfadjoint_with_length(
    seed: u64,
    length: f64,
    grid_points: usize,
    policy: &NumericPolicy,
) -> Result<BuiltScenario> {
    let sigma = ComplexMatrix::diag_real(&[0.5, -0.5]);
    let operator = CollarOperator::new(
        0.0,
        length,
        grid_points,
        2,
        2,
        FiberField::constant(rotation_j()),
        TangentialField::constant(TrigPoly::constant(i_sigma()), TrigPoly::constant(sigma)),
        ThetaField::zero(),
        true,
        policy,
    )?;
    Ok(BuiltScenario {
        name: "gapped-selfadjoint".into(),
        seed: SeedStream::new(seed),
        seed_value: seed,
        operator,
        boundary_choice: BoundaryChoice::JtInv,
        cut: SpectralCutConfig::new(0.25, 2.0 * 2.6 + 4.0, 0.15)?,
        experiments: vec![
            "sectorial".into(),
            "calderon".into(),
            "cobordism".into(),
            "continuity".into(),
            "extension".into(),
            "greens".into(),
        ],
        counts: SuiteCountsJson::default(),
    })
}

/// Variable-coefficient selfadjoint scenario: `J` constant rotation,
/// `B(x) = i sigma d_theta + (1/2 + x/4) sigma`, `C = 0`.
pub fn builtin_variable_selfadjoint(seed: u64, policy: &NumericPolicy) -> Result<BuiltScenario> {
    let sigma = ComplexMatrix::diag_real(&[1.0, -1.0]);
    let operator = CollarOperator::new(
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
                    // (1/2 + x/4) sigma = (5/8) sigma + (1/8) sigma T_1(2x-1)
                    TrigPoly::constant(sigma.scale_real(0.625)),
                    TrigPoly::constant(sigma.scale_real(0.125)),
                ],
            ),
        ),
        ThetaField::zero(),
        true,
        policy,
    )?;
    Ok(BuiltScenario {
        name: "variable-selfadjoint".into(),
        seed: SeedStream::new(seed),
        seed_value: seed,
        operator,
        boundary_choice: BoundaryChoice::JtInv,
        cut: SpectralCutConfig::new(0.25, 2.0 * 3.2 + 4.0, 0.15)?,
        experiments: vec!["calderon".into(), "cobordism".into(), "greens".into()],
        counts: SuiteCountsJson::default(),
    })
}
