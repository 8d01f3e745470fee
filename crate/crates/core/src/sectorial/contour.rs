//! Oriented closed contours in the plane and the spectral-cut configuration
//! that places them relative to the spectrum of an operator.
//!
//! The positive contour is the boundary of
//! `{ Re z >= delta or |z| <= c } intersected with { |z| <= R }`
//! (delta = margin/2), traversed counterclockwise; the negative contour
//! bounds the complementary region inside `|z| <= R`. For finite matrices any
//! homotopic choice is equivalent, and this shape minimizes quadrature
//! length.

use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix, op_norm_with, smallest_singular_value};
use crate::policy::NumericPolicy;
use crate::util::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub enum ContourPiece {
    Segment { start: C64, end: C64 },
    /// Circular arc `center + radius e^{i t}`, `t` from `angle_start` to
    /// `angle_end`; counterclockwise iff `angle_end > angle_start`.
    Arc { center: C64, radius: f64, angle_start: f64, angle_end: f64 },
}

impl ContourPiece {
    pub fn start_point(&self) -> C64 {
        match self {
            ContourPiece::Segment { start, .. } => *start,
            ContourPiece::Arc { center, radius, angle_start, .. } => {
                center + C64::from_polar(*radius, *angle_start)
            }
        }
    }

    pub fn end_point(&self) -> C64 {
        match self {
            ContourPiece::Segment { end, .. } => *end,
            ContourPiece::Arc { center, radius, angle_end, .. } => {
                center + C64::from_polar(*radius, *angle_end)
            }
        }
    }

    /// Quadrature nodes (z, dz-weight) for `n` Gauss-Legendre points.
    pub fn quadrature(&self, n: usize) -> Vec<(C64, C64)> {
        let (nodes, weights) = gauss_legendre(n);
        match self {
            ContourPiece::Segment { start, end } => {
                let half = (end - start) * C64::new(0.5, 0.0);
                let mid = (start + end) * C64::new(0.5, 0.0);
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| (mid + half * C64::new(t, 0.0), half * C64::new(w, 0.0)))
                    .collect()
            }
            ContourPiece::Arc { center, radius, angle_start, angle_end } => {
                let half = 0.5 * (angle_end - angle_start);
                let mid = 0.5 * (angle_end + angle_start);
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| {
                        let theta = mid + half * t;
                        let z = center + C64::from_polar(*radius, theta);
                        // dz = i r e^{i theta} d theta
                        let dz = C64::new(0.0, 1.0)
                            * C64::from_polar(*radius, theta)
                            * C64::new(w * half, 0.0);
                        (z, dz)
                    })
                    .collect()
            }
        }
    }
}

/// Closed, positively oriented, piecewise path with an attached composite
/// Gauss-Legendre rule.
#[derive(Debug, Clone)]
pub struct Contour {
    pieces: Vec<ContourPiece>,
    nodes_per_piece: usize,
}

impl Contour {
    pub const MIN_NODES_PER_PIECE: usize = 16;
    const CLOSURE_TOL: f64 = 1e-12;

    pub fn new(pieces: Vec<ContourPiece>, nodes_per_piece: usize) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::ShapeMismatch("contour needs at least one piece".into()));
        }
        if nodes_per_piece < Self::MIN_NODES_PER_PIECE {
            return Err(Error::ShapeMismatch(format!(
                "composite rule needs at least {} nodes per piece",
                Self::MIN_NODES_PER_PIECE
            )));
        }
        let scale = pieces
            .iter()
            .map(|p| p.start_point().norm())
            .fold(1.0f64, f64::max);
        for i in 0..pieces.len() {
            let next = (i + 1) % pieces.len();
            let gap = (pieces[i].end_point() - pieces[next].start_point()).norm();
            if gap > Self::CLOSURE_TOL * scale {
                return Err(Error::ShapeMismatch(format!(
                    "contour not closed: gap {gap:.3e} between piece {i} and {next}"
                )));
            }
        }
        Ok(Contour { pieces, nodes_per_piece })
    }

    pub fn pieces(&self) -> &[ContourPiece] {
        &self.pieces
    }

    pub fn nodes_per_piece(&self) -> usize {
        self.nodes_per_piece
    }

    /// All quadrature nodes at a given refinement level (nodes per piece
    /// doubled `level` times).
    pub fn nodes_at_level(&self, level: usize) -> Vec<(C64, C64)> {
        let n = self.nodes_per_piece << level;
        self.pieces.iter().flat_map(|p| p.quadrature(n)).collect()
    }

    /// Winding number around `w`, by quadrature of `1/(z - w)`; used by tests
    /// and by point-in-region queries.
    pub fn winding_number(&self, w: C64) -> f64 {
        let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
        // refine a few times for points near the path
        let mut last = 0.0;
        for level in 0..4 {
            let sum: C64 = self
                .nodes_at_level(level)
                .iter()
                .map(|&(z, dz)| dz / (z - w))
                .sum();
            last = (sum / two_pi_i).re;
            if (last - last.round()).abs() < 1e-6 {
                break;
            }
        }
        last
    }
}

/// Geometry of the spectral cut: the cut circle `|z| = c`, the outer radius
/// `R`, a sector half-angle used by parametric-ellipticity checks, and the
/// minimal allowed distance from the spectrum to the contour path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCutConfig {
    pub cut_radius: f64,
    pub outer_radius: f64,
    pub sector_angle: f64,
    pub margin: f64,
}

impl SpectralCutConfig {
    pub fn new(cut_radius: f64, outer_radius: f64, margin: f64) -> Result<Self> {
        let cfg = SpectralCutConfig {
            cut_radius,
            outer_radius,
            sector_angle: std::f64::consts::FRAC_PI_4,
            margin,
        };
        cfg.check_fields()?;
        Ok(cfg)
    }

    pub fn with_sector_angle(mut self, angle: f64) -> Result<Self> {
        self.sector_angle = angle;
        self.check_fields()?;
        Ok(self)
    }

    fn check_fields(&self) -> Result<()> {
        if !(self.cut_radius > 0.0 && self.cut_radius < self.outer_radius) {
            return Err(Error::ShapeMismatch(format!(
                "need 0 < c < R, got c = {}, R = {}",
                self.cut_radius, self.outer_radius
            )));
        }
        if !(self.sector_angle > 0.0 && self.sector_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::ShapeMismatch("sector angle must lie in (0, pi/2)".into()));
        }
        // NaN-safe positivity check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.margin > 0.0) {
            return Err(Error::ShapeMismatch("margin must be positive".into()));
        }
        if self.margin / 2.0 >= self.cut_radius {
            return Err(Error::ShapeMismatch(
                "margin/2 must stay below the cut radius".into(),
            ));
        }
        Ok(())
    }

    fn delta(&self) -> f64 {
        self.margin / 2.0
    }

    /// Sweeps the contour nodes of both contours and checks that the smallest
    /// singular value of `z - b` stays at or above the margin.
    pub fn validate_for(&self, b: &ComplexMatrix, policy: &NumericPolicy) -> Result<()> {
        let gamma_plus = self.positive_pieces();
        let gamma_minus = self.negative_pieces();
        for piece in gamma_plus.iter().chain(gamma_minus.iter()) {
            for (z, _) in piece.quadrature(Contour::MIN_NODES_PER_PIECE) {
                let shifted = &ComplexMatrix::diag(&vec![z; b.rows()]) - b;
                let min_sv = smallest_singular_value(&shifted, policy)?;
                if min_sv < self.margin {
                    return Err(Error::CutInvalid {
                        min_sv,
                        node: format!("{:.4}{:+.4}i", z.re, z.im),
                        margin: self.margin,
                    });
                }
            }
        }
        Ok(())
    }

    fn chord_angles(&self) -> (f64, f64, f64, f64) {
        let delta = self.delta();
        let phi_r = (delta / self.outer_radius).acos();
        let phi_c = (delta / self.cut_radius).acos();
        let y_r = (self.outer_radius.powi(2) - delta * delta).sqrt();
        let y_c = (self.cut_radius.powi(2) - delta * delta).sqrt();
        (phi_r, phi_c, y_r, y_c)
    }

    /// Pieces of the positive contour (counterclockwise).
    pub fn positive_pieces(&self) -> Vec<ContourPiece> {
        let (phi_r, phi_c, y_r, y_c) = self.chord_angles();
        let delta = self.delta();
        let tau = 2.0 * std::f64::consts::PI;
        vec![
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.outer_radius,
                angle_start: -phi_r,
                angle_end: phi_r,
            },
            ContourPiece::Segment { start: C64::new(delta, y_r), end: C64::new(delta, y_c) },
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.cut_radius,
                angle_start: phi_c,
                angle_end: tau - phi_c,
            },
            ContourPiece::Segment { start: C64::new(delta, -y_c), end: C64::new(delta, -y_r) },
        ]
    }

    /// Pieces of the complementary negative contour (counterclockwise).
    pub fn negative_pieces(&self) -> Vec<ContourPiece> {
        let (phi_r, phi_c, y_r, y_c) = self.chord_angles();
        let delta = self.delta();
        let tau = 2.0 * std::f64::consts::PI;
        vec![
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.outer_radius,
                angle_start: phi_r,
                angle_end: tau - phi_r,
            },
            ContourPiece::Segment { start: C64::new(delta, -y_r), end: C64::new(delta, -y_c) },
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.cut_radius,
                angle_start: tau - phi_c,
                angle_end: phi_c,
            },
            ContourPiece::Segment { start: C64::new(delta, y_c), end: C64::new(delta, y_r) },
        ]
    }

    /// Pieces of the three-way split used by the cobordism experiments:
    /// `Gamma_0` is the cut circle, `Gamma_>` and `Gamma_<` enclose the
    /// spectrum strictly right and left of the cut geometry.
    pub fn zero_pieces(&self) -> Vec<ContourPiece> {
        vec![ContourPiece::Arc {
            center: C64::new(0.0, 0.0),
            radius: self.cut_radius,
            angle_start: 0.0,
            angle_end: 2.0 * std::f64::consts::PI,
        }]
    }

    pub fn greater_pieces(&self) -> Vec<ContourPiece> {
        let (phi_r, phi_c, y_r, y_c) = self.chord_angles();
        let delta = self.delta();
        vec![
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.outer_radius,
                angle_start: -phi_r,
                angle_end: phi_r,
            },
            ContourPiece::Segment { start: C64::new(delta, y_r), end: C64::new(delta, y_c) },
            // clockwise around the excluded cut disc
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.cut_radius,
                angle_start: phi_c,
                angle_end: -phi_c,
            },
            ContourPiece::Segment { start: C64::new(delta, -y_c), end: C64::new(delta, -y_r) },
        ]
    }

    pub fn less_pieces(&self) -> Vec<ContourPiece> {
        let (phi_r, phi_c, y_r, y_c) = self.chord_angles();
        let delta = self.delta();
        let pi = std::f64::consts::PI;
        vec![
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.outer_radius,
                angle_start: phi_r,
                angle_end: 2.0 * pi - phi_r,
            },
            ContourPiece::Segment { start: C64::new(delta, -y_r), end: C64::new(delta, -y_c) },
            // clockwise along the left cut arc, keeping the excluded disc on
            // the right
            ContourPiece::Arc {
                center: C64::new(0.0, 0.0),
                radius: self.cut_radius,
                angle_start: 2.0 * pi - phi_c,
                angle_end: phi_c,
            },
            ContourPiece::Segment { start: C64::new(delta, y_c), end: C64::new(delta, y_r) },
        ]
    }
}

/// Builds the positive contour for `b`, validating the margin condition and
/// that the outer radius clears twice the operator norm.
pub fn build_positive_contour(
    b: &ComplexMatrix,
    cfg: &SpectralCutConfig,
) -> Result<Contour> {
    build_positive_contour_with(b, cfg, &NumericPolicy::default())
}

pub fn build_positive_contour_with(
    b: &ComplexMatrix,
    cfg: &SpectralCutConfig,
    policy: &NumericPolicy,
) -> Result<Contour> {
    let norm = op_norm_with(b, policy)?;
    if cfg.outer_radius <= 2.0 * norm {
        return Err(Error::ShapeMismatch(format!(
            "outer radius {} must exceed 2 ||b|| = {}",
            cfg.outer_radius,
            2.0 * norm
        )));
    }
    cfg.validate_for(b, policy)?;
    Contour::new(cfg.positive_pieces(), Contour::MIN_NODES_PER_PIECE)
}

pub fn build_negative_contour_with(
    b: &ComplexMatrix,
    cfg: &SpectralCutConfig,
    policy: &NumericPolicy,
) -> Result<Contour> {
    let norm = op_norm_with(b, policy)?;
    if cfg.outer_radius <= 2.0 * norm {
        return Err(Error::ShapeMismatch(format!(
            "outer radius {} must exceed 2 ||b|| = {}",
            cfg.outer_radius,
            2.0 * norm
        )));
    }
    cfg.validate_for(b, policy)?;
    Contour::new(cfg.negative_pieces(), Contour::MIN_NODES_PER_PIECE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SpectralCutConfig {
        SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap()
    }

    #[test]
    fn positive_contour_winds_correctly() {
        let gamma = Contour::new(cfg().positive_pieces(), 32).unwrap();
        // inside: right half plane point, and the origin (inside the cut disc)
        assert!((gamma.winding_number(C64::new(1.0, 0.0)) - 1.0).abs() < 1e-8);
        assert!((gamma.winding_number(C64::new(0.0, 0.0)) - 1.0).abs() < 1e-8);
        assert!((gamma.winding_number(C64::new(0.0, 0.3)) - 1.0).abs() < 1e-8);
        // outside: left half plane beyond the cut disc, and beyond R
        assert!(gamma.winding_number(C64::new(-1.0, 0.0)).abs() < 1e-8);
        assert!(gamma.winding_number(C64::new(5.0, 0.0)).abs() < 1e-8);
    }

    #[test]
    fn negative_contour_is_complementary() {
        let gamma = Contour::new(cfg().negative_pieces(), 32).unwrap();
        assert!((gamma.winding_number(C64::new(-1.0, 0.0)) - 1.0).abs() < 1e-8);
        assert!(gamma.winding_number(C64::new(1.0, 0.0)).abs() < 1e-8);
        assert!(gamma.winding_number(C64::new(0.0, 0.0)).abs() < 1e-8);
        assert!(gamma.winding_number(C64::new(0.0, 0.2)).abs() < 1e-8);
    }

    #[test]
    fn split_contours_partition_the_disc() {
        let c = cfg();
        let g0 = Contour::new(c.zero_pieces(), 32).unwrap();
        let gg = Contour::new(c.greater_pieces(), 32).unwrap();
        let gl = Contour::new(c.less_pieces(), 32).unwrap();
        let probes = [
            C64::new(1.0, 0.5),
            C64::new(-1.0, 0.5),
            C64::new(0.0, 0.2),
            C64::new(0.2, -0.1),
            C64::new(-2.0, -1.0),
        ];
        for w in probes {
            let w0 = g0.winding_number(w);
            let wg = gg.winding_number(w);
            let wl = gl.winding_number(w);
            let total = w0 + wg + wl;
            assert!(
                (total - 1.0).abs() < 1e-6,
                "point {w} covered {total} times (0:{w0} >:{wg} <:{wl})"
            );
        }
    }

    #[test]
    fn cut_validation_rejects_eigenvalue_on_circle() {
        // diag(1, -1) with c = 1: the eigenvalues sit on the cut circle
        let b = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let cfg = SpectralCutConfig::new(1.0, 4.0, 0.2).unwrap();
        let got = build_positive_contour(&b, &cfg);
        assert!(matches!(got, Err(Error::CutInvalid { .. })));
    }

    #[test]
    fn cut_validation_accepts_clear_spectrum() {
        let b = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        assert!(build_positive_contour(&b, &cfg).is_ok());
    }

    #[test]
    fn outer_radius_must_clear_norm() {
        let b = ComplexMatrix::diag_real(&[3.0, -1.0]);
        let cfg = SpectralCutConfig::new(0.5, 4.0, 0.2).unwrap();
        assert!(build_positive_contour(&b, &cfg).is_err());
    }
}
