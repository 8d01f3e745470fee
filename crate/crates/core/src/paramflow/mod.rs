//! Parameter dependence: computable metrics on (operator, condition) pairs,
//! perturbation probes for resolvents and sectorial semigroups, the Riesz
//! map with its Lipschitz bound, domain transports, and the continuity
//! experiments for the double, Poisson, Calderon and well-posed resolvents.

pub mod continuity;
pub mod probes;
pub mod riesz;
pub mod transport;

use crate::calderon::BoundaryConditionT;
use crate::circleop::sobolev_op_norm;
use crate::collar::CollarOperator;
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, op_norm_with};
use crate::policy::NumericPolicy;

pub use continuity::{
    ContinuityTarget, CurveRow, ModulusCurve, OperatorFamily, continuity_experiment,
    cut_crossing_family, cut_circle_clearance, geometric_steps, rotation_family,
};
pub use probes::{
    PerturbationFit, StabilityReport, lower_order_projection_stability,
    resolvent_perturbation_probe, sectorial_stability_probe,
};
pub use riesz::{riesz_lipschitz_check, riesz_map, spectral_projection_above, RieszLipschitzReport};
pub use transport::{DomainTransport, TransportReport, domain_transport};

/// The two norms of a pair difference and the strong metric they add up to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub n0: f64,
    pub n1: f64,
    pub d_str: f64,
}

/// Boundary weight on both circles.
fn boundary_weight(d: &CollarOperator, s: f64) -> ComplexMatrix {
    let w = d.layout().weight(s);
    ComplexMatrix::block_diag(&[&w, &w])
}

/// Per-sample features entering the metric terms; every term of the metric
/// is a norm of a difference of these, so symmetry and the triangle
/// inequality hold by construction.
struct MetricFeatures {
    /// (J(x), realized Sigma-part) on the grid.
    j_nodes: Vec<ComplexMatrix>,
    sigma_nodes: Vec<ComplexMatrix>,
    j_adj_nodes: Vec<ComplexMatrix>,
    sigma_adj_nodes: Vec<ComplexMatrix>,
    b0: ComplexMatrix,
    b0_adj: ComplexMatrix,
    commutator: ComplexMatrix,
    t: ComplexMatrix,
    j_boundary: ComplexMatrix,
    zeroth_at_lo: ComplexMatrix,
    zeroth_adj_at_lo: ComplexMatrix,
}

fn features(
    d: &CollarOperator,
    bc: &BoundaryConditionT,
    policy: &NumericPolicy,
) -> Result<MetricFeatures> {
    let layout = d.layout();
    let adj = d.formal_adjoint(policy)?;
    let mut j_nodes = Vec::new();
    let mut sigma_nodes = Vec::new();
    let mut j_adj_nodes = Vec::new();
    let mut sigma_adj_nodes = Vec::new();
    for &x in d.grid() {
        j_nodes.push(layout.expand_fiber(&d.j_field().eval(x)));
        sigma_nodes.push(d.sigma_part(x)?);
        j_adj_nodes.push(layout.expand_fiber(&adj.j_field().eval(x)));
        sigma_adj_nodes.push(adj.sigma_part(x)?);
    }
    let b0 = d.b_at(d.lo())?.realized().clone();
    let b0_adj = adj.b_at(adj.lo())?.realized().clone();
    // boundary tangential operator of the double with the inward flip at hi
    let b_hi = d.b_at(d.hi())?.realized().scale_real(-1.0);
    let b_boundary = ComplexMatrix::block_diag(&[&b0, &b_hi]);
    let j_boundary = d.boundary_j();
    let h = &j_boundary.adjoint() * bc.matrix();
    let commutator = &(&b_boundary.adjoint() * &h) - &(&h * &b_boundary.adjoint());
    let jb0 = &j_nodes[0] * &b0;
    let zeroth_at_lo = &sigma_nodes[0] - &jb0;
    let jb0_adj = &j_adj_nodes[0] * &b0_adj;
    let zeroth_adj_at_lo = &sigma_adj_nodes[0] - &jb0_adj;
    Ok(MetricFeatures {
        j_nodes,
        sigma_nodes,
        j_adj_nodes,
        sigma_adj_nodes,
        b0,
        b0_adj,
        commutator,
        t: bc.matrix().clone(),
        j_boundary,
        zeroth_at_lo,
        zeroth_adj_at_lo,
    })
}

/// Evaluates the weak and strong norms of the difference of two pairs on the
/// truncated model. Collar first-order terms use the documented
/// sup-over-grid surrogate `sup_x ||G(x) - G(lo)||_{1,0} / (x - lo)`.
pub fn pair_metrics(
    p1: (&CollarOperator, &BoundaryConditionT),
    p2: (&CollarOperator, &BoundaryConditionT),
    policy: &NumericPolicy,
) -> Result<PairMetrics> {
    let (d1, bc1) = p1;
    let (d2, bc2) = p2;
    if d1.grid().len() != d2.grid().len()
        || d1.fiber_dim() != d2.fiber_dim()
        || d1.truncation() != d2.truncation()
        || (d1.lo() - d2.lo()).abs() > 1e-12
        || (d1.hi() - d2.hi()).abs() > 1e-12
    {
        return Err(Error::ShapeMismatch("pair metrics need matching discretizations".into()));
    }
    let layout = d1.layout();
    let f1 = features(d1, bc1, policy)?;
    let f2 = features(d2, bc2, policy)?;

    // N0 terms
    let mut a_norm = 0.0f64;
    let mut a_adj_norm = 0.0f64;
    for i in 0..f1.j_nodes.len() {
        let dj = op_norm_with(&(&f1.j_nodes[i] - &f2.j_nodes[i]), policy)?;
        let dsigma = sobolev_op_norm(
            &(&f1.sigma_nodes[i] - &f2.sigma_nodes[i]),
            layout,
            1.0,
            0.0,
            policy,
        )?;
        a_norm = a_norm.max(dj + dsigma);
        let dj_adj = op_norm_with(&(&f1.j_adj_nodes[i] - &f2.j_adj_nodes[i]), policy)?;
        let dsigma_adj = sobolev_op_norm(
            &(&f1.sigma_adj_nodes[i] - &f2.sigma_adj_nodes[i]),
            layout,
            1.0,
            0.0,
            policy,
        )?;
        a_adj_norm = a_adj_norm.max(dj_adj + dsigma_adj);
    }
    let dt = &f1.t - &f2.t;
    let w_half = boundary_weight(d1, 0.5);
    let w_minus_half = boundary_weight(d1, -0.5);
    let dt_half = op_norm_with(&(&(&w_half * &dt) * &w_minus_half), policy)?;
    let n0 = a_norm + a_adj_norm + dt_half;

    // N1 terms
    let db0 = sobolev_op_norm(&(&f1.b0 - &f2.b0), layout, 1.0, 0.0, policy)?;
    let db0_adj = sobolev_op_norm(&(&f1.b0_adj - &f2.b0_adj), layout, 1.0, 0.0, policy)?;
    let dcomm = op_norm_with(&(&f1.commutator - &f2.commutator), policy)?;
    let dt_zero = op_norm_with(&dt, policy)?;
    let dj0 = op_norm_with(&(&f1.j_boundary - &f2.j_boundary), policy)?;
    let dc0 = op_norm_with(&(&f1.zeroth_at_lo - &f2.zeroth_at_lo), policy)?;
    let dc0_adj = op_norm_with(&(&f1.zeroth_adj_at_lo - &f2.zeroth_adj_at_lo), policy)?;
    let mut dc1 = 0.0f64;
    let mut dc1_adj = 0.0f64;
    for i in 1..f1.sigma_nodes.len() {
        let x = d1.grid()[i] - d1.lo();
        let g1 = &(&f1.sigma_nodes[i] - &f1.sigma_nodes[0]) - &(&f2.sigma_nodes[i] - &f2.sigma_nodes[0]);
        dc1 = dc1.max(sobolev_op_norm(&g1, layout, 1.0, 0.0, policy)? / x);
        let g2 = &(&f1.sigma_adj_nodes[i] - &f1.sigma_adj_nodes[0])
            - &(&f2.sigma_adj_nodes[i] - &f2.sigma_adj_nodes[0]);
        dc1_adj = dc1_adj.max(sobolev_op_norm(&g2, layout, 1.0, 0.0, policy)? / x);
    }
    let n1 = db0 + db0_adj + dcomm + dt_zero + dj0 + dc1 + dc0 + dc1_adj + dc0_adj;
    Ok(PairMetrics { n0, n1, d_str: n0 + n1 })
}
