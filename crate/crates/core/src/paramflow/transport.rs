//! Domain transports between coupling conditions: the maps
//! `Phi_{T,T'}(f_+, f_-) = (f_+, f_- + e (T' - T) r f_+)` with a fixed
//! smooth trace right-inverse `e` supported near the boundary circles.

use crate::calderon::BoundaryConditionT;
use crate::collar::{CollarOperator, Section, section_derivative};
use crate::error::{Error, Result};
use crate::numkernel::{C64, ComplexMatrix, vec_norm};
use crate::policy::NumericPolicy;
use crate::sectorial::CutoffBump;

/// The transport `Phi_{T,T'}` realized on discrete section pairs.
#[derive(Clone)]
pub struct DomainTransport {
    grid: Vec<f64>,
    dim: usize,
    delta_t: ComplexMatrix,
    chi_lo: Vec<f64>,
    chi_hi: Vec<f64>,
}

/// Measured properties reported when constructing a transport.
#[derive(Debug, Clone)]
pub struct TransportReport {
    pub cocycle_defect: f64,
    pub inverse_defect: f64,
    /// Measured `||Phi - Id||_{1,1} / ||T - T'||_{1/2,1/2}`.
    pub measured_constant: f64,
    pub coupling_transport_defect: f64,
}

impl DomainTransport {
    /// Trace right-inverse `e`: boundary data transported constantly and cut
    /// off by a smooth bump supported in the first quarter of the collar.
    pub fn extension_section(&self, xi: &[C64]) -> Section {
        assert_eq!(xi.len(), 2 * self.dim);
        let (lo_part, hi_part) = xi.split_at(self.dim);
        let values = self
            .grid
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let (cl, ch) = (self.chi_lo[i], self.chi_hi[i]);
                (0..self.dim)
                    .map(|d| lo_part[d] * cl + hi_part[d] * ch)
                    .collect::<Vec<C64>>()
            })
            .collect();
        Section::new(values)
    }

    /// Applies the transport to a section pair.
    pub fn apply(&self, f_plus: &Section, f_minus: &Section) -> (Section, Section) {
        let trace = f_plus.trace();
        let correction = self.extension_section(&self.delta_t.apply(&trace));
        (f_plus.clone(), f_minus.add(&correction))
    }
}

/// Discrete H^1-type norm: L^2 of the section plus L^2 of its x-derivative,
/// with the 4th-order stack.
fn h1_norm(u: &Section, h: f64) -> f64 {
    let du = Section::new(section_derivative(u, h));
    (crate::collar::section_norm(u, h).powi(2) + crate::collar::section_norm(&du, h).powi(2))
        .sqrt()
}

/// Builds `Phi_{T,T'}` on the grid of `d` and verifies the cocycle, inverse,
/// norm-bound and coupling-transport identities on deterministic test data.
pub fn domain_transport(
    d: &CollarOperator,
    t: &BoundaryConditionT,
    t_prime: &BoundaryConditionT,
    policy: &NumericPolicy,
) -> Result<(DomainTransport, TransportReport)> {
    let dim = d.sigma_dim();
    if t.matrix().rows() != 2 * dim || t_prime.matrix().rows() != 2 * dim {
        return Err(Error::ShapeMismatch("transport boundary dimensions".into()));
    }
    let length = d.length();
    let bump = CutoffBump { plateau_end: length / 16.0, support_end: length / 4.0 };
    let chi_lo: Vec<f64> = d.grid().iter().map(|&x| bump.eval(x - d.lo())).collect();
    let chi_hi: Vec<f64> = d.grid().iter().map(|&x| bump.eval(d.hi() - x)).collect();
    let delta_t = t_prime.matrix() - t.matrix();
    let transport = DomainTransport {
        grid: d.grid().to_vec(),
        dim,
        delta_t: delta_t.clone(),
        chi_lo: chi_lo.clone(),
        chi_hi: chi_hi.clone(),
    };

    // deterministic smooth test pair
    let layout = d.layout();
    let f_plus = Section::from_fn(d.grid(), dim, |x| {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for k in layout.modes() {
            let s = layout.block_start(k);
            for f in 0..layout.fiber_dim {
                v[s + f] = C64::new(
                    ((k as f64) * 0.7 + x).sin() * 0.4 + 0.2 * f as f64,
                    0.1 * x * (f as f64 - 0.5),
                );
            }
        }
        v
    });
    let f_minus = Section::from_fn(d.grid(), dim, |x| {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for k in layout.modes() {
            let s = layout.block_start(k);
            v[s] = C64::new((x * 1.3).cos() * 0.3, -0.2 * x + 0.1 * k as f64);
        }
        v
    });

    // cocycle Phi_{T', T''} o Phi_{T, T'} = Phi_{T, T''} with T'' := T
    // (i.e. the inverse identity) and with a third condition interpolated
    let inverse_transport = DomainTransport {
        grid: transport.grid.clone(),
        dim,
        delta_t: delta_t.scale_real(-1.0),
        chi_lo: chi_lo.clone(),
        chi_hi: chi_hi.clone(),
    };
    let (g_plus, g_minus) = transport.apply(&f_plus, &f_minus);
    let (h_plus, h_minus) = inverse_transport.apply(&g_plus, &g_minus);
    let inverse_defect = h_plus
        .sub(&f_plus)
        .max_abs()
        .max(h_minus.sub(&f_minus).max_abs());

    let halfway = DomainTransport {
        grid: transport.grid.clone(),
        dim,
        delta_t: delta_t.scale_real(0.5),
        chi_lo: chi_lo.clone(),
        chi_hi,
    };
    let (m_plus, m_minus) = halfway.apply(&f_plus, &f_minus);
    let (mm_plus, mm_minus) = halfway.apply(&m_plus, &m_minus);
    let (full_plus, full_minus) = transport.apply(&f_plus, &f_minus);
    let cocycle_defect = mm_plus
        .sub(&full_plus)
        .max_abs()
        .max(mm_minus.sub(&full_minus).max_abs());

    // norm bound constant
    let h = d.grid_spacing();
    let correction = g_minus.sub(&f_minus);
    let phi_minus_id = h1_norm(&correction, h);
    let f_h1 = h1_norm(&f_plus, h).max(1e-30);
    let layout_w = {
        let w = d.layout().weight(0.5);
        ComplexMatrix::block_diag(&[&w, &w])
    };
    let layout_w_inv = {
        let w = d.layout().weight(-0.5);
        ComplexMatrix::block_diag(&[&w, &w])
    };
    let dt_half = crate::numkernel::op_norm_with(
        &(&(&layout_w * &delta_t) * &layout_w_inv),
        policy,
    )?;
    let measured_constant = if dt_half > 1e-14 {
        phi_minus_id / (f_h1 * dt_half)
    } else {
        0.0
    };

    // boundary-condition transport: traces satisfying r f_- = T r f_+ map to
    // traces satisfying the primed condition
    let coupled_minus = {
        let target = t.matrix().apply(&f_plus.trace());
        // build a section with exactly these traces through the bump profile
        
        transport.extension_section(&target)
    };
    let (tp_plus, tp_minus) = transport.apply(&f_plus, &coupled_minus);
    let want = t_prime.matrix().apply(&tp_plus.trace());
    let got = tp_minus.trace();
    let coupling_transport_defect = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / vec_norm(&want).max(1e-30);

    let report = TransportReport {
        cocycle_defect,
        inverse_defect,
        measured_constant,
        coupling_transport_defect,
    };
    if cocycle_defect > 1e-10 || inverse_defect > 1e-10 {
        return Err(Error::RelationViolated(cocycle_defect.max(inverse_defect)));
    }
    Ok((transport, report))
}
