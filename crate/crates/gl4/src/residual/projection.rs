//! Kernel projections ⟨F(u), χT_j⟩ over the normal disk at a fixed (s, θ).

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::Result;

use super::approx::{ApproxField, PointResidual, CHART_LIMIT, CHI_BAND, Cutoffs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    /// radial panel width in r̃
    pub panel: f64,
    /// Gauss-Legendre points per panel
    pub order: usize,
    pub n_phi: usize,
    /// radial truncation without cutoffs, tails of the integrands below 1e-12 beyond it
    pub r_tail: f64,
    pub tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { panel: 0.5, order: 8, n_phi: 64, r_tail: 16.0, tol: 1e-9 }
    }
}

impl Quadrature {
    fn doubled(&self) -> Self {
        Quadrature { panel: 0.5 * self.panel, n_phi: 2 * self.n_phi, ..*self }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub s: f64,
    pub theta: f64,
    /// ⟨F(u), χT₁⟩ and ⟨F(u), χT₂⟩
    pub value: [f64; 2],
    pub error: [f64; 2],
    /// ⟨T₁, T₂⟩ with the same cutoff
    pub overlap: f64,
    pub overlap_error: f64,
    pub warning: Option<String>,
}

/// Radius of (a, b) beyond which the integrands vanish or are negligible.
pub fn radial_extent(field: &ApproxField, s: f64, quad: &Quadrature) -> f64 {
    let e2s = field.epsilon * field.epsilon * (2.0 * s).sin();
    match field.cutoffs {
        Cutoffs::Paper => (CHI_BAND.1 / e2s).sqrt(),
        Cutoffs::None => quad.r_tail.min((0.9 * CHART_LIMIT / e2s).sqrt()),
    }
}

/// Integrates `integrand(residual)·χ` over the (a, b) disk in polar coordinates about the
/// shifted centre (εf, εg).
pub fn disk_integral<const N: usize>(
    field: &ApproxField,
    s: f64,
    theta: f64,
    quad: &Quadrature,
    integrand: &(dyn Fn(&PointResidual) -> [f64; N] + Sync),
) -> Result<[f64; N]> {
    let pj = field.pert_jet(s, theta)?;
    let (ca, cb) = (field.epsilon * pj.f.d[0][0], field.epsilon * pj.g.d[0][0]);
    let r_out = radial_extent(field, s, quad);
    let e2s = field.epsilon * field.epsilon * (2.0 * s).sin();
    let y_max = match field.cutoffs {
        Cutoffs::Paper => CHI_BAND.1,
        Cutoffs::None => 0.9 * CHART_LIMIT,
    };
    // the disk about the shifted centre must contain every point with y < y_max
    let r_quad = r_out + ca.hypot(cb);
    let panels = (r_quad / quad.panel).ceil() as usize;
    let hp = r_quad / panels as f64;
    let gl = GaussLegendre::new(NonZeroUsize::new(quad.order).expect("positive order"));
    let pairs = gl.as_node_weight_pairs();
    let mut radial = Vec::with_capacity(panels * quad.order);
    for p in 0..panels {
        let lo = p as f64 * hp;
        for &(x, w) in pairs {
            radial.push((lo + 0.5 * hp * (x + 1.0), 0.5 * hp * w));
        }
    }
    let dphi = 2.0 * PI / quad.n_phi as f64;
    let rows: Vec<Result<[f64; N]>> = radial
        .par_iter()
        .map(|&(rt, wr)| {
            let mut acc = [0.0; N];
            for k in 0..quad.n_phi {
                let ph = k as f64 * dphi;
                let a = ca + rt * ph.cos();
                let b = cb + rt * ph.sin();
                if (a * a + b * b) * e2s >= y_max {
                    continue;
                }
                let res = field.residual([s, theta, a, b])?;
                let v = integrand(&res);
                for n in 0..N {
                    acc[n] += v[n] * res.chi * rt * wr * dphi;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut out = [0.0; N];
    for r in rows {
        let r = r?;
        for n in 0..N {
            out[n] += r[n];
        }
    }
    Ok(out)
}

pub fn kernel_projection(field: &ApproxField, s: f64, theta: f64, quad: &Quadrature) -> Result<Projection> {
    let f = |r: &PointResidual| [r.projection_density(0), r.projection_density(1), r.kernel_overlap()];
    let coarse = disk_integral(field, s, theta, quad, &f)?;
    let fine = disk_integral(field, s, theta, &quad.doubled(), &f)?;
    let err: Vec<f64> = (0..3).map(|i| (fine[i] - coarse[i]).abs()).collect();
    let bad: Vec<usize> = (0..2).filter(|&i| err[i] > quad.tol * (1.0 + fine[i].abs())).collect();
    let warning = (!bad.is_empty()).then(|| {
        format!("quadrature doubling changed the projection by {:.2e} at s={s:.4}, θ={theta:.4}", err[bad[0]])
    });
    Ok(Projection {
        s,
        theta,
        value: [fine[0], fine[1]],
        error: [err[0], err[1]],
        overlap: fine[2],
        overlap_error: err[2],
        warning,
    })
}
