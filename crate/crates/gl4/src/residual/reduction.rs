//! ε-scaling of the kernel projections against ε³(W·L_H(f, g) + F′) and of ‖F(u)‖_**.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::Serialize;

use crate::jacobi::loglog_slope;
use crate::vortex::{reduction_coefficients, CoefficientSet, VortexProfile};
use crate::{Gl4Error, Result};

use super::approx::{ApproxField, Cutoffs, Gauge};
use super::norms::{residual_norm, DEFAULT_Q};
use super::pert::{Perturbation, ZeroPerturbation};
use super::projection::{kernel_projection, Quadrature};

#[derive(Debug, Clone, Serialize)]
pub struct ReductionConfig {
    /// (s, θ) at which the projections are taken
    pub samples: Vec<(f64, f64)>,
    pub quadrature: Quadrature,
    /// footprints of the ‖F(u)‖_** balls
    pub norm_footprints: Vec<(f64, f64)>,
    pub norm_spacing: f64,
    pub delta: f64,
    pub q: f64,
    pub cutoffs: Cutoffs,
    /// skip ‖F(u)‖_** (the slowest part)
    pub skip_norm: bool,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            samples: vec![(FRAC_PI_4, 0.0), (0.6, 0.5), (0.9, 2.0)],
            quadrature: Quadrature::default(),
            norm_footprints: vec![(FRAC_PI_4, 0.0), (0.6, 0.5)],
            norm_spacing: 0.1,
            delta: 0.5,
            q: DEFAULT_Q,
            cutoffs: Cutoffs::Paper,
            skip_norm: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionEntry {
    pub s: f64,
    pub theta: f64,
    pub value: [f64; 2],
    pub quadrature_error: [f64; 2],
    /// L_H(f, g) at (s, θ)
    pub lh: [f64; 2],
    /// ε³(W·L_H + F′)
    pub predicted: [f64; 2],
    /// the same projection with f = g = 0
    pub unperturbed: [f64; 2],
    pub overlap: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Slopes {
    pub mismatch: f64,
    pub mismatch_lh: f64,
    #[serde(rename = "F_norm")]
    pub f_norm: Option<f64>,
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub lambda: f64,
    pub epsilon: Vec<f64>,
    #[serde(rename = "F_norm")]
    pub f_norm: Vec<Option<f64>>,
    pub projections: Vec<Vec<ProjectionEntry>>,
    /// max over samples and components of |P − ε³(W·L_H + F′)|
    pub mismatch: Vec<f64>,
    /// max of |P(f, g) − P(0, 0) − ε³W·L_H|, the part that does not involve F′
    pub mismatch_lh: Vec<f64>,
    /// max over samples of |⟨T₁, T₂⟩|
    pub overlap: Vec<f64>,
    pub slopes: Slopes,
    pub coefficients: CoefficientSet,
    pub warnings: Vec<String>,
}

pub fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Gl4Error::invalid("the scaling check needs at least 3 values of ε"));
    }
    for w in eps.windows(2) {
        if !(w[0] > 0.0 && w[1] > 0.0) {
            return Err(Gl4Error::invalid("ε values must be positive"));
        }
        if !(w[0] / w[1] >= std::f64::consts::SQRT_2 * (1.0 - 1e-12)) {
            return Err(Gl4Error::invalid(format!(
                "ε values must decrease by a factor ≥ √2, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Predicted leading projections ε³(W·L_H + F′) with F′ = (F₁′, 0).
pub fn predicted_projection(coef: &CoefficientSet, lh: [f64; 2], s: f64, eps: f64) -> [f64; 2] {
    let w = coef.jacobi_weight();
    let e3 = eps.powi(3);
    [e3 * (w * lh[0] + coef.forcing_f1(s)), e3 * w * lh[1]]
}

pub fn reduction_scaling_check(
    pert: &dyn Perturbation,
    profile: &VortexProfile,
    epsilons: &[f64],
    cfg: &ReductionConfig,
) -> Result<ResidualReport> {
    check_epsilons(epsilons)?;
    if cfg.samples.is_empty() {
        return Err(Gl4Error::invalid("no projection samples"));
    }
    let coef = reduction_coefficients(profile);
    let w = coef.jacobi_weight();
    let rows: Vec<Result<(Vec<ProjectionEntry>, Option<f64>)>> = epsilons
        .par_iter()
        .map(|&eps| {
            let field = ApproxField::new(eps, profile, pert, cfg.cutoffs)?;
            let zero = ZeroPerturbation;
            let bare = ApproxField::new(eps, profile, &zero, cfg.cutoffs)?;
            let mut entries = Vec::with_capacity(cfg.samples.len());
            for &(s, theta) in &cfg.samples {
                let p = kernel_projection(&field, s, theta, &cfg.quadrature)?;
                let p0 = kernel_projection(&bare, s, theta, &cfg.quadrature)?;
                let lh = pert.jet(s, theta)?.lh(s);
                entries.push(ProjectionEntry {
                    s,
                    theta,
                    value: p.value,
                    quadrature_error: p.error,
                    lh,
                    predicted: predicted_projection(&coef, lh, s, eps),
                    unperturbed: p0.value,
                    overlap: p.overlap,
                    warning: p.warning.or(p0.warning),
                });
            }
            let norm = if cfg.skip_norm {
                None
            } else {
                Some(residual_norm(&field, &cfg.norm_footprints, cfg.norm_spacing, cfg.delta, cfg.q)?.total)
            };
            Ok((entries, norm))
        })
        .collect();

    let mut projections = Vec::new();
    let mut f_norm = Vec::new();
    for r in rows {
        let (e, n) = r?;
        projections.push(e);
        f_norm.push(n);
    }
    let mut mismatch = Vec::new();
    let mut mismatch_lh = Vec::new();
    let mut overlap = Vec::new();
    let mut warnings = Vec::new();
    for (entries, &eps) in projections.iter().zip(epsilons) {
        let e3 = eps.powi(3);
        let mut m = 0.0_f64;
        let mut ml = 0.0_f64;
        let mut ov = 0.0_f64;
        for e in entries {
            for k in 0..2 {
                m = m.max((e.value[k] - e.predicted[k]).abs());
                ml = ml.max((e.value[k] - e.unperturbed[k] - e3 * w * e.lh[k]).abs());
            }
            ov = ov.max(e.overlap.abs());
            if let Some(wn) = &e.warning {
                warnings.push(format!("ε={eps}: {wn}"));
            }
        }
        mismatch.push(m);
        mismatch_lh.push(ml);
        overlap.push(ov);
    }
    let fn_slope = f_norm
        .iter()
        .copied()
        .collect::<Option<Vec<f64>>>()
        .map(|v| loglog_slope(epsilons, &v));
    let slopes = Slopes {
        mismatch: loglog_slope(epsilons, &mismatch),
        mismatch_lh: loglog_slope(epsilons, &mismatch_lh),
        f_norm: fn_slope,
        overlap: loglog_slope(epsilons, &overlap),
    };
    Ok(ResidualReport {
        lambda: profile.lambda,
        epsilon: epsilons.to_vec(),
        f_norm,
        projections,
        mismatch,
        mismatch_lh,
        overlap,
        slopes,
        coefficients: coef,
        warnings,
    })
}

/// |P(gauge image) − P| for both kernels at (s, θ).
pub fn gauge_projection_shift(
    pert: &dyn Perturbation,
    profile: &VortexProfile,
    gauge: &dyn Gauge,
    eps: f64,
    s: f64,
    theta: f64,
    quad: &Quadrature,
) -> Result<[f64; 2]> {
    let plain = ApproxField::new(eps, profile, pert, Cutoffs::Paper)?;
    let gauged = ApproxField::new(eps, profile, pert, Cutoffs::Paper)?.with_gauge(gauge);
    let p = kernel_projection(&plain, s, theta, quad)?;
    let g = kernel_projection(&gauged, s, theta, quad)?;
    Ok([(g.value[0] - p.value[0]).abs(), (g.value[1] - p.value[1]).abs()])
}
