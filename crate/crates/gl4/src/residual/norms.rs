//! Weighted norms: ball suprema ‖·‖_* and ‖·‖_** in R⁴, surface norms ‖·‖_{0,k,q} and ‖·‖_{2,k,q}.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::jacobi::{Chart, NormalField};
use crate::{Gl4Error, Result};

use super::approx::{ApproxField, Cutoffs, CHART_LIMIT, ZETA_BAND};
use super::pert::trig_derivs_at;

pub const DEFAULT_Q: f64 = 1.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormKind {
    /// sup_P ρ(P)² e^{δr} ‖·‖_{W^{2,q}(B₁(P))}
    Star,
    /// sup_P ρ(P)² e^{δr} ‖·‖_{L^q(B₁(P))}
    StarStar,
    Surface0 { k: f64 },
    Surface2 { k: f64 },
}

pub fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0 && q < 2.0) {
        return Err(Gl4Error::invalid(format!("q must lie in (1, 2), got {q}")));
    }
    Ok(())
}

pub fn check_delta(delta: f64, m_lambda: f64) -> Result<()> {
    if !(delta > 0.0 && delta < m_lambda.min(1.0)) {
        return Err(Gl4Error::invalid(format!("δ must lie in (0, {}), got {delta}", m_lambda.min(1.0))));
    }
    Ok(())
}

/// Pointwise magnitudes [|h|, |∇h|, |∇²h|] on a square (a, b) grid at one footprint (s, θ).
#[derive(Debug, Clone, Serialize)]
pub struct FootprintSamples {
    pub s: f64,
    pub theta: f64,
    pub corner: f64,
    pub h: f64,
    pub n: usize,
    pub values: Vec<[f64; 3]>,
}

impl FootprintSamples {
    pub fn coord(&self, i: usize) -> f64 {
        self.corner + i as f64 * self.h
    }
}

/// Ball-supremum norm over unit-spaced centres on each footprint grid. The tangential extent of
/// B₁(P) is frozen at the footprint, so each node carries the slice area π(1 − d²).
pub fn ball_norm(samples: &[FootprintSamples], kind: NormKind, delta: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    let parts: &[usize] = match kind {
        NormKind::StarStar => &[0],
        NormKind::Star => &[0, 1, 2],
        _ => return Err(Gl4Error::invalid("surface norms take a normal field, not R⁴ samples")),
    };
    let mut best = 0.0_f64;
    for fp in samples {
        if fp.n < 3 || fp.values.len() != fp.n * fp.n || !(fp.h > 0.0) {
            return Err(Gl4Error::invalid("footprint grid needs n ≥ 3 and n² values"));
        }
        let rho2 = 1.0 / (2.0 * fp.s).sin();
        let stride = (1.0 / fp.h).round().max(1.0) as usize;
        let reach = (1.0 / fp.h).ceil() as usize;
        let centres: Vec<(usize, usize)> = (reach..fp.n.saturating_sub(reach))
            .step_by(stride)
            .flat_map(|i| (reach..fp.n.saturating_sub(reach)).step_by(stride).map(move |j| (i, j)))
            .collect();
        let vals: Vec<f64> = centres
            .par_iter()
            .map(|&(ci, cj)| {
                let (a0, b0) = (fp.coord(ci), fp.coord(cj));
                let mut sums = [0.0; 3];
                for i in ci - reach..=ci + reach {
                    for j in cj - reach..=cj + reach {
                        let d2 = (fp.coord(i) - a0).powi(2) + (fp.coord(j) - b0).powi(2);
                        if d2 >= 1.0 {
                            continue;
                        }
                        let w = PI * (1.0 - d2) * fp.h * fp.h;
                        for &p in parts {
                            sums[p] += fp.values[i * fp.n + j][p].powf(q) * w;
                        }
                    }
                }
                let local: f64 = parts.iter().map(|&p| sums[p].powf(1.0 / q)).sum();
                rho2 * (delta * a0.hypot(b0)).exp() * local
            })
            .collect();
        best = vals.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// ‖F(u)‖_** split into the 1-form part and the scalar part, with the sampled grids.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualNorm {
    pub form: f64,
    pub scalar: f64,
    pub total: f64,
    pub footprints: Vec<(f64, f64)>,
    pub spacing: f64,
}

/// Samples |F(u)| on (a, b) grids covering the support of F at each footprint.
pub fn residual_samples(
    field: &ApproxField,
    footprints: &[(f64, f64)],
    spacing: f64,
) -> Result<(Vec<FootprintSamples>, Vec<FootprintSamples>)> {
    let mut forms = Vec::new();
    let mut scalars = Vec::new();
    for &(s, theta) in footprints {
        let e2s = field.epsilon * field.epsilon * (2.0 * s).sin();
        let limit = (CHART_LIMIT / e2s).sqrt() / std::f64::consts::SQRT_2;
        let half = match field.cutoffs {
            Cutoffs::Paper => (ZETA_BAND.1 / e2s).sqrt() + 1.5,
            Cutoffs::None => 16.0,
        }
        .min(limit);
        let n = (2.0 * half / spacing).ceil() as usize + 1;
        let corner = -0.5 * (n - 1) as f64 * spacing;
        let pts: Vec<Result<(f64, f64)>> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let a = corner + i as f64 * spacing;
                let b = corner + j as f64 * spacing;
                if field.cutoffs == Cutoffs::Paper && (a * a + b * b) * e2s >= ZETA_BAND.1 {
                    return Ok((0.0, 0.0));
                }
                let r = field.residual([s, theta, a, b])?;
                Ok((r.form_norm(), r.psi_norm()))
            })
            .collect();
        let mut fv = Vec::with_capacity(n * n);
        let mut sv = Vec::with_capacity(n * n);
        for p in pts {
            let (f, s) = p?;
            fv.push([f, 0.0, 0.0]);
            sv.push([s, 0.0, 0.0]);
        }
        forms.push(FootprintSamples { s, theta, corner, h: spacing, n, values: fv });
        scalars.push(FootprintSamples { s, theta, corner, h: spacing, n, values: sv });
    }
    Ok((forms, scalars))
}

pub fn residual_norm(
    field: &ApproxField,
    footprints: &[(f64, f64)],
    spacing: f64,
    delta: f64,
    q: f64,
) -> Result<ResidualNorm> {
    check_delta(delta, field.profile().m_lambda)?;
    let (f, s) = residual_samples(field, footprints, spacing)?;
    let form = ball_norm(&f, NormKind::StarStar, delta, q)?;
    let scalar = ball_norm(&s, NormKind::StarStar, delta, q)?;
    Ok(ResidualNorm { form, scalar, total: form + scalar, footprints: footprints.to_vec(), spacing })
}

fn trig_row_derivs(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for (j, (o1, o2)) in d1.iter_mut().zip(d2.iter_mut()).enumerate() {
        let th = 2.0 * PI * j as f64 / n as f64;
        let d = trig_derivs_at(y, th);
        *o1 = d[1];
        *o2 = d[2];
    }
    (d1, d2)
}

/// Pointwise (|f|, |∇f|, |∇²f|) on Γ for one component sampled on a uniform T-chart grid.
/// Interior t-nodes only.
pub fn surface_magnitudes(t: &[f64], ntheta: usize, vals: &[f64]) -> Vec<[f64; 3]> {
    let n = t.len();
    let h = t[1] - t[0];
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|i| trig_row_derivs(&vals[i * ntheta..(i + 1) * ntheta])).collect();
    let mut out = vec![[0.0; 3]; n * ntheta];
    for i in 1..n - 1 {
        let rho2 = (2.0 * t[i]).cosh();
        let wt = 0.5 * (2.0 * t[i]).tanh();
        for j in 0..ntheta {
            let k = i * ntheta + j;
            let f = vals[k];
            let ft = (vals[k + ntheta] - vals[k - ntheta]) / (2.0 * h);
            let ftt = (vals[k + ntheta] - 2.0 * f + vals[k - ntheta]) / (h * h);
            let fth = rows[i].0[j];
            let fthth = rows[i].1[j];
            let ftth = (rows[i + 1].0[j] - rows[i - 1].0[j]) / (2.0 * h);
            let htt = ftt - wt * ft;
            let hqq = fthth + wt * ft;
            let htq = ftth - wt * fth;
            out[k] = [
                f.abs(),
                ((ft * ft + fth * fth) / rho2).sqrt(),
                ((htt * htt + 2.0 * htq * htq + hqq * hqq) / (rho2 * rho2)).sqrt(),
            ];
        }
    }
    out
}

/// ‖(f, g)‖_{0,k,q} or ‖(f, g)‖_{2,k,q} over annuli ρ(P) ≤ ρ ≤ ρ(P) + 1 on both sheets of Γ.
pub fn surface_norm(field: &NormalField, kind: NormKind, q: f64) -> Result<f64> {
    check_q(q)?;
    field.validate()?;
    if field.chart != Chart::T {
        return Err(Gl4Error::invalid("surface norms take a T-chart field"));
    }
    let (k, parts): (f64, &[usize]) = match kind {
        NormKind::Surface0 { k } => (k, &[0]),
        NormKind::Surface2 { k } => (k, &[0, 1, 2]),
        _ => return Err(Gl4Error::invalid("ball norms take R⁴ samples")),
    };
    let t = &field.x;
    let n = t.len();
    let nt = field.ntheta;
    let h = t[1] - t[0];
    let rho: Vec<f64> = t.iter().map(|x| (2.0 * x).cosh().sqrt()).collect();
    let interior_max = rho[1].min(rho[n - 2]);
    let mut total = 0.0;
    for comp in [&field.f, &field.g] {
        let mags = surface_magnitudes(t, nt, comp);
        let mut sup = [0.0_f64; 3];
        for i in 1..n - 1 {
            let r0 = rho[i];
            if r0 + 1.0 > interior_max {
                continue;
            }
            let mut acc = [0.0; 3];
            for (m, &rm) in rho.iter().enumerate().take(n - 1).skip(1) {
                if rm < r0 || rm > r0 + 1.0 {
                    continue;
                }
                let w = rm * rm * h * 2.0 * PI / nt as f64;
                for j in 0..nt {
                    for &p in parts {
                        acc[p] += mags[m * nt + j][p].powf(q) * w;
                    }
                }
            }
            for &p in parts {
                sup[p] = sup[p].max(r0.powf(k + p as f64) * acc[p].powf(1.0 / q));
            }
        }
        total += parts.iter().map(|&p| sup[p]).sum::<f64>();
    }
    Ok(total)
}
