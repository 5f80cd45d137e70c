//! The harmonic 1-form ω on R⁴ \ Γ with ∮_C ω = 2π·link(C, Γ), by surface quadrature.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::fermi::{closest_point, frame, gamma, Point4, Vec4};
use crate::{Gl4Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaQuadrature {
    pub rho_cut: f64,
    /// trapezoid nodes in u = ln ρ over [−ln ρ_cut, ln ρ_cut]
    pub n_u: usize,
    pub n_theta: usize,
    /// nodes along the loop
    pub n_loop: usize,
}

impl Default for OmegaQuadrature {
    fn default() -> Self {
        OmegaQuadrature { rho_cut: 50.0, n_u: 800, n_theta: 512, n_loop: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LoopSpec {
    /// Γ(s, θ) + (a₀ + r cos φ) m + (b₀ + r sin φ) n, φ increasing, on the unscaled surface
    NormalCircle { s: f64, theta: f64, radius: f64, offset: [f64; 2] },
    /// closed polygon through the given points of R⁴
    Points(Vec<Vec4>),
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaReport {
    pub value: f64,
    pub winding: f64,
    /// bound on the part of ∮ω carried by ρ ∉ [ρ_cut⁻¹, ρ_cut]
    pub tail_bound: f64,
    pub min_distance: f64,
    pub max_norm: f64,
    pub length: f64,
    pub warning: Option<String>,
}

/// Surface sheet nodes (y, y_ρ ρ du dθ ∧ y_θ) on the truncated Γ.
struct Sheet {
    y: Vec<Vec4>,
    u: Vec<Vec4>,
    v: Vec<Vec4>,
    w: f64,
}

fn sheet(q: &OmegaQuadrature) -> Sheet {
    let lc = q.rho_cut.ln();
    let du = 2.0 * lc / (q.n_u - 1) as f64;
    let dth = 2.0 * PI / q.n_theta as f64;
    let mut y = Vec::with_capacity(q.n_u * q.n_theta);
    let mut u = Vec::with_capacity(q.n_u * q.n_theta);
    let mut v = Vec::with_capacity(q.n_u * q.n_theta);
    for i in 0..q.n_u {
        let rho = (-lc + i as f64 * du).exp();
        // trapezoid end weights
        let wu = if i == 0 || i == q.n_u - 1 { 0.5 } else { 1.0 };
        let ri = 1.0 / rho;
        for j in 0..q.n_theta {
            let (st, ct) = (j as f64 * dth).sin_cos();
            y.push([rho * ct / SQRT_2, rho * st / SQRT_2, ri * ct / SQRT_2, ri * st / SQRT_2]);
            // y_ρ scaled by ρ du · wu, so the pair carries the area weight
            let k = rho * wu / SQRT_2;
            u.push([ct * k, st * k, -ri * ri * ct * k, -ri * ri * st * k]);
            v.push([-rho * st / SQRT_2, rho * ct / SQRT_2, -ri * st / SQRT_2, ri * ct / SQRT_2]);
        }
    }
    Sheet { y, u, v, w: du * dth }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// X_l = ε_{ijkl} a_i b_j c_k.
fn cross3(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (l, o) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&k| k != l).collect();
        let m = [
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [b[cols[0]], b[cols[1]], b[cols[2]]],
            [c[cols[0]], c[cols[1]], c[cols[2]]],
        ];
        // det[a; b; c; e_l] expanded along the last row
        let sign = if (3 + l) % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det3(m);
    }
    out
}

/// Γ carries the orientation in which a normal circle with increasing φ links it positively.
const ORIENTATION: f64 = 1.0;

fn omega_at(sh: &Sheet, x: &Vec4) -> Vec4 {
    let mut acc = [0.0; 4];
    for k in 0..sh.y.len() {
        let y = &sh.y[k];
        let z = [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]];
        let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3];
        // ∇G = −z / (2π²|z|⁴)
        let c = -1.0 / (2.0 * PI * PI * r2 * r2);
        let dg = [c * z[0], c * z[1], c * z[2], c * z[3]];
        let x3 = cross3(&dg, &sh.u[k], &sh.v[k]);
        for l in 0..4 {
            acc[l] += x3[l];
        }
    }
    let f = -2.0 * PI * ORIENTATION * sh.w;
    [acc[0] * f, acc[1] * f, acc[2] * f, acc[3] * f]
}

/// ω at a batch of points.
pub fn omega_values(points: &[Vec4], q: &OmegaQuadrature) -> Result<Vec<Vec4>> {
    check_quadrature(q)?;
    let sh = sheet(q);
    Ok(points.par_iter().map(|x| omega_at(&sh, x)).collect())
}

fn check_quadrature(q: &OmegaQuadrature) -> Result<()> {
    if !(q.rho_cut > 1.0) || q.n_u < 16 || q.n_theta < 16 || q.n_loop < 8 {
        return Err(Gl4Error::invalid("ω quadrature needs ρ_cut > 1 and at least 16 surface nodes per direction"));
    }
    Ok(())
}

fn norm(x: &Vec4) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Loop nodes with tangent weights dx (so ∮ω ≈ Σ ω(x)·dx).
fn loop_nodes(spec: &LoopSpec, n: usize) -> Result<(Vec<Vec4>, Vec<Vec4>)> {
    match spec {
        LoopSpec::NormalCircle { s, theta, radius, offset } => {
            if !(*s > 0.0 && *s < std::f64::consts::FRAC_PI_2) || !(*radius > 0.0) {
                return Err(Gl4Error::invalid("normal circle needs s ∈ (0, π/2) and a positive radius"));
            }
            let g = gamma(*s, *theta, 1.0);
            let f = frame(*s, *theta);
            let dphi = 2.0 * PI / n as f64;
            let mut xs = Vec::with_capacity(n);
            let mut ts = Vec::with_capacity(n);
            for k in 0..n {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                let (a, b) = (offset[0] + radius * cp, offset[1] + radius * sp);
                let (da, db) = (-radius * sp * dphi, radius * cp * dphi);
                xs.push(std::array::from_fn(|i| g[i] + a * f.m[i] + b * f.n[i]));
                ts.push(std::array::from_fn(|i| da * f.m[i] + db * f.n[i]));
            }
            Ok((xs, ts))
        }
        LoopSpec::Points(p) => {
            if p.len() < 3 {
                return Err(Gl4Error::invalid("a polygonal loop needs at least 3 points"));
            }
            let edges: Vec<(Vec4, Vec4)> = (0..p.len()).map(|k| (p[k], p[(k + 1) % p.len()])).collect();
            let lens: Vec<f64> = edges.iter().map(|(a, b)| norm(&std::array::from_fn(|i| b[i] - a[i]))).collect();
            let total: f64 = lens.iter().sum();
            if !(total > 0.0) {
                return Err(Gl4Error::invalid("polygonal loop has zero length"));
            }
            // Gauss-Legendre, 3 points per sub-segment
            let gl = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
            let mut xs = Vec::new();
            let mut ts = Vec::new();
            for ((x0, x1), len) in edges.iter().zip(&lens) {
                let m = ((n as f64 * len / total).ceil() as usize).max(1);
                for k in 0..m {
                    for &(t, w) in &gl {
                        let l = (k as f64 + 0.5 * (t + 1.0)) / m as f64;
                        xs.push(std::array::from_fn(|i| x0[i] + l * (x1[i] - x0[i])));
                        ts.push(std::array::from_fn(|i| 0.5 * w * (x1[i] - x0[i]) / m as f64));
                    }
                }
            }
            Ok((xs, ts))
        }
    }
}

/// Cone area from the centroid, an upper bound for the least spanning area.
fn cone_area(xs: &[Vec4], ts: &[Vec4]) -> f64 {
    let n = xs.len() as f64;
    let c: Vec4 = std::array::from_fn(|i| xs.iter().map(|x| x[i]).sum::<f64>() / n);
    let mut area = 0.0;
    for (x, t) in xs.iter().zip(ts) {
        let d: Vec4 = std::array::from_fn(|i| x[i] - c[i]);
        let (dd, tt, dt) = (
            d.iter().map(|v| v * v).sum::<f64>(),
            t.iter().map(|v| v * v).sum::<f64>(),
            d.iter().zip(t).map(|(a, b)| a * b).sum::<f64>(),
        );
        area += 0.5 * (dd * tt - dt * dt).max(0.0).sqrt();
    }
    area
}

pub fn omega_winding(spec: &LoopSpec, q: &OmegaQuadrature) -> Result<OmegaReport> {
    check_quadrature(q)?;
    let (xs, ts) = loop_nodes(spec, q.n_loop)?;
    let max_norm = xs.iter().map(norm).fold(0.0, f64::max);
    let u0 = q.rho_cut / SQRT_2 - max_norm;
    if u0 < 0.5 * q.rho_cut / SQRT_2 {
        return Err(Gl4Error::invalid(format!(
            "loop reaches |x| = {max_norm:.3}, inside the truncation tube of ρ_cut = {}",
            q.rho_cut
        )));
    }
    let mut min_distance = f64::INFINITY;
    let mut near_s = std::f64::consts::FRAC_PI_4;
    for x in &xs {
        let c = closest_point(&Point4::from_cartesian(*x), 1.0)?;
        if c.distance < min_distance {
            min_distance = c.distance;
            near_s = c.params.first().map_or(near_s, |p| p.0);
        }
    }
    if !(min_distance > 1e-3) {
        return Err(Gl4Error::invalid(format!("loop passes within {min_distance:.2e} of Γ")));
    }
    let om = omega_values(&xs, q)?;
    let value: f64 = om.iter().zip(&ts).map(|(w, t)| (0..4).map(|i| w[i] * t[i]).sum::<f64>()).sum();
    let length: f64 = ts.iter().map(norm).sum();

    // far sheets carry at most 1.02× planar area: |ω_far| ≤ (1/π)∫|z|⁻³ dA and, by Stokes over the
    // centroid cone, |dω_far| ≤ (√48/π)∫|z|⁻⁴ dA, each sheet integral taken from u₀ outward
    let (x, kappa) = (max_norm, 1.02);
    let line = 4.0 * kappa * (1.0 / u0 + x / (2.0 * u0 * u0)) * length;
    let stokes = 4.0 * kappa * 48f64.sqrt() * (1.0 / (2.0 * u0 * u0) + x / (3.0 * u0.powi(3))) * cone_area(&xs, &ts);
    let tail_bound = line.min(stokes);

    // arc-length spacing of the sheet grid near the closest point
    let h = (2.0 * q.rho_cut.ln() / (q.n_u - 1) as f64).max(2.0 * PI / q.n_theta as f64)
        / (2.0 * near_s).sin().sqrt();
    let warning = (min_distance < 4.0 * h)
        .then(|| format!("loop distance {min_distance:.3e} is below four surface spacings ({h:.3e})"));
    Ok(OmegaReport { value, winding: value / (2.0 * PI), tail_bound, min_distance, max_norm, length, warning })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanCheck {
    pub point: Vec4,
    /// ω(∂ρ₁), ω(∂ρ₂), ω(∂θ₁), ω(∂θ₂)
    pub components: [f64; 4],
    /// |ω(∂ρ₁) + ω(∂ρ₂)| + |ω(∂θ₁) − ω(∂θ₂)|, relative to the largest component
    pub defect: f64,
    /// the same against span{dρ₁ + dρ₂, dθ₁ − dθ₂}
    pub mirrored_defect: f64,
}

/// On {ρ₁ = ρ₂}, ω should lie in span{dρ₁ − dρ₂, dθ₁ + dθ₂}.
pub fn span_check(points: &[Point4], q: &OmegaQuadrature) -> Result<Vec<SpanCheck>> {
    for p in points {
        if (p.rho1 - p.rho2).abs() > 1e-12 * (1.0 + p.rho1) {
            return Err(Gl4Error::invalid("span check points must satisfy ρ₁ = ρ₂"));
        }
    }
    let xs: Vec<Vec4> = points.iter().map(|p| p.cartesian()).collect();
    let om = omega_values(&xs, q)?;
    Ok(points
        .iter()
        .zip(om)
        .map(|(p, w)| {
            let (s1, c1) = p.theta1.sin_cos();
            let (s2, c2) = p.theta2.sin_cos();
            let vecs: [Vec4; 4] = [
                [c1, s1, 0.0, 0.0],
                [0.0, 0.0, c2, s2],
                [-p.rho1 * s1, p.rho1 * c1, 0.0, 0.0],
                [0.0, 0.0, -p.rho2 * s2, p.rho2 * c2],
            ];
            let comp: [f64; 4] = std::array::from_fn(|k| (0..4).map(|i| w[i] * vecs[k][i]).sum());
            let scale = comp.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let scale = scale.max(f64::MIN_POSITIVE);
            let defect = ((comp[0] + comp[1]).abs() + (comp[2] - comp[3]).abs()) / scale;
            let mirrored_defect = ((comp[0] - comp[1]).abs() + (comp[2] + comp[3]).abs()) / scale;
            SpanCheck { point: p.cartesian(), components: comp, defect, mirrored_defect }
        })
        .collect())
}
