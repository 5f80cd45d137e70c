//! Normal perturbations (f, g) with partial derivatives up to third order in (s, θ).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::jacobi::{Chart, NormalField};
use crate::{Gl4Error, Result};

use super::jet::Jet;

/// d[i][j] = ∂_s^i ∂_θ^j, i + j ≤ 3.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Derivs {
    pub d: [[f64; 4]; 4],
}

impl Derivs {
    /// Jet of ∂_s^p ∂_θ^q in the chart variables (s, θ, a, b).
    pub fn jet(&self, p: usize, q: usize) -> Jet {
        let d = &self.d;
        let mut j = Jet::constant(d[p][q]);
        if p + q < 3 {
            j.d[0] = d[p + 1][q];
            j.d[1] = d[p][q + 1];
        }
        if p + q < 2 {
            j.h[0][0] = d[p + 2][q];
            j.h[0][1] = d[p + 1][q + 1];
            j.h[1][0] = d[p + 1][q + 1];
            j.h[1][1] = d[p][q + 2];
        }
        j
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PertJet {
    pub f: Derivs,
    pub g: Derivs,
}

impl PertJet {
    /// Both components of L_H(f, g) at parameter s.
    pub fn lh(&self, s: f64) -> [f64; 2] {
        let sg = (2.0 * s).sin();
        let c = (2.0 * s).cos();
        let (f, g) = (&self.f.d, &self.g.d);
        let pot = 2.0 * sg.powi(3) - sg * c * c;
        [
            sg.powi(3) * f[2][0] + 2.0 * sg * sg * c * f[1][0] + sg * f[0][2] - 2.0 * sg * c * g[0][1] + pot * f[0][0],
            sg.powi(3) * g[2][0] + 2.0 * sg * sg * c * g[1][0] + sg * g[0][2] + 2.0 * sg * c * f[0][1] + pot * g[0][0],
        ]
    }
}

pub trait Perturbation: Sync {
    fn jet(&self, s: f64, theta: f64) -> Result<PertJet>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPerturbation;

impl Perturbation for ZeroPerturbation {
    fn jet(&self, _: f64, _: f64) -> Result<PertJet> {
        Ok(PertJet::default())
    }
}

/// amp · sin(m s + phase_s) · cos(k θ + phase_t)
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub m: f64,
    pub phase_s: f64,
    pub k: f64,
    pub phase_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigPerturbation {
    pub f: Vec<TrigTerm>,
    pub g: Vec<TrigTerm>,
}

impl TrigPerturbation {
    /// The smooth test pair used by the reduction experiments.
    pub fn standard() -> Self {
        let t = |amp, m, phase_s, k, phase_t| TrigTerm { amp, m, phase_s, k, phase_t };
        TrigPerturbation {
            f: vec![t(0.6, 2.0, 0.3, 1.0, 0.0), t(0.25, 1.0, 1.1, 2.0, 0.4)],
            g: vec![t(0.5, 3.0, -0.2, 1.0, -FRAC_PI_2), t(0.2, 1.0, 0.5, 0.0, 0.0)],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let sc = |v: &[TrigTerm]| v.iter().map(|t| TrigTerm { amp: t.amp * c, ..*t }).collect();
        TrigPerturbation { f: sc(&self.f), g: sc(&self.g) }
    }

    fn derivs(terms: &[TrigTerm], s: f64, theta: f64) -> Derivs {
        let mut out = Derivs::default();
        for t in terms {
            for i in 0..4 {
                for j in 0..4 - i {
                    let ds = t.m.powi(i as i32) * (t.m * s + t.phase_s + i as f64 * FRAC_PI_2).sin();
                    let dt = t.k.powi(j as i32) * (t.k * theta + t.phase_t + j as f64 * FRAC_PI_2).cos();
                    out.d[i][j] += t.amp * ds * dt;
                }
            }
        }
        out
    }
}

impl Perturbation for TrigPerturbation {
    fn jet(&self, s: f64, theta: f64) -> Result<PertJet> {
        Ok(PertJet { f: Self::derivs(&self.f, s, theta), g: Self::derivs(&self.g, s, theta) })
    }
}

/// Fornberg weights: c[m][j] is the weight of node j for the m-th derivative at z.
pub fn fornberg(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// θ-derivatives 0..=3 of the trigonometric interpolant of equispaced samples.
pub fn trig_derivs_at(y: &[f64], theta: f64) -> [f64; 4] {
    let n = y.len();
    let mut out = [0.0; 4];
    let half = n / 2;
    for k in 0..=half {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, v) in y.iter().enumerate() {
            let t = 2.0 * PI * (k * j) as f64 / n as f64;
            a += v * t.cos();
            b += v * t.sin();
        }
        let w = if k == 0 || (n % 2 == 0 && k == half) { 1.0 / n as f64 } else { 2.0 / n as f64 };
        let (a, b) = (a * w, b * w);
        let kk = k as f64;
        for (m, o) in out.iter_mut().enumerate() {
            let ph = kk * theta + m as f64 * FRAC_PI_2;
            let km = kk.powi(m as i32);
            if n % 2 == 0 && k == half {
                // Nyquist mode is real on the grid, keep cos only
                *o += km * a * ph.cos();
            } else {
                *o += km * (a * ph.cos() + b * ph.sin());
            }
        }
    }
    out
}

/// A sampled (f, g) on an S-chart grid, evaluated off-grid with eight-node Fornberg stencils in s
/// and the trigonometric interpolant in θ.
pub struct GridPerturbation<'a> {
    field: &'a NormalField,
}

impl<'a> GridPerturbation<'a> {
    pub fn new(field: &'a NormalField) -> Result<Self> {
        field.validate()?;
        if field.chart != Chart::S {
            return Err(Gl4Error::invalid("grid perturbation needs an S-chart field"));
        }
        if field.nx() < 8 {
            return Err(Gl4Error::invalid("grid perturbation needs at least 8 s-nodes"));
        }
        Ok(GridPerturbation { field })
    }

    fn derivs(&self, vals: &[f64], s: f64, theta: f64) -> Derivs {
        let x = &self.field.x;
        let n = x.len();
        let nt = self.field.ntheta;
        let h = x[1] - x[0];
        let k = (((s - x[0]) / h).round() as isize - 4).clamp(0, n as isize - 8) as usize;
        let nodes = &x[k..k + 8];
        let w = fornberg(s, nodes, 3);
        let rows: Vec<[f64; 4]> = (k..k + 8).map(|i| trig_derivs_at(&vals[i * nt..(i + 1) * nt], theta)).collect();
        let mut d = Derivs::default();
        for i in 0..4 {
            for j in 0..4 - i {
                d.d[i][j] = (0..8).map(|r| w[i][r] * rows[r][j]).sum();
            }
        }
        d
    }
}

impl Perturbation for GridPerturbation<'_> {
    fn jet(&self, s: f64, theta: f64) -> Result<PertJet> {
        let x = &self.field.x;
        if s < x[0] || s > x[x.len() - 1] {
            return Err(Gl4Error::invalid(format!("s = {s} outside the perturbation grid")));
        }
        Ok(PertJet { f: self.derivs(&self.field.f, s, theta), g: self.derivs(&self.field.g, s, theta) })
    }
}
