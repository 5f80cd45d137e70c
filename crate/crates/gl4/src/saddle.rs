//! Saddle-type solution (f, g, h) of the reduced two-plane system on the quarter square [0, L]².
//!
//! Storage is node-major: value at (r1, r2) = (i h, j h) lives at index i (n + 1) + j.
//! h is always the transpose of g.

use std::f64::consts::PI;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use serde::Serialize;

use crate::error::{Gl4Error, Result};
use crate::vortex::{solve_profile, VortexProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SaddleInit {
    /// f = tanh r1 tanh r2, g = tanh² r1
    Tanh,
    /// f = U(r1) U(r2), g = V(r1) from the planar vortex
    Product,
}

#[derive(Debug, Clone, Copy)]
pub struct SaddleOptions {
    pub tol: f64,
    pub flow_iters: usize,
    pub newton_max: usize,
    pub init: SaddleInit,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            tol: 1e-9,
            flow_iters: 300,
            newton_max: 40,
            init: SaddleInit::Tanh,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleField {
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    pub h_step: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElResidual {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl ElResidual {
    pub fn max(&self) -> f64 {
        self.f.max(self.g).max(self.h)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleSummary {
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    pub energy: f64,
    pub residuals: ElResidual,
    pub iterations: usize,
}

impl SaddleField {
    /// Field from explicit grids; h is rebuilt as the transpose of g.
    pub fn from_grids(lambda: f64, l: f64, n: usize, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let m = (n + 1) * (n + 1);
        if f.len() != m || g.len() != m {
            return Err(Gl4Error::invalid(format!("grids must hold {m} values")));
        }
        let mut s = SaddleField {
            lambda,
            l,
            n,
            h_step: l / n as f64,
            f,
            g,
            h: vec![0.0; m],
            energy_history: Vec::new(),
            residual_history: Vec::new(),
            flow_iterations: 0,
            newton_iterations: 0,
        };
        s.sync_h();
        Ok(s)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn sync_h(&mut self) {
        let n = self.n;
        for i in 0..=n {
            for j in 0..=n {
                self.h[i * (n + 1) + j] = self.g[j * (n + 1) + i];
            }
        }
    }

    fn symmetrize_f(&mut self) {
        let n = self.n;
        for i in 0..=n {
            for j in i + 1..=n {
                let a = i * (n + 1) + j;
                let b = j * (n + 1) + i;
                let m = 0.5 * (self.f[a] + self.f[b]);
                self.f[a] = m;
                self.f[b] = m;
            }
        }
    }

    pub fn energy(&self) -> f64 {
        discrete_energy(self)
    }

    pub fn summary(&self) -> SaddleSummary {
        SaddleSummary {
            lambda: self.lambda,
            l: self.l,
            n: self.n,
            energy: discrete_energy(self),
            residuals: el_residual(self),
            iterations: self.flow_iterations + self.newton_iterations,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r1,r2,f,g,h\n");
        for i in 0..=self.n {
            for j in 0..=self.n {
                let k = self.idx(i, j);
                s.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    i as f64 * self.h_step,
                    j as f64 * self.h_step,
                    self.f[k],
                    self.g[k],
                    self.h[k]
                ));
            }
        }
        s
    }

    /// Bilinear interpolation of f.
    pub fn f_at(&self, r1: f64, r2: f64) -> f64 {
        let hs = self.h_step;
        let x = (r1 / hs).clamp(0.0, self.n as f64);
        let y = (r2 / hs).clamp(0.0, self.n as f64);
        let i = (x.floor() as usize).min(self.n - 1);
        let j = (y.floor() as usize).min(self.n - 1);
        let tx = x - i as f64;
        let ty = y - j as f64;
        let v = |a, b| self.f[self.idx(a, b)];
        (1.0 - tx) * (1.0 - ty) * v(i, j) + tx * (1.0 - ty) * v(i + 1, j) + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

/// Cell-centred quadrature of the reduced energy, gradients from averaged forward differences.
pub fn discrete_energy(s: &SaddleField) -> f64 {
    energy_and_gradient(s, false).0
}

/// Energy from cells touching an axis, and from all others.
pub fn energy_split(s: &SaddleField) -> (f64, f64) {
    let n = s.n;
    let hs = s.h_step;
    let c = 2.0 * PI * PI * hs * hs;
    let mut axis = 0.0;
    let mut rest = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r1 = (i as f64 + 0.5) * hs;
            let r2 = (j as f64 + 0.5) * hs;
            let k = [s.idx(i, j), s.idx(i + 1, j), s.idx(i, j + 1), s.idx(i + 1, j + 1)];
            let avg = |y: &[f64]| 0.25 * (y[k[0]] + y[k[1]] + y[k[2]] + y[k[3]]);
            let d1 = |y: &[f64]| (y[k[1]] - y[k[0]] + y[k[3]] - y[k[2]]) / (2.0 * hs);
            let d2 = |y: &[f64]| (y[k[2]] - y[k[0]] + y[k[3]] - y[k[1]]) / (2.0 * hs);
            let (fc, gc, hc) = (avg(&s.f), avg(&s.g), avg(&s.h));
            let e = r1 * r2
                * (d1(&s.f).powi(2)
                    + d2(&s.f).powi(2)
                    + (fc * fc * (1.0 - gc).powi(2) + d1(&s.g).powi(2) + d2(&s.g).powi(2)) / (r1 * r1)
                    + (fc * fc * (1.0 - hc).powi(2) + d1(&s.h).powi(2) + d2(&s.h).powi(2)) / (r2 * r2)
                    + 0.25 * s.lambda * (1.0 - fc * fc).powi(2));
            if i == 0 || j == 0 {
                axis += c * e;
            } else {
                rest += c * e;
            }
        }
    }
    (axis, rest)
}

fn energy_and_gradient(s: &SaddleField, want_grad: bool) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.n;
    let hs = s.h_step;
    let m = (n + 1) * (n + 1);
    let (mut gf, mut gg, mut gh) = if want_grad {
        (vec![0.0; m], vec![0.0; m], vec![0.0; m])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let mut total = 0.0;
    let lam = s.lambda;
    let c = 2.0 * PI * PI * hs * hs;
    for i in 0..n {
        let r1 = (i as f64 + 0.5) * hs;
        for j in 0..n {
            let r2 = (j as f64 + 0.5) * hs;
            let w = r1 * r2;
            let inv1 = 1.0 / (r1 * r1);
            let inv2 = 1.0 / (r2 * r2);
            let k = [s.idx(i, j), s.idx(i + 1, j), s.idx(i, j + 1), s.idx(i + 1, j + 1)];
            let d1 = [-1.0, 1.0, -1.0, 1.0];
            let d2 = [-1.0, -1.0, 1.0, 1.0];
            let grad = |y: &[f64]| {
                let mut a = 0.0;
                let mut b = 0.0;
                let mut mean = 0.0;
                for q in 0..4 {
                    a += d1[q] * y[k[q]];
                    b += d2[q] * y[k[q]];
                    mean += y[k[q]];
                }
                (a / (2.0 * hs), b / (2.0 * hs), 0.25 * mean)
            };
            let (f1, f2, fc) = grad(&s.f);
            let (g1, g2, gc) = grad(&s.g);
            let (h1, h2, hc) = grad(&s.h);
            let pot = 0.25 * lam * (1.0 - fc * fc).powi(2);
            let e = w
                * (f1 * f1
                    + f2 * f2
                    + (fc * fc * (1.0 - gc).powi(2) + g1 * g1 + g2 * g2) * inv1
                    + (fc * fc * (1.0 - hc).powi(2) + h1 * h1 + h2 * h2) * inv2
                    + pot);
            total += e;
            if want_grad {
                let cw = c * w;
                let df_c = cw
                    * (2.0 * fc * (1.0 - gc).powi(2) * inv1 + 2.0 * fc * (1.0 - hc).powi(2) * inv2
                        - lam * fc * (1.0 - fc * fc));
                let dg_c = -cw * 2.0 * fc * fc * (1.0 - gc) * inv1;
                let dh_c = -cw * 2.0 * fc * fc * (1.0 - hc) * inv2;
                for q in 0..4 {
                    let a = d1[q] / (2.0 * hs);
                    let b = d2[q] / (2.0 * hs);
                    gf[k[q]] += 0.25 * df_c + cw * 2.0 * (f1 * a + f2 * b);
                    gg[k[q]] += 0.25 * dg_c + cw * inv1 * 2.0 * (g1 * a + g2 * b);
                    gh[k[q]] += 0.25 * dh_c + cw * inv2 * 2.0 * (h1 * a + h2 * b);
                }
            }
        }
    }
    (c * total, gf, gg, gh)
}

fn sup_slice(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Pointwise residual grids of the three Euler-Lagrange equations (zero off the measured set).
pub fn el_residual_grids(s: &SaddleField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.n;
    let hs = s.h_step;
    let m = (n + 1) * (n + 1);
    let mut rf = vec![0.0; m];
    let mut rg = vec![0.0; m];
    let mut rh = vec![0.0; m];
    let h2 = hs * hs;
    let lam = s.lambda;
    for i in 1..n {
        let r1 = i as f64 * hs;
        for j in 1..n {
            let r2 = j as f64 * hs;
            let k = s.idx(i, j);
            let (e, w, no, so) = (s.idx(i + 1, j), s.idx(i - 1, j), s.idx(i, j + 1), s.idx(i, j - 1));
            let lap = |y: &[f64]| (y[e] + y[w] + y[no] + y[so] - 4.0 * y[k]) / h2;
            let d1 = |y: &[f64]| (y[e] - y[w]) / (2.0 * hs);
            let d2 = |y: &[f64]| (y[no] - y[so]) / (2.0 * hs);
            let (f, g, hh) = (s.f[k], s.g[k], s.h[k]);
            rf[k] = lap(&s.f) + d1(&s.f) / r1 + d2(&s.f) / r2
                - f * (1.0 - g).powi(2) / (r1 * r1)
                - f * (1.0 - hh).powi(2) / (r2 * r2)
                - 0.5 * lam * (f * f - 1.0) * f;
            rg[k] = lap(&s.g) - d1(&s.g) / r1 + d2(&s.g) / r2 + f * f * (1.0 - g);
            rh[k] = lap(&s.h) - d2(&s.h) / r2 + d1(&s.h) / r1 + f * f * (1.0 - hh);
        }
    }
    (rf, rg, rh)
}

/// Sup norms of the Euler-Lagrange residuals over interior nodes.
pub fn el_residual(s: &SaddleField) -> ElResidual {
    let (a, b, c) = el_residual_grids(s);
    ElResidual { f: sup_slice(&a), g: sup_slice(&b), h: sup_slice(&c) }
}

struct Layout {
    n: usize,
    nf: usize,
}

impl Layout {
    fn new(n: usize) -> Self {
        Layout { n, nf: (n - 1) * (n - 1) }
    }
    fn len(&self) -> usize {
        self.nf + (self.n - 1) * self.n
    }
    /// f unknown at 1 <= i, j <= n - 1
    fn f(&self, i: usize, j: usize) -> Option<usize> {
        (i >= 1 && j >= 1 && i < self.n && j < self.n).then(|| (i - 1) * (self.n - 1) + (j - 1))
    }
    /// g unknown at 1 <= i <= n - 1, 0 <= j <= n - 1
    fn g(&self, i: usize, j: usize) -> Option<usize> {
        (i >= 1 && i < self.n && j < self.n).then(|| self.nf + (i - 1) * self.n + j)
    }
}

/// Residual vector of the discrete EL system over all unknowns, and the sparse Jacobian if asked.
fn system(s: &SaddleField, lay: &Layout, jac: bool) -> (Vec<f64>, Vec<Triplet<usize, usize, f64>>) {
    let n = s.n;
    let hs = s.h_step;
    let h2 = hs * hs;
    let lam = s.lambda;
    let mut res = vec![0.0; lay.len()];
    let mut trip = Vec::new();
    let put = |row: usize, col: Option<usize>, v: f64, trip: &mut Vec<Triplet<usize, usize, f64>>| {
        if jac {
            if let Some(c) = col {
                trip.push(Triplet::new(row, c, v));
            }
        }
    };
    for i in 1..n {
        let r1 = i as f64 * hs;
        for j in 1..n {
            let r2 = j as f64 * hs;
            let row = lay.f(i, j).unwrap();
            let k = s.idx(i, j);
            let (e, w, no, so) = (s.idx(i + 1, j), s.idx(i - 1, j), s.idx(i, j + 1), s.idx(i, j - 1));
            let y = &s.f;
            let (f, g, hh) = (y[k], s.g[k], s.h[k]);
            res[row] = (y[e] + y[w] + y[no] + y[so] - 4.0 * f) / h2
                + (y[e] - y[w]) / (2.0 * hs * r1)
                + (y[no] - y[so]) / (2.0 * hs * r2)
                - f * (1.0 - g).powi(2) / (r1 * r1)
                - f * (1.0 - hh).powi(2) / (r2 * r2)
                - 0.5 * lam * (f * f - 1.0) * f;
            if jac {
                put(
                    row,
                    Some(row),
                    -4.0 / h2 - (1.0 - g).powi(2) / (r1 * r1) - (1.0 - hh).powi(2) / (r2 * r2)
                        - 0.5 * lam * (3.0 * f * f - 1.0),
                    &mut trip,
                );
                put(row, lay.f(i + 1, j), 1.0 / h2 + 1.0 / (2.0 * hs * r1), &mut trip);
                put(row, lay.f(i - 1, j), 1.0 / h2 - 1.0 / (2.0 * hs * r1), &mut trip);
                put(row, lay.f(i, j + 1), 1.0 / h2 + 1.0 / (2.0 * hs * r2), &mut trip);
                put(row, lay.f(i, j - 1), 1.0 / h2 - 1.0 / (2.0 * hs * r2), &mut trip);
                put(row, lay.g(i, j), 2.0 * f * (1.0 - g) / (r1 * r1), &mut trip);
                // h(i, j) = g(j, i)
                put(row, lay.g(j, i), 2.0 * f * (1.0 - hh) / (r2 * r2), &mut trip);
            }
        }
    }
    for i in 1..n {
        let r1 = i as f64 * hs;
        // one-sided Neumann row on the r1-axis
        let row = lay.g(i, 0).unwrap();
        res[row] = -3.0 * s.g[s.idx(i, 0)] + 4.0 * s.g[s.idx(i, 1)] - s.g[s.idx(i, 2)];
        put(row, lay.g(i, 0), -3.0, &mut trip);
        put(row, lay.g(i, 1), 4.0, &mut trip);
        put(row, lay.g(i, 2), -1.0, &mut trip);
        for j in 1..n {
            let r2 = j as f64 * hs;
            let row = lay.g(i, j).unwrap();
            let k = s.idx(i, j);
            let (e, w, no, so) = (s.idx(i + 1, j), s.idx(i - 1, j), s.idx(i, j + 1), s.idx(i, j - 1));
            let y = &s.g;
            let (f, g) = (s.f[k], y[k]);
            res[row] = (y[e] + y[w] + y[no] + y[so] - 4.0 * g) / h2 - (y[e] - y[w]) / (2.0 * hs * r1)
                + (y[no] - y[so]) / (2.0 * hs * r2)
                + f * f * (1.0 - g);
            if jac {
                put(row, Some(row), -4.0 / h2 - f * f, &mut trip);
                put(row, lay.g(i + 1, j), 1.0 / h2 - 1.0 / (2.0 * hs * r1), &mut trip);
                put(row, lay.g(i - 1, j), 1.0 / h2 + 1.0 / (2.0 * hs * r1), &mut trip);
                put(row, lay.g(i, j + 1), 1.0 / h2 + 1.0 / (2.0 * hs * r2), &mut trip);
                put(row, lay.g(i, j - 1), 1.0 / h2 - 1.0 / (2.0 * hs * r2), &mut trip);
                put(row, lay.f(i, j), 2.0 * f * (1.0 - g), &mut trip);
            }
        }
    }
    (res, trip)
}

fn apply_update(s: &mut SaddleField, lay: &Layout, base_f: &[f64], base_g: &[f64], dx: &[f64], alpha: f64) {
    let n = s.n;
    for i in 0..=n {
        for j in 0..=n {
            let k = i * (n + 1) + j;
            s.f[k] = base_f[k] + lay.f(i, j).map_or(0.0, |c| alpha * dx[c]);
            s.g[k] = base_g[k] + lay.g(i, j).map_or(0.0, |c| alpha * dx[c]);
        }
    }
    s.symmetrize_f();
    s.sync_h();
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Initial field with Dirichlet data: f = 0 on the axes, g = 0 on the r2-axis,
/// product vortex values on r1 = L and r2 = L.
pub fn initial_field(lambda: f64, l: f64, n: usize, init: SaddleInit, prof: &VortexProfile) -> SaddleField {
    let hs = l / n as f64;
    let m = (n + 1) * (n + 1);
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; m];
    for i in 0..=n {
        let r1 = i as f64 * hs;
        let p1 = prof.eval(r1);
        for j in 0..=n {
            let r2 = j as f64 * hs;
            let p2 = prof.eval(r2);
            let k = i * (n + 1) + j;
            let (fv, gv) = if i == n || j == n {
                (p1.u * p2.u, p1.v)
            } else {
                match init {
                    SaddleInit::Tanh => (r1.tanh() * r2.tanh(), r1.tanh().powi(2)),
                    SaddleInit::Product => (p1.u * p2.u, p1.v),
                }
            };
            f[k] = if i == 0 || j == 0 { 0.0 } else { fv };
            g[k] = if i == 0 { 0.0 } else { gv };
        }
    }
    SaddleField::from_grids(lambda, l, n, f, g).expect("grid sizes are consistent")
}

/// Projected, diagonally preconditioned gradient descent on the discrete energy.
/// Returns the energy after every accepted step (first entry is the start).
pub fn gradient_flow(s: &mut SaddleField, iters: usize) -> Vec<f64> {
    let n = s.n;
    let hs = s.h_step;
    let m = (n + 1) * (n + 1);
    let c = 2.0 * PI * PI * hs * hs;
    // diagonal of the Dirichlet-form Hessian, accumulated per cell
    let mut df = vec![0.0; m];
    let mut dg_raw = vec![0.0; m];
    let mut dh_raw = vec![0.0; m];
    for i in 0..n {
        let r1 = (i as f64 + 0.5) * hs;
        for j in 0..n {
            let r2 = (j as f64 + 0.5) * hs;
            let w = r1 * r2 / (hs * hs);
            for k in [s.idx(i, j), s.idx(i + 1, j), s.idx(i, j + 1), s.idx(i + 1, j + 1)] {
                df[k] += c * w;
                dg_raw[k] += c * w / (r1 * r1);
                dh_raw[k] += c * w / (r2 * r2);
            }
        }
    }
    let mut dg = vec![0.0; m];
    for i in 0..=n {
        for j in 0..=n {
            dg[i * (n + 1) + j] = dg_raw[i * (n + 1) + j] + dh_raw[j * (n + 1) + i];
        }
    }
    let free_f = |i: usize, j: usize| i >= 1 && j >= 1 && i < n && j < n;
    let free_g = |i: usize, j: usize| i >= 1 && i < n && j < n;
    let mut hist = vec![discrete_energy(s)];
    let mut alpha = 1.0;
    for _ in 0..iters {
        let (e0, gf, gg, gh) = energy_and_gradient(s, true);
        let f0 = s.f.clone();
        let g0 = s.g.clone();
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..=n {
                for j in 0..=n {
                    let k = i * (n + 1) + j;
                    if free_f(i, j) {
                        s.f[k] = (f0[k] - alpha * gf[k] / df[k]).clamp(0.0, 1.0);
                    }
                    if free_g(i, j) {
                        let grad = gg[k] + gh[j * (n + 1) + i];
                        s.g[k] = (g0[k] - alpha * grad / dg[k]).clamp(0.0, 1.0);
                    }
                }
            }
            s.symmetrize_f();
            s.sync_h();
            let e1 = discrete_energy(s);
            // Armijo along the projected path
            let mut dec = 0.0;
            for i in 0..=n {
                for j in 0..=n {
                    let k = i * (n + 1) + j;
                    dec += gf[k] * (f0[k] - s.f[k]);
                    if free_g(i, j) {
                        dec += (gg[k] + gh[j * (n + 1) + i]) * (g0[k] - s.g[k]);
                    }
                }
            }
            if e1 <= e0 - 1e-4 * dec && e1 <= e0 {
                hist.push(e1);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            s.f = f0;
            s.g = g0;
            s.sync_h();
            break;
        }
        alpha = (alpha * 2.0).min(1.0);
    }
    hist
}

pub fn solve_saddle(lambda: f64, l: f64, n: usize, opts: SaddleOptions) -> Result<SaddleField> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Gl4Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(l >= 10.0) || !l.is_finite() {
        return Err(Gl4Error::invalid(format!("L must be at least 10, got {l}")));
    }
    if n < 100 {
        return Err(Gl4Error::invalid(format!("n must be at least 100, got {n}")));
    }
    let r_max = (2.0 * l).max(20.0);
    let prof = solve_profile(lambda, r_max, (r_max * 200.0) as usize + 1)?;
    let mut s = initial_field(lambda, l, n, opts.init, &prof);
    let energies = gradient_flow(&mut s, opts.flow_iters);
    s.flow_iterations = energies.len() - 1;
    s.energy_history = energies;

    let lay = Layout::new(n);
    let mut history = Vec::new();
    let (mut res, _) = system(&s, &lay, false);
    let mut norm = sup_slice(&res);
    history.push(norm);
    let mut it = 0;
    while norm > opts.tol {
        if it >= opts.newton_max {
            return Err(Gl4Error::Convergence { iterations: it, residual: norm, history });
        }
        it += 1;
        let (r, trip) = system(&s, &lay, true);
        let dim = lay.len();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &trip)
            .map_err(|e| Gl4Error::Singular(format!("jacobian assembly: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Gl4Error::Singular(format!("sparse LU: {e:?}")))?;
        let rhs = faer::col::Col::<f64>::from_fn(dim, |k| -r[k]);
        let sol = lu.solve(&rhs);
        let dx: Vec<f64> = (0..dim).map(|k| sol[k]).collect();
        let f0 = s.f.clone();
        let g0 = s.g.clone();
        let base = l2(&r);
        let mut alpha = 1.0;
        loop {
            apply_update(&mut s, &lay, &f0, &g0, &dx, alpha);
            let (tr, _) = system(&s, &lay, false);
            if l2(&tr) <= (1.0 - 1e-4 * alpha) * base || alpha < 1e-3 {
                res = tr;
                break;
            }
            alpha *= 0.5;
        }
        norm = sup_slice(&res);
        history.push(norm);
    }
    s.newton_iterations = it;
    s.residual_history = history;
    Ok(s)
}
