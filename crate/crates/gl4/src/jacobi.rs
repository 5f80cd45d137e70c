//! Jacobi operator of Γ on normal fields N = f m + g n, its conjugate in t, the Fourier-mode
//! ODEs and the reduced-system solver.
//!
//! t and s are related by e^{−2t} = cot s, so sin2s = sech2t and cos2s = −tanh2t.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Gl4Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    S,
    T,
}

pub fn s_of_t(t: f64) -> f64 {
    (2.0 * t).exp().atan()
}

pub fn t_of_s(s: f64) -> f64 {
    0.5 * s.tan().ln()
}

/// Fourier coefficients per grid row: f = Σ fc[k] cos kθ + fs[k] sin kθ (fs[0] = 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCoeffs {
    pub kmax: usize,
    pub fc: Vec<Vec<f64>>,
    pub fs: Vec<Vec<f64>>,
    pub gc: Vec<Vec<f64>>,
    pub gs: Vec<Vec<f64>>,
}

impl ModeCoeffs {
    pub fn zeros(kmax: usize, nx: usize) -> Self {
        let z = vec![vec![0.0; nx]; kmax + 1];
        ModeCoeffs { kmax, fc: z.clone(), fs: z.clone(), gc: z.clone(), gs: z }
    }
}

/// Values f[i·ntheta + j] at (x_i, θ_j), θ_j = 2πj/ntheta, x uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalField {
    pub chart: Chart,
    pub x: Vec<f64>,
    pub ntheta: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub modes: Option<ModeCoeffs>,
}

pub fn theta_nodes(ntheta: usize) -> Vec<f64> {
    (0..ntheta).map(|j| 2.0 * PI * j as f64 / ntheta as f64).collect()
}

/// n uniform nodes on [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl NormalField {
    pub fn sample(chart: Chart, x: Vec<f64>, ntheta: usize, field: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let th = theta_nodes(ntheta);
        let mut f = Vec::with_capacity(x.len() * ntheta);
        let mut g = Vec::with_capacity(x.len() * ntheta);
        for &xi in &x {
            for &t in &th {
                let (a, b) = field(xi, t);
                f.push(a);
                g.push(b);
            }
        }
        NormalField { chart, x, ntheta, f, g, modes: None }
    }

    pub fn zeros(chart: Chart, x: Vec<f64>, ntheta: usize) -> Self {
        let n = x.len() * ntheta;
        NormalField { chart, x, ntheta, f: vec![0.0; n], g: vec![0.0; n], modes: None }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    pub fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// s at row i, whichever chart the grid uses.
    pub fn s_at(&self, i: usize) -> f64 {
        match self.chart {
            Chart::S => self.x[i],
            Chart::T => s_of_t(self.x[i]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ntheta < 4 || self.nx() < 8 {
            return Err(Gl4Error::invalid(format!(
                "grid too small: {} x {} (need at least 8 x 4)",
                self.nx(),
                self.ntheta
            )));
        }
        if self.f.len() != self.nx() * self.ntheta || self.g.len() != self.f.len() {
            return Err(Gl4Error::invalid("value arrays do not match the grid"));
        }
        let h = self.step();
        if !(h > 0.0) || self.x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
            return Err(Gl4Error::invalid("grid must be uniform and increasing"));
        }
        if self.chart == Chart::S && !(self.x[0] > 0.0 && *self.x.last().unwrap() < FRAC_PI_2) {
            return Err(Gl4Error::invalid("s grid must lie strictly inside (0, pi/2)"));
        }
        Ok(())
    }

    pub fn sup(&self) -> f64 {
        self.f.iter().chain(&self.g).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn compute_modes(&mut self, kmax: usize) -> Result<&ModeCoeffs> {
        if self.ntheta < 2 * kmax + 2 {
            return Err(Gl4Error::invalid(format!(
                "kmax = {kmax} needs at least {} theta points, have {}",
                2 * kmax + 2,
                self.ntheta
            )));
        }
        let mut sp = Spectral::new(self.ntheta);
        let mut m = ModeCoeffs::zeros(kmax, self.nx());
        for i in 0..self.nx() {
            let r = i * self.ntheta..(i + 1) * self.ntheta;
            let (a, b) = sp.coeffs(&self.f[r.clone()], kmax);
            let (c, d) = sp.coeffs(&self.g[r], kmax);
            for k in 0..=kmax {
                m.fc[k][i] = a[k];
                m.fs[k][i] = b[k];
                m.gc[k][i] = c[k];
                m.gs[k][i] = d[k];
            }
        }
        self.modes = Some(m);
        Ok(self.modes.as_ref().unwrap())
    }

    pub fn from_modes(chart: Chart, x: Vec<f64>, ntheta: usize, m: &ModeCoeffs) -> Self {
        let th = theta_nodes(ntheta);
        let mut out = NormalField::zeros(chart, x, ntheta);
        for i in 0..out.nx() {
            for (j, &t) in th.iter().enumerate() {
                let (mut f, mut g) = (0.0, 0.0);
                for k in 0..=m.kmax {
                    let (sk, ck) = (k as f64 * t).sin_cos();
                    f += m.fc[k][i] * ck + m.fs[k][i] * sk;
                    g += m.gc[k][i] * ck + m.gs[k][i] * sk;
                }
                let q = out.idx(i, j);
                out.f[q] = f;
                out.g[q] = g;
            }
        }
        out.modes = Some(m.clone());
        out
    }

    pub fn scaled_add(&self, alpha: f64, other: &NormalField, beta: f64) -> NormalField {
        let mut out = self.clone();
        out.modes = None;
        for k in 0..out.f.len() {
            out.f[k] = alpha * self.f[k] + beta * other.f[k];
            out.g[k] = alpha * self.g[k] + beta * other.g[k];
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let th = theta_nodes(self.ntheta);
        let mut s = String::from(match self.chart {
            Chart::S => "s,theta,f,g\n",
            Chart::T => "t,theta,f,g\n",
        });
        for i in 0..self.nx() {
            for j in 0..self.ntheta {
                let k = self.idx(i, j);
                s.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", self.x[i], th[j], self.f[k], self.g[k]));
            }
        }
        s
    }
}

/// Real FFT helpers along θ.
struct Spectral {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Spectral { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n), buf: vec![Complex::new(0.0, 0.0); n] }
    }

    fn forward(&mut self, v: &[f64]) {
        for (b, &x) in self.buf.iter_mut().zip(v) {
            *b = Complex::new(x, 0.0);
        }
        self.fwd.process(&mut self.buf);
    }

    fn coeffs(&mut self, v: &[f64], kmax: usize) -> (Vec<f64>, Vec<f64>) {
        self.forward(v);
        let n = self.n as f64;
        let mut c = vec![0.0; kmax + 1];
        let mut s = vec![0.0; kmax + 1];
        c[0] = self.buf[0].re / n;
        for k in 1..=kmax {
            let scale = if 2 * k == self.n { 1.0 } else { 2.0 };
            c[k] = scale * self.buf[k].re / n;
            s[k] = -scale * self.buf[k].im / n;
        }
        (c, s)
    }

    /// ∂_θ^order of a periodic row (order 1 or 2), exact for trigonometric polynomials below Nyquist.
    fn derivative(&mut self, v: &[f64], order: u32, out: &mut [f64]) {
        self.forward(v);
        let n = self.n;
        for k in 0..n {
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let nyq = n % 2 == 0 && k == n / 2;
            let m = match order {
                1 if nyq => Complex::new(0.0, 0.0),
                1 => Complex::new(0.0, kk),
                _ => Complex::new(-kk * kk, 0.0),
            };
            self.buf[k] *= m;
        }
        self.inv.process(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re / n as f64;
        }
    }
}

struct ThetaDerivs {
    f_t: Vec<f64>,
    f_tt: Vec<f64>,
    g_t: Vec<f64>,
    g_tt: Vec<f64>,
}

fn theta_derivs(n: &NormalField) -> ThetaDerivs {
    let m = n.ntheta;
    let mut sp = Spectral::new(m);
    let len = n.f.len();
    let mut d = ThetaDerivs { f_t: vec![0.0; len], f_tt: vec![0.0; len], g_t: vec![0.0; len], g_tt: vec![0.0; len] };
    for i in 0..n.nx() {
        let r = i * m..(i + 1) * m;
        sp.derivative(&n.f[r.clone()], 1, &mut d.f_t[r.clone()]);
        sp.derivative(&n.f[r.clone()], 2, &mut d.f_tt[r.clone()]);
        sp.derivative(&n.g[r.clone()], 1, &mut d.g_t[r.clone()]);
        sp.derivative(&n.g[r.clone()], 2, &mut d.g_tt[r.clone()]);
    }
    d
}

fn interior(n: &NormalField) -> NormalField {
    NormalField::zeros(n.chart, n.x[1..n.nx() - 1].to_vec(), n.ntheta)
}

/// L_H on an s-grid: central differences in s, spectral in θ. Returns the interior rows.
pub fn apply_lh(n: &NormalField) -> Result<NormalField> {
    n.validate()?;
    if n.chart != Chart::S {
        return Err(Gl4Error::invalid("apply_lh expects an s grid"));
    }
    let h = n.step();
    let d = theta_derivs(n);
    let mut out = interior(n);
    let m = n.ntheta;
    for i in 1..n.nx() - 1 {
        let s = n.x[i];
        let sg = (2.0 * s).sin();
        let c = (2.0 * s).cos();
        let (a2, a1, a0) = (sg.powi(3), 2.0 * sg * sg * c, 2.0 * sg.powi(3) - sg * c * c);
        for j in 0..m {
            let (k, kp, km) = (n.idx(i, j), n.idx(i + 1, j), n.idx(i - 1, j));
            let fss = (n.f[kp] - 2.0 * n.f[k] + n.f[km]) / (h * h);
            let fs = (n.f[kp] - n.f[km]) / (2.0 * h);
            let gss = (n.g[kp] - 2.0 * n.g[k] + n.g[km]) / (h * h);
            let gs = (n.g[kp] - n.g[km]) / (2.0 * h);
            let o = out.idx(i - 1, j);
            out.f[o] = a2 * fss + a1 * fs + sg * d.f_tt[k] - 2.0 * sg * c * d.g_t[k] + a0 * n.f[k];
            out.g[o] = a2 * gss + a1 * gs + sg * d.g_tt[k] + 2.0 * sg * c * d.f_t[k] + a0 * n.g[k];
        }
    }
    Ok(out)
}

/// 𝓛_H = (sin2s)^{-1} L_H on a t-grid. Returns the interior rows.
pub fn apply_conjugate_lh(n: &NormalField) -> Result<NormalField> {
    n.validate()?;
    if n.chart != Chart::T {
        return Err(Gl4Error::invalid("apply_conjugate_lh expects a t grid"));
    }
    let h = n.step();
    let d = theta_derivs(n);
    let mut out = interior(n);
    for i in 1..n.nx() - 1 {
        let t = n.x[i];
        let th = (2.0 * t).tanh();
        let pot = 3.0 / (2.0 * t).cosh().powi(2) - 1.0;
        for j in 0..n.ntheta {
            let (k, kp, km) = (n.idx(i, j), n.idx(i + 1, j), n.idx(i - 1, j));
            let ftt = (n.f[kp] - 2.0 * n.f[k] + n.f[km]) / (h * h);
            let gtt = (n.g[kp] - 2.0 * n.g[k] + n.g[km]) / (h * h);
            let o = out.idx(i - 1, j);
            out.f[o] = ftt + d.f_tt[k] + 2.0 * th * d.g_t[k] + pot * n.f[k];
            out.g[o] = gtt + d.g_tt[k] - 2.0 * th * d.f_t[k] + pot * n.g[k];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum O4Branch {
    /// g = (sin2s)^{1/2} (AΘ·Θ⊥)
    Sqrt,
    /// g = (sin2s)^{-1/2} cos2s (AΘ·Θ⊥)
    CosRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum JacobiFamily {
    Translation { a: [f64; 2], alpha: f64 },
    Dilation,
    Su2 { a: [[f64; 2]; 2] },
    O4 { a: [[f64; 2]; 2], branch: O4Branch },
}

impl JacobiFamily {
    pub fn name(&self) -> &'static str {
        match self {
            JacobiFamily::Translation { .. } => "translation",
            JacobiFamily::Dilation => "dilation",
            JacobiFamily::Su2 { .. } => "su2",
            JacobiFamily::O4 { .. } => "o4",
        }
    }

    /// The four families with fixed representative parameters.
    pub fn representatives() -> Vec<JacobiFamily> {
        vec![
            JacobiFamily::Translation { a: [1.0, 0.5], alpha: 0.3 },
            JacobiFamily::Dilation,
            JacobiFamily::Su2 { a: [[1.0, 0.4], [0.4, -0.5]] },
            JacobiFamily::O4 { a: [[0.0, -1.0], [1.0, 0.0]], branch: O4Branch::Sqrt },
            JacobiFamily::O4 { a: [[0.0, -1.0], [1.0, 0.0]], branch: O4Branch::CosRatio },
        ]
    }

    fn validate(&self) -> Result<()> {
        match self {
            JacobiFamily::Su2 { a } => {
                let scale = a.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
                if (a[0][1] - a[1][0]).abs() > 1e-14 * scale {
                    return Err(Gl4Error::invalid("su2 family needs a symmetric matrix"));
                }
            }
            JacobiFamily::O4 { a, .. } => {
                let scale = a.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
                if a[0][0].abs() > 1e-14 * scale
                    || a[1][1].abs() > 1e-14 * scale
                    || (a[0][1] + a[1][0]).abs() > 1e-14 * scale
                {
                    return Err(Gl4Error::invalid("o4 family needs a skew-symmetric matrix"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// (f, g) of the field at (s, θ).
    pub fn eval(&self, s: f64, theta: f64) -> (f64, f64) {
        let sg = (2.0 * s).sin();
        let c = (2.0 * s).cos();
        let th = [theta.cos(), theta.sin()];
        let tp = [-theta.sin(), theta.cos()];
        let quad = |a: &[[f64; 2]; 2], u: [f64; 2]| {
            let au = [a[0][0] * th[0] + a[0][1] * th[1], a[1][0] * th[0] + a[1][1] * th[1]];
            au[0] * u[0] + au[1] * u[1]
        };
        match self {
            JacobiFamily::Translation { a, alpha } => (
                (a[0] * th[0] + a[1] * th[1]) * (alpha + s).sin(),
                (a[0] * tp[0] + a[1] * tp[1]) * (alpha - s).sin(),
            ),
            JacobiFamily::Dilation => (sg.sqrt(), 0.0),
            JacobiFamily::Su2 { a } => (c / sg.sqrt() * quad(a, th), quad(a, tp) / sg.sqrt()),
            JacobiFamily::O4 { a, branch } => match branch {
                O4Branch::Sqrt => (0.0, sg.sqrt() * quad(a, tp)),
                O4Branch::CosRatio => (0.0, c / sg.sqrt() * quad(a, tp)),
            },
        }
    }
}

pub fn explicit_jacobi_field(family: &JacobiFamily, chart: Chart, x: Vec<f64>, ntheta: usize) -> Result<NormalField> {
    family.validate()?;
    let n = NormalField::sample(chart, x, ntheta, |x, th| {
        let s = match chart {
            Chart::S => x,
            Chart::T => s_of_t(x),
        };
        family.eval(s, th)
    });
    n.validate()?;
    Ok(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub h: f64,
    pub residual_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementTable {
    pub family: String,
    pub rows: Vec<RefinementRow>,
    pub slope: f64,
}

/// sup |L_H N| for a Jacobi family on s ∈ [s_min, π/2 − s_min] for each node count.
pub fn jacobi_refinement(family: &JacobiFamily, s_min: f64, nodes: &[usize], ntheta: usize) -> Result<RefinementTable> {
    let mut rows = Vec::new();
    for &n in nodes {
        let x = linspace(s_min, FRAC_PI_2 - s_min, n);
        let h = x[1] - x[0];
        let r = apply_lh(&explicit_jacobi_field(family, Chart::S, x, ntheta)?)?;
        rows.push(RefinementRow { h, residual_sup: r.sup() });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let rs: Vec<f64> = rows.iter().map(|r| r.residual_sup).collect();
    Ok(RefinementTable { family: family.name().to_string(), slope: loglog_slope(&hs, &rs), rows })
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_slope(&lx, &ly)
}

pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------- mode ODEs

/// h_{k,1} carries +2k tanh2t, h_{k,2} carries −2k tanh2t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeBranch {
    One,
    Two,
}

impl ModeBranch {
    pub fn sign(self) -> f64 {
        match self {
            ModeBranch::One => 1.0,
            ModeBranch::Two => -1.0,
        }
    }
}

/// Zeroth-order coefficient q in ḧ + q h of the mode equation.
pub fn mode_potential(k: usize, branch: ModeBranch, t: f64) -> f64 {
    let k = k as f64;
    -k * k + branch.sign() * 2.0 * k * (2.0 * t).tanh() + 3.0 / (2.0 * t).cosh().powi(2) - 1.0
}

/// Magnitudes of the indicial roots at +∞ and −∞.
pub fn indicial_roots(k: usize, branch: ModeBranch) -> (f64, f64) {
    let k = k as f64;
    let sb = branch.sign();
    // limits of −q at ±∞ are k² ∓ 2k·sign + 1
    ((k * k - 2.0 * k * sb + 1.0).sqrt(), (k * k + 2.0 * k * sb + 1.0).sqrt())
}

/// ḧ + q h by central differences on the interior of a uniform grid.
pub fn apply_mode_operator(k: usize, branch: ModeBranch, t: &[f64], h: &[f64]) -> Vec<f64> {
    let d = t[1] - t[0];
    (1..t.len() - 1)
        .map(|i| (h[i + 1] - 2.0 * h[i] + h[i - 1]) / (d * d) + mode_potential(k, branch, t[i]) * h[i])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bc {
    Dirichlet(f64),
    /// decay like e^{−μ|t|} outward: h' = −μh on the right, h' = μh on the left
    Robin(f64),
}

/// Solves A h'' + B h' + C h = r on a uniform grid with second-order differences.
pub fn solve_linear_bvp(x: &[f64], a: &[f64], b: &[f64], c: &[f64], r: &[f64], left: Bc, right: Bc) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Err(Gl4Error::invalid("bvp grid needs at least 3 nodes"));
    }
    let d = x[1] - x[0];
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut rhs = r.to_vec();
    for i in 1..n - 1 {
        lo[i] = a[i] / (d * d) - b[i] / (2.0 * d);
        di[i] = -2.0 * a[i] / (d * d) + c[i];
        up[i] = a[i] / (d * d) + b[i] / (2.0 * d);
    }
    match left {
        Bc::Dirichlet(v) => {
            di[0] = 1.0;
            rhs[0] = v;
        }
        Bc::Robin(mu) => {
            di[0] = -2.0 * a[0] / (d * d) - 2.0 * a[0] * mu / d + b[0] * mu + c[0];
            up[0] = 2.0 * a[0] / (d * d);
        }
    }
    match right {
        Bc::Dirichlet(v) => {
            di[n - 1] = 1.0;
            rhs[n - 1] = v;
        }
        Bc::Robin(mu) => {
            let m = n - 1;
            di[m] = -2.0 * a[m] / (d * d) - 2.0 * a[m] * mu / d - b[m] * mu + c[m];
            lo[m] = 2.0 * a[m] / (d * d);
        }
    }
    thomas(&lo, &di, &up, &rhs)
}

fn thomas(lo: &[f64], di: &[f64], up: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = di.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let scale = di.iter().chain(lo).chain(up).fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut piv = di[0];
    if piv.abs() <= 1e-14 * scale {
        return Err(Gl4Error::Singular("zero pivot in tridiagonal solve".into()));
    }
    cp[0] = up[0] / piv;
    dp[0] = r[0] / piv;
    for i in 1..n {
        piv = di[i] - lo[i] * cp[i - 1];
        if piv.abs() <= 1e-14 * scale {
            return Err(Gl4Error::Singular(format!("zero pivot at row {i} of tridiagonal solve")));
        }
        cp[i] = up[i] / piv;
        dp[i] = (r[i] - lo[i] * dp[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Slope of ln|y| against t over [lo, hi].
pub fn exponent_fit(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&ti, &yi) in t.iter().zip(y) {
        if ti >= lo && ti <= hi && yi.abs() > 1e-280 {
            xs.push(ti);
            ys.push(yi.abs().ln());
        }
    }
    if xs.len() < 3 {
        None
    } else {
        Some(linear_slope(&xs, &ys))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeProblem {
    pub k: usize,
    pub branch: ModeBranch,
    pub t0: f64,
    pub t_max: f64,
    pub nodes: usize,
    pub delta: f64,
    pub q: f64,
}

impl ModeProblem {
    pub fn new(k: usize, branch: ModeBranch, t0: f64, delta: f64) -> Self {
        ModeProblem { k, branch, t0, t_max: 6.0, nodes: 4001, delta, q: 1.9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub k: usize,
    pub branch: ModeBranch,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub residual_sup: f64,
    /// raw slopes of ln|h| on unit windows one unit inside each end
    pub exponent_near: Option<f64>,
    pub exponent_far: Option<f64>,
    pub norm_ratio: f64,
    /// far-end fit grows faster than the decaying root allows
    pub flagged: bool,
}

/// Windowed norm sup_τ (cosh τ)^{-δ} ‖(h, ∂h, ∂²h)‖_{L^q([τ, τ+1])} of a single mode; θ-derivatives enter
/// through k.
pub fn mode_weighted_norm(t: &[f64], h: &[f64], k: usize, order: usize, delta: f64, q: f64) -> f64 {
    let n = t.len();
    let d = t[1] - t[0];
    let kk = k as f64;
    let mut mag = vec![0.0; n];
    for i in 0..n {
        let im = i.saturating_sub(1);
        let ip = (i + 1).min(n - 1);
        let dh = (h[ip] - h[im]) / ((ip - im) as f64 * d);
        let mut m = h[i].abs().powf(q);
        if order >= 1 {
            m += (dh * dh + kk * kk * h[i] * h[i]).sqrt().powf(q);
        }
        if order >= 2 {
            let ddh = if i == 0 || i == n - 1 { 0.0 } else { (h[i + 1] - 2.0 * h[i] + h[i - 1]) / (d * d) };
            m += (ddh * ddh + 2.0 * kk * kk * dh * dh + kk.powi(4) * h[i] * h[i]).sqrt().powf(q);
        }
        mag[i] = m;
    }
    let per = (1.0 / d).round() as usize;
    let mut best = 0.0_f64;
    let mut start = 0;
    while start + per < n {
        let tc = t[start] + 0.5;
        let integral: f64 = (start..start + per).map(|i| 0.5 * (mag[i] + mag[i + 1]) * d).sum();
        best = best.max(tc.cosh().powf(-delta) * integral.powf(1.0 / q));
        start += per / 2;
    }
    best
}

/// Numerov scheme for ḧ + q h = r with h(t0) = 0. The far end is closed by h_N = λ h_{N−1}, λ the
/// decaying root of the constant-coefficient recurrence there, which is the discrete form of the
/// Robin condition h' = −μh with μ the decaying indicial root.
fn numerov_decaying(t: &[f64], q: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    let d = t[1] - t[0];
    let w = d * d / 12.0;
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    di[0] = 1.0;
    for i in 1..n - 1 {
        lo[i] = 1.0 + w * q[i - 1];
        di[i] = -(2.0 - 10.0 * w * q[i]);
        up[i] = 1.0 + w * q[i + 1];
        rhs[i] = w * (r[i + 1] + 10.0 * r[i] + r[i - 1]);
    }
    let a = w * q[n - 1];
    let b = 2.0 - 10.0 * a;
    let disc = (b * b - 4.0 * (1.0 + a) * (1.0 + a)).max(0.0).sqrt();
    let lambda = (b - disc) / (2.0 * (1.0 + a));
    lo[n - 1] = -lambda;
    di[n - 1] = 1.0;
    thomas(&lo, &di, &up, &rhs)
}

/// h(t0) = 0 and a decaying closure at t_max; fourth order in the step. `rhs` should vanish near t_max.
pub fn mode_bvp_solve(p: &ModeProblem, rhs: &dyn Fn(f64) -> f64) -> Result<ModeSolution> {
    let constant_data = p.k == 0;
    if constant_data && !(p.delta > 1.0) {
        return Err(Gl4Error::invalid("theta-constant data needs delta > 1"));
    }
    if !constant_data && !(p.delta > 0.0 && p.delta < 0.25) {
        return Err(Gl4Error::invalid("nonconstant modes need 0 < delta < 1/4"));
    }
    if !(p.t_max > p.t0 + 3.0) || p.nodes < 16 {
        return Err(Gl4Error::invalid("mode interval too short or too few nodes"));
    }
    if !(p.q > 1.0 && p.q < 2.0) {
        return Err(Gl4Error::invalid("q must lie in (1, 2)"));
    }
    let t = linspace(p.t0, p.t_max, p.nodes);
    let q: Vec<f64> = t.iter().map(|&x| mode_potential(p.k, p.branch, x)).collect();
    let r: Vec<f64> = t.iter().map(|&x| rhs(x)).collect();
    let (mu, _) = indicial_roots(p.k, p.branch);
    let h = numerov_decaying(&t, &q, &r).map_err(|e| Gl4Error::ModeSolve { k: p.k, reason: e.to_string() })?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Gl4Error::ModeSolve { k: p.k, reason: "non-finite solution".into() });
    }
    // plain central-difference residual, independent of the scheme
    let op = apply_mode_operator(p.k, p.branch, &t, &h);
    let residual_sup = op.iter().zip(&r[1..p.nodes - 1]).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let exponent_near = exponent_fit(&t, &h, p.t0 + 1.0, p.t0 + 2.0);
    let exponent_far = exponent_fit(&t, &h, p.t_max - 2.0, p.t_max - 1.0);
    let flagged = exponent_far.is_some_and(|e| e > -mu + 0.1);
    let un = mode_weighted_norm(&t, &h, p.k, 2, p.delta, p.q);
    let vn = mode_weighted_norm(&t, &r, p.k, 0, p.delta, p.q);
    let norm_ratio = if vn > 0.0 { un / vn } else { 0.0 };
    Ok(ModeSolution {
        k: p.k,
        branch: p.branch,
        t,
        h,
        residual_sup,
        exponent_near,
        exponent_far,
        norm_ratio,
        flagged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeExponents {
    pub k: usize,
    pub branch: ModeBranch,
    /// d ln|h|/dt of the growing and decaying homogeneous solutions as t → +∞
    pub plus_growth: f64,
    pub plus_decay: f64,
    /// and as t → −∞ (growth there means negative slope)
    pub minus_growth: f64,
    pub minus_decay: f64,
    pub expected_plus: f64,
    pub expected_minus: f64,
}

fn rk4_mode(k: usize, branch: ModeBranch, t_end: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let n = (t_end.abs() / step).round() as usize;
    let dt = t_end / n as f64;
    let rhs = |t: f64, y: [f64; 2]| [y[1], -mode_potential(k, branch, t) * y[0]];
    let mut y = [1.0, 0.37];
    let mut ts = vec![0.0];
    let mut hs = vec![y[0]];
    for i in 0..n {
        let t = i as f64 * dt;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for j in 0..2 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        ts.push(t + dt);
        hs.push(y[0]);
    }
    (ts, hs)
}

fn decaying_mode(k: usize, branch: ModeBranch, t_end: f64, step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    // h(0) = 1, h(t_end) = 0 far away
    let n = (t_end.abs() / step).round() as usize + 1;
    let (lo, hi) = if t_end > 0.0 { (0.0, t_end) } else { (t_end, 0.0) };
    let t = linspace(lo, hi, n);
    let a = vec![1.0; n];
    let b = vec![0.0; n];
    let c: Vec<f64> = t.iter().map(|&x| mode_potential(k, branch, x)).collect();
    let r = vec![0.0; n];
    let (l, rr) = if t_end > 0.0 { (Bc::Dirichlet(1.0), Bc::Dirichlet(0.0)) } else { (Bc::Dirichlet(0.0), Bc::Dirichlet(1.0)) };
    let h = solve_linear_bvp(&t, &a, &b, &c, &r, l, rr).map_err(|e| Gl4Error::ModeSolve { k, reason: e.to_string() })?;
    Ok((t, h))
}

/// Exponents of the homogeneous solutions, fitted on 100 ≤ |t| ≤ 110 where the sech² terms are gone.
pub fn mode_exponents(k: usize, branch: ModeBranch) -> Result<ModeExponents> {
    let (w0, w1, far, step) = (100.0, 110.0, 1000.0, 0.01);
    let mut out = ModeExponents {
        k,
        branch,
        plus_growth: 0.0,
        plus_decay: 0.0,
        minus_growth: 0.0,
        minus_decay: 0.0,
        expected_plus: indicial_roots(k, branch).0,
        expected_minus: indicial_roots(k, branch).1,
    };
    let fit = |t: &[f64], h: &[f64], lo: f64, hi: f64| {
        exponent_fit(t, h, lo, hi).ok_or_else(|| Gl4Error::DegenerateFit(format!("mode {k} exponent window empty")))
    };
    let (t, h) = rk4_mode(k, branch, w1 + 1.0, step);
    out.plus_growth = fit(&t, &h, w0, w1)?;
    let (t, h) = rk4_mode(k, branch, -(w1 + 1.0), step);
    out.minus_growth = fit(&t, &h, -w1, -w0)?;
    let (t, h) = decaying_mode(k, branch, far, step)?;
    out.plus_decay = fit(&t, &h, w0, w1)?;
    let (t, h) = decaying_mode(k, branch, -far, step)?;
    out.minus_decay = fit(&t, &h, -w1, -w0)?;
    Ok(out)
}

// ---------------------------------------------------------------- reduced system

/// Dirichlet data (f, g) on the first and last rows, as θ samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryData {
    pub left: Option<(Vec<f64>, Vec<f64>)>,
    pub right: Option<(Vec<f64>, Vec<f64>)>,
}

impl BoundaryData {
    pub fn from_field(n: &NormalField) -> Self {
        let m = n.ntheta;
        let last = n.nx() - 1;
        BoundaryData {
            left: Some((n.f[..m].to_vec(), n.g[..m].to_vec())),
            right: Some((n.f[last * m..].to_vec(), n.g[last * m..].to_vec())),
        }
    }
}

/// Coefficients (A, B, C) of the mode operator in the chart's own variable, before the coupling sign.
fn chart_coeffs(chart: Chart, x: f64) -> (f64, f64, f64, f64, f64) {
    // returns A, B, base C (without k terms), k² factor, coupling factor multiplying sign·k
    match chart {
        Chart::T => {
            let th = (2.0 * x).tanh();
            (1.0, 0.0, 3.0 / (2.0 * x).cosh().powi(2) - 1.0, 1.0, 2.0 * th)
        }
        Chart::S => {
            let sg = (2.0 * x).sin();
            let c = (2.0 * x).cos();
            (sg.powi(3), 2.0 * sg * sg * c, sg * (3.0 * sg * sg - 1.0), sg, -2.0 * sg * c)
        }
    }
}

/// Solves L_H(f, g) = (F1, F2) (s grid) or 𝓛_H(f, g) = (F1, F2) (t grid) mode by mode with
/// Dirichlet data on both ends. The end rows of `rhs` are ignored.
pub fn solve_reduced_system(rhs: &NormalField, boundary: &BoundaryData, kmax: usize) -> Result<NormalField> {
    rhs.validate()?;
    let mut work = rhs.clone();
    let m = work.compute_modes(kmax)?.clone();
    let mut bfield = NormalField::zeros(rhs.chart, vec![rhs.x[0], rhs.x[rhs.nx() - 1]], rhs.ntheta);
    let mt = rhs.ntheta;
    if let Some((f, g)) = &boundary.left {
        bfield.f[..mt].copy_from_slice(f);
        bfield.g[..mt].copy_from_slice(g);
    }
    if let Some((f, g)) = &boundary.right {
        bfield.f[mt..].copy_from_slice(f);
        bfield.g[mt..].copy_from_slice(g);
    }
    // mode coefficients of the boundary rows without the grid-size checks
    let mut sp = Spectral::new(mt);
    let mut bd = ModeCoeffs::zeros(kmax, 2);
    for i in 0..2 {
        let (a, b) = sp.coeffs(&bfield.f[i * mt..(i + 1) * mt], kmax);
        let (c, d) = sp.coeffs(&bfield.g[i * mt..(i + 1) * mt], kmax);
        for k in 0..=kmax {
            bd.fc[k][i] = a[k];
            bd.fs[k][i] = b[k];
            bd.gc[k][i] = c[k];
            bd.gs[k][i] = d[k];
        }
    }
    let x = &rhs.x;
    let nx = x.len();
    let coeffs: Vec<_> = x.iter().map(|&xi| chart_coeffs(rhs.chart, xi)).collect();
    let aa: Vec<f64> = coeffs.iter().map(|c| c.0).collect();
    let bb: Vec<f64> = coeffs.iter().map(|c| c.1).collect();
    let solve = |k: usize, sign: f64, r: Vec<f64>, l: f64, rt: f64| -> Result<Vec<f64>> {
        let kk = k as f64;
        let c: Vec<f64> = coeffs.iter().map(|c| c.2 - kk * kk * c.3 + sign * kk * c.4).collect();
        solve_linear_bvp(x, &aa, &bb, &c, &r, Bc::Dirichlet(l), Bc::Dirichlet(rt))
            .map_err(|e| Gl4Error::ModeSolve { k, reason: e.to_string() })
    };
    let plus = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(a, b)| a + b).collect() };
    let minus = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(a, b)| a - b).collect() };
    let results: Vec<Result<(usize, [Vec<f64>; 4])>> = (0..=kmax)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                let f0 = solve(0, 0.0, m.fc[0].clone(), bd.fc[0][0], bd.fc[0][1])?;
                let g0 = solve(0, 0.0, m.gc[0].clone(), bd.gc[0][0], bd.gc[0][1])?;
                return Ok((0, [f0, vec![0.0; nx], g0, vec![0.0; nx]]));
            }
            // (f_{k,1}, g_{k,2}) couple through +2k tanh, (f_{k,2}, g_{k,1}) through −2k tanh
            let h1 = solve(k, 1.0, plus(&m.fc[k], &m.gs[k]), bd.fc[k][0] + bd.gs[k][0], bd.fc[k][1] + bd.gs[k][1])?;
            let h2 = solve(k, -1.0, minus(&m.fc[k], &m.gs[k]), bd.fc[k][0] - bd.gs[k][0], bd.fc[k][1] - bd.gs[k][1])?;
            let p1 = solve(k, -1.0, plus(&m.fs[k], &m.gc[k]), bd.fs[k][0] + bd.gc[k][0], bd.fs[k][1] + bd.gc[k][1])?;
            let p2 = solve(k, 1.0, minus(&m.fs[k], &m.gc[k]), bd.fs[k][0] - bd.gc[k][0], bd.fs[k][1] - bd.gc[k][1])?;
            let half = |u: Vec<f64>| -> Vec<f64> { u.into_iter().map(|v| 0.5 * v).collect() };
            let fc = half(plus(&h1, &h2));
            let gs = half(minus(&h1, &h2));
            let fs = half(plus(&p1, &p2));
            let gc = half(minus(&p1, &p2));
            Ok((k, [fc, fs, gc, gs]))
        })
        .collect();
    let mut sol = ModeCoeffs::zeros(kmax, nx);
    for r in results {
        let (k, [fc, fs, gc, gs]) = r?;
        sol.fc[k] = fc;
        sol.fs[k] = fs;
        sol.gc[k] = gc;
        sol.gs[k] = gs;
    }
    Ok(NormalField::from_modes(rhs.chart, x.clone(), rhs.ntheta, &sol))
}

// ---------------------------------------------------------------- checks

/// sup over interior s-nodes of |(sin2s)^{-1} L_H N − 𝓛_H N|, the second evaluated on a uniform t-grid
/// spanning the same s-range and interpolated with four-point Lagrange.
pub fn conjugation_mismatch(field: &dyn Fn(f64, f64) -> (f64, f64), s_min: f64, n: usize, ntheta: usize) -> Result<f64> {
    let xs = linspace(s_min, FRAC_PI_2 - s_min, n);
    let xt = linspace(t_of_s(s_min), t_of_s(FRAC_PI_2 - s_min), n);
    let ns = NormalField::sample(Chart::S, xs, ntheta, field);
    let nt = NormalField::sample(Chart::T, xt, ntheta, |t, th| field(s_of_t(t), th));
    let a = apply_lh(&ns)?;
    let b = apply_conjugate_lh(&nt)?;
    let ht = b.step();
    let t0 = b.x[0];
    let mut worst = 0.0_f64;
    for i in 0..a.nx() {
        let s = a.x[i];
        let t = t_of_s(s);
        let p = ((t - t0) / ht).floor() as isize - 1;
        if p < 0 || p as usize + 3 >= b.nx() {
            continue;
        }
        let p = p as usize;
        let sg = (2.0 * s).sin();
        for j in 0..ntheta {
            let mut vf = 0.0;
            let mut vg = 0.0;
            for m in 0..4 {
                let mut w = 1.0;
                for l in 0..4 {
                    if l != m {
                        w *= (t - b.x[p + l]) / (b.x[p + m] - b.x[p + l]);
                    }
                }
                vf += w * b.f[b.idx(p + m, j)];
                vg += w * b.g[b.idx(p + m, j)];
            }
            let k = a.idx(i, j);
            worst = worst.max((a.f[k] / sg - vf).abs()).max((a.g[k] / sg - vg).abs());
        }
    }
    Ok(worst)
}

/// Smooth test field with a closed-form L_H, used for manufactured-solution checks.
pub fn manufactured_field(s: f64, th: f64) -> (f64, f64) {
    ((3.0 * s).sin() * th.cos() + s * s, s.cos() * th.sin() + s.exp() * (2.0 * th).cos())
}

pub fn manufactured_lh(s: f64, th: f64) -> (f64, f64) {
    let sg = (2.0 * s).sin();
    let c = (2.0 * s).cos();
    let (st, ct) = th.sin_cos();
    let (s2, c2) = (2.0 * th).sin_cos();
    let e = s.exp();
    let f = (3.0 * s).sin() * ct + s * s;
    let g = s.cos() * st + e * c2;
    let fs = 3.0 * (3.0 * s).cos() * ct + 2.0 * s;
    let fss = -9.0 * (3.0 * s).sin() * ct + 2.0;
    let ft = -(3.0 * s).sin() * st;
    let ftt = -(3.0 * s).sin() * ct;
    let gs = -s.sin() * st + e * c2;
    let gss = -s.cos() * st + e * c2;
    let gt = s.cos() * ct - 2.0 * e * s2;
    let gtt = -s.cos() * st - 4.0 * e * c2;
    let a0 = 2.0 * sg.powi(3) - sg * c * c;
    (
        sg.powi(3) * fss + 2.0 * sg * sg * c * fs + sg * ftt - 2.0 * sg * c * gt + a0 * f,
        sg.powi(3) * gss + 2.0 * sg * sg * c * gs + sg * gtt + 2.0 * sg * c * ft + a0 * g,
    )
}

/// sup error of solve_reduced_system on the manufactured pair, s ∈ [s_min, π/2 − s_min].
pub fn manufactured_error(s_min: f64, n: usize, ntheta: usize) -> Result<f64> {
    let x = linspace(s_min, FRAC_PI_2 - s_min, n);
    let exact = NormalField::sample(Chart::S, x.clone(), ntheta, manufactured_field);
    let rhs = NormalField::sample(Chart::S, x, ntheta, manufactured_lh);
    let sol = solve_reduced_system(&rhs, &BoundaryData::from_field(&exact), 2)?;
    Ok(sol.scaled_add(1.0, &exact, -1.0).sup())
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiReport {
    pub families: Vec<RefinementTable>,
    pub exponents: Vec<ModeExponents>,
    pub conjugation: Vec<RefinementRow>,
    pub conjugation_slope: f64,
    pub manufactured: Vec<RefinementRow>,
    pub manufactured_slope: f64,
}

pub fn jacobi_report() -> Result<JacobiReport> {
    let s_min = 0.2;
    let nodes = [81, 161, 321, 641];
    let families = JacobiFamily::representatives()
        .iter()
        .map(|f| jacobi_refinement(f, s_min, &nodes, 16))
        .collect::<Result<Vec<_>>>()?;
    let mut exponents = Vec::new();
    for k in 0..=3 {
        for b in [ModeBranch::One, ModeBranch::Two] {
            exponents.push(mode_exponents(k, b)?);
        }
    }
    let mut conjugation = Vec::new();
    let mut manufactured = Vec::new();
    for &n in &nodes {
        let h = (FRAC_PI_2 - 2.0 * s_min) / (n - 1) as f64;
        conjugation.push(RefinementRow { h, residual_sup: conjugation_mismatch(&manufactured_field, s_min, n, 8)? });
        manufactured.push(RefinementRow { h, residual_sup: manufactured_error(s_min, n, 8)? });
    }
    let slope = |rows: &[RefinementRow]| {
        loglog_slope(&rows.iter().map(|r| r.h).collect::<Vec<_>>(), &rows.iter().map(|r| r.residual_sup).collect::<Vec<_>>())
    };
    Ok(JacobiReport {
        conjugation_slope: slope(&conjugation),
        manufactured_slope: slope(&manufactured),
        families,
        exponents,
        conjugation,
        manufactured,
    })
}
