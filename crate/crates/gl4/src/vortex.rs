//! Radial degree-one vortex profiles (U, V) and the radial quadratures built from them.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Gl4Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialGuess {
    LinearRamp,
    TanhRamp,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitialGuess,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            tol: 1e-11,
            max_iter: 200,
            init: InitialGuess::TanhRamp,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VortexProfile {
    pub lambda: f64,
    pub r_max: f64,
    pub nodes: usize,
    pub r: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "dU")]
    pub du: Vec<f64>,
    #[serde(rename = "dV")]
    pub dv: Vec<f64>,
    pub m_lambda: f64,
    pub c_fit: f64,
    pub d_fit: f64,
    pub newton_iterations: usize,
    /// 1 - U and 1 - V carried at full relative precision for the tail fits.
    #[serde(skip)]
    pub defect_u: Vec<f64>,
    #[serde(skip)]
    pub defect_v: Vec<f64>,
    #[serde(skip)]
    series: Series,
}

/// Power series U = r·Σ a_k r^{2k}, V = r²·Σ b_k r^{2k} near the origin.
#[derive(Debug, Clone, Default)]
struct Series {
    a: Vec<f64>,
    b: Vec<f64>,
    r_switch: f64,
}

const SERIES_TERMS: usize = 18;

impl Series {
    fn new(lambda: f64, c: f64, d: f64, r_switch: f64) -> Self {
        let n = SERIES_TERMS;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = c;
        b[0] = d;
        for k in 1..n {
            let m = k - 1;
            let ta = &a[..k];
            let tb = &b[..k];
            let ba = mul(tb, ta);
            let aa = mul(ta, ta);
            let bba = mul(&mul(tb, tb), ta);
            let aaa = mul(&aa, ta);
            let aab = mul(&aa, tb);
            let lower = |p: &[f64]| if m >= 1 { p[m - 1] } else { 0.0 };
            let kk = 4.0 * (k as f64) * (k as f64 + 1.0);
            a[k] = (lower(&bba) - 2.0 * ba[m] + 0.5 * lambda * (lower(&aaa) - a[m])) / kk;
            b[k] = -(aa[m] - lower(&aab)) / kk;
        }
        Series { a, b, r_switch }
    }

    /// (w, w_x, w_xx, q, q_x, q_xx) with w = U/r and q = V/r² as series in x = r².
    fn even_forms(&self, x: f64) -> [f64; 6] {
        let (w, wx, wxx) = poly3(&self.a, x);
        let (q, qx, qxx) = poly3(&self.b, x);
        [w, wx, wxx, q, qx, qxx]
    }
}

fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = p.len().min(q.len());
    (0..n).map(|m| (0..=m).map(|j| p[j] * q[m - j]).sum()).collect()
}

fn poly3(c: &[f64], x: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for k in (0..c.len()).rev() {
        ddp = ddp * x + 2.0 * dp;
        dp = dp * x + p;
        p = p * x + c[k];
    }
    (p, dp, ddp)
}

/// Pointwise profile data. Second derivatives come from the ODEs themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
    pub v: f64,
    pub dv: f64,
    pub ddv: f64,
}

/// Even-function forms w(x) = U/r, q(x) = V/r² with x = r² and their x-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenForms {
    pub w: f64,
    pub w_x: f64,
    pub w_xx: f64,
    pub q: f64,
    pub q_x: f64,
    pub q_xx: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileDiagnostics {
    pub residual_u: f64,
    pub residual_v: f64,
    pub truncation_u: f64,
    pub truncation_v: f64,
    pub rate_u: f64,
    pub rate_v: f64,
    pub c_fit: f64,
    pub d_fit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSet {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub uu_check: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl CoefficientSet {
    /// Coefficient multiplying the Jacobi operator in the projected equation.
    pub fn jacobi_weight(&self) -> f64 {
        self.i1 + self.i2 - 3.0 * self.i3
    }

    /// f-independent forcing of the first projected equation at parameter s.
    pub fn forcing_f1(&self, s: f64) -> f64 {
        let sin2s = (2.0 * s).sin();
        let cos2s = (2.0 * s).cos();
        let r5 = sin2s.powf(2.5);
        let r9 = sin2s.powf(4.5);
        let c2 = cos2s * cos2s;
        self.k1 * (6.0 * c2 * r5 - 4.0 * r9) + self.k2 * (c2 * r5 - r9) + (self.k3 - self.k4) * c2 * r5
    }
}

pub fn m_lambda(lambda: f64) -> f64 {
    lambda.sqrt().min(2.0)
}

pub fn solve_profile(lambda: f64, r_max: f64, nodes: usize) -> Result<VortexProfile> {
    solve_profile_with(lambda, r_max, nodes, ProfileOptions::default())
}

pub fn solve_profile_with(
    lambda: f64,
    r_max: f64,
    nodes: usize,
    opts: ProfileOptions,
) -> Result<VortexProfile> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Gl4Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(r_max >= 10.0) || !r_max.is_finite() {
        return Err(Gl4Error::invalid(format!("r_max must be at least 10, got {r_max}")));
    }
    if nodes < 100 {
        return Err(Gl4Error::invalid(format!("nodes must be at least 100, got {nodes}")));
    }
    let n = nodes - 1;
    let h = r_max / n as f64;
    let r: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();

    // unknowns are the defects u = 1 - U, v = 1 - V
    let mut uu = vec![0.0; nodes];
    let mut vv = vec![0.0; nodes];
    for i in 0..nodes {
        let (ug, vg) = match opts.init {
            InitialGuess::LinearRamp => {
                let t = (r[i] / r_max).min(1.0);
                (t, t)
            }
            InitialGuess::TanhRamp => {
                let t = r[i].tanh();
                (t, t * t)
            }
        };
        uu[i] = 1.0 - ug;
        vv[i] = 1.0 - vg;
    }
    uu[0] = 1.0;
    vv[0] = 1.0;
    uu[n] = 0.0;
    vv[n] = 0.0;

    let sys = Discrete { lambda, h, r: &r };
    let mut history = Vec::new();
    let mut res = sys.residual(&uu, &vv);
    let mut norm = sup(&res.0).max(sup(&res.1));
    history.push(norm);
    let mut iterations = 0;
    let mut dt = 0.5;
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Gl4Error::Convergence {
                iterations,
                residual: norm,
                history,
            });
        }
        iterations += 1;
        let (du, dv) = sys.newton_step(&uu, &vv, &res, 0.0);
        if sup(&du).max(sup(&dv)) < 1e-14 && norm < 1e-8 {
            // round-off floor of the stencil
            break;
        }
        let base = l2(&res.0) + l2(&res.1);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let tu: Vec<f64> = uu.iter().zip(&du).map(|(a, b)| a + alpha * b).collect();
            let tv: Vec<f64> = vv.iter().zip(&dv).map(|(a, b)| a + alpha * b).collect();
            let tr = sys.residual(&tu, &tv);
            let tl2 = l2(&tr.0) + l2(&tr.1);
            if tl2 <= (1.0 - 1e-4 * alpha) * base {
                uu = tu;
                vv = tv;
                res = tr;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // implicit pseudo-time step, then a few relaxation sweeps
            let (du, dv) = sys.newton_step(&uu, &vv, &res, 1.0 / dt);
            for i in 0..nodes {
                uu[i] += du[i];
                vv[i] += dv[i];
            }
            sys.gauss_seidel(&mut uu, &mut vv, 5);
            res = sys.residual(&uu, &vv);
            dt *= 2.0;
        }
        norm = sup(&res.0).max(sup(&res.1));
        history.push(norm);
    }
    // polish: the far-field defects are tiny and need relative accuracy
    for _ in 0..2 {
        let (du, dv) = sys.newton_step(&uu, &vv, &res, 0.0);
        for i in 0..nodes {
            uu[i] += du[i];
            vv[i] += dv[i];
        }
        res = sys.residual(&uu, &vv);
    }

    let u: Vec<f64> = uu.iter().map(|x| 1.0 - x).collect();
    let v: Vec<f64> = vv.iter().map(|x| 1.0 - x).collect();
    let c_fit = extrapolate_origin(&r, &u, 1);
    let d_fit = extrapolate_origin(&r, &v, 2);
    let du = derivative(&u, h, c_fit);
    let dv = derivative(&v, h, 0.0);
    let mut p = VortexProfile {
        lambda,
        r_max,
        nodes,
        r,
        u,
        v,
        du,
        dv,
        m_lambda: m_lambda(lambda),
        c_fit,
        d_fit,
        newton_iterations: iterations,
        defect_u: uu,
        defect_v: vv,
        series: Series::default(),
    };
    p.series = p.matched_series();
    Ok(p)
}

struct Discrete<'a> {
    lambda: f64,
    h: f64,
    r: &'a [f64],
}

impl Discrete<'_> {
    fn residual(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = u.len() - 1;
        let h2 = self.h * self.h;
        let mut ru = vec![0.0; n + 1];
        let mut rv = vec![0.0; n + 1];
        for i in 1..n {
            let ri = self.r[i];
            let d1u = (u[i + 1] - u[i - 1]) / (2.0 * self.h);
            let d2u = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
            let d1v = (v[i + 1] - v[i - 1]) / (2.0 * self.h);
            let d2v = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
            let ui = u[i];
            let vi = v[i];
            ru[i] = d2u + d1u / ri + vi * vi * (1.0 - ui) / (ri * ri)
                + 0.5 * self.lambda * ui * (ui - 2.0) * (1.0 - ui);
            rv[i] = d2v - d1v / ri - (1.0 - ui) * (1.0 - ui) * vi;
        }
        (ru, rv)
    }

    fn newton_step(
        &self,
        u: &[f64],
        v: &[f64],
        res: &(Vec<f64>, Vec<f64>),
        shift: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = u.len() - 1;
        let m = n - 1;
        let h = self.h;
        let h2 = h * h;
        let mut cp: Vec<Matrix2<f64>> = Vec::with_capacity(m);
        let mut dp: Vec<Vector2<f64>> = Vec::with_capacity(m);
        for k in 0..m {
            let i = k + 1;
            let ri = self.r[i];
            let (ui, vi) = (u[i], v[i]);
            let diag = Matrix2::new(
                -2.0 / h2 - vi * vi / (ri * ri)
                    + 0.5 * self.lambda * (-3.0 * ui * ui + 6.0 * ui - 2.0)
                    - shift,
                2.0 * vi * (1.0 - ui) / (ri * ri),
                2.0 * (1.0 - ui) * vi,
                -2.0 / h2 - (1.0 - ui) * (1.0 - ui) - shift,
            );
            let lower = Matrix2::new(1.0 / h2 - 1.0 / (2.0 * h * ri), 0.0, 0.0, 1.0 / h2 + 1.0 / (2.0 * h * ri));
            let upper = Matrix2::new(1.0 / h2 + 1.0 / (2.0 * h * ri), 0.0, 0.0, 1.0 / h2 - 1.0 / (2.0 * h * ri));
            let b = Vector2::new(-res.0[i], -res.1[i]);
            let (den, rhs) = if k == 0 {
                (diag, b)
            } else {
                (diag - lower * cp[k - 1], b - lower * dp[k - 1])
            };
            let inv = den.try_inverse().unwrap_or_else(|| {
                Matrix2::new(1.0 / den[(0, 0)], 0.0, 0.0, 1.0 / den[(1, 1)])
            });
            cp.push(inv * upper);
            dp.push(inv * rhs);
        }
        let mut z = vec![Vector2::zeros(); m];
        z[m - 1] = dp[m - 1];
        for k in (0..m - 1).rev() {
            z[k] = dp[k] - cp[k] * z[k + 1];
        }
        let mut du = vec![0.0; n + 1];
        let mut dv = vec![0.0; n + 1];
        for k in 0..m {
            du[k + 1] = z[k][0];
            dv[k + 1] = z[k][1];
        }
        (du, dv)
    }

    fn gauss_seidel(&self, u: &mut [f64], v: &mut [f64], sweeps: usize) {
        let n = u.len() - 1;
        let h = self.h;
        let h2 = h * h;
        for _ in 0..sweeps {
            for i in 1..n {
                let ri = self.r[i];
                for _ in 0..3 {
                    let (ui, vi) = (u[i], v[i]);
                    let d1u = (u[i + 1] - u[i - 1]) / (2.0 * h);
                    let d2u = (u[i + 1] - 2.0 * ui + u[i - 1]) / h2;
                    let d1v = (v[i + 1] - v[i - 1]) / (2.0 * h);
                    let d2v = (v[i + 1] - 2.0 * vi + v[i - 1]) / h2;
                    let fu = d2u + d1u / ri + vi * vi * (1.0 - ui) / (ri * ri)
                        + 0.5 * self.lambda * ui * (ui - 2.0) * (1.0 - ui);
                    let fv = d2v - d1v / ri - (1.0 - ui) * (1.0 - ui) * vi;
                    let jac = Matrix2::new(
                        -2.0 / h2 - vi * vi / (ri * ri)
                            + 0.5 * self.lambda * (-3.0 * ui * ui + 6.0 * ui - 2.0),
                        2.0 * vi * (1.0 - ui) / (ri * ri),
                        2.0 * (1.0 - ui) * vi,
                        -2.0 / h2 - (1.0 - ui) * (1.0 - ui),
                    );
                    if let Some(inv) = jac.try_inverse() {
                        let step = inv * Vector2::new(-fu, -fv);
                        u[i] += step[0];
                        v[i] += step[1];
                    }
                }
            }
        }
    }
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Quadratic extrapolation in r² of y/r^p from the three smallest positive nodes.
fn extrapolate_origin(r: &[f64], y: &[f64], p: i32) -> f64 {
    let xs: Vec<f64> = (1..=3).map(|i| r[i] * r[i]).collect();
    let ys: Vec<f64> = (1..=3).map(|i| y[i] / r[i].powi(p)).collect();
    let mut total = 0.0;
    for j in 0..3 {
        let mut l = 1.0;
        for k in 0..3 {
            if k != j {
                l *= (0.0 - xs[k]) / (xs[j] - xs[k]);
            }
        }
        total += ys[j] * l;
    }
    total
}

fn derivative(y: &[f64], h: f64, origin_slope: f64) -> Vec<f64> {
    let n = y.len() - 1;
    let mut d = vec![0.0; n + 1];
    d[0] = origin_slope;
    d[1] = (y[2] - y[0]) / (2.0 * h);
    d[n - 1] = (y[n] - y[n - 2]) / (2.0 * h);
    for i in 2..n - 1 {
        d[i] = (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h);
    }
    d[n] = (3.0 * y[n] - 4.0 * y[n - 1] + y[n - 2]) / (2.0 * h);
    d
}

impl VortexProfile {
    pub fn h(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    fn hermite(&self, r: f64) -> (f64, f64, f64, f64) {
        let h = self.h();
        let n = self.nodes - 1;
        let k = ((r / h).floor() as usize).min(n - 1);
        let t = (r - self.r[k]) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let d00 = 6.0 * t * t - 6.0 * t;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = -6.0 * t * t + 6.0 * t;
        let d11 = 3.0 * t * t - 2.0 * t;
        let it = |y: &[f64], dy: &[f64]| {
            (
                h00 * y[k] + h10 * h * dy[k] + h01 * y[k + 1] + h11 * h * dy[k + 1],
                (d00 * y[k] + d01 * y[k + 1]) / h + d10 * dy[k] + d11 * dy[k + 1],
            )
        };
        let (u, du) = it(&self.u, &self.du);
        let (v, dv) = it(&self.v, &self.dv);
        (u, du, v, dv)
    }

    fn matched_series(&self) -> Series {
        let r_s = 0.4_f64.min(20.0 * self.h());
        let (ug, _, vg, _) = self.hermite(r_s);
        let mut c = self.c_fit;
        let mut d = self.d_fit;
        let mut s = Series::new(self.lambda, c, d, r_s);
        for _ in 0..50 {
            let f = s.even_forms(r_s * r_s);
            let us = f[0] * r_s;
            let vs = f[3] * r_s * r_s;
            c *= ug / us;
            d *= vg / vs;
            s = Series::new(self.lambda, c, d, r_s);
            if ((ug - us) / ug).abs() < 1e-15 && ((vg - vs) / vg).abs() < 1e-15 {
                break;
            }
        }
        s
    }

    /// Values, first derivatives and ODE-implied second derivatives at radius r ≥ 0.
    pub fn eval(&self, r: f64) -> ProfilePoint {
        let r = r.abs();
        if r >= self.r_max {
            return ProfilePoint { u: 1.0, du: 0.0, ddu: 0.0, v: 1.0, dv: 0.0, ddv: 0.0 };
        }
        let (u, du, v, dv) = if r < self.series.r_switch {
            let x = r * r;
            let f = self.series.even_forms(x);
            // U = r w, U' = w + 2x w_x ; V = x q, V' = 2r q + 2r x q_x
            (f[0] * r, f[0] + 2.0 * x * f[1], f[3] * x, 2.0 * r * (f[3] + x * f[4]))
        } else {
            self.hermite(r)
        };
        let (ddu, ddv) = if r > 0.0 {
            (
                -du / r + (1.0 - v) * (1.0 - v) * u / (r * r) + 0.5 * self.lambda * (u * u - 1.0) * u,
                dv / r - u * u * (1.0 - v),
            )
        } else {
            (0.0, 2.0 * self.series.b[0])
        };
        ProfilePoint { u, du, ddu, v, dv, ddv }
    }

    /// w = U/r and q = V/r² as smooth functions of x = r², with x-derivatives.
    pub fn even_forms(&self, r: f64) -> EvenForms {
        let r = r.abs();
        if r < self.series.r_switch {
            let f = self.series.even_forms(r * r);
            return EvenForms { w: f[0], w_x: f[1], w_xx: f[2], q: f[3], q_x: f[4], q_xx: f[5] };
        }
        let p = self.eval(r);
        let w = p.u / r;
        let w_r = p.du / r - p.u / (r * r);
        let w_rr = p.ddu / r - 2.0 * p.du / (r * r) + 2.0 * p.u / (r * r * r);
        let q = p.v / (r * r);
        let q_r = p.dv / (r * r) - 2.0 * p.v / (r * r * r);
        let q_rr = p.ddv / (r * r) - 4.0 * p.dv / (r * r * r) + 6.0 * p.v / (r * r * r * r);
        EvenForms {
            w,
            w_x: w_r / (2.0 * r),
            w_xx: (w_rr - w_r / r) / (4.0 * r * r),
            q,
            q_x: q_r / (2.0 * r),
            q_xx: (q_rr - q_r / r) / (4.0 * r * r),
        }
    }

    /// Discrete residuals of both ODEs (U form) at interior nodes, second-order stencil.
    pub fn residuals(&self) -> (Vec<f64>, Vec<f64>) {
        let uu: Vec<f64> = self.u.iter().map(|x| 1.0 - x).collect();
        let vv: Vec<f64> = self.v.iter().map(|x| 1.0 - x).collect();
        let sys = Discrete { lambda: self.lambda, h: self.h(), r: &self.r };
        let (a, b) = sys.residual(&uu, &vv);
        (a.iter().map(|x| -x).collect(), b.iter().map(|x| -x).collect())
    }

    /// ODE defect of the stored values measured with fourth-order stencils on r >= 1.
    pub fn truncation_defect(&self) -> (f64, f64) {
        let h = self.h();
        let n = self.nodes - 1;
        let (u, v, r) = (&self.u, &self.v, &self.r);
        let mut eu = 0.0_f64;
        let mut ev = 0.0_f64;
        for i in 2..n - 1 {
            if r[i] < 1.0 {
                continue;
            }
            let d1 = |y: &[f64]| (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h);
            let d2 = |y: &[f64]| {
                (-y[i + 2] + 16.0 * y[i + 1] - 30.0 * y[i] + 16.0 * y[i - 1] - y[i - 2]) / (12.0 * h * h)
            };
            let ri = r[i];
            let ru = d2(u) + d1(u) / ri - (1.0 - v[i]).powi(2) * u[i] / (ri * ri)
                - 0.5 * self.lambda * (u[i] * u[i] - 1.0) * u[i];
            let rv = -d2(v) + d1(v) / ri - u[i] * u[i] + v[i] * u[i] * u[i];
            eu = eu.max(ru.abs());
            ev = ev.max(rv.abs());
        }
        (eu, ev)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,U,V,dU,dV\n");
        for i in 0..self.nodes {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.r[i], self.u[i], self.v[i], self.du[i], self.dv[i]
            ));
        }
        s
    }
}

fn fit_rate(r: &[f64], defect: &[f64]) -> f64 {
    let n = r.len() as f64;
    let ys: Vec<f64> = defect.iter().map(|d| d.ln()).collect();
    let mx = r.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = r.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = r.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

pub fn profile_diagnostics(p: &VortexProfile) -> Result<ProfileDiagnostics> {
    let (ru, rv) = p.residuals();
    let (tu, tv) = p.truncation_defect();
    let lo = 0.5 * p.r_max;
    let hi = 0.9 * p.r_max;
    let mut rw = Vec::new();
    let mut du = Vec::new();
    let mut dv = Vec::new();
    for i in 0..p.nodes {
        if p.r[i] >= lo && p.r[i] <= hi {
            let a = p.defect_u[i];
            let b = p.defect_v[i];
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Gl4Error::DegenerateFit(format!(
                    "non-positive defect at r = {}",
                    p.r[i]
                )));
            }
            rw.push(p.r[i]);
            du.push(a);
            dv.push(b);
        }
    }
    if rw.len() < 3 {
        return Err(Gl4Error::DegenerateFit("fit window holds fewer than 3 nodes".into()));
    }
    Ok(ProfileDiagnostics {
        residual_u: sup(&ru),
        residual_v: sup(&rv),
        truncation_u: tu,
        truncation_v: tv,
        rate_u: fit_rate(&rw, &du),
        rate_v: fit_rate(&rw, &dv),
        c_fit: p.c_fit,
        d_fit: p.d_fit,
    })
}

/// Composite trapezoid with the leading Euler-Maclaurin end correction.
fn trapezoid(h: f64, f: &[f64]) -> f64 {
    let n = f.len();
    let plain = h * (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1]));
    let fa = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    let fb = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    plain - h * h / 12.0 * (fb - fa)
}

pub fn reduction_coefficients(p: &VortexProfile) -> CoefficientSet {
    let pi = std::f64::consts::PI;
    let h = p.h();
    let n = p.nodes;
    let (r, u, v, du, dv) = (&p.r, &p.u, &p.v, &p.du, &p.dv);
    let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    let i1 = trapezoid(h, &col(&|i| pi * r[i] * du[i] * du[i]));
    let i2 = 2.0 * pi * p.d_fit;
    let i3 = trapezoid(
        h,
        &col(&|i| if i == 0 { 0.0 } else { pi * dv[i] * dv[i] / r[i] }),
    );
    let i4 = trapezoid(h, &col(&|i| -2.0 * pi * u[i] * du[i] + pi * v[i] * u[i] * du[i]));
    let uu_check = trapezoid(h, &col(&|i| 2.0 * pi * u[i] * du[i]));
    let k1 = trapezoid(h, &col(&|i| pi * r[i] * dv[i] * dv[i]));
    let k2 = trapezoid(h, &col(&|i| 4.0 * pi * r[i] * v[i] * u[i] * u[i] * (1.0 - v[i])));
    let k3 = trapezoid(h, &col(&|i| 4.0 * pi * r[i] * r[i] * v[i] * u[i] * du[i]));
    let k4 = trapezoid(h, &col(&|i| 2.0 * pi * r[i] * r[i] * v[i] * v[i] * u[i] * du[i]));
    CoefficientSet { i1, i2, i3, i4, uu_check, k1, k2, k3, k4 }
}
