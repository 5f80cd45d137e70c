//! Geometry of the scaled minimal surface Γ_ε ⊂ R⁴ and its Fermi coordinates (s, θ, a, b).
//!
//! Γ_ε(s, θ) = (cos s Θ, sin s Θ) / (ε √sin2s), Θ = (cos θ, sin θ), 0 < s < π/2.
//! Vectors in R⁴ are ordered (x1, y1, x2, y2).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use crate::error::{Gl4Error, Result};

pub type Vec4 = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point4 {
    pub rho1: f64,
    pub theta1: f64,
    pub rho2: f64,
    pub theta2: f64,
}

impl Point4 {
    pub fn new(rho1: f64, theta1: f64, rho2: f64, theta2: f64) -> Self {
        Point4 { rho1, theta1, rho2, theta2 }
    }

    pub fn from_cartesian(x: Vec4) -> Self {
        Point4 {
            rho1: x[0].hypot(x[1]),
            theta1: x[1].atan2(x[0]),
            rho2: x[2].hypot(x[3]),
            theta2: x[3].atan2(x[2]),
        }
    }

    pub fn cartesian(&self) -> Vec4 {
        [
            self.rho1 * self.theta1.cos(),
            self.rho1 * self.theta1.sin(),
            self.rho2 * self.theta2.cos(),
            self.rho2 * self.theta2.sin(),
        ]
    }

    /// α = θ1 − θ2
    pub fn alpha(&self) -> f64 {
        self.theta1 - self.theta2
    }

    pub fn norm(&self) -> f64 {
        self.rho1.hypot(self.rho2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FermiCoords {
    pub s: f64,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub valid: bool,
}

impl FermiCoords {
    pub fn new(s: f64, theta: f64, a: f64, b: f64, epsilon: f64) -> Self {
        let sigma = (2.0 * s).sin();
        let valid = sigma > 0.0 && a * a + b * b < 1.0 / (epsilon * epsilon * sigma);
        FermiCoords { s, theta, a, b, epsilon, valid }
    }

    pub fn r(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn phi(&self) -> f64 {
        self.b.atan2(self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub e1: Vec4,
    pub e2: Vec4,
    pub m: Vec4,
    pub n: Vec4,
}

pub fn dot(x: &Vec4, y: &Vec4) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]
}

pub fn dist(x: &Vec4, y: &Vec4) -> f64 {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]];
    dot(&d, &d).sqrt()
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < FRAC_PI_2) {
        return Err(Gl4Error::invalid(format!("s = {s} outside (0, pi/2)")));
    }
    Ok(())
}

/// c(s) = cos s / √sin2s and d(s) = sin s / √sin2s with two derivatives.
fn profile_cd(s: f64) -> ([f64; 3], [f64; 3]) {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let p = sigma.powf(-0.5);
    let dp = -c2 * sigma.powf(-1.5);
    let ddp = 2.0 * p + 3.0 * c2 * c2 * sigma.powf(-2.5);
    let (sn, cs) = s.sin_cos();
    (
        [cs * p, -sn * p + cs * dp, -cs * p - 2.0 * sn * dp + cs * ddp],
        [sn * p, cs * p + sn * dp, -sn * p + 2.0 * cs * dp + sn * ddp],
    )
}

pub fn gamma(s: f64, theta: f64, eps: f64) -> Vec4 {
    let (c, d) = profile_cd(s);
    let (st, ct) = theta.sin_cos();
    [c[0] * ct / eps, c[0] * st / eps, d[0] * ct / eps, d[0] * st / eps]
}

pub fn frame(s: f64, theta: f64) -> Frame {
    let (sn, cs) = s.sin_cos();
    let (st, ct) = theta.sin_cos();
    // Θ = (ct, st), Θ⊥ = (−st, ct)
    Frame {
        e1: [cs * ct, cs * st, -sn * ct, -sn * st],
        e2: [-cs * st, cs * ct, -sn * st, sn * ct],
        m: [sn * ct, sn * st, cs * ct, cs * st],
        n: [sn * st, -sn * ct, -cs * st, cs * ct],
    }
}

pub fn surface_point_and_frame(s: f64, theta: f64, eps: f64) -> Result<(Point4, Frame)> {
    check_s(s)?;
    if !(eps > 0.0) {
        return Err(Gl4Error::invalid("epsilon must be positive"));
    }
    Ok((Point4::from_cartesian(gamma(s, theta, eps)), frame(s, theta)))
}

pub fn map_t_cart(c: &FermiCoords) -> Vec4 {
    let g = gamma(c.s, c.theta, c.epsilon);
    let f = frame(c.s, c.theta);
    let mut y = [0.0; 4];
    for k in 0..4 {
        y[k] = g[k] + c.a * f.m[k] + c.b * f.n[k];
    }
    y
}

pub fn map_t(c: &FermiCoords) -> Point4 {
    Point4::from_cartesian(map_t_cart(c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosestPoint {
    /// (s, θ) of each minimiser, ascending in s
    pub params: Vec<(f64, f64)>,
    pub distance: f64,
    /// P = 0, or the minimising circle is not isolated in θ
    pub degenerate: bool,
}

/// ρ1 at which a point with ρ1 = ρ2 starts having two closest points on Γ_ε.
pub fn two_point_threshold(alpha: f64, eps: f64) -> f64 {
    (1.0 + alpha.cos()).max(0.0).sqrt() / eps
}

struct RadialProblem {
    p1: f64,
    p2: f64,
    cos_a: f64,
}

impl RadialProblem {
    fn big_d(&self, rho: f64) -> f64 {
        (self.p1 * self.p1 * rho * rho + self.p2 * self.p2 / (rho * rho) + 2.0 * self.p1 * self.p2 * self.cos_a)
            .max(0.0)
            .sqrt()
    }

    fn df(&self, rho: f64) -> f64 {
        let num = self.p1 * self.p1 * rho - self.p2 * self.p2 / rho.powi(3);
        rho - rho.powi(-3) - std::f64::consts::SQRT_2 * num / self.big_d(rho)
    }

    fn ddf(&self, rho: f64) -> f64 {
        let d = self.big_d(rho);
        let num = self.p1 * self.p1 * rho - self.p2 * self.p2 / rho.powi(3);
        let dnum = self.p1 * self.p1 + 3.0 * self.p2 * self.p2 / rho.powi(4);
        1.0 + 3.0 * rho.powi(-4) - std::f64::consts::SQRT_2 * (dnum / d - num * num / (d * d * d))
    }

    /// Root of f' on (1, ∞) for p1 > p2: geometric bracket from ρ = 1, then safeguarded Newton.
    fn root_above_one(&self) -> f64 {
        let mut lo = 1.0;
        let mut hi = 2.0;
        while self.df(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e150 {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = self.df(x);
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d2 = self.ddf(x);
            let mut nx = x - fx / d2;
            if !(nx > lo && nx < hi) || !nx.is_finite() {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 1e-16 * x || hi - lo <= 4.0 * f64::EPSILON * hi {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }
}

fn theta_star(p: &Point4, rho: f64) -> Option<f64> {
    let cx = p.rho1 * rho * p.theta1.cos() + p.rho2 / rho * p.theta2.cos();
    let cy = p.rho1 * rho * p.theta1.sin() + p.rho2 / rho * p.theta2.sin();
    if cx.hypot(cy) < 1e-300 {
        None
    } else {
        Some(cy.atan2(cx).rem_euclid(2.0 * PI))
    }
}

fn s_of_rho(rho: f64) -> f64 {
    // ρ² = cot s
    1.0_f64.atan2(rho * rho)
}

pub fn closest_point(p: &Point4, eps: f64) -> Result<ClosestPoint> {
    if !(eps > 0.0) {
        return Err(Gl4Error::invalid("epsilon must be positive"));
    }
    let x = p.cartesian();
    if p.norm() == 0.0 {
        let q = gamma(FRAC_PI_2 / 2.0, 0.0, eps);
        return Ok(ClosestPoint {
            params: vec![(FRAC_PI_2 / 2.0, 0.0)],
            distance: dist(&x, &q),
            degenerate: true,
        });
    }
    // work on Γ with the scaled point εP
    let (p1, p2) = (eps * p.rho1, eps * p.rho2);
    let cos_a = p.alpha().cos();
    let mut rhos = Vec::new();
    if p1 == p2 {
        if p1 <= two_point_threshold(p.alpha(), 1.0) {
            rhos.push(1.0);
        } else {
            // ρ² + ρ⁻² = 2 p1² − 2 cos α
            let t = p1 * p1 - cos_a;
            let r2 = t + (t * t - 1.0).max(0.0).sqrt();
            let r = r2.sqrt();
            rhos.push(r);
            rhos.push(1.0 / r);
        }
    } else if p1 > p2 {
        rhos.push(RadialProblem { p1, p2, cos_a }.root_above_one());
    } else {
        rhos.push(1.0 / RadialProblem { p1: p2, p2: p1, cos_a }.root_above_one());
    }
    let mut params = Vec::new();
    let mut degenerate = false;
    for &rho in &rhos {
        let th = match theta_star(p, rho) {
            Some(t) => t,
            None => {
                degenerate = true;
                0.0
            }
        };
        params.push((s_of_rho(rho), th));
    }
    params.sort_by(|a, b| a.0.total_cmp(&b.0));
    let distance = params
        .iter()
        .map(|&(s, th)| dist(&x, &gamma(s, th, eps)))
        .fold(f64::INFINITY, f64::min);
    Ok(ClosestPoint { params, distance, degenerate })
}

/// Fermi coordinates of P. P = 0 returns the documented limit (a = −1/ε, b = 0, φ = π), flagged invalid.
pub fn map_s(p: &Point4, eps: f64) -> Result<FermiCoords> {
    let cp = closest_point(p, eps)?;
    if cp.params.len() != 1 {
        return Err(Gl4Error::OutsideTube(format!(
            "{} closest points for {:?}",
            cp.params.len(),
            p
        )));
    }
    let (s, theta) = cp.params[0];
    let x = p.cartesian();
    let q = gamma(s, theta, eps);
    let f = frame(s, theta);
    let d = [x[0] - q[0], x[1] - q[1], x[2] - q[2], x[3] - q[3]];
    let c = FermiCoords::new(s, theta, dot(&d, &f.m), dot(&d, &f.n), eps);
    if p.norm() == 0.0 {
        return Ok(FermiCoords { valid: false, ..c });
    }
    if !c.valid {
        return Err(Gl4Error::OutsideTube(format!(
            "a² + b² = {} exceeds 1/(ε² sin2s) = {}",
            c.a * c.a + c.b * c.b,
            1.0 / (eps * eps * (2.0 * s).sin())
        )));
    }
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    /// φ(ρ1,θ1,ρ2,θ2) + φ(ρ1,θ2,ρ2,θ1)
    pub phi_theta_swap: f64,
    /// φ(ρ1,θ1,ρ2,θ2) − φ(ρ2,θ1,ρ1,θ2)
    pub phi_rho_swap: f64,
    /// φ(ρ1,θ1,ρ2,θ2) + φ(ρ1,−θ1,ρ2,−θ2)
    pub phi_reflect: f64,
    pub r_rho_swap: f64,
    pub r_theta_swap: f64,
    pub r_reflect: f64,
    /// some image left the tubular neighbourhood; the affected mismatches are NaN
    pub partial: bool,
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if (y + PI).abs() < 1e-15 { PI } else { y }
}

pub fn normal_polar_symmetries(p: &Point4, eps: f64) -> Result<SymmetryReport> {
    let base = map_s(p, eps)?;
    let images = [
        Point4::new(p.rho1, p.theta2, p.rho2, p.theta1),
        Point4::new(p.rho2, p.theta1, p.rho1, p.theta2),
        Point4::new(p.rho1, -p.theta1, p.rho2, -p.theta2),
    ];
    let mut partial = false;
    let c: Vec<Option<FermiCoords>> = images
        .iter()
        .map(|q| match map_s(q, eps) {
            Ok(c) => Some(c),
            Err(_) => {
                partial = true;
                None
            }
        })
        .collect();
    // on Γ_ε itself φ is undefined and every identity reads 0 = 0
    let on_surface = |x: &FermiCoords| x.r() < 1e-12;
    let phi_mis = |k: usize, sign: f64| match &c[k] {
        Some(x) if on_surface(&base) || on_surface(x) => 0.0,
        Some(x) => wrap(base.phi() + sign * x.phi()),
        None => f64::NAN,
    };
    let r_mis = |k: usize| c[k].map_or(f64::NAN, |x| base.r() - x.r());
    Ok(SymmetryReport {
        phi_theta_swap: phi_mis(0, 1.0),
        phi_rho_swap: phi_mis(1, -1.0),
        phi_reflect: phi_mis(2, 1.0),
        r_rho_swap: r_mis(1),
        r_theta_swap: r_mis(0),
        r_reflect: r_mis(2),
        partial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricData {
    pub g: [[f64; 4]; 4],
    pub sqrt_g: f64,
}

/// Closed-form metric in (s, θ, a, b). Depends on s, a, b only.
pub fn metric_at(s: f64, a: f64, b: f64, eps: f64) -> [[f64; 4]; 4] {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let sq = sigma.sqrt();
    let g11 = (a - 1.0 / (eps * sigma * sq)).powi(2) + b * b;
    let g12 = -2.0 * b / (eps * sq);
    let g22 = a * a + b * b + 1.0 / (eps * eps * sigma) + 2.0 * a * sq / eps;
    [
        [g11, g12, 0.0, 0.0],
        [g12, g22, -b * c2, a * c2],
        [0.0, -b * c2, 1.0, 0.0],
        [0.0, a * c2, 0.0, 1.0],
    ]
}

/// ∂_k g_ij for k over (s, θ, a, b).
pub fn metric_derivatives(s: f64, a: f64, b: f64, eps: f64) -> [[[f64; 4]; 4]; 4] {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let sq = sigma.sqrt();
    let mut d = [[[0.0; 4]; 4]; 4];
    let w = a - 1.0 / (eps * sigma * sq);
    // s
    d[0][0][0] = 2.0 * w * 3.0 * c2 / (eps * sigma.powf(2.5));
    d[0][0][1] = 2.0 * b * c2 / (eps * sigma * sq);
    d[0][1][1] = -2.0 * c2 / (eps * eps * sigma * sigma) + 2.0 * a * c2 / (eps * sq);
    d[0][1][2] = 2.0 * b * sigma;
    d[0][1][3] = -2.0 * a * sigma;
    // a
    d[2][0][0] = 2.0 * w;
    d[2][1][1] = 2.0 * a + 2.0 * sq / eps;
    d[2][1][3] = c2;
    // b
    d[3][0][0] = 2.0 * b;
    d[3][0][1] = -2.0 / (eps * sq);
    d[3][1][1] = 2.0 * b;
    d[3][1][2] = -c2;
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..i {
                d[k][i][j] = d[k][j][i];
            }
        }
    }
    d
}

pub fn metric_matrix(c: &FermiCoords) -> Result<MetricData> {
    check_s(c.s)?;
    let g = metric_at(c.s, c.a, c.b, c.epsilon);
    let det = to_na(&g).determinant();
    if !(det > 0.0) {
        return Err(Gl4Error::Singular(format!("metric determinant {det} at {c:?}")));
    }
    Ok(MetricData { g, sqrt_g: det.sqrt() })
}

pub fn to_na(g: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| g[i][j])
}

pub fn from_na(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = m[(i, j)];
        }
    }
    g
}

/// Inverse metric, log-derivatives ∂_k √G / √G and B^j = −∂_k g^{kj} − (∂_k√G/√G) g^{jk}, exactly.
#[derive(Debug, Clone, Copy)]
pub struct MetricCalculus {
    pub g: [[f64; 4]; 4],
    pub ginv: [[f64; 4]; 4],
    pub sqrt_g: f64,
    pub log_sqrt_g: [f64; 4],
    /// ∂_k g^{ij}
    pub dginv: [[[f64; 4]; 4]; 4],
    pub b_vec: [f64; 4],
}

pub fn metric_calculus(s: f64, a: f64, b: f64, eps: f64) -> Result<MetricCalculus> {
    check_s(s)?;
    let g = metric_at(s, a, b, eps);
    let gm = to_na(&g);
    let det = gm.determinant();
    let inv = gm
        .try_inverse()
        .ok_or_else(|| Gl4Error::Singular(format!("metric not invertible at s={s}, a={a}, b={b}")))?;
    if !(det > 0.0) {
        return Err(Gl4Error::Singular(format!("metric determinant {det}")));
    }
    let dg = metric_derivatives(s, a, b, eps);
    let mut log_sqrt_g = [0.0; 4];
    let mut dginv = [[[0.0; 4]; 4]; 4];
    for k in 0..4 {
        let dk = to_na(&dg[k]);
        log_sqrt_g[k] = 0.5 * (inv * dk).trace();
        dginv[k] = from_na(&(-(inv * dk * inv)));
    }
    let ginv = from_na(&inv);
    let mut b_vec = [0.0; 4];
    for j in 0..4 {
        let mut v = 0.0;
        for k in 0..4 {
            v -= dginv[k][k][j] + log_sqrt_g[k] * ginv[j][k];
        }
        b_vec[j] = v;
    }
    Ok(MetricCalculus { g, ginv, sqrt_g: det.sqrt(), log_sqrt_g, dginv, b_vec })
}

#[derive(Debug, Clone, Serialize)]
pub struct Expansions {
    pub inverse_exact: [[f64; 4]; 4],
    pub inverse_expansion: [[f64; 4]; 4],
    pub b_exact: [f64; 4],
    pub b_expansion: [f64; 4],
    /// ∂_s, ∂_a, ∂_b of log √G
    pub log_sqrt_g_exact: [f64; 3],
    pub log_sqrt_g_expansion: [f64; 3],
    /// principal curvatures of Γ_ε along m and along n
    pub curvatures_m: [f64; 2],
    pub curvatures_n: [f64; 2],
}

/// Truncated small-ε expansion of g^{ij}; ρ⁻¹ stands for √sin2s.
pub fn inverse_expansion(s: f64, a: f64, b: f64, eps: f64) -> [[f64; 4]; 4] {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let r = |n: i32| sigma.powf(n as f64 / 2.0);
    let (e2, e3, e4) = (eps * eps, eps.powi(3), eps.powi(4));
    let cc = c2 * c2;
    let g11 = e2 * r(6) + 2.0 * a * e3 * r(9) + 3.0 * (a * a + b * b) * e4 * r(12);
    let g12 = 2.0 * b * e3 * r(7);
    let g13 = 2.0 * b * b * c2 * e3 * r(7);
    let g14 = -2.0 * a * b * c2 * e3 * r(7);
    let g22 = e2 * r(2) - 2.0 * a * e3 * r(5) + 3.0 * (a * a + b * b) * e4 * r(8);
    let g23 = b * c2 * e2 * r(2) - 2.0 * a * b * c2 * e3 * r(5);
    let g24 = -a * c2 * e2 * r(2) + 2.0 * a * a * c2 * e3 * r(5);
    let g33 = 1.0 + b * b * cc * e2 * r(2) - 2.0 * a * b * b * cc * e3 * r(5);
    let g34 = -a * b * cc * e2 * r(2) + 2.0 * a * a * b * cc * e3 * r(5);
    let g44 = 1.0 + a * a * cc * e2 * r(2) - 2.0 * a * a * a * cc * e3 * r(5);
    [
        [g11, g12, g13, g14],
        [g12, g22, g23, g24],
        [g13, g23, g33, g34],
        [g14, g24, g34, g44],
    ]
}

pub fn b_expansion(s: f64, a: f64, b: f64, eps: f64) -> [f64; 4] {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let r = |n: i32| sigma.powf(n as f64 / 2.0);
    let (e2, e3) = (eps * eps, eps.powi(3));
    let cc = c2 * c2;
    [
        -2.0 * e2 * r(4) * c2 - 8.0 * a * e3 * r(7) * c2,
        -4.0 * b * e3 * r(5) * c2,
        2.0 * a * e2 * r(6) + a * cc * e2 * r(2) - (2.0 * a * a + 4.0 * b * b) * cc * e3 * r(5)
            + 4.0 * b * b * e3 * r(9),
        2.0 * b * e2 * r(6) + b * cc * e2 * r(2) + 2.0 * a * b * cc * e3 * r(5) - 4.0 * a * b * e3 * r(9),
    ]
}

pub fn log_sqrt_g_expansion(s: f64, a: f64, b: f64, eps: f64) -> [f64; 3] {
    let sigma = (2.0 * s).sin();
    let c2 = (2.0 * s).cos();
    let e2 = eps * eps;
    [
        -4.0 * c2 / sigma - 6.0 * (a * a + b * b) * e2 * sigma * sigma * c2,
        -2.0 * a * e2 * sigma.powi(3),
        -2.0 * b * e2 * sigma.powi(3),
    ]
}

/// Eigenvalues of the shape operators of Γ_ε at (s, θ) along m and n.
pub fn principal_curvatures(s: f64, theta: f64, eps: f64) -> Result<([f64; 2], [f64; 2])> {
    check_s(s)?;
    let (c, d) = profile_cd(s);
    let (st, ct) = theta.sin_cos();
    let th = [ct, st];
    let tp = [-st, ct];
    let emb = |x: f64, y: f64, v: [f64; 2]| -> Vec4 { [x * v[0] / eps, x * v[1] / eps, y * v[0] / eps, y * v[1] / eps] };
    let gs = emb(c[1], d[1], th);
    let gt = emb(c[0], d[0], tp);
    let gss = emb(c[2], d[2], th);
    let gst = emb(c[1], d[1], tp);
    let gtt = emb(-c[0], -d[0], th);
    let first = Matrix2::new(dot(&gs, &gs), dot(&gs, &gt), dot(&gt, &gs), dot(&gt, &gt));
    let inv = first
        .try_inverse()
        .ok_or_else(|| Gl4Error::Singular("first fundamental form".into()))?;
    let f = frame(s, theta);
    let eig = |nu: &Vec4| -> [f64; 2] {
        let second = Matrix2::new(dot(&gss, nu), dot(&gst, nu), dot(&gst, nu), dot(&gtt, nu));
        let shape = inv * second;
        let tr = shape.trace();
        let det = shape.determinant();
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        [0.5 * tr - disc, 0.5 * tr + disc]
    };
    Ok((eig(&f.m), eig(&f.n)))
}

pub fn geometry_expansions(c: &FermiCoords) -> Result<Expansions> {
    let mc = metric_calculus(c.s, c.a, c.b, c.epsilon)?;
    let (km, kn) = principal_curvatures(c.s, c.theta, c.epsilon)?;
    Ok(Expansions {
        inverse_exact: mc.ginv,
        inverse_expansion: inverse_expansion(c.s, c.a, c.b, c.epsilon),
        b_exact: mc.b_vec,
        b_expansion: b_expansion(c.s, c.a, c.b, c.epsilon),
        log_sqrt_g_exact: [mc.log_sqrt_g[0], mc.log_sqrt_g[2], mc.log_sqrt_g[3]],
        log_sqrt_g_expansion: log_sqrt_g_expansion(c.s, c.a, c.b, c.epsilon),
        curvatures_m: km,
        curvatures_n: kn,
    })
}

/// Central-difference Jacobian of T in (s, θ, a, b), step 1e-5·max(1, |coordinate|).
pub fn jacobian_fd(c: &FermiCoords) -> [[f64; 4]; 4] {
    let x0 = [c.s, c.theta, c.a, c.b];
    let mut j = [[0.0; 4]; 4];
    for k in 0..4 {
        let h = 1e-5 * x0[k].abs().max(1.0);
        let mut xp = x0;
        let mut xm = x0;
        xp[k] += h;
        xm[k] -= h;
        let yp = map_t_cart(&FermiCoords::new(xp[0], xp[1], xp[2], xp[3], c.epsilon));
        let ym = map_t_cart(&FermiCoords::new(xm[0], xm[1], xm[2], xm[3], c.epsilon));
        for r in 0..4 {
            j[r][k] = (yp[r] - ym[r]) / (2.0 * h);
        }
    }
    j
}

pub fn metric_fd(c: &FermiCoords) -> [[f64; 4]; 4] {
    let j = jacobian_fd(c);
    let mut g = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            g[a][b] = (0..4).map(|r| j[r][a] * j[r][b]).sum();
        }
    }
    g
}
