//! wasm bindings for the browser demo in `www/`.

use gl4::fermi::{closest_point, map_s, Point4};
use gl4::residual::{omega_winding, LoopSpec, OmegaQuadrature};
use gl4::vortex::solve_profile;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(e: gl4::Gl4Error) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Serialize)]
struct ProfilePlot {
    lambda: f64,
    m_lambda: f64,
    c_fit: f64,
    r: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// U and V thinned to at most `points` samples, as JSON.
#[wasm_bindgen]
pub fn vortex_profile(lambda: f64, r_max: f64, nodes: usize, points: usize) -> Result<String, JsError> {
    let p = solve_profile(lambda, r_max, nodes).map_err(js)?;
    let stride = (p.r.len() / points.max(2)).max(1);
    let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
    to_json(&ProfilePlot { lambda, m_lambda: p.m_lambda, c_fit: p.c_fit, r: pick(&p.r), u: pick(&p.u), v: pick(&p.v) })
}

#[derive(Serialize)]
struct Probe {
    distance: f64,
    degenerate: bool,
    closest: Vec<(f64, f64)>,
    s: f64,
    theta: f64,
    a: f64,
    b: f64,
    valid: bool,
}

/// Closest point on the surface and Fermi coordinates of (ρ₁e^{iθ₁}, ρ₂e^{iθ₂}).
#[wasm_bindgen]
pub fn fermi_probe(rho1: f64, theta1: f64, rho2: f64, theta2: f64, eps: f64) -> Result<String, JsError> {
    let p = Point4::new(rho1, theta1, rho2, theta2);
    let cp = closest_point(&p, eps).map_err(js)?;
    let c = map_s(&p, eps).map_err(js)?;
    to_json(&Probe {
        distance: cp.distance,
        degenerate: cp.degenerate,
        closest: cp.params,
        s: c.s,
        theta: c.theta,
        a: c.a,
        b: c.b,
        valid: c.valid,
    })
}

/// ∮ω over a circle of radius r in the normal disk at (s, θ), centred at (a, b).
#[wasm_bindgen]
pub fn winding(s: f64, theta: f64, radius: f64, a: f64, b: f64, n_u: usize, n_theta: usize) -> Result<String, JsError> {
    let q = OmegaQuadrature { rho_cut: 50.0, n_u, n_theta, n_loop: 64 };
    let rep = omega_winding(&LoopSpec::NormalCircle { s, theta, radius, offset: [a, b] }, &q).map_err(js)?;
    to_json(&rep)
}

