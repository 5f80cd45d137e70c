//! Brute-force oracles for the Fermi geometry and the seeded report behind `fermi check`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fermi::{
    closest_point, dist, gamma, geometry_expansions, map_s, map_t, map_t_cart, metric_fd, metric_matrix,
    two_point_threshold, FermiCoords, Point4,
};

/// Uniform s in [0.1, π/2 − 0.1], θ in [0, 2π), (a, b) uniform in the disk of radius
/// `frac`/(ε √sin2s).
pub fn random_coords(rng: &mut impl Rng, eps: f64, frac: f64) -> FermiCoords {
    let s = rng.random_range(0.1..FRAC_PI_2 - 0.1);
    let theta = rng.random_range(0.0..2.0 * PI);
    let big_r = frac / (eps * (2.0 * s).sin().sqrt());
    let r = big_r * rng.random::<f64>().sqrt();
    let phi = rng.random_range(-PI..PI);
    FermiCoords::new(s, theta, r * phi.cos(), r * phi.sin(), eps)
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let k = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - k * (b - a);
    let mut d = a + k * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - k * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + k * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Distance from P to Γ_ε by dense (s, θ) sampling on an `ns` × `nt` grid, refined by alternating
/// golden-section searches around the best node.
pub fn dense_distance(p: &Point4, eps: f64, ns: usize, nt: usize) -> f64 {
    let x = p.cartesian();
    let hs = FRAC_PI_2 / ns as f64;
    let ht = 2.0 * PI / nt as f64;
    let best = (0..ns)
        .into_par_iter()
        .map(|i| {
            let s = (i as f64 + 0.5) * hs;
            let mut b = (f64::INFINITY, 0.0, 0.0);
            for j in 0..nt {
                let t = j as f64 * ht;
                let d = dist(&x, &gamma(s, t, eps));
                if d < b.0 {
                    b = (d, s, t);
                }
            }
            b
        })
        .reduce(|| (f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let (_, mut s, mut t) = best;
    let (mut ws, mut wt) = (hs, ht);
    for _ in 0..40 {
        let lo = (s - ws).max(1e-9);
        let hi = (s + ws).min(FRAC_PI_2 - 1e-9);
        s = golden(&|u| dist(&x, &gamma(u, t, eps)), lo, hi, 60);
        t = golden(&|u| dist(&x, &gamma(s, u, eps)), t - wt, t + wt, 60);
        ws *= 0.7;
        wt *= 0.7;
    }
    dist(&x, &gamma(s, t, eps))
}

/// Smallest ρ1 on a grid of spacing `step` at which ρ = 1 stops being a local minimum of the
/// distance from (ρ1 e^{iθ1}, ρ1 e^{iθ2}) to Γ_ε along the surface.
pub fn two_point_onset(alpha: f64, eps: f64, lo: f64, hi: f64, step: f64) -> Option<f64> {
    let rho_s = |rho: f64| 1.0_f64.atan2(rho * rho);
    let steps = ((hi - lo) / step).ceil() as usize;
    for k in 0..=steps {
        let rho1 = lo + k as f64 * step;
        let p = Point4::new(rho1, alpha, rho1, 0.0);
        let x = p.cartesian();
        // best θ for each ρ by a fine scan, then the curvature of the profile at ρ = 1
        let d = |rho: f64| {
            let s = rho_s(rho);
            let f = |t: f64| dist(&x, &gamma(s, t, eps));
            let t = golden(&f, alpha / 2.0 - 1.0, alpha / 2.0 + 1.0, 80);
            f(t).powi(2)
        };
        let h = 1e-3;
        let curv = d(1.0 + h) + d(1.0 - h) - 2.0 * d(1.0);
        if curv < 0.0 {
            return Some(rho1);
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdCheck {
    pub alpha: f64,
    pub epsilon: f64,
    pub detected: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FermiEpsReport {
    pub epsilon: f64,
    pub samples: usize,
    pub max_roundtrip_st: f64,
    pub max_roundtrip_ts: f64,
    pub max_distance_error: f64,
    pub dense_samples: usize,
    pub max_dense_error: f64,
    pub max_metric_rel_error: f64,
    pub max_curvature_rel_error: f64,
    pub max_curvature_sum: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FermiReport {
    pub seed: u64,
    pub per_epsilon: Vec<FermiEpsReport>,
    pub thresholds: Vec<ThresholdCheck>,
}

fn rel_max(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            num = num.max((a[i][j] - b[i][j]).abs());
            den = den.max(b[i][j].abs());
        }
    }
    num / den
}

pub fn check_epsilon(eps: f64, samples: usize, dense_samples: usize, seed: u64) -> FermiEpsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<FermiCoords> = (0..samples).map(|_| random_coords(&mut rng, eps, 0.9)).collect();
    let mut rep = FermiEpsReport {
        epsilon: eps,
        samples,
        max_roundtrip_st: 0.0,
        max_roundtrip_ts: 0.0,
        max_distance_error: 0.0,
        dense_samples: dense_samples.min(samples),
        max_dense_error: 0.0,
        max_metric_rel_error: 0.0,
        max_curvature_rel_error: 0.0,
        max_curvature_sum: 0.0,
        failures: 0,
    };
    for (k, c) in coords.iter().enumerate() {
        let p = map_t(c);
        let back = match map_s(&p, eps) {
            Ok(b) => b,
            Err(_) => {
                rep.failures += 1;
                continue;
            }
        };
        let dth = (back.theta - c.theta + PI).rem_euclid(2.0 * PI) - PI;
        let e = (back.s - c.s).abs().max(dth.abs()).max((back.a - c.a).abs()).max((back.b - c.b).abs());
        rep.max_roundtrip_st = rep.max_roundtrip_st.max(e);
        let x = p.cartesian();
        let y = map_t_cart(&back);
        rep.max_roundtrip_ts = rep.max_roundtrip_ts.max(dist(&x, &y));
        let cp = closest_point(&p, eps).expect("valid epsilon");
        rep.max_distance_error = rep.max_distance_error.max((cp.distance - c.r()).abs());
        if k < rep.dense_samples {
            let d = dense_distance(&p, eps, 2000, 2000);
            rep.max_dense_error = rep.max_dense_error.max((d - c.r()).abs());
        }
        if let Ok(m) = metric_matrix(c) {
            rep.max_metric_rel_error = rep.max_metric_rel_error.max(rel_max(&m.g, &metric_fd(c)));
        }
        if let Ok(x) = geometry_expansions(c) {
            let k0 = eps * (2.0 * c.s).sin().powf(1.5);
            for kk in [x.curvatures_m, x.curvatures_n] {
                let e = ((kk[0] + k0).abs()).max((kk[1] - k0).abs()) / k0;
                rep.max_curvature_rel_error = rep.max_curvature_rel_error.max(e);
                rep.max_curvature_sum = rep.max_curvature_sum.max((kk[0] + kk[1]).abs());
            }
        }
    }
    rep
}

pub fn threshold_checks(step: f64) -> Vec<ThresholdCheck> {
    let mut out = Vec::new();
    for &alpha in &[0.0, 1.0, 2.0] {
        // the surface normalised as in the map T, and the unnormalised one (ε = 1/√2)
        for &eps in &[1.0, std::f64::consts::FRAC_1_SQRT_2] {
            let pred = two_point_threshold(alpha, eps);
            let det = two_point_onset(alpha, eps, pred * 0.98, pred * 1.02, step).unwrap_or(f64::NAN);
            out.push(ThresholdCheck { alpha, epsilon: eps, detected: det, predicted: pred });
        }
    }
    out
}

pub fn fermi_report(eps_list: &[f64], samples: usize, dense_samples: usize, seed: u64) -> FermiReport {
    FermiReport {
        seed,
        per_epsilon: eps_list.iter().map(|&e| check_epsilon(e, samples, dense_samples, seed)).collect(),
        thresholds: threshold_checks(1e-4),
    }
}
