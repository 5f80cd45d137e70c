use std::sync::OnceLock;

use gl4::saddle::{
    discrete_energy, el_residual, energy_split, el_residual_grids, gradient_flow, initial_field, solve_saddle,
    SaddleField, SaddleInit, SaddleOptions,
};
use gl4::vortex::{solve_profile, VortexProfile};
use gl4::Gl4Error;
use proptest::prelude::*;

// discrete_energy of the converged n = 400 field at (λ = 2, L = 15), computed once with this solver
const ENERGY_N400: f64 = 5111.584945254493;

fn fine() -> &'static SaddleField {
    static F: OnceLock<SaddleField> = OnceLock::new();
    F.get_or_init(|| solve_saddle(2.0, 15.0, 200, SaddleOptions::default()).unwrap())
}

fn coarse() -> &'static SaddleField {
    static F: OnceLock<SaddleField> = OnceLock::new();
    F.get_or_init(|| solve_saddle(2.0, 15.0, 100, SaddleOptions::default()).unwrap())
}

fn profile() -> &'static VortexProfile {
    static P: OnceLock<VortexProfile> = OnceLock::new();
    P.get_or_init(|| solve_profile(2.0, 30.0, 6001).unwrap())
}

#[test]
fn converged_residuals_small() {
    let r = el_residual(fine());
    assert!(r.max() < 1e-6, "{r:?}");
}

#[test]
fn bounds_and_positivity() {
    let s = fine();
    let n = s.n;
    for i in 0..=n {
        for j in 0..=n {
            let k = s.idx(i, j);
            for v in [s.f[k], s.g[k], s.h[k]] {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
            if i > 0 && j > 0 {
                assert!(s.f[k] > 0.0);
            } else {
                assert_eq!(s.f[k], 0.0);
            }
            if i == 0 {
                assert_eq!(s.g[k], 0.0);
            }
        }
    }
}

#[test]
fn swap_symmetry_exact() {
    let s = fine();
    for i in 0..=s.n {
        for j in 0..=s.n {
            assert_eq!(s.f[s.idx(i, j)], s.f[s.idx(j, i)]);
            assert_eq!(s.g[s.idx(i, j)], s.h[s.idx(j, i)]);
        }
    }
}

#[test]
fn energy_matches_refined_grid() {
    let e = discrete_energy(fine());
    assert!(((e - ENERGY_N400) / ENERGY_N400).abs() < 0.01, "{e}");
}

#[test]
fn energy_monotone_along_flow() {
    let h = &fine().energy_history;
    assert!(h.len() > 10);
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn cross_section_matches_vortex() {
    let s = fine();
    let p = profile();
    let mut e = 0.0_f64;
    for i in 0..=s.n {
        let r1 = i as f64 * s.h_step;
        e = e.max((s.f_at(r1, 12.0) - p.eval(r1).u).abs());
    }
    assert!(e < 2e-2, "{e}");
}

#[test]
fn far_corner_near_one() {
    let s = fine();
    assert!(s.f[s.idx(s.n, s.n)] >= 1.0 - 1e-2);
}

#[test]
fn coarse_fine_agreement() {
    let (a, b) = (coarse(), fine());
    let mut d = 0.0_f64;
    for i in 0..=a.n {
        for j in 0..=a.n {
            d = d.max((a.f[a.idx(i, j)] - b.f[b.idx(2 * i, 2 * j)]).abs());
            d = d.max((a.g[a.idx(i, j)] - b.g[b.idx(2 * i, 2 * j)]).abs());
        }
    }
    assert!(d < 5e-3, "{d}");
}

#[test]
fn initialization_independence() {
    let a = coarse();
    let b = solve_saddle(2.0, 15.0, 100, SaddleOptions { init: SaddleInit::Product, ..Default::default() }).unwrap();
    let d = a.f.iter().zip(&b.f).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(d < 1e-7, "{d}");
}

#[test]
fn trivial_field_energy_positive_and_axis_dominated() {
    let n = 100;
    let l = 15.0;
    let m = (n + 1) * (n + 1);
    let mut f = vec![1.0; m];
    for i in 0..=n {
        f[i] = 0.0;
        f[i * (n + 1)] = 0.0;
    }
    let s = SaddleField::from_grids(2.0, l, n, f, vec![1.0; m]).unwrap();
    let e = discrete_energy(&s);
    let (axis, rest) = energy_split(&s);
    assert!(e > 0.0);
    assert!(((axis + rest) - e).abs() <= 1e-10 * e);
    assert!(rest.abs() < 1e-12 * axis, "{axis} {rest}");
}

#[test]
fn zero_f_residuals() {
    let n = 100;
    let m = (n + 1) * (n + 1);
    let hs = 15.0 / n as f64;
    let mut g = vec![0.0; m];
    for i in 0..=n {
        for j in 0..=n {
            let (r1, r2) = (i as f64 * hs, j as f64 * hs);
            g[i * (n + 1) + j] = (r1 * r1 * (1.0 + 0.1 * r2)).sin() * 0.5;
        }
    }
    let s = SaddleField::from_grids(2.0, 15.0, n, vec![0.0; m], g).unwrap();
    let (rf, rg, _) = el_residual_grids(&s);
    assert!(rf.iter().all(|v| *v == 0.0));
    let h2 = hs * hs;
    for i in 2..n {
        for j in 2..n {
            let k = s.idx(i, j);
            let y = &s.g;
            let lin = (y[s.idx(i + 1, j)] + y[s.idx(i - 1, j)] + y[s.idx(i, j + 1)] + y[s.idx(i, j - 1)] - 4.0 * y[k]) / h2
                - (y[s.idx(i + 1, j)] - y[s.idx(i - 1, j)]) / (2.0 * hs * i as f64 * hs)
                + (y[s.idx(i, j + 1)] - y[s.idx(i, j - 1)]) / (2.0 * hs * j as f64 * hs);
            assert!((rg[k] - lin).abs() <= 1e-9 * lin.abs().max(1.0));
        }
    }
}

/// f-equation residual of the trial f = U(r1), g = V(r1), h = 1 on the strip r2 > L/2.
fn tensor_trial_residual(n: usize) -> f64 {
    let l = 15.0;
    let hs = l / n as f64;
    let p = profile();
    let u: Vec<f64> = (0..=n).map(|i| p.eval(i as f64 * hs).u).collect();
    let v: Vec<f64> = (0..=n).map(|i| p.eval(i as f64 * hs).v).collect();
    let mut worst = 0.0_f64;
    // r1 >= 1 keeps the 1/r1 stencil terms away from the axis, where they are first order
    for i in ((1.0 / hs).ceil() as usize)..n {
        let r1 = i as f64 * hs;
        for j in (n / 2 + 1)..n {
            let r2 = j as f64 * hs;
            // f is constant in r2 and h = 1, so the r2 terms vanish identically
            let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (hs * hs) + 0.0 / r2;
            let res = lap + (u[i + 1] - u[i - 1]) / (2.0 * hs * r1)
                - u[i] * (1.0 - v[i]).powi(2) / (r1 * r1)
                - (u[i] * u[i] - 1.0) * u[i];
            worst = worst.max(res.abs());
        }
    }
    worst
}

#[test]
fn planar_tensor_trial_in_far_strip() {
    // the trial is exact, what remains is the stencil error, second order in h
    let a = tensor_trial_residual(200);
    let b = tensor_trial_residual(400);
    assert!(a < 1e-2, "{a}");
    assert!(a / b > 3.5, "{a} {b}");
}

#[test]
fn rejects_bad_grid() {
    assert!(matches!(solve_saddle(2.0, 5.0, 200, SaddleOptions::default()), Err(Gl4Error::InvalidInput(_))));
    assert!(matches!(solve_saddle(2.0, 15.0, 50, SaddleOptions::default()), Err(Gl4Error::InvalidInput(_))));
    assert!(matches!(solve_saddle(-1.0, 15.0, 200, SaddleOptions::default()), Err(Gl4Error::InvalidInput(_))));
}

#[test]
fn newton_cap_reports_history() {
    let r = solve_saddle(2.0, 15.0, 100, SaddleOptions { newton_max: 1, flow_iters: 0, ..Default::default() });
    match r {
        Err(Gl4Error::Convergence { history, .. }) => assert_eq!(history.len(), 2),
        other => panic!("expected convergence failure, got {:?}", other.map(|s| s.newton_iterations)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn flow_keeps_symmetry_bounds_and_descends(lambda in 0.5f64..4.0, iters in 1usize..15) {
        let prof = solve_profile(lambda, 30.0, 3001).unwrap();
        let mut s = initial_field(lambda, 12.0, 100, SaddleInit::Tanh, &prof);
        let hist = gradient_flow(&mut s, iters);
        prop_assert!(hist.windows(2).all(|w| w[1] <= w[0]));
        for i in 0..=s.n {
            for j in 0..=s.n {
                prop_assert_eq!(s.f[s.idx(i, j)], s.f[s.idx(j, i)]);
                prop_assert_eq!(s.g[s.idx(i, j)], s.h[s.idx(j, i)]);
                let v = s.f[s.idx(i, j)];
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
