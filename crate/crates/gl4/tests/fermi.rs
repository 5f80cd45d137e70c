use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use gl4::fermi::*;
use gl4::fermi_check::{check_epsilon, dense_distance, random_coords, two_point_onset};
use gl4::Gl4Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn surface_point_example() {
    let (p, f) = surface_point_and_frame(FRAC_PI_4, 0.0, 1.0).unwrap();
    let x = p.cartesian();
    let want = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
    for k in 0..4 {
        assert!((x[k] - want[k]).abs() < 1e-15);
    }
    assert!((dot(&f.m, &x) - 1.0).abs() < 1e-15);
    assert!(matches!(surface_point_and_frame(0.0, 0.0, 1.0), Err(Gl4Error::InvalidInput(_))));
    assert!(matches!(surface_point_and_frame(FRAC_PI_2, 0.0, 1.0), Err(Gl4Error::InvalidInput(_))));
}

#[test]
fn ds_gamma_norm() {
    let mut r = rng(1);
    for _ in 0..200 {
        let s = r.random_range(0.1..FRAC_PI_2 - 0.1);
        let t = r.random_range(0.0..2.0 * PI);
        let h = 1e-5;
        let (gp, gm) = (gamma(s + h, t, 1.0), gamma(s - h, t, 1.0));
        let d: Vec<f64> = (0..4).map(|k| (gp[k] - gm[k]) / (2.0 * h)).collect();
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let want = (2.0 * s).sin().powf(-1.5);
        assert!((n - want).abs() < 1e-8 * want.max(1.0), "{s} {n} {want}");
    }
}

#[test]
fn frame_orthonormal_and_normal_to_tangents() {
    let mut r = rng(2);
    for _ in 0..200 {
        let s = r.random_range(0.05..FRAC_PI_2 - 0.05);
        let t = r.random_range(0.0..2.0 * PI);
        let eps = r.random_range(0.05..1.0);
        let f = frame(s, t);
        let v = [f.e1, f.e2, f.m, f.n];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&v[i], &v[j]) - want).abs() < 1e-14);
            }
        }
        let h = 1e-5;
        let ds: Vec4 = {
            let (a, b) = (gamma(s + h, t, eps), gamma(s - h, t, eps));
            [0, 1, 2, 3].map(|k| (a[k] - b[k]) / (2.0 * h))
        };
        let dt: Vec4 = {
            let (a, b) = (gamma(s, t + h, eps), gamma(s, t - h, eps));
            [0, 1, 2, 3].map(|k| (a[k] - b[k]) / (2.0 * h))
        };
        let (ns, nt) = (dot(&ds, &ds).sqrt(), dot(&dt, &dt).sqrt());
        for nu in [f.m, f.n] {
            assert!(dot(&nu, &ds).abs() < 1e-8 * ns);
            assert!(dot(&nu, &dt).abs() < 1e-8 * nt);
        }
        // e1 points along −∂_s, e2 along ∂_θ
        assert!((dot(&f.e1, &ds) + ns).abs() < 1e-7 * ns);
        assert!((dot(&f.e2, &dt) - nt).abs() < 1e-7 * nt);
    }
}

#[test]
fn map_t_examples() {
    let c = FermiCoords::new(0.7, 1.3, 0.0, 0.0, 0.4);
    let (y, g) = (map_t_cart(&c), gamma(0.7, 1.3, 0.4));
    assert!(dist(&y, &g) < 1e-15);
    let (a, b) = (0.3, -0.2);
    let y = map_t_cart(&FermiCoords::new(FRAC_PI_4, 0.0, a, b, 1.0));
    let h = FRAC_1_SQRT_2;
    let want = [h + a * h, -b * h, h + a * h, b * h];
    for k in 0..4 {
        assert!((y[k] - want[k]).abs() < 1e-15, "{y:?}");
    }
}

#[test]
fn round_trips_on_random_samples() {
    for eps in [1.0, 0.3, 0.1] {
        let r = check_epsilon(eps, 10_000, 0, 7);
        assert_eq!(r.failures, 0);
        assert!(r.max_roundtrip_st < 1e-9, "{r:?}");
        assert!(r.max_roundtrip_ts < 1e-9, "{r:?}");
        assert!(r.max_distance_error < 1e-9, "{r:?}");
    }
}

#[test]
fn dense_oracle_distance() {
    for eps in [1.0, 0.5] {
        let r = check_epsilon(eps, 6, 6, 11);
        assert!(r.max_dense_error < 1e-6, "{r:?}");
    }
}

#[test]
fn collinear_example() {
    let p = Point4::new(1.0, 0.0, 1.0, 0.0);
    let cp = closest_point(&p, 1.0).unwrap();
    assert_eq!(cp.params.len(), 1);
    let (s, t) = cp.params[0];
    assert!((s - FRAC_PI_4).abs() < 1e-14 && wrap(t).abs() < 1e-14);
    assert!((cp.distance - (2f64.sqrt() - 1.0)).abs() < 1e-14);
}

#[test]
fn two_point_onset_normalised() {
    for alpha in [0.0, 0.8, 2.0] {
        let pred = two_point_threshold(alpha, 1.0);
        let det = two_point_onset(alpha, 1.0, 0.98 * pred, 1.02 * pred, 1e-4).unwrap();
        assert!((det - pred).abs() < 3e-4, "{alpha} {det} {pred}");
        let below = closest_point(&Point4::new(pred - 1e-3, alpha, pred - 1e-3, 0.0), 1.0).unwrap();
        let above = closest_point(&Point4::new(pred + 1e-3, alpha, pred + 1e-3, 0.0), 1.0).unwrap();
        assert_eq!(below.params.len(), 1);
        assert_eq!(above.params.len(), 2);
    }
    assert!((two_point_threshold(0.0, 1.0) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn two_point_onset_unnormalised_surface() {
    // ε = 1/√2 turns Γ_ε into the surface (ρe^{iθ}, ρ⁻¹e^{iθ})
    let eps = FRAC_1_SQRT_2;
    for alpha in [0.0, 1.0, 2.5] {
        let want = (2.0 + 2.0 * f64::cos(alpha)).sqrt();
        let det = two_point_onset(alpha, eps, 0.98 * want, 1.02 * want, 1e-4).unwrap();
        assert!((det - want).abs() < 3e-4, "{alpha} {det} {want}");
        assert!((two_point_threshold(alpha, eps) - want).abs() < 1e-12);
    }
    let two = closest_point(&Point4::new(2.01, 0.0, 2.01, 0.0), eps).unwrap();
    let one = closest_point(&Point4::new(1.99, 0.0, 1.99, 0.0), eps).unwrap();
    assert_eq!((one.params.len(), two.params.len()), (1, 2));
}

#[test]
fn two_point_pair_is_reciprocal_and_ordered() {
    let p = Point4::new(3.0, 0.4, 3.0, 0.0);
    let cp = closest_point(&p, 1.0).unwrap();
    assert_eq!(cp.params.len(), 2);
    let (s1, s2) = (cp.params[0].0, cp.params[1].0);
    assert!(s1 < s2);
    assert!((s1 + s2 - FRAC_PI_2).abs() < 1e-13);
    let x = p.cartesian();
    let d: Vec<f64> = cp.params.iter().map(|&(s, t)| dist(&x, &gamma(s, t, 1.0))).collect();
    assert!((d[0] - d[1]).abs() < 1e-12);
    assert!(matches!(map_s(&p, 1.0), Err(Gl4Error::OutsideTube(_))));
}

#[test]
fn distance_example() {
    let c = FermiCoords::new(0.6, 2.0, 0.3, 0.4, 1.0);
    assert!(c.valid);
    let p = map_t(&c);
    let cp = closest_point(&p, 1.0).unwrap();
    assert!((cp.distance - 0.5).abs() < 1e-13);
    let s = map_s(&p, 1.0).unwrap();
    assert!((s.r() - 0.5).abs() < 1e-13);
    assert!((s.a - s.r() * s.phi().cos()).abs() < 1e-15);
}

#[test]
fn origin_limit() {
    let mut last = f64::INFINITY;
    for t in [1e-1, 1e-2, 1e-3, 1e-4] {
        let c = map_s(&Point4::new(t, 0.9, t, 0.2), 1.0).unwrap();
        let d = wrap(c.phi() - PI).abs();
        assert!(d < last);
        last = d;
    }
    assert!(last < 1e-3, "{last}");
    let z = map_s(&Point4::new(0.0, 0.0, 0.0, 0.0), 0.5).unwrap();
    assert!(!z.valid);
    assert!((z.a + 2.0).abs() < 1e-15 && z.b.abs() < 1e-15);
    assert!((z.phi() - PI).abs() < 1e-15);
    assert!(closest_point(&Point4::new(0.0, 0.0, 0.0, 0.0), 0.5).unwrap().degenerate);
}

#[test]
fn coordinates_outside_tube_are_not_recovered() {
    let c = FermiCoords::new(0.6, 0.0, 3.0, 0.0, 1.0);
    assert!(!c.valid);
    let back = map_s(&map_t(&c), 1.0).unwrap();
    assert!(back.valid);
    assert!((back.s - c.s).abs() > 1e-3 || (back.a - c.a).abs() > 1e-3);
    assert!(back.r() < c.r());
}

#[test]
fn symmetries_on_random_points() {
    let mut r = rng(3);
    let mut n = 0;
    while n < 500 {
        let c = random_coords(&mut r, 1.0, 0.5);
        let p = map_t(&c);
        let rep = normal_polar_symmetries(&p, 1.0).unwrap();
        if rep.partial {
            continue;
        }
        n += 1;
        for v in [rep.phi_theta_swap, rep.phi_rho_swap, rep.phi_reflect, rep.r_rho_swap, rep.r_theta_swap, rep.r_reflect] {
            assert!(v.abs() < 1e-9, "{rep:?}");
        }
    }
}

#[test]
fn symmetries_on_surface_are_trivial() {
    let (p, _) = surface_point_and_frame(0.5, 1.0, 1.0).unwrap();
    let c = map_s(&p, 1.0).unwrap();
    assert!(c.r() < 1e-13);
    let rep = normal_polar_symmetries(&p, 1.0).unwrap();
    assert_eq!(rep.phi_theta_swap, 0.0);
    assert_eq!(rep.phi_reflect, 0.0);
    assert!(rep.r_rho_swap.abs() < 1e-13);
}

#[test]
fn metric_examples() {
    let g = metric_at(FRAC_PI_4, 0.0, 0.0, 0.5);
    assert!((g[0][0] - 4.0).abs() < 1e-12);
    assert_eq!((g[2][2], g[3][3], g[1][2], g[1][3]), (1.0, 1.0, 0.0, 0.0));
    let mut r = rng(4);
    for _ in 0..500 {
        let e = r.random_range(0.1..1.0);
        let c = random_coords(&mut r, e, 0.9);
        let m = metric_matrix(&c).unwrap();
        let fd = metric_fd(&c);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                num = num.max((m.g[i][j] - fd[i][j]).abs());
                den = den.max(fd[i][j].abs());
            }
        }
        assert!(num / den < 1e-6, "{c:?}");
        assert!((m.g[1][2] + c.b * (2.0 * c.s).cos()).abs() < 1e-15);
        let det = to_na(&m.g).determinant();
        assert!((m.sqrt_g * m.sqrt_g - det).abs() < 1e-10 * det);
    }
}

#[test]
fn metric_derivatives_match_differences() {
    let mut r = rng(5);
    for _ in 0..100 {
        let c = random_coords(&mut r, 0.5, 0.9);
        let d = metric_derivatives(c.s, c.a, c.b, c.epsilon);
        let x = [c.s, c.theta, c.a, c.b];
        for k in [0, 2, 3] {
            let h = 1e-5 * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let gp = metric_at(xp[0], xp[2], xp[3], c.epsilon);
            let gm = metric_at(xm[0], xm[2], xm[3], c.epsilon);
            for i in 0..4 {
                for j in 0..4 {
                    let fd = (gp[i][j] - gm[i][j]) / (2.0 * h);
                    assert!((fd - d[k][i][j]).abs() < 1e-6 * (1.0 + fd.abs()), "{k} {i} {j} {fd} {}", d[k][i][j]);
                }
            }
        }
        assert!(d[1].iter().flatten().all(|v| *v == 0.0));
    }
}

#[test]
fn principal_curvatures_minimal() {
    let (km, kn) = principal_curvatures(FRAC_PI_4, 0.3, 0.1).unwrap();
    for k in [km, kn] {
        assert!((k[0] + 0.1).abs() < 1e-12 && (k[1] - 0.1).abs() < 1e-12);
    }
    let mut r = rng(6);
    for _ in 0..500 {
        let s = r.random_range(0.05..FRAC_PI_2 - 0.05);
        let t = r.random_range(0.0..2.0 * PI);
        let eps = r.random_range(0.05..1.0);
        let want = eps * (2.0 * s).sin().powf(1.5);
        let (km, kn) = principal_curvatures(s, t, eps).unwrap();
        for k in [km, kn] {
            assert!((k[0] + k[1]).abs() < 1e-8);
            assert!((k[1] - want).abs() < 1e-10 * want.max(1.0));
        }
    }
}

fn slope(eps: &[f64], err: &[f64]) -> f64 {
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn inverse_metric_expansion_order() {
    let eps = [0.2, 0.1, 0.05];
    for &(s, a, b) in &[(0.5, 0.3, -0.2), (1.0, -0.4, 0.5), (0.3, 0.2, 0.2)] {
        let err: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let x = geometry_expansions(&FermiCoords::new(s, 0.0, a, b, e)).unwrap();
                (x.inverse_exact[0][0] - x.inverse_expansion[0][0]).abs()
            })
            .collect();
        assert!(slope(&eps, &err) >= 3.5, "{s} {err:?}");
    }
}

#[test]
fn full_expansions_are_fourth_order() {
    let eps = [0.1, 0.05, 0.025];
    for &(s, a, b) in &[(0.5, 0.3, -0.2), (1.0, -0.4, 0.5)] {
        let mut ginv = Vec::new();
        let mut bj = Vec::new();
        let mut lg = Vec::new();
        for &e in &eps {
            let x = geometry_expansions(&FermiCoords::new(s, 0.0, a, b, e)).unwrap();
            let mut m = 0.0_f64;
            for i in 0..4 {
                for j in 0..4 {
                    m = m.max((x.inverse_exact[i][j] - x.inverse_expansion[i][j]).abs());
                }
            }
            ginv.push(m);
            bj.push((0..4).map(|j| (x.b_exact[j] - x.b_expansion[j]).abs()).fold(0.0, f64::max));
            lg.push((0..3).map(|j| (x.log_sqrt_g_exact[j] - x.log_sqrt_g_expansion[j]).abs()).fold(0.0, f64::max));
        }
        for e in [&ginv, &bj, &lg] {
            assert!(slope(&eps, e) > 3.7, "{ginv:?} {bj:?} {lg:?}");
        }
    }
}

#[test]
fn b_on_surface() {
    for &s in &[0.3, 0.6, 1.1] {
        for &e in &[0.2, 0.1] {
            let x = geometry_expansions(&FermiCoords::new(s, 0.0, 0.0, 0.0, e)).unwrap();
            let sigma = (2.0 * s).sin();
            let b1 = -2.0 * e * e * sigma * sigma * (2.0 * s).cos();
            assert!((x.b_exact[0] - b1).abs() < 10.0 * e.powi(4), "{s} {e} {:?}", x.b_exact);
            assert!(x.b_exact[1].abs() < 1e-12);
            assert!(x.b_exact[2].abs() < 1e-12 && x.b_exact[3].abs() < 1e-12);
        }
    }
}

#[test]
fn t_injective_on_samples() {
    let mut r = rng(8);
    let c: Vec<FermiCoords> = (0..1000).map(|_| random_coords(&mut r, 1.0, 0.9)).collect();
    let y: Vec<Vec4> = c.iter().map(map_t_cart).collect();
    for i in 0..c.len() {
        let j = (i * 7 + 1) % c.len();
        if i != j {
            assert!(dist(&y[i], &y[j]) > 0.0);
        }
    }
}

#[test]
fn closest_distance_is_lower_bound() {
    let mut r = rng(9);
    for _ in 0..20 {
        let p = Point4::new(r.random_range(0.0..3.0), r.random_range(0.0..6.3), r.random_range(0.0..3.0), r.random_range(0.0..6.3));
        let cp = closest_point(&p, 1.0).unwrap();
        let x = p.cartesian();
        for _ in 0..1000 {
            let q = gamma(r.random_range(1e-3..FRAC_PI_2 - 1e-3), r.random_range(0.0..2.0 * PI), 1.0);
            assert!(cp.distance <= dist(&x, &q) + 1e-13);
        }
    }
}

#[test]
fn swap_covariance() {
    let mut r = rng(10);
    for _ in 0..500 {
        let p = Point4::new(r.random_range(0.01..4.0), r.random_range(0.0..6.3), r.random_range(0.01..4.0), r.random_range(0.0..6.3));
        let q = Point4::new(p.rho2, p.theta2, p.rho1, p.theta1);
        let (a, b) = (closest_point(&p, 0.7).unwrap(), closest_point(&q, 0.7).unwrap());
        assert_eq!(a.params.len(), b.params.len());
        let (sa, ta) = a.params[0];
        let (sb, tb) = b.params[b.params.len() - 1];
        assert!((sa + sb - FRAC_PI_2).abs() < 1e-11, "{p:?}");
        assert!(wrap(ta - tb).abs() < 1e-9);
        assert!((a.distance - b.distance).abs() < 1e-12);
    }
}

#[test]
fn dense_oracle_agrees_on_surface_point() {
    let (p, _) = surface_point_and_frame(0.4, 2.0, 1.0).unwrap();
    assert!(dense_distance(&p, 1.0, 400, 400) < 1e-7);
}

proptest! {
    #[test]
    fn point4_round_trip(r1 in 1e-3f64..10.0, t1 in -3.1f64..3.1, r2 in 1e-3f64..10.0, t2 in -3.1f64..3.1) {
        let p = Point4::new(r1, t1, r2, t2);
        let q = Point4::from_cartesian(p.cartesian());
        prop_assert!((q.rho1 - r1).abs() < 1e-14 * r1.max(1.0));
        prop_assert!((q.rho2 - r2).abs() < 1e-14 * r2.max(1.0));
        prop_assert!((q.theta1 - t1).abs() < 1e-14 && (q.theta2 - t2).abs() < 1e-14);
    }

    #[test]
    fn valid_flag_matches_inequality(s in 0.01f64..1.56, a in -5.0f64..5.0, b in -5.0f64..5.0, eps in 0.05f64..2.0) {
        let c = FermiCoords::new(s, 0.0, a, b, eps);
        prop_assert_eq!(c.valid, a * a + b * b < 1.0 / (eps * eps * (2.0 * s).sin()));
        prop_assert!((c.r() * c.phi().cos() - a).abs() < 1e-12);
        prop_assert!((c.r() * c.phi().sin() - b).abs() < 1e-12);
    }

    #[test]
    fn s_after_t_is_identity(s in 0.1f64..1.47, t in 0.0f64..6.28, u in 0.0f64..0.9, phi in -3.1f64..3.1, eps in 0.05f64..1.5) {
        let rr = u / (eps * (2.0 * s).sin().sqrt());
        let c = FermiCoords::new(s, t, rr * phi.cos(), rr * phi.sin(), eps);
        let back = map_s(&map_t(&c), eps).unwrap();
        prop_assert!((back.s - s).abs() < 1e-9);
        prop_assert!(wrap(back.theta - t).abs() < 1e-9);
        prop_assert!((back.a - c.a).abs() < 1e-9 && (back.b - c.b).abs() < 1e-9);
    }
}
