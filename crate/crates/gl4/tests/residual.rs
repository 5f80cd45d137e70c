use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use gl4::fermi::{metric_calculus, Point4};
use gl4::jacobi::{linspace, loglog_slope, Chart, NormalField};
use gl4::residual::jet::{CJet, Jet};
use gl4::residual::*;
use gl4::vortex::{reduction_coefficients, solve_profile, VortexProfile};
use gl4::Gl4Error;
use proptest::prelude::*;

fn profile() -> &'static VortexProfile {
    static P: OnceLock<VortexProfile> = OnceLock::new();
    P.get_or_init(|| solve_profile(1.0, 30.0, 3001).unwrap())
}

const NODE: [f64; 4] = [0.6, 0.4, 0.7, -0.45];
const EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn term_slope(pert: &dyn Perturbation, x: [f64; 4], name: &str) -> (Vec<f64>, f64) {
    let m: Vec<f64> = EPS
        .iter()
        .map(|&e| {
            let f = ApproxField::new(e, profile(), pert, Cutoffs::Paper).unwrap();
            residual_components(&f, x).unwrap().term(name).unwrap().mismatch()
        })
        .collect();
    let s = loglog_slope(&EPS, &m);
    (m, s)
}

#[test]
fn build_approximate_examples() {
    let p = profile();
    let fg = NormalField::zeros(Chart::S, linspace(0.2, FRAC_PI_2 - 0.2, 12), 8);
    let spec = ChartSpec { footprints: vec![(5, 0)], half_width: 1.0, n_ab: 3, cutoffs: Cutoffs::Paper };
    let chart = build_approximate(&fg, 0.1, p, &spec).unwrap();
    assert_eq!(chart.nodes.len(), 9);
    let centre = &chart.nodes[4];
    assert_eq!((centre.a, centre.b), (0.0, 0.0));
    assert!(centre.psi[0].abs() < 1e-15 && centre.psi[1].abs() < 1e-15);
    let top = &chart.nodes[5];
    assert_eq!((top.a, top.b), (0.0, 1.0));
    assert!((top.r_tilde - 1.0).abs() < 1e-15);
    assert!((top.phi_tilde - FRAC_PI_2).abs() < 1e-15);
    let u1 = p.eval(1.0).u;
    assert!(top.psi[0].abs() < 1e-14);
    assert!((top.psi[1] - u1).abs() < 1e-12, "{} vs {u1}", top.psi[1]);
    // A₃ = −(V/r̃) sin φ̃, A₄ = (V/r̃) cos φ̃
    let v1 = p.eval(1.0).v;
    assert!((top.a_form[2] + v1).abs() < 1e-12);
    assert!(top.a_form[3].abs() < 1e-12);
}

#[test]
fn build_approximate_rejects_charts_beyond_the_tube() {
    let fg = NormalField::zeros(Chart::S, linspace(0.2, FRAC_PI_2 - 0.2, 12), 8);
    let spec = ChartSpec { footprints: vec![(5, 0)], half_width: 12.0, n_ab: 5, cutoffs: Cutoffs::Paper };
    assert!(matches!(build_approximate(&fg, 0.1, profile(), &spec), Err(Gl4Error::InvalidInput(_))));
    let spec = ChartSpec { footprints: vec![(50, 0)], half_width: 1.0, n_ab: 3, cutoffs: Cutoffs::Paper };
    assert!(build_approximate(&fg, 0.1, profile(), &spec).is_err());
}

#[test]
fn zeta_band_modulus_sits_between_profile_and_one() {
    let p = profile();
    let e = 0.1;
    let s: f64 = 0.7;
    let field = ApproxField::new(e, p, &ZeroPerturbation, Cutoffs::Paper).unwrap();
    let e2s = e * e * (2.0 * s).sin();
    for k in 0..40 {
        let y = ZETA_BAND.0 + (ZETA_BAND.1 - ZETA_BAND.0) * (k as f64 + 0.5) / 40.0;
        let r = (y / e2s).sqrt();
        let fj = field.fields([s, 0.3, r * 0.6, r * 0.8]).unwrap();
        let m = fj.psi.value().norm();
        let u = p.eval(r).u;
        assert!(m <= 1.0 + 1e-14 && m >= u - 1e-14);
        assert!((m - 1.0).abs() <= (u - 1.0).abs() + 1e-14);
        assert!(fj.zeta1 > 0.0 && fj.zeta1 < 1.0);
    }
}

#[test]
fn flat_limit_of_the_laplacian() {
    // at a = b = 0 and f = g = 0 only the flat vortex Laplacian survives as ε → 0
    let pp = profile();
    let x = [0.7, 0.2, 0.8, 0.3];
    let mut prev = f64::INFINITY;
    for &e in &[0.1, 0.05, 0.025] {
        let field = ApproxField::new(e, pp, &ZeroPerturbation, Cutoffs::Paper).unwrap();
        let fj = field.fields(x).unwrap();
        let mc = field.metric(x).unwrap();
        let op = operators(&fj, &mc);
        let flat = -(fj.psi.h(2, 2) + fj.psi.h(3, 3));
        let d = (-op.lap_psi - flat).norm();
        assert!(d < 2.0 * e * e, "ε={e}: {d}");
        assert!(d < prev);
        prev = d;
    }
}

#[test]
fn laplacian_divergence_and_pairing_expansions() {
    let pert = TrigPerturbation::standard();
    for name in ["neg_lap_psi_completed", "dstar_a", "a_dpsi"] {
        let (m, s) = term_slope(&pert, NODE, name);
        assert!(s >= 3.5, "{name}: slope {s}, {m:?}");
    }
}

#[test]
fn displayed_laplacian_stops_at_second_order() {
    // the display drops its ε³ terms, so the remainder is O(ε³)
    let (m, s) = term_slope(&TrigPerturbation::standard(), NODE, "neg_lap_psi");
    assert!(s > 2.3 && s < 3.3, "slope {s}, {m:?}");
}

#[test]
fn curl_components_on_the_equator() {
    let x = [FRAC_PI_4, 0.4, 0.7, -0.45];
    for name in ["dstar_da_3", "dstar_da_4"] {
        let (m, s) = term_slope(&TrigPerturbation::standard(), x, name);
        assert!(s >= 3.5, "{name}: slope {s}, {m:?}");
    }
    // with cos 2s = 0 the tangential components are exact for f = g = 0
    for name in ["dstar_da_1", "dstar_da_2"] {
        let (m, _) = term_slope(&ZeroPerturbation, x, name);
        assert!(m.iter().all(|v| *v < 1e-15), "{name}: {m:?}");
    }
}

#[test]
fn curl_expansion_misses_cos2s_terms_off_the_equator() {
    let (m, _) = term_slope(&ZeroPerturbation, NODE, "dstar_da_2");
    assert!(m.iter().all(|v| *v > 0.2 && *v < 0.35), "{m:?}");
    let (m, s) = term_slope(&ZeroPerturbation, NODE, "dstar_da_3");
    assert!(s < 2.5 && m[3] < 1e-4, "slope {s}, {m:?}");
}

/// (d*dA)_j by nested central differences of A through the metric, −g_{jl}(1/√g)∂_i(√g F^{il}).
fn curl_oracle(field: &ApproxField, x: [f64; 4]) -> [f64; 4] {
    let a_at = |y: [f64; 4]| {
        let fj = field.fields(y).unwrap();
        [fj.a[0].v, fj.a[1].v, fj.a[2].v, fj.a[3].v]
    };
    let h1 = 1e-4;
    let upper = |y: [f64; 4]| {
        let mut da = [[0.0; 4]; 4];
        for k in 0..4 {
            let (mut p, mut m) = (y, y);
            p[k] += h1;
            m[k] -= h1;
            let (ap, am) = (a_at(p), a_at(m));
            for l in 0..4 {
                da[k][l] = (ap[l] - am[l]) / (2.0 * h1);
            }
        }
        let mc = metric_calculus(y[0], y[2], y[3], field.epsilon).unwrap();
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for l in 0..4 {
                let mut v = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        v += mc.ginv[i][a] * mc.ginv[l][b] * (da[a][b] - da[b][a]);
                    }
                }
                out[i][l] = mc.sqrt_g * v;
            }
        }
        out
    };
    let h2 = 1e-3;
    let mut div = [0.0; 4];
    for i in 0..4 {
        let (mut p, mut m) = (x, x);
        p[i] += h2;
        m[i] -= h2;
        let (gp, gm) = (upper(p), upper(m));
        for l in 0..4 {
            div[l] += (gp[i][l] - gm[i][l]) / (2.0 * h2);
        }
    }
    let mc = metric_calculus(x[0], x[2], x[3], field.epsilon).unwrap();
    std::array::from_fn(|j| -(0..4).map(|l| mc.g[j][l] * div[l]).sum::<f64>() / mc.sqrt_g)
}

#[test]
fn curl_operator_matches_difference_oracle() {
    let pert = TrigPerturbation::standard();
    for (e, x) in [(0.2, NODE), (0.1, [0.9, 1.7, -1.2, 0.5]), (0.3, [0.4, 3.0, 0.3, 0.9])] {
        let field = ApproxField::new(e, profile(), &pert, Cutoffs::Paper).unwrap();
        let fj = field.fields(x).unwrap();
        let mc = field.metric(x).unwrap();
        let direct = operators(&fj, &mc).dstar_da;
        let oracle = curl_oracle(&field, x);
        for j in 0..4 {
            assert!((direct[j] - oracle[j]).abs() < 2e-5 * (1.0 + direct[j].abs()), "ε={e} j={j}: {direct:?} vs {oracle:?}");
        }
    }
}

#[test]
fn components_reject_the_cutoff_band_and_the_centre() {
    let pert = TrigPerturbation::standard();
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    assert!(matches!(residual_components(&field, [0.6, 0.4, 2.8, 0.0]), Err(Gl4Error::UnsupportedRegion(_))));
    let zero = ApproxField::new(0.1, profile(), &ZeroPerturbation, Cutoffs::Paper).unwrap();
    assert!(matches!(residual_components(&zero, [0.6, 0.4, 0.0, 0.0]), Err(Gl4Error::InvalidInput(_))));
    let g = TestGauge { alpha: 0.2, beta: 0.1 };
    let gauged = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap().with_gauge(&g);
    assert!(residual_components(&gauged, NODE).is_err());
}

fn unit_interval() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn current_identities_are_exact(s in 0.3..1.2f64, th in 0.0..6.28f64, a in unit_interval(), b in unit_interval(), e in 0.02..0.2f64) {
        prop_assume!(a.hypot(b) > 0.05);
        let pert = TrigPerturbation::standard();
        let field = ApproxField::new(e, profile(), &pert, Cutoffs::Paper).unwrap();
        let c = residual_components(&field, [s, th, a, b]).unwrap();
        for name in ["im_cov_1", "im_cov_2", "im_cov_3", "im_cov_4", "a_13", "a_23"] {
            let t = c.term(name).unwrap();
            prop_assert!(t.mismatch() < 1e-13 * (1.0 + t.direct[0].abs()), "{name}: {:?} vs {:?}", t.closed, t.direct);
        }
    }

    #[test]
    fn modulus_stays_below_one(s in 0.2..1.35f64, a in -8.0..8.0f64, b in -8.0..8.0f64) {
        let pert = TrigPerturbation::standard();
        let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
        prop_assume!(field.y_of(s, a, b) <= CHART_LIMIT);
        let fj = field.fields([s, 0.7, a, b]).unwrap();
        prop_assert!(fj.psi.value().norm() <= 1.0 + 1e-12);
        prop_assert!(fj.chi >= 0.0 && fj.chi <= 1.0);
    }
}

struct Sum<'a>(&'a dyn Correction, f64, &'a dyn Correction, f64);

impl Correction for Sum<'_> {
    fn jets(&self, x: [f64; 4]) -> (CJet, [Jet; 4]) {
        let (e1, b1) = self.0.jets(x);
        let (e2, b2) = self.2.jets(x);
        let eta = CJet { re: e1.re * self.1 + e2.re * self.3, im: e1.im * self.1 + e2.im * self.3 };
        (eta, std::array::from_fn(|j| b1[j] * self.1 + b2[j] * self.3))
    }
}

fn second_bump() -> BumpCorrection {
    BumpCorrection { t: 0.7, centre: [-0.4, 0.5], eta: [-0.3, 0.2, 0.9], form: [0.05, 0.01, -0.4, 0.8] }
}

const W_NODE: [f64; 4] = [0.7, 1.3, 0.4, 0.6];

#[test]
fn zero_correction_has_no_nonlinear_part() {
    let pert = TrigPerturbation::standard();
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    let r = linearized_and_nonlinear(&field, &BumpCorrection::standard().scaled(0.0), W_NODE).unwrap();
    assert_eq!(r.nonlinear().sup(), 0.0);
    assert_eq!(r.linear.sup(), 0.0);
}

#[test]
fn quadratic_and_cubic_parts_scale() {
    let pert = TrigPerturbation::standard();
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    let w = BumpCorrection::standard();
    let r2 = linearized_and_nonlinear(&field, &w.scaled(1e-2), W_NODE).unwrap();
    let r3 = linearized_and_nonlinear(&field, &w.scaled(1e-3), W_NODE).unwrap();
    let q = (r2.quadratic.sup() / 1e-4) / (r3.quadratic.sup() / 1e-6);
    let c = (r2.cubic.sup() / 1e-6) / (r3.cubic.sup() / 1e-9);
    assert!((q - 1.0).abs() < 0.01, "{q}");
    assert!((c - 1.0).abs() < 0.01, "{c}");
    assert!(r2.quadratic.sup() > 0.0 && r2.cubic.sup() > 0.0);
}

#[test]
fn linearization_is_the_derivative_of_the_residual() {
    let pert = TrigPerturbation::standard();
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    let w = BumpCorrection::standard();
    let mut ratios = Vec::new();
    for t in [1e-2, 5e-3] {
        let wt = w.scaled(t);
        let exact = exact_increment(&field, &wt, W_NODE).unwrap();
        let lin = linearized_and_nonlinear(&field, &wt, W_NODE).unwrap().linear;
        ratios.push(exact.sub(&lin).sup() / (t * t));
    }
    assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.05, "{ratios:?}");
}

#[test]
fn remainder_is_exact_with_half_lambda_potential() {
    let pert = TrigPerturbation::standard();
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    for w in [BumpCorrection::standard().scaled(0.3), second_bump()] {
        let exact = exact_increment(&field, &w, W_NODE).unwrap();
        let r = linearized_and_nonlinear(&field, &w, W_NODE).unwrap();
        let n = corrected_nonlinear(&field, &w, W_NODE).unwrap();
        let gap = exact.sub(&r.linear).sub(&n);
        assert!(gap.sup() < 1e-7 * (1.0 + exact.sup()), "{gap:?}");
        // the displayed form row is already exact
        let shown = r.nonlinear();
        for j in 0..4 {
            assert!((shown.form[j] - n.form[j]).abs() < 1e-12 * (1.0 + n.form[j].abs()));
        }
        // ... while λ in place of λ/2 leaves a visible scalar gap
        let d = ((shown.scalar[0] - n.scalar[0]).powi(2) + (shown.scalar[1] - n.scalar[1]).powi(2)).sqrt();
        assert!(d > 1e-4, "{d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linearization_is_linear(al in -2.0..2.0f64, be in -2.0..2.0f64) {
        let pert = TrigPerturbation::standard();
        let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
        let (w1, w2) = (BumpCorrection::standard(), second_bump());
        let l1 = linearized_and_nonlinear(&field, &w1, W_NODE).unwrap().linear;
        let l2 = linearized_and_nonlinear(&field, &w2, W_NODE).unwrap().linear;
        let ls = linearized_and_nonlinear(&field, &Sum(&w1, al, &w2, be), W_NODE).unwrap().linear;
        let mut comb = l1;
        for j in 0..4 {
            comb.form[j] = al * l1.form[j] + be * l2.form[j];
        }
        for k in 0..2 {
            comb.scalar[k] = al * l1.scalar[k] + be * l2.scalar[k];
        }
        prop_assert!(ls.sub(&comb).sup() < 1e-9 * (1.0 + comb.sup()));
    }
}

fn samples_of(s: f64, h: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> FootprintSamples {
    let corner = -0.5 * (n - 1) as f64 * h;
    let values = (0..n * n)
        .map(|k| {
            let (a, b) = (corner + (k / n) as f64 * h, corner + (k % n) as f64 * h);
            [f(a, b), 0.0, 0.0]
        })
        .collect();
    FootprintSamples { s, theta: 0.0, corner, h, n, values }
}

/// sup over the same lattice centres of ρ²e^{δ|c|}(∫_{|z|<1} |h(c+z)|^q π(1−|z|²) dz)^{1/q}, polar Gauss-Legendre
fn ball_oracle(fp: &FootprintSamples, f: &dyn Fn(f64, f64) -> f64, delta: f64, q: f64) -> f64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
    let nodes = gl.as_node_weight_pairs();
    let rho2 = 1.0 / (2.0 * fp.s).sin();
    let stride = (1.0 / fp.h).round() as usize;
    let reach = (1.0 / fp.h).ceil() as usize;
    let mut best = 0.0_f64;
    for ci in (reach..fp.n - reach).step_by(stride) {
        for cj in (reach..fp.n - reach).step_by(stride) {
            let (a0, b0) = (fp.coord(ci), fp.coord(cj));
            let mut acc = 0.0;
            for &(x, wr) in nodes {
                let r = 0.5 * (x + 1.0);
                for k in 0..128 {
                    let ph = 2.0 * PI * k as f64 / 128.0;
                    let v = f(a0 + r * ph.cos(), b0 + r * ph.sin()).abs();
                    acc += v.powf(q) * PI * (1.0 - r * r) * r * 0.5 * wr * 2.0 * PI / 128.0;
                }
            }
            best = best.max(rho2 * (delta * a0.hypot(b0)).exp() * acc.powf(1.0 / q));
        }
    }
    best
}

#[test]
fn weighted_norm_of_the_weight_itself() {
    let (s, delta, q): (f64, f64, f64) = (0.6, 0.5, DEFAULT_Q);
    let f = move |a: f64, b: f64| (-delta * a.hypot(b)).exp() * (2.0 * s).sin();
    let fp = samples_of(s, 0.05, 161, f);
    let got = ball_norm(std::slice::from_ref(&fp), NormKind::StarStar, delta, q).unwrap();
    let oracle = ball_oracle(&fp, &f, delta, q);
    assert!((got / oracle - 1.0).abs() < 0.02, "{got} vs {oracle}");
    // |B₁|^{1/q} up to the e^{±δ} spread across one ball
    let b1 = (PI * PI / 2.0).powf(1.0 / q);
    assert!(got > b1 * (-delta).exp() && got < b1 * delta.exp(), "{got} vs {b1}");
}

#[test]
fn weighted_norm_edge_cases() {
    let fp = samples_of(0.6, 0.1, 41, |_, _| 0.0);
    assert_eq!(ball_norm(std::slice::from_ref(&fp), NormKind::Star, 0.5, 1.9).unwrap(), 0.0);
    for q in [1.0, 2.0, 2.5, 0.5] {
        assert!(matches!(ball_norm(std::slice::from_ref(&fp), NormKind::StarStar, 0.5, q), Err(Gl4Error::InvalidInput(_))));
    }
    assert!(check_delta(0.5, 1.0).is_ok());
    assert!(check_delta(1.0, 1.0).is_err());
    assert!(check_delta(0.0, 1.0).is_err());
    let field = ApproxField::new(0.1, profile(), &ZeroPerturbation, Cutoffs::Paper).unwrap();
    assert!(residual_norm(&field, &[(0.6, 0.0)], 0.1, 1.5, 1.9).is_err());
}

#[test]
fn residual_norm_is_finite_at_tenth() {
    let pert = TrigPerturbation::standard().scaled(0.5);
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    let n = residual_norm(&field, &[(FRAC_PI_4, 0.0), (0.6, 0.5)], 0.1, 0.5, DEFAULT_Q).unwrap();
    assert!(n.total.is_finite() && n.total > 0.0);
    assert!((n.total - n.form - n.scalar).abs() < 1e-15 * n.total);
}

#[test]
fn surface_norm_of_a_decaying_field() {
    let t = linspace(-4.0, 4.0, 161);
    let nf = NormalField::sample(Chart::T, t, 16, |t: f64, th: f64| {
        let rho2 = (2.0 * t).cosh();
        (rho2.powf(-1.5) * th.cos(), 0.0)
    });
    let n0 = surface_norm(&nf, NormKind::Surface0 { k: 1.0 }, 1.9).unwrap();
    let n2 = surface_norm(&nf, NormKind::Surface2 { k: 1.0 }, 1.9).unwrap();
    assert!(n0 > 0.0 && n2 > n0);
    let zero = NormalField::zeros(Chart::T, linspace(-4.0, 4.0, 161), 16);
    assert_eq!(surface_norm(&zero, NormKind::Surface2 { k: 1.0 }, 1.9).unwrap(), 0.0);
    assert!(surface_norm(&nf, NormKind::Surface0 { k: 1.0 }, 2.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ball_norm_is_homogeneous(c in 0.01..10.0f64, k in 0.1..2.0f64) {
        let f = move |a: f64, b: f64| (a * k).sin() * (-0.3 * (a * a + b * b)).exp();
        let fp = samples_of(0.8, 0.1, 61, f);
        let mut scaled = fp.clone();
        for v in scaled.values.iter_mut() {
            v[0] *= c;
        }
        let n1 = ball_norm(std::slice::from_ref(&fp), NormKind::StarStar, 0.4, 1.5).unwrap();
        let n2 = ball_norm(std::slice::from_ref(&scaled), NormKind::StarStar, 0.4, 1.5).unwrap();
        prop_assert!((n2 - c * n1).abs() < 1e-12 * n2.max(1e-300));
    }
}

#[test]
fn projection_quadrature_is_linear_and_converged() {
    let pert = TrigPerturbation::standard().scaled(0.5);
    let field = ApproxField::new(0.1, profile(), &pert, Cutoffs::Paper).unwrap();
    let quad = Quadrature::default();
    let sep = disk_integral(&field, 0.6, 0.5, &quad, &|r| [r.projection_density(0), r.projection_density(1)]).unwrap();
    let sum = disk_integral(&field, 0.6, 0.5, &quad, &|r| [r.projection_density(0) + r.projection_density(1)]).unwrap();
    assert!((sum[0] - sep[0] - sep[1]).abs() < 1e-15 + 1e-12 * sum[0].abs());
    let p = kernel_projection(&field, 0.6, 0.5, &quad).unwrap();
    assert!(p.error[0] < 1e-5 && p.error[1] < 1e-5, "{:?}", p.error);
}

#[test]
fn unperturbed_projections_are_third_order_and_symmetric() {
    // with f = g = 0 the second projection vanishes by the reflection b → −b
    let q = Quadrature::default();
    let mut first = Vec::new();
    let eps = [0.1, 0.05, 0.025];
    for &e in &eps {
        let field = ApproxField::new(e, profile(), &ZeroPerturbation, Cutoffs::Paper).unwrap();
        let p = kernel_projection(&field, 0.6, 0.0, &q).unwrap();
        assert!(p.value[1].abs() < 1e-12, "{:?}", p.value);
        first.push(p.value[0].abs());
    }
    let s = loglog_slope(&eps[1..], &first[1..]);
    assert!((s - 3.0).abs() < 0.2, "{s} {first:?}");
}

#[test]
fn projections_are_gauge_invariant() {
    let pert = TrigPerturbation::standard().scaled(0.5);
    let g = TestGauge { alpha: 0.4, beta: 0.25 };
    let d = gauge_projection_shift(&pert, profile(), &g, 0.1, 0.6, 0.5, &Quadrature::default()).unwrap();
    assert!(d[0] < 1e-10 && d[1] < 1e-10, "{d:?}");
}

#[test]
fn scaling_check_rejects_bad_epsilon_lists() {
    let cfg = ReductionConfig { skip_norm: true, ..Default::default() };
    let p = TrigPerturbation::standard();
    for eps in [vec![0.2, 0.1], vec![0.2, 0.15, 0.1], vec![0.1, 0.2, 0.4], vec![0.2, 0.1, -0.05]] {
        assert!(matches!(reduction_scaling_check(&p, profile(), &eps, &cfg), Err(Gl4Error::InvalidInput(_))), "{eps:?}");
    }
}

#[test]
fn jacobi_part_of_the_projections_converges() {
    let cfg = ReductionConfig { skip_norm: true, ..Default::default() };
    let p = TrigPerturbation::standard().scaled(0.5);
    let rep = reduction_scaling_check(&p, profile(), &[0.2, 0.1, 0.05], &cfg).unwrap();
    assert!(rep.slopes.mismatch_lh >= 3.5, "{:?}", rep.mismatch_lh);
    assert!(rep.slopes.overlap >= 1.7, "{:?}", rep.overlap);
    assert_eq!(rep.projections.len(), 3);
    assert!(rep.f_norm.iter().all(Option::is_none));
    let w = reduction_coefficients(profile()).jacobi_weight();
    let e = &rep.projections[2][0];
    let pred = predicted_projection(&rep.coefficients, e.lh, e.s, 0.05);
    assert_eq!(pred[1], 0.05f64.powi(3) * w * e.lh[1]);
    let json = serde_json::to_value(&rep).unwrap();
    for k in ["epsilon", "F_norm", "projections", "mismatch", "slopes"] {
        assert!(json.get(k).is_some(), "{k}");
    }
}

fn light_quadrature() -> OmegaQuadrature {
    OmegaQuadrature { rho_cut: 50.0, n_u: 400, n_theta: 256, n_loop: 64 }
}

#[test]
fn omega_winding_of_linking_and_free_loops() {
    let q = light_quadrature();
    let link = omega_winding(&LoopSpec::NormalCircle { s: FRAC_PI_4, theta: 0.0, radius: 0.1, offset: [0.0, 0.0] }, &q).unwrap();
    assert!((link.winding - 1.0).abs() < 0.01, "{link:?}");
    assert!(link.tail_bound < 0.01 * 2.0 * PI);
    let free = omega_winding(&LoopSpec::NormalCircle { s: FRAC_PI_4, theta: 0.0, radius: 0.1, offset: [0.5, 0.0] }, &q).unwrap();
    assert!(free.winding.abs() < 0.01, "{free:?}");
    let square = LoopSpec::Points(vec![[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0], [2.0, 1.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]);
    let sq = omega_winding(&square, &q).unwrap();
    assert!(sq.winding.abs() < 0.01, "{sq:?}");
}

#[test]
fn omega_rejects_bad_loops() {
    let q = light_quadrature();
    let on = LoopSpec::NormalCircle { s: FRAC_PI_4, theta: 0.0, radius: 0.1, offset: [0.1, 0.0] };
    assert!(matches!(omega_winding(&on, &q), Err(Gl4Error::InvalidInput(_))));
    let far = LoopSpec::Points(vec![[30.0, 0.0, 0.0, 0.0], [31.0, 0.0, 0.0, 0.0], [31.0, 1.0, 0.0, 0.0]]);
    assert!(matches!(omega_winding(&far, &q), Err(Gl4Error::InvalidInput(_))));
    assert!(omega_winding(&LoopSpec::Points(vec![[1.0, 0.0, 0.0, 0.0]; 2]), &q).is_err());
}

#[test]
fn omega_annihilates_the_diagonal_rotation() {
    let q = light_quadrature();
    let pts = [Point4::new(0.3, 0.2, 0.3, 1.1), Point4::new(1.5, -0.4, 1.5, 2.0)];
    for c in span_check(&pts, &q).unwrap() {
        let [r1, r2, t1, t2] = c.components;
        let scale = c.components.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((t1 + t2).abs() < 1e-10 * scale, "{c:?}");
        assert!((r1 - r2).abs() < 1e-10 * scale, "{c:?}");
        assert!(c.mirrored_defect < 1e-10);
        assert!(c.defect > 1.0);
    }
    assert!(span_check(&[Point4::new(0.3, 0.0, 0.4, 0.0)], &q).is_err());
}
