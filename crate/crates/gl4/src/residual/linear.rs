//! The gauge-fixed linearization 𝕃 and the nonlinear remainder N(w) at the approximate solution.

use num_complex::Complex64;
use serde::Serialize;

use crate::fermi::MetricCalculus;
use crate::{Gl4Error, Result};

use super::approx::{operators, residual_from, ApproxField, FieldJets};
use super::jet::{CJet, Jet};

/// A correction w = (B, η) given by its jets at chart points.
pub trait Correction: Sync {
    fn jets(&self, x: [f64; 4]) -> (CJet, [Jet; 4]);
}

/// Gaussian bump about (a₀, b₀) in the normal disk, tangentially modulated:
/// η = t e^{−r²/2}(c₀ + c₁ a + i c₂ b)(1 + ½ sin θ), B_j = t e^{−r²/2} k_j (1 + ½ cos s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpCorrection {
    pub t: f64,
    pub centre: [f64; 2],
    pub eta: [f64; 3],
    pub form: [f64; 4],
}

impl BumpCorrection {
    pub fn standard() -> Self {
        BumpCorrection { t: 1.0, centre: [0.3, -0.2], eta: [0.4, 0.7, -0.5], form: [0.02, -0.03, 0.6, 0.45] }
    }

    pub fn scaled(&self, t: f64) -> Self {
        BumpCorrection { t: self.t * t, ..*self }
    }
}

impl Correction for BumpCorrection {
    fn jets(&self, x: [f64; 4]) -> (CJet, [Jet; 4]) {
        let s = Jet::var(0, x[0]);
        let th = Jet::var(1, x[1]);
        let a = Jet::var(2, x[2]);
        let b = Jet::var(3, x[3]);
        let da = a - Jet::constant(self.centre[0]);
        let db = b - Jet::constant(self.centre[1]);
        let r2 = da * da + db * db;
        let g = (r2 * -0.5).compose((-0.5 * r2.v).exp(), (-0.5 * r2.v).exp(), (-0.5 * r2.v).exp());
        let bump = g * self.t;
        let mod_t = Jet::constant(1.0) + th.sin() * 0.5;
        let mod_s = Jet::constant(1.0) + s.cos() * 0.5;
        let re = bump * (Jet::constant(self.eta[0]) + a * self.eta[1]) * mod_t;
        let im = bump * b * self.eta[2] * mod_t;
        let mut form = [Jet::default(); 4];
        for j in 0..4 {
            form[j] = bump * mod_s * self.form[j];
        }
        (CJet { re, im }, form)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Pair {
    pub form: [f64; 4],
    pub scalar: [f64; 2],
}

impl Pair {
    fn new(form: [f64; 4], scalar: Complex64) -> Self {
        Pair { form, scalar: [scalar.re, scalar.im] }
    }

    pub fn sup(&self) -> f64 {
        self.form.iter().chain(self.scalar.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, o: &Pair) -> Pair {
        let mut out = *self;
        for j in 0..4 {
            out.form[j] -= o.form[j];
        }
        out.scalar[0] -= o.scalar[0];
        out.scalar[1] -= o.scalar[1];
        out
    }

    pub fn add(&self, o: &Pair) -> Pair {
        let mut out = *self;
        for j in 0..4 {
            out.form[j] += o.form[j];
        }
        out.scalar[0] += o.scalar[0];
        out.scalar[1] += o.scalar[1];
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearNonlinear {
    pub linear: Pair,
    /// quadratic terms of the displayed N(w)
    pub quadratic: Pair,
    /// B|η|², λ|η|²η and |B|²η
    pub cubic: Pair,
}

impl LinearNonlinear {
    pub fn nonlinear(&self) -> Pair {
        self.quadratic.add(&self.cubic)
    }
}

/// Finite-difference step for dd*B.
pub const DD_STAR_STEP: f64 = 1e-4;

fn pair(gi: &[[f64; 4]; 4], x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let mut v = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            v += gi[i][j] * x[i] * y[j];
        }
    }
    v
}

fn pair_c(gi: &[[f64; 4]; 4], x: &[f64; 4], y: &[Complex64; 4]) -> Complex64 {
    let mut v = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            v += y[j] * (gi[i][j] * x[i]);
        }
    }
    v
}

fn with_fields(bg: &FieldJets, psi: CJet, a: [Jet; 4]) -> FieldJets {
    FieldJets { psi, a, ..bg.clone() }
}

fn vals(a: &[Jet; 4]) -> [f64; 4] {
    [a[0].v, a[1].v, a[2].v, a[3].v]
}

/// d*B at x.
fn dstar(field: &ApproxField, w: &dyn Correction, x: [f64; 4]) -> Result<f64> {
    let bg = field.fields(x)?;
    let mc = field.metric(x)?;
    let (eta, b) = w.jets(x);
    Ok(operators(&with_fields(&bg, eta, b), &mc).dstar_a)
}

/// d(d*B) by central differences, with the stencil kept inside the chart.
fn grad_dstar(field: &ApproxField, w: &dyn Correction, x: [f64; 4]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let h = DD_STAR_STEP * (1.0 + x[k].abs());
        let (mut xp, mut xm) = (x, x);
        xp[k] += h;
        xm[k] -= h;
        let (p, m) = match (dstar(field, w, xp), dstar(field, w, xm)) {
            (Ok(p), Ok(m)) => (p, m),
            _ => return Err(Gl4Error::invalid("difference stencil for dd*B leaves the chart")),
        };
        *o = (p - m) / (2.0 * h);
    }
    Ok(out)
}

struct Background {
    psi: Complex64,
    a: [f64; 4],
    cov_psi: [Complex64; 4],
    mc: MetricCalculus,
    bg: FieldJets,
}

fn background(field: &ApproxField, x: [f64; 4]) -> Result<Background> {
    let bg = field.fields(x)?;
    let mc = field.metric(x)?;
    let psi = bg.psi.value();
    let a = vals(&bg.a);
    let i = Complex64::new(0.0, 1.0);
    let mut cov_psi = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        cov_psi[j] = bg.psi.d(j) - i * a[j] * psi;
    }
    Ok(Background { psi, a, cov_psi, mc, bg })
}

/// 𝕃w and the quadratic and cubic parts of N(w) at chart point x.
pub fn linearized_and_nonlinear(field: &ApproxField, w: &dyn Correction, x: [f64; 4]) -> Result<LinearNonlinear> {
    let Background { psi, a, cov_psi, mc, bg } = background(field, x)?;
    let gi = &mc.ginv;
    let lam = field.lambda;
    let i = Complex64::new(0.0, 1.0);
    let (eta_j, b_j) = w.jets(x);
    let eta = eta_j.value();
    let b = vals(&b_j);

    let on_eta = operators(&with_fields(&bg, eta_j, bg.a), &mc);
    let lap_a_eta = on_eta.lap_psi + i * on_eta.dstar_a * eta - 2.0 * i * on_eta.a_dpsi - on_eta.a_sq * eta;
    let on_b = operators(&with_fields(&bg, eta_j, b_j), &mc);
    let dd = grad_dstar(field, w, x)?;

    let mut cov_eta = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        cov_eta[j] = eta_j.d(j) - i * a[j] * eta;
    }

    let mut lin_form = [0.0; 4];
    for j in 0..4 {
        lin_form[j] = on_b.dstar_da[j] + dd[j] + 2.0 * (cov_psi[j].conj() * eta).im + b[j] * psi.norm_sqr();
    }
    let lin_scalar = -lap_a_eta + 2.0 * i * pair_c(gi, &b, &cov_psi) + 0.5 * (lam - 1.0) * psi * psi * eta.conj()
        + (lam + 0.5) * psi.norm_sqr() * eta
        - 0.5 * lam * eta;

    let b2 = pair(gi, &b, &b);
    let mut q_form = [0.0; 4];
    let mut c_form = [0.0; 4];
    for j in 0..4 {
        q_form[j] = -(eta.conj() * cov_eta[j]).im + b[j] * 2.0 * (psi.conj() * eta).re;
        c_form[j] = b[j] * eta.norm_sqr();
    }
    let q_scalar = lam * (2.0 * psi * eta.conj() + psi.conj() * eta) * eta + b2 * psi
        + i * (-eta * (eta.conj() * psi).im + 2.0 * pair_c(gi, &b, &cov_eta));
    let c_scalar = lam * eta.norm_sqr() * eta + b2 * eta;

    Ok(LinearNonlinear {
        linear: Pair::new(lin_form, lin_scalar),
        quadratic: Pair::new(q_form, q_scalar),
        cubic: Pair::new(c_form, c_scalar),
    })
}

/// F(u + w) + TT*(w) − F(u) at x, assembled from the full operators, with T* = d*B − Im(η̄ψ̃).
pub fn exact_increment(field: &ApproxField, w: &dyn Correction, x: [f64; 4]) -> Result<Pair> {
    let Background { psi, mc, bg, .. } = background(field, x)?;
    let (eta_j, b_j) = w.jets(x);
    let eta = eta_j.value();
    let mut sum_a = [Jet::default(); 4];
    for j in 0..4 {
        sum_a[j] = bg.a[j] + b_j[j];
    }
    let sum_psi = CJet { re: bg.psi.re + eta_j.re, im: bg.psi.im + eta_j.im };
    let base = residual_from(&bg, &mc, field.lambda);
    let full = residual_from(&with_fields(&bg, sum_psi, sum_a), &mc, field.lambda);
    let on_b = operators(&with_fields(&bg, eta_j, b_j), &mc);
    let dd = grad_dstar(field, w, x)?;
    // Im(η̄ψ) as a jet for its differential
    let cross = CJet { re: eta_j.re, im: eta_j.im * -1.0 }.mul(&bg.psi).im;
    let tstar = on_b.dstar_a - cross.v;
    let i = Complex64::new(0.0, 1.0);
    let mut form = [0.0; 4];
    for j in 0..4 {
        form[j] = full.f_a[j] - base.f_a[j] + dd[j] - cross.d[j];
    }
    let scalar = full.f_psi - base.f_psi + i * (psi + eta) * tstar;
    Ok(Pair::new(form, scalar))
}

/// The remainder the expansion actually produces, with the potential terms carrying λ/2.
pub fn corrected_nonlinear(field: &ApproxField, w: &dyn Correction, x: [f64; 4]) -> Result<Pair> {
    let Background { psi, a, mc, .. } = background(field, x)?;
    let gi = &mc.ginv;
    let half = 0.5 * field.lambda;
    let i = Complex64::new(0.0, 1.0);
    let (eta_j, b_j) = w.jets(x);
    let eta = eta_j.value();
    let b = vals(&b_j);
    let mut cov_eta = [Complex64::new(0.0, 0.0); 4];
    let mut form = [0.0; 4];
    for j in 0..4 {
        cov_eta[j] = eta_j.d(j) - i * a[j] * eta;
        form[j] = -(eta.conj() * cov_eta[j]).im + b[j] * (2.0 * (psi.conj() * eta).re + eta.norm_sqr());
    }
    let b2 = pair(gi, &b, &b);
    let scalar = half * (2.0 * psi * eta.conj() + psi.conj() * eta + eta.norm_sqr()) * eta
        + b2 * (psi + eta)
        + i * (-eta * (eta.conj() * psi).im + 2.0 * pair_c(gi, &b, &cov_eta));
    Ok(Pair::new(form, scalar))
}
