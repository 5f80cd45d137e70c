//! The approximate solution around Γ_ε in Fermi charts and its Ginzburg-Landau residual F(u).

use num_complex::Complex64;
use serde::Serialize;

use crate::fermi::{metric_calculus, MetricCalculus};
use crate::jacobi::NormalField;
use crate::vortex::VortexProfile;
use crate::{Gl4Error, Result};

use super::jet::{CJet, Jet};
use super::pert::{GridPerturbation, PertJet, Perturbation};

/// ζ₁ runs from 1 to 0 over r²ε²σ ∈ [1/16, 1/4]; χ over [1/4, 1/2].
pub const ZETA_BAND: (f64, f64) = (1.0 / 16.0, 0.25);
pub const CHI_BAND: (f64, f64) = (0.25, 0.5);
/// Largest r²ε²σ accepted in a chart.
pub const CHART_LIMIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cutoffs {
    /// ζ₁, ζ₂ and χ as quintic smoothsteps.
    Paper,
    /// ζ₁ = χ = 1 throughout the chart.
    None,
}

/// Quintic smoothstep from 0 at lo to 1 at hi, with first and second derivatives.
pub fn smoothstep(y: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let w = hi - lo;
    let t = (y - lo) / w;
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
    let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
    (s, ds, dds)
}

/// Smooth gauge function v with jets of v and of each ∂_j v.
pub trait Gauge: Sync {
    fn jets(&self, x: [f64; 4]) -> (Jet, [Jet; 4]);
}

/// v = α sin(a) cos(b) + β s
#[derive(Debug, Clone, Copy)]
pub struct TestGauge {
    pub alpha: f64,
    pub beta: f64,
}

impl Gauge for TestGauge {
    fn jets(&self, x: [f64; 4]) -> (Jet, [Jet; 4]) {
        let a = Jet::var(2, x[2]);
        let b = Jet::var(3, x[3]);
        let s = Jet::var(0, x[0]);
        let v = a.sin() * b.cos() * self.alpha + s * self.beta;
        let va = a.cos() * b.cos() * self.alpha;
        let vb = a.sin() * b.sin() * -self.alpha;
        (v, [Jet::constant(self.beta), Jet::constant(0.0), va, vb])
    }
}

/// Field jets at one chart point.
#[derive(Debug, Clone)]
pub struct FieldJets {
    pub psi: CJet,
    pub a: [Jet; 4],
    pub t1: f64,
    pub t2: f64,
    pub zeta1: f64,
    pub chi: f64,
    /// r²ε²σ
    pub y: f64,
}

/// F(u) and the two kernel fields at one point, with the inverse metric for pairings.
#[derive(Debug, Clone)]
pub struct PointResidual {
    pub f_psi: Complex64,
    pub f_a: [f64; 4],
    pub kernel_psi: [Complex64; 2],
    pub kernel_a: [[f64; 4]; 2],
    pub ginv: [[f64; 4]; 4],
    pub chi: f64,
    pub zeta1: f64,
}

impl PointResidual {
    pub fn form_pair(&self, x: &[f64; 4], y: &[f64; 4]) -> f64 {
        let mut v = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                v += self.ginv[i][j] * x[i] * y[j];
            }
        }
        v
    }

    /// ⟨F(u), T_m⟩ density without the cutoff χ.
    pub fn projection_density(&self, m: usize) -> f64 {
        (self.f_psi.conj() * self.kernel_psi[m]).re + self.form_pair(&self.f_a, &self.kernel_a[m])
    }

    /// ⟨T₁, T₂⟩ density.
    pub fn kernel_overlap(&self) -> f64 {
        (self.kernel_psi[0].conj() * self.kernel_psi[1]).re + self.form_pair(&self.kernel_a[0], &self.kernel_a[1])
    }

    pub fn psi_norm(&self) -> f64 {
        self.f_psi.norm()
    }

    pub fn form_norm(&self) -> f64 {
        self.form_pair(&self.f_a, &self.f_a).max(0.0).sqrt()
    }
}

pub struct ApproxField<'a> {
    pub epsilon: f64,
    pub lambda: f64,
    pub cutoffs: Cutoffs,
    profile: &'a VortexProfile,
    pert: &'a dyn Perturbation,
    gauge: Option<&'a dyn Gauge>,
}

impl<'a> ApproxField<'a> {
    pub fn new(epsilon: f64, profile: &'a VortexProfile, pert: &'a dyn Perturbation, cutoffs: Cutoffs) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Gl4Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(ApproxField { epsilon, lambda: profile.lambda, cutoffs, profile, pert, gauge: None })
    }

    pub fn with_gauge(mut self, g: &'a dyn Gauge) -> Self {
        self.gauge = Some(g);
        self
    }

    pub fn has_gauge(&self) -> bool {
        self.gauge.is_some()
    }

    pub fn profile(&self) -> &VortexProfile {
        self.profile
    }

    pub fn pert_jet(&self, s: f64, theta: f64) -> Result<PertJet> {
        self.pert.jet(s, theta)
    }

    /// r² ε² sin 2s
    pub fn y_of(&self, s: f64, a: f64, b: f64) -> f64 {
        (a * a + b * b) * self.epsilon * self.epsilon * (2.0 * s).sin()
    }

    pub fn check_point(&self, x: [f64; 4]) -> Result<()> {
        let s = x[0];
        if !(s > 0.0 && s < std::f64::consts::FRAC_PI_2) {
            return Err(Gl4Error::invalid(format!("s = {s} outside (0, π/2)")));
        }
        let y = self.y_of(s, x[2], x[3]);
        if y > CHART_LIMIT {
            return Err(Gl4Error::invalid(format!(
                "chart point (s={s}, a={}, b={}) outside the tubular region, r²ε²sin2s = {y:.3}",
                x[2], x[3]
            )));
        }
        Ok(())
    }

    pub fn fields(&self, x: [f64; 4]) -> Result<FieldJets> {
        self.check_point(x)?;
        let [s, theta, a, b] = x;
        let e = self.epsilon;
        let pj = self.pert.jet(s, theta)?;
        let t1 = Jet::var(2, a) - pj.f.jet(0, 0) * e;
        let t2 = Jet::var(3, b) - pj.g.jet(0, 0) * e;
        let dt1 = [pj.f.jet(1, 0) * -e, pj.f.jet(0, 1) * -e, Jet::constant(1.0), Jet::constant(0.0)];
        let dt2 = [pj.g.jet(1, 0) * -e, pj.g.jet(0, 1) * -e, Jet::constant(0.0), Jet::constant(1.0)];
        let xx = t1 * t1 + t2 * t2;
        let rt = xx.v.sqrt();
        let ef = self.profile.even_forms(rt);
        let mut w = xx.compose(ef.w, ef.w_x, ef.w_xx);
        let mut z = xx.compose(ef.q, ef.q_x, ef.q_xx);

        let y = self.y_of(s, a, b);
        let (mut zeta1, mut chi) = (1.0, 1.0);
        if self.cutoffs == Cutoffs::Paper {
            let sj = Jet::var(0, s) * 2.0;
            let yj = (Jet::var(2, a) * Jet::var(2, a) + Jet::var(3, b) * Jet::var(3, b)) * sj.sin() * (e * e);
            if y > ZETA_BAND.0 {
                let (st, d1, d2) = smoothstep(y, ZETA_BAND.0, ZETA_BAND.1);
                let z2 = yj.compose(st, d1, d2);
                let z1 = Jet::constant(1.0) - z2;
                zeta1 = z1.v;
                w = z1 * w + z2 * xx.powf(-0.5);
                z = z1 * z + z2 * xx.powf(-1.0);
            }
            chi = 1.0 - smoothstep(y, CHI_BAND.0, CHI_BAND.1).0;
        }

        let mut psi = CJet { re: w * t1, im: w * t2 };
        let mut aj = [Jet::default(); 4];
        for j in 0..4 {
            aj[j] = z * (t1 * dt2[j] - t2 * dt1[j]);
        }
        if let Some(g) = self.gauge {
            let (v, dv) = g.jets(x);
            psi = CJet::expi(&v).mul(&psi);
            for j in 0..4 {
                aj[j] = aj[j] + dv[j];
            }
        }
        Ok(FieldJets { psi, a: aj, t1: t1.v, t2: t2.v, zeta1, chi, y })
    }

    pub fn metric(&self, x: [f64; 4]) -> Result<MetricCalculus> {
        metric_calculus(x[0], x[2], x[3], self.epsilon)
    }

    pub fn residual(&self, x: [f64; 4]) -> Result<PointResidual> {
        let fj = self.fields(x)?;
        let mc = self.metric(x)?;
        Ok(residual_from(&fj, &mc, self.lambda))
    }
}

pub struct Operators {
    pub lap_psi: Complex64,
    pub dstar_a: f64,
    pub a_dpsi: Complex64,
    pub a_sq: f64,
    pub dstar_da: [f64; 4],
    pub im_cov: [f64; 4],
}

/// Δψ, d*A, ⟨A, dψ⟩, |A|², d*dA and Im(∇_Aψ·ψ̄) from the jets and the exact metric.
pub fn operators(fj: &FieldJets, mc: &MetricCalculus) -> Operators {
    let g = &mc.g;
    let gi = &mc.ginv;
    let bv = &mc.b_vec;
    let psi = &fj.psi;
    let a = &fj.a;
    let p = psi.value();

    let mut lap = Complex64::new(0.0, 0.0);
    let mut div_a = 0.0;
    let mut a_dpsi = Complex64::new(0.0, 0.0);
    let mut a_sq = 0.0;
    for i in 0..4 {
        lap -= psi.d(i) * bv[i];
        div_a -= bv[i] * a[i].v;
        for j in 0..4 {
            lap += psi.h(i, j) * gi[i][j];
            div_a += gi[i][j] * a[i].d[j];
            a_dpsi += psi.d(j) * (gi[i][j] * a[i].v);
            a_sq += gi[i][j] * a[i].v * a[j].v;
        }
    }

    let mut f2 = [[0.0; 4]; 4];
    let mut df2 = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            f2[i][j] = a[j].d[i] - a[i].d[j];
            for k in 0..4 {
                df2[k][i][j] = a[j].h[k][i] - a[i].h[k][j];
            }
        }
    }
    let mut fup = [[0.0; 4]; 4];
    for k in 0..4 {
        for l in 0..4 {
            let mut v = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    v += gi[k][i] * gi[l][j] * f2[i][j];
                }
            }
            fup[k][l] = v;
        }
    }
    let mut div = [0.0; 4];
    for (l, dl) in div.iter_mut().enumerate() {
        let mut v = 0.0;
        for k in 0..4 {
            v += mc.log_sqrt_g[k] * fup[k][l];
            for i in 0..4 {
                for j in 0..4 {
                    v += (mc.dginv[k][k][i] * gi[l][j] + gi[k][i] * mc.dginv[k][l][j]) * f2[i][j]
                        + gi[k][i] * gi[l][j] * df2[k][i][j];
                }
            }
        }
        *dl = v;
    }
    let mut dstar_da = [0.0; 4];
    let mut im_cov = [0.0; 4];
    for j in 0..4 {
        dstar_da[j] = -(0..4).map(|l| g[j][l] * div[l]).sum::<f64>();
        im_cov[j] = (psi.d(j) * p.conj()).im - a[j].v * p.norm_sqr();
    }
    Operators { lap_psi: lap, dstar_a: -div_a, a_dpsi, a_sq, dstar_da, im_cov }
}

pub fn residual_from(fj: &FieldJets, mc: &MetricCalculus, lambda: f64) -> PointResidual {
    let op = operators(fj, mc);
    let i = Complex64::new(0.0, 1.0);
    let p = fj.psi.value();
    let lap_a = op.lap_psi + i * op.dstar_a * p - 2.0 * i * op.a_dpsi - op.a_sq * p;
    let f_psi = -lap_a + 0.5 * lambda * (p.norm_sqr() - 1.0) * p;
    let mut f_a = [0.0; 4];
    for j in 0..4 {
        f_a[j] = op.dstar_da[j] - op.im_cov[j];
    }
    let a = &fj.a;
    let mut kernel_psi = [Complex64::new(0.0, 0.0); 2];
    let mut kernel_a = [[0.0; 4]; 2];
    for (slot, m) in [2usize, 3].into_iter().enumerate() {
        kernel_psi[slot] = fj.psi.d(m) - i * a[m].v * p;
        for j in 0..4 {
            kernel_a[slot][j] = a[m].d[j] - a[j].d[m];
        }
    }
    PointResidual { f_psi, f_a, kernel_psi, kernel_a, ginv: mc.ginv, chi: fj.chi, zeta1: fj.zeta1 }
}

/// Node values of an assembled chart.
#[derive(Debug, Clone, Serialize)]
pub struct ChartNode {
    pub s: f64,
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub psi: [f64; 2],
    /// A₁…A₄ in the dy^τ coframe
    pub a_form: [f64; 4],
    pub zeta1: f64,
    pub zeta2: f64,
    pub chi: f64,
    pub t1: f64,
    pub t2: f64,
    pub r_tilde: f64,
    pub phi_tilde: f64,
}

/// Chart spec: footprints (s, θ) at nodes of the perturbation grid and a square (a, b) grid.
#[derive(Debug, Clone, Serialize)]
pub struct ChartSpec {
    pub footprints: Vec<(usize, usize)>,
    pub half_width: f64,
    pub n_ab: usize,
    pub cutoffs: Cutoffs,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxFieldChart {
    pub epsilon: f64,
    pub lambda: f64,
    pub spec: ChartSpec,
    pub perturbation: NormalField,
    pub nodes: Vec<ChartNode>,
}

pub fn build_approximate(
    f_g: &NormalField,
    epsilon: f64,
    profile: &VortexProfile,
    spec: &ChartSpec,
) -> Result<ApproxFieldChart> {
    let pert = GridPerturbation::new(f_g)?;
    let field = ApproxField::new(epsilon, profile, &pert, spec.cutoffs)?;
    if spec.n_ab < 2 || !(spec.half_width > 0.0) {
        return Err(Gl4Error::invalid("chart (a, b) grid needs n_ab ≥ 2 and a positive half width"));
    }
    let h = 2.0 * spec.half_width / (spec.n_ab - 1) as f64;
    let mut nodes = Vec::with_capacity(spec.footprints.len() * spec.n_ab * spec.n_ab);
    for &(i, j) in &spec.footprints {
        if i >= f_g.nx() || j >= f_g.ntheta {
            return Err(Gl4Error::invalid(format!("footprint ({i}, {j}) outside the perturbation grid")));
        }
        let s = f_g.x[i];
        let theta = 2.0 * std::f64::consts::PI * j as f64 / f_g.ntheta as f64;
        for ia in 0..spec.n_ab {
            for ib in 0..spec.n_ab {
                let a = -spec.half_width + ia as f64 * h;
                let b = -spec.half_width + ib as f64 * h;
                let fj = field.fields([s, theta, a, b])?;
                let rt = fj.t1.hypot(fj.t2);
                nodes.push(ChartNode {
                    s,
                    theta,
                    a,
                    b,
                    psi: [fj.psi.re.v, fj.psi.im.v],
                    a_form: [fj.a[0].v, fj.a[1].v, fj.a[2].v, fj.a[3].v],
                    zeta1: fj.zeta1,
                    zeta2: 1.0 - fj.zeta1,
                    chi: fj.chi,
                    t1: fj.t1,
                    t2: fj.t2,
                    r_tilde: rt,
                    phi_tilde: fj.t2.atan2(fj.t1),
                });
            }
        }
    }
    Ok(ApproxFieldChart { epsilon, lambda: profile.lambda, spec: spec.clone(), perturbation: f_g.clone(), nodes })
}
