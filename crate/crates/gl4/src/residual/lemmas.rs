//! Closed-form expansions of the residual pieces against the directly assembled operators.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Gl4Error, Result};

use super::approx::{operators, ApproxField, FieldJets, ZETA_BAND};
use super::pert::PertJet;

#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub name: &'static str,
    /// real, or (re, im) for complex terms
    pub closed: Vec<f64>,
    pub direct: Vec<f64>,
    /// stated remainder order in ε
    pub order: u32,
}

impl Term {
    fn complex(name: &'static str, closed: Complex64, direct: Complex64, order: u32) -> Self {
        Term { name, closed: vec![closed.re, closed.im], direct: vec![direct.re, direct.im], order }
    }

    fn real(name: &'static str, closed: f64, direct: f64, order: u32) -> Self {
        Term { name, closed: vec![closed], direct: vec![direct], order }
    }

    pub fn mismatch(&self) -> f64 {
        self.closed.iter().zip(&self.direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualComponents {
    pub x: [f64; 4],
    pub epsilon: f64,
    pub terms: Vec<Term>,
}

impl ResidualComponents {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

pub const TERM_NAMES: [&str; 14] = [
    "neg_lap_psi",
    "neg_lap_psi_completed",
    "dstar_a",
    "a_dpsi",
    "dstar_da_1",
    "dstar_da_2",
    "dstar_da_3",
    "dstar_da_4",
    "im_cov_1",
    "im_cov_2",
    "im_cov_3",
    "im_cov_4",
    "a_13",
    "a_23",
];

struct Metric2 {
    /// σ = sin 2s
    sg: f64,
    c: f64,
    e: f64,
    a: f64,
    b: f64,
}

impl Metric2 {
    fn e2(&self) -> f64 {
        self.e * self.e
    }
    fn e3(&self) -> f64 {
        self.e.powi(3)
    }
    fn s52(&self) -> f64 {
        self.sg.powf(2.5)
    }
    fn s92(&self) -> f64 {
        self.sg.powf(4.5)
    }
    /// coefficients of ∂₃∂₃, ∂₃∂₄ (each of the symmetric pair), ∂₄∂₄ in the transverse block
    fn g33(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        1.0 + b * b * c * c * self.e2() * self.sg - 2.0 * a * b * b * c * c * self.e3() * self.s52()
    }
    fn g34(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        -a * b * c * c * self.e2() * self.sg + 2.0 * a * a * b * c * c * self.e3() * self.s52()
    }
    fn g44(&self) -> f64 {
        let (a, c) = (self.a, self.c);
        1.0 + a * a * c * c * self.e2() * self.sg - 2.0 * a.powi(3) * c * c * self.e3() * self.s52()
    }
    /// first-order coefficients multiplying A₃ and A₄ (and ∂₃ψ, ∂₄ψ)
    fn b3(&self) -> f64 {
        let (a, b, c, sg) = (self.a, self.b, self.c, self.sg);
        2.0 * a * self.e2() * sg.powi(3) + a * c * c * self.e2() * sg - (2.0 * a * a + 4.0 * b * b) * c * c * self.e3() * self.s52()
            + 4.0 * b * b * self.e3() * self.s92()
    }
    fn b4(&self) -> f64 {
        let (a, b, c, sg) = (self.a, self.b, self.c, self.sg);
        2.0 * b * self.e2() * sg.powi(3) + b * c * c * self.e2() * sg + 2.0 * a * b * c * c * self.e3() * self.s52()
            - 4.0 * a * b * self.e3() * self.s92()
    }
}

/// Displayed expansion of −Δψ. `completed` adds the ε³ transverse-metric and first-order terms that
/// the d*A and ⟨A, dψ⟩ displays carry.
fn neg_lap_closed(m: &Metric2, pj: &PertJet, fj: &FieldJets, completed: bool) -> Complex64 {
    let (e, e2, sg, c, a, b) = (m.e, m.e2(), m.sg, m.c, m.a, m.b);
    let f = &pj.f.d;
    let g = &pj.g.d;
    let p3 = fj.psi.d(2);
    let p4 = fj.psi.d(3);
    let p33 = fj.psi.h(2, 2);
    let p34 = fj.psi.h(2, 3);
    let p44 = fj.psi.h(3, 3);
    let mut v = (e * f[1][0] * p3 + e * g[1][0] * p4) * (2.0 * e2 * sg * sg * c)
        + (e * f[2][0] * p3 + e * g[2][0] * p4) * (e2 * sg.powi(3))
        + (e * f[0][2] * p3 + e * g[0][2] * p4) * (e2 * sg)
        + (e * f[0][1] * p33 + e * g[0][1] * p34) * (2.0 * b * e2 * sg * c)
        + (-e * f[0][1] * p34 - e * g[0][1] * p44) * (2.0 * a * e2 * sg * c);
    if completed {
        v += -p33 * m.g33() - p34 * (2.0 * m.g34()) - p44 * m.g44() + p3 * m.b3() + p4 * m.b4();
    } else {
        v += p3 * (2.0 * a * e2 * sg.powi(3)) - p33 - p33 * (b * b * e2 * sg * c * c) + p3 * (a * e2 * sg * c * c)
            + p34 * (2.0 * a * b * e2 * sg * c * c)
            + p4 * (b * e2 * sg * c * c)
            + p4 * (2.0 * b * e2 * sg.powi(3))
            - p44
            - p44 * (a * a * e2 * sg * c * c);
    }
    v
}

fn dstar_a_closed(m: &Metric2, pj: &PertJet, fj: &FieldJets) -> f64 {
    let (e, e2, e3, sg, c, a, b) = (m.e, m.e2(), m.e3(), m.sg, m.c, m.a, m.b);
    let f = &pj.f.d;
    let g = &pj.g.d;
    let (a3, a4) = (fj.a[2].v, fj.a[3].v);
    let d33 = fj.a[2].d[2];
    let d43 = fj.a[2].d[3];
    let d34 = fj.a[3].d[2];
    let d44 = fj.a[3].d[3];
    e2 * sg.powi(3) * (e * f[2][0] * a3 + e * g[2][0] * a4)
        + e2 * sg * (e * f[0][2] * a3 + e * g[0][2] * a4)
        + 2.0 * b * c * e3 * sg * f[0][1] * d33
        + b * c * e3 * sg * g[0][1] * (d43 + d34)
        - a * c * e3 * sg * f[0][1] * (d34 + d43)
        - 2.0 * a * c * e3 * sg * g[0][1] * d44
        - m.g34() * (d43 + d34)
        - m.g33() * d33
        - m.g44() * d44
        + 2.0 * e2 * sg * sg * c * (e * f[1][0] * a3 + e * g[1][0] * a4)
        + m.b3() * a3
        + m.b4() * a4
}

fn a_dpsi_closed(m: &Metric2, pj: &PertJet, fj: &FieldJets) -> Complex64 {
    let (e3, sg, c, a, b) = (m.e3(), m.sg, m.c, m.a, m.b);
    let f = &pj.f.d;
    let g = &pj.g.d;
    let (a3, a4) = (fj.a[2].v, fj.a[3].v);
    let p3 = fj.psi.d(2);
    let p4 = fj.psi.d(3);
    p3 * a3 * (-2.0 * b * c * e3 * sg * f[0][1])
        - (p4 * a3 + p3 * a4) * (b * c * e3 * sg * g[0][1])
        + (p3 * a4 + p4 * a3) * (a * c * e3 * sg * f[0][1])
        + p4 * a4 * (2.0 * a * c * e3 * sg * g[0][1])
        + p3 * a3 * m.g33()
        + (p4 * a3 + p3 * a4) * m.g34()
        + p4 * a4 * m.g44()
}

/// A_jk = ∂_j A_k − ∂_k A_j and ∂_l A_jk from the jets.
fn two_form(fj: &FieldJets) -> ([[f64; 4]; 4], [[[f64; 4]; 4]; 4]) {
    let a = &fj.a;
    let mut f2 = [[0.0; 4]; 4];
    let mut df2 = [[[0.0; 4]; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            f2[j][k] = a[k].d[j] - a[j].d[k];
            for l in 0..4 {
                df2[l][j][k] = a[k].h[l][j] - a[j].h[l][k];
            }
        }
    }
    (f2, df2)
}

fn dstar_da_closed(m: &Metric2, pj: &PertJet, fj: &FieldJets, vpp: f64, vp: f64) -> [f64; 4] {
    let (e, e2, e3, sg, c, a, b) = (m.e, m.e2(), m.e3(), m.sg, m.c, m.a, m.b);
    let f = &pj.f.d;
    let g = &pj.g.d;
    let rt = fj.t1.hypot(fj.t2);
    let (sp, cp) = (fj.t2 / rt, fj.t1 / rt);
    let rad = vpp / rt - vp / (rt * rt);
    let (f2, d) = two_form(fj);
    let d1 = cp * e * g[1][0] * rad - sp * e * f[1][0] * rad;
    let d2 = cp * e * g[0][1] * rad - sp * e * f[0][1] * rad;
    let c3 = 2.0 * b * e2 * sg.powi(3) + b * c * c * e2 * sg + 2.0 * a * b * c * c * e3 * m.s52() - 4.0 * a * b * e3 * m.s92();
    let c4 = 2.0 * a * e2 * sg.powi(3) + a * c * c * e2 * sg - (2.0 * a * a + 4.0 * b * b) * c * c * e3 * m.s52()
        + 4.0 * b * b * e3 * m.s92();
    let d3 = -e2 * sg.powi(3) * d[0][0][2] - e2 * sg * d[1][1][2] - b * c * e2 * sg * d[2][1][2]
        + a * c * e2 * sg * d[3][1][2]
        + a * c * e2 * sg * d[1][3][2]
        - m.g34() * d[2][3][2]
        - m.g44() * d[3][3][2]
        - 2.0 * e2 * sg * sg * c * f2[0][2]
        + c3 * f2[3][2];
    let d4 = -e2 * sg.powi(3) * d[0][0][3] - e2 * sg * d[1][1][3] - b * c * e2 * sg * d[2][1][3]
        + a * c * e2 * sg * d[3][1][3]
        - b * c * e2 * sg * d[1][2][3]
        - m.g33() * d[2][2][3]
        - m.g34() * d[3][2][3]
        - 2.0 * e2 * sg * sg * c * f2[0][3]
        + c4 * f2[2][3];
    [d1, d2, d3, d4]
}

fn im_cov_closed(pj: &PertJet, fj: &FieldJets, e: f64, u: f64, v: f64) -> [f64; 4] {
    let f = &pj.f.d;
    let g = &pj.g.d;
    let rt = fj.t1.hypot(fj.t2);
    let (sp, cp) = (fj.t2 / rt, fj.t1 / rt);
    let core = (u * u - v * u * u) / rt;
    let p2 = fj.psi.value().norm_sqr();
    [
        e * f[1][0] * core * sp - e * g[1][0] * core * cp,
        e * f[0][1] * core * sp - e * g[0][1] * core * cp,
        -(u * u / rt) * sp - fj.a[2].v * p2,
        (u * u / rt) * cp - fj.a[3].v * p2,
    ]
}

/// Every displayed expansion at chart point x next to the directly assembled operator.
pub fn residual_components(field: &ApproxField, x: [f64; 4]) -> Result<ResidualComponents> {
    field.check_point(x)?;
    let [s, theta, a, b] = x;
    let y = field.y_of(s, a, b);
    if field.cutoffs == super::Cutoffs::Paper && y > ZETA_BAND.0 {
        return Err(Gl4Error::UnsupportedRegion(format!(
            "point (s={s}, a={a}, b={b}) lies in the cutoff band, r²ε²sin2s = {y:.4} > {}",
            ZETA_BAND.0
        )));
    }
    if field.has_gauge() {
        return Err(Gl4Error::invalid("the closed forms assume the ungauged approximation"));
    }
    let fj = field.fields(x)?;
    let mc = field.metric(x)?;
    let op = operators(&fj, &mc);
    let pj = field.pert_jet(s, theta)?;
    let e = field.epsilon;
    let m = Metric2 { sg: (2.0 * s).sin(), c: (2.0 * s).cos(), e, a, b };
    let rt = fj.t1.hypot(fj.t2);
    if rt == 0.0 {
        return Err(Gl4Error::invalid("closed forms are singular at the vortex centre"));
    }
    let pp = field.profile().eval(rt);
    let dda = dstar_da_closed(&m, &pj, &fj, pp.ddv, pp.dv);
    let imc = im_cov_closed(&pj, &fj, e, pp.u, pp.v);
    let (f2, _) = two_form(&fj);
    let a34 = f2[2][3];
    let mut terms = vec![
        Term::complex("neg_lap_psi", neg_lap_closed(&m, &pj, &fj, false), -op.lap_psi, 4),
        Term::complex("neg_lap_psi_completed", neg_lap_closed(&m, &pj, &fj, true), -op.lap_psi, 4),
        Term::real("dstar_a", dstar_a_closed(&m, &pj, &fj), op.dstar_a, 4),
        Term::complex("a_dpsi", a_dpsi_closed(&m, &pj, &fj), op.a_dpsi, 4),
    ];
    let dd_names = ["dstar_da_1", "dstar_da_2", "dstar_da_3", "dstar_da_4"];
    let im_names = ["im_cov_1", "im_cov_2", "im_cov_3", "im_cov_4"];
    for j in 0..4 {
        terms.push(Term::real(dd_names[j], dda[j], op.dstar_da[j], if j < 2 { 2 } else { 4 }));
    }
    for j in 0..4 {
        terms.push(Term::real(im_names[j], imc[j], op.im_cov[j], u32::MAX));
    }
    terms.push(Term::real("a_13", e * pj.g.d[1][0] * a34, f2[0][2], u32::MAX));
    terms.push(Term::real("a_23", e * pj.g.d[0][1] * a34, f2[1][2], u32::MAX));
    Ok(ResidualComponents { x, epsilon: e, terms })
}
