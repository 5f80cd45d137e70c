//! Second-order Taylor jets in the four chart variables (s, θ, a, b).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 4],
    pub h: [[f64; 4]; 4],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, ..Default::default() }
    }

    pub fn var(i: usize, v: f64) -> Self {
        let mut j = Jet::constant(v);
        j.d[i] = 1.0;
        j
    }

    /// φ∘self given φ, φ', φ'' at self.v.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let mut out = Jet::constant(f0);
        for i in 0..4 {
            out.d[i] = f1 * self.d[i];
            for j in 0..4 {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        out
    }

    pub fn sqrt(&self) -> Jet {
        let r = self.v.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn powf(&self, p: f64) -> Jet {
        let x = self.v;
        self.compose(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn cos(&self) -> Jet {
        self.compose(self.v.cos(), -self.v.sin(), -self.v.cos())
    }

    pub fn sin(&self) -> Jet {
        self.compose(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    pub fn is_constant(&self) -> bool {
        self.d.iter().all(|x| *x == 0.0) && self.h.iter().flatten().all(|x| *x == 0.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for i in 0..4 {
            r.d[i] += o.d[i];
            for j in 0..4 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        let mut r = self;
        r.v *= c;
        for i in 0..4 {
            r.d[i] *= c;
            for j in 0..4 {
                r.h[i][j] *= c;
            }
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for i in 0..4 {
            r.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..4 {
                r.h[i][j] = self.h[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.h[i][j];
            }
        }
        r
    }
}

/// Complex-valued jet.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.v, self.im.v)
    }

    pub fn d(&self, i: usize) -> Complex64 {
        Complex64::new(self.re.d[i], self.im.d[i])
    }

    pub fn h(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re.h[i][j], self.im.h[i][j])
    }

    pub fn mul(&self, o: &CJet) -> CJet {
        CJet { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    /// e^{i v}
    pub fn expi(v: &Jet) -> CJet {
        CJet { re: v.cos(), im: v.sin() }
    }
}
