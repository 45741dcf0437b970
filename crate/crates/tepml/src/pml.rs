//! Uniaxial complex coordinate stretching on a cuboid.
//!
//! B₁ = {|x_j| < l_j} is the physical region, B₂ = {|x_j| < l_j + d_j} the
//! truncated domain. The absorption profile ramps smoothly from 0 at l_j to
//! α₀ at l̄_j and stays constant beyond.

use crate::error::{Error, Result};
use crate::gauss::GaussRule;
use crate::material::principal_sqrt;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmlProfile {
    pub l: [f64; 3],
    pub d: [f64; 3],
    pub lbar: [f64; 3],
    pub alpha0: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedPoint {
    pub x: [f64; 3],
    pub xt: [C64; 3],
    pub s: [C64; 3],
}

/// Diagonal coefficient matrices of the stretched operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlMatrices {
    pub j: C64,
    pub a: [C64; 3],
    pub k: [C64; 3],
    pub b: [C64; 3],
}

impl PmlMatrices {
    pub fn from_s(s: [C64; 3]) -> Self {
        let a = [s[1] * s[2], s[0] * s[2], s[0] * s[1]];
        Self {
            j: s[0] * s[1] * s[2],
            a,
            k: [a[0] / s[0], a[1] / s[1], a[2] / s[2]],
            b: [s[0].inv(), s[1].inv(), s[2].inv()],
        }
    }
}

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step g(τ) = h(τ)/(h(τ)+h(1−τ)).
pub fn bump(tau: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else if tau >= 1.0 {
        1.0
    } else {
        let a = h(tau);
        a / (a + h(1.0 - tau))
    }
}

const PANELS: usize = 64;

struct BumpTable {
    rule: GaussRule,
    /// cumulative[k] = ∫₀^{k/PANELS} g.
    cumulative: Vec<f64>,
}

fn bump_table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = GaussRule::legendre(20);
        let mut cumulative = Vec::with_capacity(PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..PANELS {
            let a = k as f64 / PANELS as f64;
            let b = (k + 1) as f64 / PANELS as f64;
            acc += rule.integrate(a, b, bump);
            cumulative.push(acc);
        }
        // g(τ) + g(1−τ) = 1 makes the full integral exactly one half.
        let last = cumulative[PANELS];
        debug_assert!((last - 0.5).abs() < 1e-14);
        cumulative[PANELS] = 0.5;
        BumpTable { rule, cumulative }
    })
}

/// ∫₀^τ g(s) ds for τ ∈ [0, 1].
pub fn bump_integral(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 0.5;
    }
    let t = bump_table();
    let pos = tau * PANELS as f64;
    let k = (pos.floor() as usize).min(PANELS - 1);
    let a = k as f64 / PANELS as f64;
    t.cumulative[k] + t.rule.integrate(a, tau, bump)
}

impl PmlProfile {
    pub fn new(l: [f64; 3], d: [f64; 3], lbar: [f64; 3], alpha0: f64, zeta: f64) -> Result<Self> {
        let p = Self { l, d, lbar, alpha0, zeta };
        p.validate()?;
        Ok(p)
    }

    /// Ramp ends at l̄_j = l_j + d/2 with d the thinnest layer.
    pub fn half_ramp(l: [f64; 3], d: [f64; 3], alpha0: f64, zeta: f64) -> Result<Self> {
        let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
        Self::new(l, d, [l[0] + dmin / 2.0, l[1] + dmin / 2.0, l[2] + dmin / 2.0], alpha0, zeta)
    }

    pub fn validate(&self) -> Result<()> {
        let geo = |m: String| Err(Error::InvalidGeometry(m));
        for j in 0..3 {
            if !(self.l[j] > 0.0) || !(self.d[j] > 0.0) {
                return geo(format!("axis {j}: l and d must be positive"));
            }
            if !(self.lbar[j] > self.l[j] && self.lbar[j] <= self.l[j] + self.d[j]) {
                return geo(format!("axis {j}: need l < lbar <= l + d"));
            }
            if self.lbar[j] - self.l[j] > 0.5 * self.d_min() * (1.0 + 1e-12) {
                return geo(format!("axis {j}: ramp longer than half the thinnest layer"));
            }
        }
        if !(self.alpha0 >= 0.0) || !self.alpha0.is_finite() {
            return Err(Error::InvalidParameter("alpha0 must be non-negative".into()));
        }
        if !(self.zeta >= 1.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidParameter("zeta must be at least 1".into()));
        }
        Ok(())
    }

    /// Scalar thickness used in all bounds: the thinnest layer.
    pub fn d_min(&self) -> f64 {
        self.d.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn outer(&self) -> [f64; 3] {
        [self.l[0] + self.d[0], self.l[1] + self.d[1], self.l[2] + self.d[2]]
    }

    /// z = ζ + i.
    pub fn z(&self) -> C64 {
        C64::new(self.zeta, 1.0)
    }

    pub fn diam_inner(&self) -> f64 {
        2.0 * (self.l[0].powi(2) + self.l[1].powi(2) + self.l[2].powi(2)).sqrt()
    }

    pub fn alpha(&self, axis: usize, t: f64) -> f64 {
        let a = t.abs();
        let (l, lb) = (self.l[axis], self.lbar[axis]);
        if a <= l {
            0.0
        } else if a >= lb {
            self.alpha0
        } else {
            self.alpha0 * bump((a - l) / (lb - l))
        }
    }

    /// Integral of the ramp over [l_j, l̄_j].
    pub fn ramp_integral(&self, axis: usize) -> f64 {
        0.5 * self.alpha0 * (self.lbar[axis] - self.l[axis])
    }

    /// ∫₀^t α_j(s) ds.
    pub fn alpha_antiderivative(&self, axis: usize, t: f64) -> f64 {
        let a = t.abs();
        let (l, lb) = (self.l[axis], self.lbar[axis]);
        let v = if a <= l {
            0.0
        } else if a >= lb {
            self.ramp_integral(axis) + self.alpha0 * (a - lb)
        } else {
            self.alpha0 * (lb - l) * bump_integral((a - l) / (lb - l))
        };
        v.copysign(t)
    }

    pub fn stretch(&self, x: [f64; 3]) -> StretchedPoint {
        let z = self.z();
        let mut xt = [C64::new(0.0, 0.0); 3];
        let mut s = [C64::new(1.0, 0.0); 3];
        for j in 0..3 {
            xt[j] = x[j] + z * self.alpha_antiderivative(j, x[j]);
            s[j] = 1.0 + z * self.alpha(j, x[j]);
        }
        StretchedPoint { x, xt, s }
    }

    pub fn pml_matrices(&self, x: [f64; 3]) -> PmlMatrices {
        PmlMatrices::from_s(self.stretch(x).s)
    }

    fn separation(&self, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
        let r = dist(x, y);
        if r < 1e-8 * self.diam_inner() {
            return Err(Error::Singular(r));
        }
        Ok(r)
    }

    /// d(x̃, ỹ), principal branch.
    pub fn complex_distance(&self, x: [f64; 3], y: [f64; 3]) -> Result<C64> {
        self.separation(x, y)?;
        let (a, b) = (self.stretch(x), self.stretch(y));
        Ok(complex_distance_stretched(&a.xt, &b.xt))
    }

    /// Lower bound on Im d(x̃, ỹ) from the α-integrals between the points.
    pub fn im_distance_lower_bound(&self, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
        let r = self.separation(x, y)?;
        let mut num = 0.0;
        for j in 0..3 {
            let ia = (self.alpha_antiderivative(j, x[j]) - self.alpha_antiderivative(j, y[j])).abs();
            num += (x[j] - y[j]).abs() * ia + self.zeta * ia * ia;
        }
        Ok(num / ((1.0 + self.zeta * self.alpha0) * r))
    }

    /// r₀ = (3/4) d / √Σ(2l_j + d_j)².
    pub fn r0_constant(&self) -> f64 {
        let s: f64 = (0..3).map(|j| (2.0 * self.l[j] + self.d[j]).powi(2)).sum();
        0.75 * self.d_min() / s.sqrt()
    }

    /// √((1+ζα₀)² + α₀²), the bound on |d(x̃,ỹ)|/|x−y|.
    pub fn distance_stretch_bound(&self) -> f64 {
        ((1.0 + self.zeta * self.alpha0).powi(2) + self.alpha0.powi(2)).sqrt()
    }

    /// Copy with the absorption switched off.
    pub fn without_absorption(&self) -> Self {
        Self { alpha0: 0.0, ..self.clone() }
    }
}

pub fn complex_distance_stretched(xt: &[C64; 3], yt: &[C64; 3]) -> C64 {
    let r2 = (xt[0] - yt[0]).powi(2) + (xt[1] - yt[1]).powi(2) + (xt[2] - yt[2]).powi(2);
    principal_sqrt(r2)
}

pub(crate) fn dist(x: [f64; 3], y: [f64; 3]) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
}
