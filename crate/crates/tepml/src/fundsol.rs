//! The 4×4 thermoelastic fundamental solution and the kernels built from it.
//!
//! Index 0..3 are displacement components, index 3 is temperature. With
//! g_l = e^{iλ_l r}/r the matrix reads
//!
//! ```text
//! Φ_ij = Σ_l [ δ_ij δ_3l g_3/(2πµ) − α_l ∂_i∂_j g_l ]      i, j < 3
//! Φ_4j = iωη Σ_l γ_l ∂_j g_l
//! Φ_i4 = −γ  Σ_l γ_l ∂_i g_l
//! Φ_44 =     Σ_l β_l g_l
//! ```
//!
//! and satisfies L Φ = −2δ I. Every entry is a combination of
//! f, X_i f'/r, X_j f'/r, X_iX_j (f''/r² − f'/r³) and δ_ij f'/r, so the same
//! radial template evaluates Φ at real separations, at complex stretched
//! separations, and on dual numbers for analytic derivatives.

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::material::{characteristic_roots, MaterialParams, WaveNumbers};
use crate::pml::{dist, PmlProfile, StretchedPoint};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub type Mat4 = [[C64; 4]; 4];

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// α_l, β_l, γ_l for l = 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalCoefficients {
    pub alpha: [C64; 3],
    pub beta: [C64; 3],
    pub gamma: [C64; 3],
}

impl FundamentalCoefficients {
    pub fn new(params: &MaterialParams, waves: &WaveNumbers) -> Self {
        let pm = params.p_modulus();
        let (t1, t2) = (waves.l1 * waves.l1, waves.l2 * waves.l2);
        let gap = t2 - t1;
        let q = params.q();
        let kp2 = params.kp2();
        let sign = [-1.0, 1.0];
        let mut alpha = [ZERO; 3];
        let mut beta = [ZERO; 3];
        let mut gamma = [ZERO; 3];
        for (l, t) in [t1, t2].into_iter().enumerate() {
            alpha[l] = sign[l] * (1.0 - q / t) / (2.0 * PI * pm * gap);
            beta[l] = sign[l] * (t - kp2) / (2.0 * PI * gap);
            gamma[l] = sign[l] / (2.0 * PI * pm * gap);
        }
        alpha[2] = -1.0 / (2.0 * PI * params.rho * params.omega * params.omega);
        Self { alpha, beta, gamma }
    }
}

/// Coefficients of the radial template, per block and per wavenumber:
/// `[c1, c2, c3, c4, c5]` multiplying
/// `f, X_i f'/r, X_j f'/r, X_iX_j(f''/r² − f'/r³), f'/r`.
/// In the elastic block c1 and c5 only act on the diagonal (δ_ij).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialForm {
    pub elastic: [[C64; 5]; 3],
    /// Row 4, columns 1..3.
    pub thermal_row: [[C64; 5]; 3],
    /// Rows 1..3, column 4.
    pub thermal_col: [[C64; 5]; 3],
    pub thermal: [[C64; 5]; 3],
}

impl RadialForm {
    pub fn new(params: &MaterialParams, c: &FundamentalCoefficients) -> Self {
        let mut f = Self {
            elastic: [[ZERO; 5]; 3],
            thermal_row: [[ZERO; 5]; 3],
            thermal_col: [[ZERO; 5]; 3],
            thermal: [[ZERO; 5]; 3],
        };
        let iwe = I * params.omega * params.eta;
        for l in 0..3 {
            if l == 2 {
                f.elastic[l][0] = C64::from(1.0 / (2.0 * PI * params.lame_mu));
            }
            f.elastic[l][3] = -c.alpha[l];
            f.elastic[l][4] = -c.alpha[l];
            f.thermal_row[l][2] = iwe * c.gamma[l];
            f.thermal_col[l][1] = -params.gamma * c.gamma[l];
            f.thermal[l][0] = c.beta[l];
        }
        f
    }
}

/// Material, wavenumbers and coefficient tables bundled for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoelasticKernel {
    pub params: MaterialParams,
    pub waves: WaveNumbers,
    pub coeffs: FundamentalCoefficients,
    pub radial: RadialForm,
}

/// A 4×4 kernel value with the point pair it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixField4 {
    pub m: Mat4,
    pub x: [f64; 3],
    pub y: [f64; 3],
}

/// f_λ(z) = e^{iλz}/z and its first `n_max` derivatives, from
/// f^{(n)} = P_n(z) e^{iλz} / z^{n+1} with
/// P_{n+1} = (P_n' + iλP_n) z − (n+1) P_n.
pub fn f_lambda_derivs(lambda: C64, z: C64, n_max: usize) -> Result<Vec<C64>> {
    if z.norm() == 0.0 {
        return Err(Error::Singular(0.0));
    }
    let il = I * lambda;
    let e = (il * z).exp();
    let mut poly = vec![C64::new(1.0, 0.0)];
    let mut out = Vec::with_capacity(n_max + 1);
    let mut zpow = z;
    for n in 0..=n_max {
        let p = poly.iter().rev().fold(ZERO, |acc, &c| acc * z + c);
        out.push(p * e / zpow);
        zpow *= z;
        // Next polynomial, degree grows by one.
        let mut next = vec![ZERO; poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            if k > 0 {
                next[k] += k as f64 * c;
            }
            next[k + 1] += il * c;
            next[k] -= (n + 1) as f64 * c;
        }
        poly = next;
    }
    Ok(out)
}

/// f, f', f'' at a generic scalar radius.
#[inline]
fn radial_derivs<T: Scalar>(lambda: C64, r: T, u: T) -> (T, T, T) {
    let il = I * lambda;
    let f = (r.scale(il)).exp() * u;
    let fp = f * (T::constant(il) - u);
    // f'' = f (−λ² − 2iλ/r + 2/r²)
    let fpp = f * (T::constant(-lambda * lambda) - u.scale(2.0 * il) + (u * u).scale(C64::from(2.0)));
    (f, fp, fpp)
}

impl ThermoelasticKernel {
    pub fn new(params: &MaterialParams) -> Result<Self> {
        let waves = characteristic_roots(params)?;
        Ok(Self::from_waves(params, &waves))
    }

    /// Builds the tables from given wavenumbers (no consistency check).
    pub fn from_waves(params: &MaterialParams, waves: &WaveNumbers) -> Self {
        let coeffs = FundamentalCoefficients::new(params, waves);
        Self {
            params: *params,
            waves: *waves,
            coeffs,
            radial: RadialForm::new(params, &coeffs),
        }
    }

    fn lambdas(&self) -> [C64; 3] {
        self.waves.all()
    }

    /// Φ at a real separation through the δ-selector formula, applying the
    /// derivative operators with the radial chain rule.
    pub fn eval_phi(&self, x_minus_y: [f64; 3]) -> Result<MatrixField4> {
        let r = dist(x_minus_y, [0.0; 3]);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Singular(r));
        }
        let x = x_minus_y;
        let p = &self.params;
        let c = &self.coeffs;
        let iwe = I * p.omega * p.eta;
        let mut m = [[ZERO; 4]; 4];
        for (l, lam) in self.lambdas().into_iter().enumerate() {
            let f = f_lambda_derivs(lam, C64::from(r), 2)?;
            let d1 = |j: usize| x[j] / r * f[1];
            let d2 = |i: usize, j: usize| {
                let dij = if i == j { 1.0 } else { 0.0 };
                x[i] * x[j] / (r * r) * f[2] + (dij / r - x[i] * x[j] / (r * r * r)) * f[1]
            };
            let d3l = if l == 2 { 1.0 } else { 0.0 };
            for i in 0..4 {
                for j in 0..4 {
                    let (ei, ej) = (i == 3, j == 3);
                    let v = if !ei && !ej {
                        let dij = if i == j { 1.0 } else { 0.0 };
                        dij * d3l / (2.0 * PI * p.lame_mu) * f[0] - c.alpha[l] * d2(i, j)
                    } else if ei && !ej {
                        iwe * c.gamma[l] * d1(j)
                    } else if !ei && ej {
                        -p.gamma * c.gamma[l] * d1(i)
                    } else {
                        c.beta[l] * f[0]
                    };
                    m[i][j] += v;
                }
            }
        }
        Ok(MatrixField4 { m, x: x_minus_y, y: [0.0; 3] })
    }

    /// Φ through the radial template at a (possibly complex, possibly dual)
    /// separation X.
    pub fn phi_radial<T: Scalar>(&self, x: [T; 3]) -> [[T; 4]; 4] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let u = r.recip();
        let zero = T::zero();
        let mut m = [[zero; 4]; 4];
        let rf = &self.radial;
        for (l, lam) in self.lambdas().into_iter().enumerate() {
            let (f, fp, fpp) = radial_derivs(lam, r, u);
            let fpu = fp * u;
            let quad = (fpp - fpu) * u * u;
            let e = &rf.elastic[l];
            let diag = f.scale(e[0]) + fpu.scale(e[4]);
            for i in 0..3 {
                let xi_q = (x[i] * quad).scale(e[3]);
                for j in i..3 {
                    let mut v = xi_q * x[j];
                    if i == j {
                        v += diag;
                    }
                    m[i][j] += v;
                }
            }
            if l < 2 {
                for j in 0..3 {
                    m[3][j] += (x[j] * fpu).scale(rf.thermal_row[l][2]);
                    m[j][3] += (x[j] * fpu).scale(rf.thermal_col[l][1]);
                }
                m[3][3] += f.scale(rf.thermal[l][0]);
            }
        }
        for i in 0..3 {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        m
    }

    /// Φ̃(x, y) = Φ evaluated at x̃ − ỹ with the complex distance.
    pub fn eval_phi_stretched(&self, x: [f64; 3], y: [f64; 3], profile: &PmlProfile) -> Result<MatrixField4> {
        let r = dist(x, y);
        if r < 1e-8 * profile.diam_inner() {
            return Err(Error::Singular(r));
        }
        let (xs, ys) = (profile.stretch(x), profile.stretch(y));
        let diff = [xs.xt[0] - ys.xt[0], xs.xt[1] - ys.xt[1], xs.xt[2] - ys.xt[2]];
        Ok(MatrixField4 { m: self.phi_radial(diff), x, y })
    }

    /// Double-layer kernel D with Ψ_DL(q)(x) = ∫ D(x, y) q(y) ds(y).
    ///
    /// Row k of D is the adjoint traction R̃_y applied to row k of Φ(x − y)
    /// viewed as a function of y:
    /// R̃ V = (σ(v)ν − iωη w ν, ∂_ν w) with V = (v, w).
    /// The dual slots of `x` must carry ∂X/∂y.
    pub fn double_layer_kernel<T: Scalar>(&self, x: [Dual<T>; 3], nu: [f64; 3]) -> [[T; 4]; 4] {
        let phi = self.phi_radial(x);
        let p = &self.params;
        let (lam, mu) = (p.lame_lambda, p.lame_mu);
        let iwe = I * p.omega * p.eta;
        let zero = T::zero();
        let mut out = [[zero; 4]; 4];
        for k in 0..4 {
            let row = &phi[k];
            let mut div = zero;
            for a in 0..3 {
                div += row[a].d[a];
            }
            for i in 0..3 {
                let mut t = div.scale(C64::from(lam * nu[i]));
                for b in 0..3 {
                    if nu[b] != 0.0 {
                        t += (row[i].d[b] + row[b].d[i]).scale(C64::from(mu * nu[b]));
                    }
                }
                t += row[3].v.scale(-iwe * nu[i]);
                out[k][i] = t;
            }
            let mut dn = zero;
            for b in 0..3 {
                if nu[b] != 0.0 {
                    dn += row[3].d[b].scale(C64::from(nu[b]));
                }
            }
            out[k][3] = dn;
        }
        out
    }

    /// The double-layer kernel at (x, y) with unit normal ν at y, plain or
    /// stretched.
    pub fn apply_stress_operator(
        &self,
        x: [f64; 3],
        y: [f64; 3],
        nu: [f64; 3],
        stretch: Option<&PmlProfile>,
    ) -> Result<MatrixField4> {
        let r = dist(x, y);
        let floor = stretch.map_or(1e-300, |p| 1e-8 * p.diam_inner());
        if r < floor || r == 0.0 {
            return Err(Error::Singular(r));
        }
        let (xs, ys) = stretched_pair(x, y, stretch);
        let m = self.double_layer_kernel(y_seeded(&xs, &ys), nu);
        Ok(MatrixField4 { m, x, y })
    }

    /// Applies L to column k of Φ(· − y0) by fourth-order central
    /// differences and returns |residual| relative to the summed magnitude
    /// of the individual operator terms.
    pub fn pde_residual(&self, x: [f64; 3], y0: [f64; 3], k: usize, h: f64) -> Result<f64> {
        let dist0 = dist(x, y0);
        if dist0 <= 10.0 * h {
            return Err(Error::TooCloseForFd { dist: dist0, min: 10.0 * h });
        }
        let col = |p: [f64; 3]| -> Result<[C64; 4]> {
            let m = self.eval_phi([p[0] - y0[0], p[1] - y0[1], p[2] - y0[2]])?.m;
            Ok([m[0][k], m[1][k], m[2][k], m[3][k]])
        };
        let at = |off: [f64; 3]| col([x[0] + off[0], x[1] + off[1], x[2] + off[2]]);
        let w1 = [(-2.0, 1.0 / 12.0), (-1.0, -2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)];
        let w2 = [(-2.0, -1.0 / 12.0), (-1.0, 4.0 / 3.0), (0.0, -5.0 / 2.0), (1.0, 4.0 / 3.0), (2.0, -1.0 / 12.0)];
        let axis = |a: usize, s: f64| {
            let mut o = [0.0; 3];
            o[a] = s * h;
            o
        };
        let v0 = at([0.0; 3])?;
        let mut grad = [[ZERO; 3]; 4];
        let mut hess = [[[ZERO; 3]; 3]; 4];
        for a in 0..3 {
            for &(s, w) in &w2 {
                let v = if s == 0.0 { v0 } else { at(axis(a, s))? };
                for c in 0..4 {
                    hess[c][a][a] += w * v[c] / (h * h);
                }
            }
            for &(s, w) in &w1 {
                let v = at(axis(a, s))?;
                for c in 0..4 {
                    grad[c][a] += w * v[c] / h;
                }
            }
            for b in (a + 1)..3 {
                for &(sa, wa) in &w1 {
                    for &(sb, wb) in &w1 {
                        let mut o = axis(a, sa);
                        o[b] = sb * h;
                        let v = at(o)?;
                        for c in 0..4 {
                            hess[c][a][b] += wa * wb * v[c] / (h * h);
                        }
                    }
                }
                for c in 0..4 {
                    hess[c][b][a] = hess[c][a][b];
                }
            }
        }
        let p = &self.params;
        let rw2 = p.rho * p.omega * p.omega;
        let iwe = I * p.omega * p.eta;
        let mut res2 = 0.0;
        let mut scale2 = 0.0;
        let div: C64 = (0..3).map(|b| grad[b][b]).sum();
        for a in 0..3 {
            let lap: C64 = (0..3).map(|b| hess[a][b][b]).sum();
            let graddiv: C64 = (0..3).map(|b| hess[b][a][b]).sum();
            let terms = [
                p.lame_mu * lap,
                (p.lame_lambda + p.lame_mu) * graddiv,
                rw2 * v0[a],
                -p.gamma * grad[3][a],
            ];
            let sum: C64 = terms.iter().sum();
            let mag: f64 = terms.iter().map(|t| t.norm()).sum();
            res2 += sum.norm_sqr();
            scale2 += mag * mag;
        }
        let lap: C64 = (0..3).map(|b| hess[3][b][b]).sum();
        let terms = [lap, p.q() * v0[3], iwe * div];
        let sum: C64 = terms.iter().sum();
        let mag: f64 = terms.iter().map(|t| t.norm()).sum();
        res2 += sum.norm_sqr();
        scale2 += mag * mag;
        Ok((res2 / scale2).sqrt())
    }
}

/// Stretched images of x and y (identity when no profile is given).
pub fn stretched_pair(x: [f64; 3], y: [f64; 3], stretch: Option<&PmlProfile>) -> (StretchedPoint, StretchedPoint) {
    match stretch {
        Some(p) => (p.stretch(x), p.stretch(y)),
        None => (identity_point(x), identity_point(y)),
    }
}

pub fn identity_point(x: [f64; 3]) -> StretchedPoint {
    let one = C64::new(1.0, 0.0);
    StretchedPoint {
        x,
        xt: [C64::from(x[0]), C64::from(x[1]), C64::from(x[2])],
        s: [one; 3],
    }
}

/// X = x̃ − ỹ with derivative slots ∂/∂y_b = −s_b(y_b).
pub fn y_seeded(xs: &StretchedPoint, ys: &StretchedPoint) -> [Dual<C64>; 3] {
    std::array::from_fn(|a| Dual::variable(xs.xt[a] - ys.xt[a], a, -ys.s[a]))
}

/// X = x̃ − ỹ with derivative slots ∂/∂x_b = s_b(x_b).
pub fn x_seeded(xs: &StretchedPoint, ys: &StretchedPoint) -> [Dual<C64>; 3] {
    std::array::from_fn(|a| Dual::variable(xs.xt[a] - ys.xt[a], a, xs.s[a]))
}

/// X with outer slots ∂/∂y and inner slots ∂/∂x.
pub fn xy_seeded(xs: &StretchedPoint, ys: &StretchedPoint) -> [Dual<Dual<C64>>; 3] {
    std::array::from_fn(|a| {
        let inner = Dual::variable(xs.xt[a] - ys.xt[a], a, xs.s[a]);
        Dual::variable(inner, a, Dual::constant(-ys.s[a]))
    })
}

/// R U = (σ(u)ν − γpν, ∂_ν p) from a value and gradient (grad[a][b] = ∂_b U_a).
pub fn apply_r(value: [C64; 4], grad: [[C64; 3]; 4], nu: [f64; 3], params: &MaterialParams) -> [C64; 4] {
    let div = grad[0][0] + grad[1][1] + grad[2][2];
    let mut out = [ZERO; 4];
    for i in 0..3 {
        let mut t = params.lame_lambda * div * nu[i] - params.gamma * value[3] * nu[i];
        for b in 0..3 {
            t += params.lame_mu * (grad[i][b] + grad[b][i]) * nu[b];
        }
        out[i] = t;
    }
    out[3] = (0..3).map(|b| grad[3][b] * nu[b]).sum();
    out
}

/// [(1+ζα₀)² + α₀²](1/|x−y| + 1/|x−y|³) e^{−Λ Im d}: the shape of the
/// stretched-kernel decay bound, without its constant.
pub fn decay_envelope(profile: &PmlProfile, waves: &WaveNumbers, x: [f64; 3], y: [f64; 3]) -> Result<f64> {
    let r = dist(x, y);
    let d = profile.complex_distance(x, y)?;
    let s = profile.distance_stretch_bound().powi(2);
    Ok(s * (1.0 / r + 1.0 / r.powi(3)) * (-waves.cap_lambda * d.im).exp())
}

pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}
