//! Surface quadrature on cuboid boundaries and the layer potentials built on
//! the fundamental solution.
//!
//! Sign convention: with ν the outward normal of B₁, a radiating exterior
//! field is reproduced by U = ½[Ψ_DL(U) − Ψ_SL(RU)]. The PML extension is the
//! same combination with stretched kernels.

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::fundsol::{apply_r, identity_point, x_seeded, xy_seeded, y_seeded, ThermoelasticKernel};
use crate::gauss::GaussRule;
use crate::pml::PmlProfile;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);

pub type Vec4 = [C64; 4];
/// grad[a][b] = ∂_b U_a.
pub type Grad4 = [[C64; 3]; 4];

/// Tensor Gauss rule on the six faces of a centred cuboid, split into
/// panels of at most eight points per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceQuadrature {
    pub half: [f64; 3],
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 3]>,
    /// 2·axis + (1 if the face is at +half).
    pub faces: Vec<u8>,
    pub panels_per_edge: usize,
    pub points_per_panel: usize,
    pub panel_diameter: f64,
}

impl SurfaceQuadrature {
    pub fn new(half: [f64; 3], n_per_edge: usize) -> Result<Self> {
        if n_per_edge < 2 {
            return Err(Error::InvalidParameter(format!("n_per_edge = {n_per_edge} < 2")));
        }
        if half.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidGeometry(format!("degenerate box {half:?}")));
        }
        let panels = n_per_edge.div_ceil(8);
        let pts = n_per_edge.div_ceil(panels);
        let rule = GaussRule::legendre(pts);
        let edge_rule = |h: f64| -> Vec<(f64, f64)> {
            let w = 2.0 * h / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let a = -h + p as f64 * w;
                    rule.mapped(a, a + w).collect::<Vec<_>>()
                })
                .collect()
        };
        let mut q = Self {
            half,
            nodes: Vec::new(),
            weights: Vec::new(),
            normals: Vec::new(),
            faces: Vec::new(),
            panels_per_edge: panels,
            points_per_panel: pts,
            panel_diameter: 0.0,
        };
        for axis in 0..3 {
            let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
            let (eb, ec) = (edge_rule(half[b]), edge_rule(half[c]));
            let diam = ((2.0 * half[b] / panels as f64).powi(2) + (2.0 * half[c] / panels as f64).powi(2)).sqrt();
            q.panel_diameter = q.panel_diameter.max(diam);
            for side in [-1.0, 1.0] {
                let mut nu = [0.0; 3];
                nu[axis] = side;
                for &(xb, wb) in &eb {
                    for &(xc, wc) in &ec {
                        let mut p = [0.0; 3];
                        p[axis] = side * half[axis];
                        p[b] = xb;
                        p[c] = xc;
                        q.nodes.push(p);
                        q.weights.push(wb * wc);
                        q.normals.push(nu);
                        q.faces.push((2 * axis + usize::from(side > 0.0)) as u8);
                    }
                }
            }
        }
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.half;
        8.0 * (a * b + b * c + a * c)
    }

    /// Euclidean distance from x to the box surface.
    pub fn distance_to_surface(&self, x: [f64; 3]) -> f64 {
        let out: [f64; 3] = std::array::from_fn(|a| (x[a].abs() - self.half[a]).max(0.0));
        let o = (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
        if o > 0.0 {
            o
        } else {
            (0..3).map(|a| self.half[a] - x[a].abs()).fold(f64::INFINITY, f64::min)
        }
    }

    fn check_targets(&self, targets: &[[f64; 3]]) -> Result<()> {
        for t in targets {
            let dist = self.distance_to_surface(*t);
            if dist < self.min_target_distance() {
                return Err(Error::NearSingularQuadrature { dist, min: self.min_target_distance() });
            }
        }
        Ok(())
    }

    /// Closest admissible target: one panel diameter.
    pub fn min_target_distance(&self) -> f64 {
        self.panel_diameter
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}

/// Four-component data at the nodes of a surface quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub quad: Arc<SurfaceQuadrature>,
    pub values: Vec<Vec4>,
}

impl BoundaryData {
    pub fn new(quad: Arc<SurfaceQuadrature>, values: Vec<Vec4>) -> Result<Self> {
        if values.len() != quad.len() {
            return Err(Error::Mismatch(format!("{} values for {} nodes", values.len(), quad.len())));
        }
        if values.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Mismatch("non-finite boundary value".into()));
        }
        Ok(Self { quad, values })
    }

    pub fn zeros(quad: Arc<SurfaceQuadrature>) -> Self {
        let n = quad.len();
        Self { quad, values: vec![[ZERO; 4]; n] }
    }

    pub fn from_fn(quad: Arc<SurfaceQuadrature>, mut f: impl FnMut([f64; 3], [f64; 3]) -> Vec4) -> Result<Self> {
        let values = quad.nodes.iter().zip(&quad.normals).map(|(p, n)| f(*p, *n)).collect();
        Self::new(quad, values)
    }

    /// a·self + b·other on the same nodes.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        if !Arc::ptr_eq(&self.quad, &other.quad) && *self.quad != *other.quad {
            return Err(Error::Mismatch("densities live on different quadratures".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| std::array::from_fn(|c| a * u[c] + b * v[c]))
            .collect();
        Ok(Self { quad: self.quad.clone(), values })
    }
}

/// Field value with its gradient in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Vec4,
    pub grad: Grad4,
}

impl FieldSample {
    pub fn zero() -> Self {
        Self { value: [ZERO; 4], grad: [[ZERO; 3]; 4] }
    }

    fn axpy(&mut self, a: C64, o: &Self) {
        for c in 0..4 {
            self.value[c] += a * o.value[c];
            for b in 0..3 {
                self.grad[c][b] += a * o.grad[c][b];
            }
        }
    }
}

fn mat_vec<T: Scalar>(m: &[[T; 4]; 4], v: &Vec4) -> [T; 4] {
    std::array::from_fn(|i| {
        let mut s = T::zero();
        for j in 0..4 {
            if v[j] != ZERO {
                s += m[i][j].scale(v[j]);
            }
        }
        s
    })
}

fn dual_to_sample(v: [Dual<C64>; 4]) -> FieldSample {
    FieldSample {
        value: std::array::from_fn(|c| v[c].v),
        grad: std::array::from_fn(|c| v[c].d),
    }
}

fn layer<F, R>(density: &BoundaryData, targets: &[[f64; 3]], stretch: Option<&PmlProfile>, per_target: F) -> Result<Vec<R>>
where
    F: Fn(&crate::pml::StretchedPoint, &crate::pml::StretchedPoint, [f64; 3], &Vec4) -> R + Sync,
    R: Send + Default + std::ops::AddAssign,
{
    density.quad.check_targets(targets)?;
    let q = &density.quad;
    let sources: Vec<_> = q
        .nodes
        .iter()
        .map(|&y| stretch.map_or_else(|| identity_point(y), |p| p.stretch(y)))
        .collect();
    Ok(targets
        .par_iter()
        .map(|&x| {
            let xs = stretch.map_or_else(|| identity_point(x), |p| p.stretch(x));
            let mut acc = R::default();
            for (n, ys) in sources.iter().enumerate() {
                let dv = &density.values[n];
                if dv.iter().all(|v| *v == ZERO) {
                    continue;
                }
                let w = q.weights[n];
                let dv = dv.map(|v| v * w);
                acc += per_target(&xs, ys, q.normals[n], &dv);
            }
            acc
        })
        .collect())
}

#[derive(Default, Clone, Copy)]
struct Acc4(Vec4);

impl Default for FieldSample {
    fn default() -> Self {
        Self::zero()
    }
}

impl std::ops::AddAssign for Acc4 {
    fn add_assign(&mut self, o: Self) {
        for c in 0..4 {
            self.0[c] += o.0[c];
        }
    }
}

impl std::ops::AddAssign for FieldSample {
    fn add_assign(&mut self, o: Self) {
        self.axpy(C64::new(1.0, 0.0), &o);
    }
}

/// Ψ_SL(p)(x) = ∫ Φ(x − y) p(y) ds(y), or with Φ̃ when a profile is given.
pub fn single_layer(
    density: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<Vec4>> {
    let out = layer(density, targets, stretch, |xs, ys, _, p| {
        let diff: [C64; 3] = std::array::from_fn(|a| xs.xt[a] - ys.xt[a]);
        Acc4(mat_vec(&kernel.phi_radial(diff), p))
    })?;
    Ok(out.into_iter().map(|a| a.0).collect())
}

/// Ψ_DL(q)(x) = ∫ D(x, y) q(y) ds(y) with the adjoint-traction kernel.
pub fn double_layer(
    density: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<Vec4>> {
    let out = layer(density, targets, stretch, |xs, ys, nu, q| {
        Acc4(mat_vec(&kernel.double_layer_kernel(y_seeded(xs, ys), nu), q))
    })?;
    Ok(out.into_iter().map(|a| a.0).collect())
}

pub fn single_layer_with_gradient(
    density: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<FieldSample>> {
    layer(density, targets, stretch, |xs, ys, _, p| {
        dual_to_sample(mat_vec(&kernel.phi_radial(x_seeded(xs, ys)), p))
    })
}

pub fn double_layer_with_gradient(
    density: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<FieldSample>> {
    layer(density, targets, stretch, |xs, ys, nu, q| {
        dual_to_sample(mat_vec(&kernel.double_layer_kernel(xy_seeded(xs, ys), nu), q))
    })
}

/// ½[Ψ_DL(f) − Ψ_SL(Nf)], stretched when a profile is given. With no
/// profile this is the exterior representation of the radiating field.
pub fn pml_extension(
    f: &BoundaryData,
    nf: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<Vec4>> {
    let dl = double_layer(f, targets, stretch, kernel)?;
    let sl = single_layer(nf, targets, stretch, kernel)?;
    Ok(dl
        .iter()
        .zip(&sl)
        .map(|(a, b)| std::array::from_fn(|c| 0.5 * (a[c] - b[c])))
        .collect())
}

pub fn pml_extension_with_gradient(
    f: &BoundaryData,
    nf: &BoundaryData,
    targets: &[[f64; 3]],
    stretch: Option<&PmlProfile>,
    kernel: &ThermoelasticKernel,
) -> Result<Vec<FieldSample>> {
    let dl = double_layer_with_gradient(f, targets, stretch, kernel)?;
    let sl = single_layer_with_gradient(nf, targets, stretch, kernel)?;
    Ok(dl
        .iter()
        .zip(&sl)
        .map(|(a, b)| {
            let mut s = FieldSample::zero();
            s.axpy(C64::from(0.5), a);
            s.axpy(C64::from(-0.5), b);
            s
        })
        .collect())
}

/// Column k of Φ(· − y0) for a source inside the obstacle: an exact
/// radiating solution with exact Dirichlet and traction data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub y0: [f64; 3],
    pub k: usize,
    pub kernel: ThermoelasticKernel,
}

/// Field that can be sampled with its gradient (the exact solution used by
/// error norms).
pub trait ExactField: Sync {
    fn sample(&self, x: [f64; 3]) -> Result<FieldSample>;
}

impl PointSource {
    /// `obstacle_half` are the half-widths of the centred cuboid obstacle.
    pub fn new(kernel: &ThermoelasticKernel, y0: [f64; 3], k: usize, obstacle_half: [f64; 3]) -> Result<Self> {
        if k > 3 {
            return Err(Error::InvalidSource(format!("column {k} out of range")));
        }
        let size = 2.0 * obstacle_half.iter().cloned().fold(f64::INFINITY, f64::min);
        let margin = (0..3).map(|a| obstacle_half[a] - y0[a].abs()).fold(f64::INFINITY, f64::min);
        if !(margin >= 0.1 * size) {
            return Err(Error::InvalidSource(format!(
                "source {y0:?} has margin {margin:.3e} inside the obstacle, need {:.3e}",
                0.1 * size
            )));
        }
        Ok(Self { y0, k, kernel: *kernel })
    }

    fn sep(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let d = [x[0] - self.y0[0], x[1] - self.y0[1], x[2] - self.y0[2]];
        if d.iter().all(|v| *v == 0.0) {
            return Err(Error::Singular(0.0));
        }
        Ok(d)
    }

    pub fn value(&self, x: [f64; 3]) -> Result<Vec4> {
        let d = self.sep(x)?;
        let m = self.kernel.phi_radial(d.map(C64::from));
        Ok(std::array::from_fn(|a| m[a][self.k]))
    }

    pub fn traction(&self, x: [f64; 3], nu: [f64; 3]) -> Result<Vec4> {
        let s = self.sample(x)?;
        Ok(apply_r(s.value, s.grad, nu, &self.kernel.params))
    }

    /// Exact Dirichlet data f and Neumann data RU on a surface quadrature.
    pub fn boundary_data(&self, quad: &Arc<SurfaceQuadrature>) -> Result<(BoundaryData, BoundaryData)> {
        let mut f = Vec::with_capacity(quad.len());
        let mut nf = Vec::with_capacity(quad.len());
        for (p, nu) in quad.nodes.iter().zip(&quad.normals) {
            let s = self.sample(*p)?;
            f.push(s.value);
            nf.push(apply_r(s.value, s.grad, *nu, &self.kernel.params));
        }
        Ok((BoundaryData::new(quad.clone(), f)?, BoundaryData::new(quad.clone(), nf)?))
    }
}

impl ExactField for PointSource {
    fn sample(&self, x: [f64; 3]) -> Result<FieldSample> {
        let d = self.sep(x)?;
        let xs = identity_point(d);
        let origin = identity_point([0.0; 3]);
        let m = self.kernel.phi_radial(x_seeded(&xs, &origin));
        Ok(dual_to_sample(std::array::from_fn(|a| m[a][self.k])))
    }
}

/// Removes the normal component of each gradient row.
pub fn tangential_gradient(grad: &Grad4, nu: [f64; 3]) -> Grad4 {
    std::array::from_fn(|c| {
        let gn: C64 = (0..3).map(|b| grad[c][b] * nu[b]).sum();
        std::array::from_fn(|b| grad[c][b] - gn * nu[b])
    })
}

/// d·max|v| + d^{3/2}·max|∇v| over the sample nodes; the gradients should
/// already be tangential.
pub fn boundary_norm_surrogate(values: &[Vec4], gradients: &[Grad4], d: f64) -> f64 {
    let vmax = values
        .iter()
        .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let gmax = gradients
        .iter()
        .map(|g| g.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    d * vmax + d.powf(1.5) * gmax
}

/// Convenience: the surrogate of a set of field samples taken at the nodes
/// of `quad`, using tangential gradients.
pub fn surrogate_of_samples(samples: &[FieldSample], quad: &SurfaceQuadrature, d: f64) -> f64 {
    let values: Vec<Vec4> = samples.iter().map(|s| s.value).collect();
    let grads: Vec<Grad4> = samples
        .iter()
        .zip(&quad.normals)
        .map(|(s, nu)| tangential_gradient(&s.grad, *nu))
        .collect();
    boundary_norm_surrogate(&values, &grads, d)
}
