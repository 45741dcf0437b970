use super::{progress, rate_check, record_for, sweep_value};
use crate::config::{Config, StudyConfig};
use crate::error::{HarnessError, Result};
use crate::fit::{least_squares, SLOPE_SLACK};
use crate::report::{Check, StudyOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;
use tepml::potentials::{pml_extension_with_gradient, surrogate_of_samples};
use tepml::{ExactField, PmlProfile, PointSource, SurfaceQuadrature, ThermoelasticKernel};

pub const METRIC_EXTENSION: &str = "extension_surrogate";
pub const METRIC_CONTROL: &str = "extension_surrogate_control";
pub const METRIC_UNDAMPED: &str = "undamped_surrogate";
pub const METRIC_RAY_SLOPE: &str = "ray_slope_worst";
pub const METRIC_RAY_EXCESS: &str = "ray_excess_worst";

/// Ray from a point of ∂B₁ heading outwards, truncated where it leaves B₂.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub start: [f64; 3],
    pub dir: [f64; 3],
    pub length: f64,
}

impl Ray {
    pub fn at(&self, t: f64) -> [f64; 3] {
        std::array::from_fn(|a| self.start[a] + t * self.dir[a])
    }
}

/// Random rays: a uniform point on a uniformly chosen face of ∂B₁ and the
/// face normal tilted by up to about 27°.
pub fn random_rays(profile: &PmlProfile, n: usize, rng: &mut impl Rng) -> Vec<Ray> {
    let outer = profile.outer();
    (0..n)
        .map(|_| {
            let face = rng.random_range(0..6usize);
            let (axis, side) = (face % 3, if face < 3 { 1.0 } else { -1.0 });
            let mut start = [0.0; 3];
            let mut dir = [0.0; 3];
            for a in 0..3 {
                if a == axis {
                    start[a] = side * profile.l[a];
                    dir[a] = side;
                } else {
                    start[a] = rng.random_range(-1.0..1.0) * profile.l[a];
                    dir[a] = rng.random_range(-0.5..0.5);
                }
            }
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dir = dir.map(|v| v / norm);
            let length = (0..3)
                .filter(|&a| dir[a] != 0.0)
                .map(|a| (dir[a].signum() * outer[a] - start[a]) / dir[a])
                .fold(f64::INFINITY, f64::min);
            Ray { start, dir, length }
        })
        .collect()
}

/// Along a ray from y: the least-squares slope of log|Φ̃₄₄(x, y)| against
/// Λ·Im d(x̃, ỹ), and the largest rise of log|Φ̃₄₄| + Λ·Im d above its
/// value at the start.
pub fn ray_decay(kernel: &ThermoelasticKernel, profile: &PmlProfile, y: [f64; 3], ray: &Ray, samples: usize) -> Result<(Option<f64>, f64)> {
    let cap = kernel.waves.cap_lambda;
    let (mut x, mut lg) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    for k in 0..samples {
        let p = ray.at(ray.length * k as f64 / (samples - 1) as f64);
        let m = kernel.eval_phi_stretched(p, y, profile)?.m;
        x.push(cap * profile.complex_distance(p, y)?.im);
        lg.push(m[3][3].norm().ln());
    }
    let g0 = lg[0] + x[0];
    let excess = lg.iter().zip(&x).map(|(a, b)| a + b - g0).fold(f64::NEG_INFINITY, f64::max);
    Ok((least_squares(&x, &lg).map(|f| f.slope), excess))
}

/// Surrogate boundary norm on ∂B₂ of the (stretched) extension of the
/// point-source data on ∂B₁.
fn extension_surrogate(
    kernel: &ThermoelasticKernel,
    source: &PointSource,
    inner: &Arc<SurfaceQuadrature>,
    profile: &PmlProfile,
    target_n: usize,
) -> Result<(f64, f64)> {
    let targets = SurfaceQuadrature::new(profile.outer(), target_n)?;
    let (f, nf) = source.boundary_data(inner)?;
    let samples = pml_extension_with_gradient(&f, &nf, &targets.nodes, Some(profile), kernel)?;
    let exact: Vec<_> = targets.nodes.iter().map(|x| source.sample(*x)).collect::<tepml::Result<_>>()?;
    let d = profile.d_min();
    Ok((surrogate_of_samples(&samples, &targets, d), surrogate_of_samples(&exact, &targets, d)))
}

/// (a) stretched-kernel decay along random rays through the layer; (b) the
/// PML extension of point-source data measured on ∂B₂ across the sweep,
/// with an α₀ = 0 control that must reproduce the undamped field.
pub fn run_decay_study(config: &Config) -> Result<StudyOutcome> {
    let StudyConfig::Decay { source_column, rays, ray_samples, target_n_per_edge, control } = config.study else {
        return Err(HarnessError::Config("not a decay study".into()));
    };
    let params = config.material.params()?;
    let axis = config.geometry.sweep_axis()?;
    let points = config.geometry.sweep()?;
    let kernel = ThermoelasticKernel::new(&params)?;
    let y0 = [0.0; 3];
    let source = PointSource::new(&kernel, y0, source_column, config.geometry.obstacle_half)?;
    let inner = Arc::new(SurfaceQuadrature::new(config.geometry.l, config.discretization.n_per_edge)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut out = StudyOutcome::default();
    let (mut ext_idx, mut xs, mut rates) = (Vec::new(), Vec::new(), Vec::new());
    let mut ray_ok = true;
    let mut ray_notes = Vec::new();
    let mut ctrl_dev: f64 = 0.0;
    for &p in &points {
        let t0 = Instant::now();
        let profile = config.geometry.profile(p)?;
        let r0 = profile.r0_constant();
        let value = sweep_value(axis, p);

        if p.alpha0 > 0.0 && rays > 0 {
            let (mut worst_slope, mut worst_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for ray in random_rays(&profile, rays, &mut rng) {
                let (slope, excess) = ray_decay(&kernel, &profile, y0, &ray, ray_samples)?;
                worst_slope = worst_slope.max(slope.unwrap_or(f64::INFINITY));
                worst_excess = worst_excess.max(excess);
            }
            let pass = worst_slope <= -SLOPE_SLACK;
            ray_ok &= pass;
            ray_notes.push(format!("{}={value}: {worst_slope:.3}", axis.name()));
            let mut rec = record_for(axis, p, METRIC_RAY_SLOPE, worst_slope, r0);
            rec.predicted_exponent = 0.0;
            rec.fitted_slope = Some(worst_slope).filter(|s| s.is_finite());
            if !worst_slope.is_finite() {
                rec.metric_value = 0.0;
                ray_ok = false;
            }
            out.records.push(rec);
            let mut rec = record_for(axis, p, METRIC_RAY_EXCESS, worst_excess, r0);
            rec.predicted_exponent = 0.0;
            out.records.push(rec);
        }

        let (s, undamped) = extension_surrogate(&kernel, &source, &inner, &profile, target_n_per_edge)?;
        let wall = t0.elapsed().as_millis() as u64;
        progress(format_args!("decay: d = {}, alpha0 = {}: surrogate {s:.4e} (undamped {undamped:.4e}, {wall} ms)", p.d, p.alpha0));
        let mut rec = record_for(axis, p, METRIC_EXTENSION, s, r0);
        rec.wall_ms = wall;
        ext_idx.push(out.records.len());
        out.records.push(rec);
        out.records.push(record_for(axis, p, METRIC_UNDAMPED, undamped, 0.0));
        xs.push(p.alpha0 * p.d);
        rates.push(r0);

        if control {
            let (c, _) = extension_surrogate(&kernel, &source, &inner, &profile.without_absorption(), target_n_per_edge)?;
            ctrl_dev = ctrl_dev.max((c / undamped - 1.0).abs());
            out.records.push(record_for(axis, p, METRIC_CONTROL, c, 0.0));
        }
    }
    if rays > 0 && !ray_notes.is_empty() {
        out.checks.push(Check::new(
            "ray_decay",
            ray_ok,
            format!("worst slope of log|phi44| vs Lambda*Im d per point [{}], threshold {:.2}", ray_notes.join(", "), -SLOPE_SLACK),
        ));
    }
    let check = rate_check(&mut out, "extension_rate", &ext_idx, &xs, &rates, false);
    out.checks.push(check);
    if control {
        out.checks.push(Check::new(
            "control_no_decay",
            ctrl_dev <= 0.05,
            format!("alpha0 = 0 surrogate within {:.3}% of the undamped field", 100.0 * ctrl_dev),
        ));
    }
    Ok(out)
}
