use super::{is_breakdown, progress, rate_check, record_for, require_constraints, skip, solver_options, sweep_value};
use crate::config::{Config, StudyConfig, SweepPoint};
use crate::error::{HarnessError, Result};
use crate::report::{Check, StudyOutcome};
use std::time::Instant;
use tepml::{PointSource, ThermoelasticKernel};
use tepml_fem::problem::{discrete_dtn, point_source_symmetry};
use tepml_fem::{HexMesh, Region, TractionRecovery};

pub const METRIC: &str = "dtn_rel_error";
pub const METRIC_COARSE: &str = "dtn_rel_error_coarse";

struct DtnResult {
    error: f64,
    n_unknowns: usize,
    residual: f64,
    wall_ms: u64,
}

/// Weighted L² distance on ∂B₁ between the layer traction and the exact
/// traction of the point source, relative to the latter.
fn dtn_error(
    config: &Config,
    source: &PointSource,
    p: SweepPoint,
    h: f64,
    recovery: TractionRecovery,
) -> Result<std::result::Result<DtnResult, String>> {
    let t0 = Instant::now();
    let params = config.material.params()?;
    let profile = config.geometry.profile(p)?;
    let mesh = HexMesh::new(&profile, config.geometry.obstacle_half, h, Region::Layer, config.discretization.extent.into())?;
    let sym = point_source_symmetry(&mesh, source)?;
    let g = |x: [f64; 3]| source.value(x);
    let (t, sol) = match discrete_dtn(&mesh, &params, &g, sym, recovery, solver_options(config)) {
        Ok(r) => r,
        Err(e) if is_breakdown(&e) => return Ok(Err(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let exact = t.exact_counterpart(&mesh, sym, &|x, nu| source.traction(x, nu))?;
    Ok(Ok(DtnResult {
        error: t.distance(&mesh, &exact) / t.weighted_norm(&mesh, &exact),
        n_unknowns: sol.stats.n_unknowns,
        residual: sol.residual,
        wall_ms: t0.elapsed().as_millis() as u64,
    }))
}

/// Layer solves over the sweep, the DtN error rate above the floor, and
/// a coarser solve at the last sweep point to show the floor is h-driven.
pub fn run_dtn_error_study(config: &Config) -> Result<StudyOutcome> {
    let StudyConfig::Dtn { source_column, recovery, coarse_h } = config.study else {
        return Err(HarnessError::Config("not a DtN study".into()));
    };
    let recovery: TractionRecovery = recovery.into();
    let params = config.material.params()?;
    let axis = config.geometry.sweep_axis()?;
    let points = config.geometry.sweep()?;
    require_constraints(&params, config.geometry.zeta, &points)?;
    let kernel = ThermoelasticKernel::new(&params)?;
    let source = PointSource::new(&kernel, [0.0; 3], source_column, config.geometry.obstacle_half)?;
    let h = config.discretization.h;

    let mut out = StudyOutcome::default();
    let (mut idx, mut xs, mut rates, mut done) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &p in &points {
        let r0 = config.geometry.profile(p)?.r0_constant();
        match dtn_error(config, &source, p, h, recovery)? {
            Err(reason) => skip(&mut out, axis.name(), sweep_value(axis, p), reason),
            Ok(res) => {
                progress(format_args!(
                    "dtn: d = {}, alpha0 = {}: error {:.4e} ({} unknowns, {} ms)",
                    p.d, p.alpha0, res.error, res.n_unknowns, res.wall_ms
                ));
                let mut rec = record_for(axis, p, METRIC, res.error, r0);
                rec.n_unknowns = res.n_unknowns;
                rec.solve_residual = res.residual;
                rec.wall_ms = res.wall_ms;
                idx.push(out.records.len());
                out.records.push(rec);
                xs.push(p.alpha0 * p.d);
                rates.push(r0);
                done.push(p);
            }
        }
    }
    let Some(&last) = done.last() else {
        return Err(HarnessError::AllBrokeDown);
    };
    let check = rate_check(&mut out, "dtn_error_rate", &idx, &xs, &rates, true);
    out.checks.push(check);

    let fine = out.records[*idx.last().unwrap()].metric_value;
    let hc = coarse_h.unwrap_or(2.0 * h);
    let check = match dtn_error(config, &source, last, hc, recovery)? {
        Err(reason) => {
            skip(&mut out, axis.name(), sweep_value(axis, last), format!("coarse floor solve: {reason}"));
            Check::new("floor_drops", false, "coarse solve broke down")
        }
        Ok(res) => {
            progress(format_args!("dtn: coarse h = {hc}: error {:.4e} ({} ms)", res.error, res.wall_ms));
            let r0 = config.geometry.profile(last)?.r0_constant();
            let mut rec = record_for(axis, last, METRIC_COARSE, res.error, r0);
            rec.n_unknowns = res.n_unknowns;
            rec.solve_residual = res.residual;
            rec.wall_ms = res.wall_ms;
            out.records.push(rec);
            Check::new("floor_drops", fine < res.error, format!("floor {fine:.4e} at h = {h}, {:.4e} at h = {hc}", res.error))
        }
    };
    out.checks.push(check);
    Ok(out)
}
