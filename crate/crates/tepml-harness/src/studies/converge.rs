use super::{is_breakdown, progress, rate_check, record_for, require_constraints, skip, solver_options, sweep_value};
use crate::config::{Config, StudyConfig, SweepPoint};
use crate::error::{HarnessError, Result};
use crate::fit::full_fit;
use crate::report::{Check, StudyOutcome};
use std::time::Instant;
use tepml::{PointSource, ThermoelasticKernel};
use tepml_fem::problem::{h1_error, h1_norm, solve_point_source_many, NormRegion};
use tepml_fem::{DiscreteField, HexMesh, OuterData, Region};

pub const METRIC: &str = "h1_rel_error";
pub const METRIC_CONTROL: &str = "h1_rel_error_control";
pub const METRIC_TRUNCATION: &str = "h1_rel_error_truncation";
pub const METRIC_DISCRETIZATION: &str = "h1_rel_error_discretization";
/// Smallest relative error an α₀ = 0 run may reach and still count as not
/// converging.
pub const CONTROL_MIN_ERROR: f64 = 0.1;

struct PointResult {
    errors: Vec<f64>,
    n_unknowns: usize,
    residual: f64,
    wall_ms: u64,
}

/// Relative H¹(Ω₁) errors of the truncated problem at one sweep point: the
/// zero-data solve against the point source, then (with a reference) the
/// stretched-data solve against it and the two solves against each other.
fn solve_point(config: &Config, source: &PointSource, p: SweepPoint, reference: bool) -> Result<std::result::Result<PointResult, String>> {
    let t0 = Instant::now();
    let params = config.material.params()?;
    let profile = config.geometry.profile(p)?;
    let mesh = HexMesh::new(&profile, config.geometry.obstacle_half, config.discretization.h, Region::Truncated, config.discretization.extent.into())?;
    let outers: &[OuterData] = if reference { &[OuterData::Zero, OuterData::Stretched] } else { &[OuterData::Zero] };
    let sols = match solve_point_source_many(&mesh, &params, source, outers, solver_options(config)) {
        Ok(s) => s,
        Err(e) if is_breakdown(&e) => return Ok(Err(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let e = h1_error(&mesh, &sols[0].field, source, NormRegion::Inner)?;
    let mut errors = vec![e.relative()];
    if reference {
        errors.push(h1_error(&mesh, &sols[1].field, source, NormRegion::Inner)?.relative());
        let diff = DiscreteField {
            values: sols[0].field.values.iter().zip(&sols[1].field.values).map(|(a, b)| std::array::from_fn(|c| a[c] - b[c])).collect(),
        };
        errors.push(h1_norm(&mesh, &diff, NormRegion::Inner) / e.exact_norm);
    }
    Ok(Ok(PointResult {
        errors,
        n_unknowns: sols[0].stats.n_unknowns,
        residual: sols.iter().map(|s| s.residual).fold(0.0, f64::max),
        wall_ms: t0.elapsed().as_millis() as u64,
    }))
}

/// Truncated-PML solves with point-source data over the sweep, the H¹(Ω₁)
/// error rate on the pre-floor segment and the α₀ = 0 control.
pub fn run_convergence_sweep(config: &Config) -> Result<StudyOutcome> {
    let StudyConfig::Converge { source_column, control, truncation_reference } = config.study else {
        return Err(HarnessError::Config("not a convergence study".into()));
    };
    let params = config.material.params()?;
    let axis = config.geometry.sweep_axis()?;
    let points = config.geometry.sweep()?;
    require_constraints(&params, config.geometry.zeta, &points)?;
    let kernel = ThermoelasticKernel::new(&params)?;
    let source = PointSource::new(&kernel, [0.0; 3], source_column, config.geometry.obstacle_half)?;

    let mut out = StudyOutcome::default();
    let (mut main, mut trunc, mut xs, mut rates) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &p in &points {
        let r0 = config.geometry.profile(p)?.r0_constant();
        let value = sweep_value(axis, p);
        match solve_point(config, &source, p, truncation_reference)? {
            Err(reason) => skip(&mut out, axis.name(), value, reason),
            Ok(res) => {
                progress(format_args!(
                    "converge: d = {}, alpha0 = {}: errors {:?} ({} unknowns, {} ms)",
                    p.d, p.alpha0, res.errors, res.n_unknowns, res.wall_ms
                ));
                let names = [METRIC, METRIC_DISCRETIZATION, METRIC_TRUNCATION];
                for (name, e) in names.iter().zip(&res.errors) {
                    let mut rec = record_for(axis, p, name, *e, r0);
                    rec.n_unknowns = res.n_unknowns;
                    rec.solve_residual = res.residual;
                    rec.wall_ms = res.wall_ms;
                    if *name == METRIC {
                        main.push(out.records.len());
                    } else if *name == METRIC_TRUNCATION {
                        trunc.push(out.records.len());
                    }
                    out.records.push(rec);
                }
                xs.push(p.alpha0 * p.d);
                rates.push(r0);
            }
        }
    }
    if main.is_empty() {
        return Err(HarnessError::AllBrokeDown);
    }
    let check = rate_check(&mut out, "h1_error_rate", &main, &xs, &rates, true);
    out.checks.push(check);
    // Informational: the truncation part alone, no assertion.
    if trunc.len() == main.len() {
        let e: Vec<f64> = trunc.iter().map(|&i| out.records[i].metric_value).collect();
        if let Some(f) = full_fit(&xs, &e) {
            for &i in &trunc {
                out.records[i].fitted_slope = Some(f.slope);
            }
        }
    }

    if control {
        run_control(config, &source, &points, &mut out)?;
    }
    Ok(out)
}

/// Repeats the sweep with α₀ = 0. Without absorption the error must not
/// converge: the error has to stay O(1).
fn run_control(config: &Config, source: &PointSource, points: &[SweepPoint], out: &mut StudyOutcome) -> Result<()> {
    let axis = config.geometry.sweep_axis()?;
    let mut ds: Vec<f64> = points.iter().map(|p| p.d).collect();
    ds.dedup();
    let (mut x, mut e) = (Vec::new(), Vec::new());
    let mut idx = Vec::new();
    for d in ds {
        let p = SweepPoint { d, alpha0: 0.0 };
        match solve_point(config, source, p, false)? {
            Err(reason) => skip(out, axis.name(), sweep_value(axis, p), format!("control: {reason}")),
            Ok(res) => {
                progress(format_args!("converge control: d = {d}: error {:.4e} ({} ms)", res.errors[0], res.wall_ms));
                let mut rec = record_for(axis, p, METRIC_CONTROL, res.errors[0], 0.0);
                rec.sweep_value = d;
                rec.sweep_axis = "d".into();
                rec.n_unknowns = res.n_unknowns;
                rec.solve_residual = res.residual;
                rec.wall_ms = res.wall_ms;
                idx.push(out.records.len());
                out.records.push(rec);
                x.push(d);
                e.push(res.errors[0]);
            }
        }
    }
    // Without absorption the truncated problem has cavity resonances, so
    // the error oscillates with d; "no convergence" means it stays O(1).
    let smallest = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let slope = full_fit(&x, &e).map(|f| f.slope);
    if let Some(s) = slope {
        for &i in &idx {
            out.records[i].fitted_slope = Some(s);
        }
    }
    let check = if e.is_empty() {
        Check::new("control_no_decay", false, "every control point was skipped")
    } else {
        let slope = slope.map_or("none".to_string(), |s| format!("{s:.4}"));
        Check::new(
            "control_no_decay",
            smallest >= CONTROL_MIN_ERROR,
            format!("{} control points, smallest error {smallest:.4e} (O(1) means >= {CONTROL_MIN_ERROR}), slope vs d {slope}", e.len()),
        )
    };
    out.checks.push(check);
    Ok(())
}
