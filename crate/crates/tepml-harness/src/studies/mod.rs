//! The five studies. Each returns records in sweep order, the sweep points
//! it had to skip, and its pass/fail checks.

mod coercivity;
mod constraints;
mod converge;
mod decay;
mod dtn;

pub use coercivity::run_coercivity_study;
pub use constraints::run_constraints_study;
pub use converge::run_convergence_sweep;
pub use decay::run_decay_study;
pub use dtn::run_dtn_error_study;

use crate::config::{Config, StudyConfig, SweepAxis, SweepPoint};
use crate::error::{HarnessError, Result};
use crate::fit::{pre_floor_fit, LineFit, SLOPE_SLACK};
use crate::report::{Check, ErrorRecord, Skip, StudyOutcome};
use tepml::{check_pml_constraints, MaterialParams};
use tepml_fem::{FemError, SolverOptions};

pub fn run_study(config: &Config) -> Result<StudyOutcome> {
    config.validate()?;
    match config.study {
        StudyConfig::Converge { .. } => run_convergence_sweep(config),
        StudyConfig::Decay { .. } => run_decay_study(config),
        StudyConfig::Dtn { .. } => run_dtn_error_study(config),
        StudyConfig::Coercivity { .. } => run_coercivity_study(config),
        StudyConfig::Constraints { .. } => run_constraints_study(config),
    }
}

fn solver_options(config: &Config) -> SolverOptions {
    SolverOptions { memory_budget: config.discretization.memory_budget_mb << 20, ..Default::default() }
}

fn sweep_value(axis: SweepAxis, p: SweepPoint) -> f64 {
    match axis {
        SweepAxis::D => p.d,
        SweepAxis::Alpha0 => p.alpha0,
    }
}

/// Aborts with the constraint report of the first failing sweep point.
fn require_constraints(params: &MaterialParams, zeta: f64, points: &[SweepPoint]) -> Result<()> {
    for p in points {
        let report = check_pml_constraints(params, zeta, p.alpha0);
        if !report.all_pass() {
            return Err(HarnessError::Constraints(report.to_string()));
        }
    }
    Ok(())
}

/// Whether a failed solve should skip the sweep point rather than abort.
fn is_breakdown(e: &FemError) -> bool {
    matches!(e, FemError::Breakdown { .. } | FemError::Residual(_))
}

fn skip(outcome: &mut StudyOutcome, axis: &str, value: f64, reason: String) {
    eprintln!("skipping {axis} = {value}: {reason}");
    outcome.skipped.push(Skip { sweep_axis: axis.to_string(), sweep_value: value, reason });
}

fn progress(msg: std::fmt::Arguments) {
    eprintln!("{msg}");
}

/// Floor-aware exponential fit of the records at `idx` (ordered by sweep
/// value) against `x`, asserting slope ≤ −SLOPE_SLACK·max r₀ over the
/// fitted segment. Fitted records get the slope attached.
fn rate_check(
    outcome: &mut StudyOutcome,
    name: &str,
    idx: &[usize],
    x: &[f64],
    rate: &[f64],
    floor_aware: bool,
) -> Check {
    let errors: Vec<f64> = idx.iter().map(|&i| outcome.records[i].metric_value).collect();
    let (segment, fit, floor): (Vec<usize>, Option<LineFit>, Option<f64>) = if floor_aware {
        let r = pre_floor_fit(x, &errors);
        (r.segment, r.fit, Some(r.floor))
    } else {
        let all: Vec<usize> = (0..errors.len()).collect();
        (all, crate::fit::full_fit(x, &errors), None)
    };
    let floor_note = floor.map_or(String::new(), |f| format!(", floor {f:.3e}"));
    let Some(fit) = fit else {
        return Check::new(
            name,
            false,
            format!("no fit: {} sweep points, {} above the floor{floor_note}", errors.len(), segment.len()),
        );
    };
    let r_max = segment.iter().map(|&i| rate[i]).fold(0.0, f64::max);
    let threshold = -SLOPE_SLACK * r_max;
    for &i in &segment {
        outcome.records[idx[i]].fitted_slope = Some(fit.slope);
    }
    let xs: Vec<String> = segment.iter().map(|&i| format!("{}", x[i])).collect();
    Check::new(
        name,
        fit.slope <= threshold,
        format!("slope {:.4} over x = [{}], threshold {threshold:.4}{floor_note}", fit.slope, xs.join(", ")),
    )
}

fn record_for(axis: SweepAxis, p: SweepPoint, metric: &str, value: f64, r0: f64) -> ErrorRecord {
    let mut r = ErrorRecord::new(axis.name(), sweep_value(axis, p), metric, value);
    r.predicted_exponent = r0 * p.alpha0 * p.d;
    r
}
