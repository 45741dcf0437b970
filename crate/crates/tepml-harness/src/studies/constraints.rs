use crate::config::{Config, StudyConfig};
use crate::error::{HarnessError, Result};
use crate::report::{ErrorRecord, StudyOutcome};
use tepml::check_pml_constraints;

/// Slack of every solvability constraint over the (ζ, α₀) grid. Purely a
/// report: no assertion is made.
pub fn run_constraints_study(config: &Config) -> Result<StudyOutcome> {
    let StudyConfig::Constraints { ref zeta_grid } = config.study else {
        return Err(HarnessError::Config("not a constraints study".into()));
    };
    let params = config.material.params()?;
    let points = config.geometry.sweep()?;
    let mut out = StudyOutcome::default();
    for &zeta in zeta_grid {
        let axis = format!("alpha0@zeta={zeta}");
        for p in &points {
            let report = check_pml_constraints(&params, zeta, p.alpha0);
            eprint!("{report}");
            for c in &report.entries {
                out.records.push(ErrorRecord::new(&axis, p.alpha0, &format!("slack_{}", c.name), c.slack));
            }
            let mut all = ErrorRecord::new(&axis, p.alpha0, "all_pass", if report.all_pass() { 1.0 } else { 0.0 });
            all.predicted_exponent = 0.0;
            out.records.push(all);
        }
    }
    Ok(out)
}
