//! Sweep studies for the thermoelastic PML: configuration, the convergence,
//! decay, DtN, coercivity and constraint studies, rate fitting and report
//! output.

pub mod config;
pub mod error;
pub mod fit;
pub mod report;
pub mod studies;

pub use config::{Config, StudyConfig, SweepAxis, SweepPoint};
pub use error::{HarnessError, Result};
pub use report::{emit_report, Check, ErrorRecord, Format, Report, Skip, StudyOutcome};
pub use studies::run_study;
