use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tepml_harness::{emit_report, run_study, Config, Format, HarnessError, Report};

#[derive(Parser)]
#[command(name = "tepml", version = tepml_harness::report::VERSION, about = "Thermoelastic PML verification studies")]
struct Cli {
    #[command(subcommand)]
    study: Study,
    /// TOML study configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path (default: the config's `output`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Study {
    Converge,
    Decay,
    Dtn,
    Coercivity,
    Constraints,
}

impl Study {
    fn name(self) -> &'static str {
        match self {
            Study::Converge => "converge",
            Study::Decay => "decay",
            Study::Dtn => "dtn",
            Study::Coercivity => "coercivity",
            Study::Constraints => "constraints",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let path = cli.config.as_ref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut config = Config::load(path)?;
    if config.study.name() != cli.study.name() {
        return Err(HarnessError::Config(format!(
            "subcommand {} but the config describes a {} study",
            cli.study.name(),
            config.study.name()
        )));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("--threads: {e}")))?;
    }
    let outcome = run_study(&config)?;
    for c in &outcome.checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let pass = outcome.all_pass();
    let report = Report::new(&config, outcome);
    let out = cli.out.clone().or(config.output.clone());
    emit_report(&report, cli.format, out.as_deref())?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
