//! Batch driver: recovers the potential for a configured Weyl function,
//! runs the selected verifications and writes `potential.csv` and `report.json`.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{generate_example, ExampleKind, ProblemConfig};
use run::{CheckName, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("DIRAC_ISP_TOL: {0}")]
    Env(String),
    #[error("{}: {source}", source.name())]
    Solver {
        #[from]
        source: dirac_isp::Error,
    },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for anything wrong with the inputs or environment, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver { source } if !source.is_validation() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dirac-isp",
    version,
    about = "Recover a Dirac-system potential from a generalized rational Weyl function"
)]
struct Args {
    /// Problem description (JSON).
    #[arg(long, required_unless_present = "generate")]
    config: Option<PathBuf>,

    /// Output directory for potential.csv and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Run only these checks (overrides the config flags).
    #[arg(long, value_enum, num_args = 1..)]
    check: Option<Vec<CheckName>>,

    /// Number of Nyström intervals (overrides the config).
    #[arg(long)]
    nystrom_n: Option<usize>,

    /// Seed for `--generate random-pe`.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print a built-in example configuration to stdout and exit.
    #[arg(long, value_enum, conflicts_with = "config")]
    generate: Option<ExampleKind>,

    /// Progress and per-check summaries on stderr.
    #[arg(long, short)]
    verbose: bool,
}

fn env_tolerance() -> Result<Option<f64>, CliError> {
    match std::env::var("DIRAC_ISP_TOL") {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Some(v)),
            _ => Err(CliError::Env(format!(
                "expected a positive number, got {text:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Env(e.to_string())),
    }
}

fn main_inner(args: Args) -> Result<bool, CliError> {
    if let Some(kind) = args.generate {
        let config = generate_example(kind, args.seed)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&config).expect("config serializes")
        );
        return Ok(true);
    }
    let path = args.config.expect("clap enforces --config");
    let config = ProblemConfig::load(&path)?;
    let options = RunOptions {
        checks: args.check,
        nystrom_n: args.nystrom_n,
        env_tolerance: env_tolerance()?,
        verbose: args.verbose,
    };
    let report = run::run(&config, &options, &args.out)?;
    if args.verbose {
        for check in &report.checks {
            eprintln!(
                "{} {}: {:.3e} (tol {:.1e})",
                check.status, check.name, check.value, check.tolerance
            );
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
