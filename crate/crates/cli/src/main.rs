mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qwalk_scatter::ScatterError;
use serde_json::json;

use commands::{category_exit_code, CheckStatus, ConvergenceArgs, EvolveArgs, ScanArgs, SmatrixArgs};
use config::{load_file, Overrides, RunConfig};

/// Two-particle quantum-walk scattering and CPHASE gate fidelity.
#[derive(Parser)]
#[command(name = "qwscat", version)]
struct Cli {
    /// TOML file with default parameters; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate J(E, n) for n = 0..nmax as CSV.
    JTable,
    /// Finite-L S-matrix kernel and asymptotic amplitudes as CSV.
    Smatrix(SmatrixArgs),
    /// Complex overlap and gate fidelity over a σ grid for each L.
    FidelityScan(ScanArgs),
    /// Power-law fit of the optimal infidelity against L.
    Convergence(ConvergenceArgs),
    /// Time-evolve two wavepackets through the interaction region.
    Evolve(EvolveArgs),
    /// Run the cross-module consistency checks and print a JSON report.
    Validate,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scatter(ScatterError),
    Internal(String),
}

impl CliError {
    fn io(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o error: {e}"))
    }

    fn csv(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Internal(format!("i/o error: {e}"))
        } else {
            CliError::Usage(format!("csv: {e}"))
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Scatter(e) => category_exit_code(e.category()),
            CliError::Internal(_) => 5,
        }
    }

    fn envelope(&self) -> serde_json::Value {
        let (kind, category, message) = match self {
            CliError::Usage(m) => ("Usage".to_string(), "usage", m.clone()),
            CliError::Scatter(e) => (
                e.kind().to_string(),
                match e.category() {
                    qwalk_scatter::ErrorCategory::Usage => "usage",
                    qwalk_scatter::ErrorCategory::NumericalDomain => "numerical_domain",
                    qwalk_scatter::ErrorCategory::Convergence => "convergence",
                    qwalk_scatter::ErrorCategory::Internal => "internal",
                },
                e.to_string(),
            ),
            CliError::Internal(m) => ("Internal".to_string(), "internal", m.clone()),
        };
        json!({
            "error": {
                "kind": kind,
                "category": category,
                "message": message,
                "exit_code": self.exit_code(),
            }
        })
    }
}

impl From<ScatterError> for CliError {
    fn from(e: ScatterError) -> Self {
        CliError::Scatter(e)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let file = cli.config.as_deref().map(load_file).transpose()?;
    let cfg = RunConfig::resolve(cli.overrides, file)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match &cli.command {
        Command::JTable => commands::j_table_cmd(&cfg)?,
        Command::Smatrix(a) => commands::smatrix_cmd(&cfg, a)?,
        Command::FidelityScan(a) => commands::fidelity_scan_cmd(&cfg, a)?,
        Command::Convergence(a) => commands::convergence_cmd(&cfg, a)?,
        Command::Evolve(a) => commands::evolve_cmd(&cfg, a)?,
        Command::Validate => {
            if commands::validate_cmd(&cfg)? == CheckStatus::Fail {
                return Ok(ExitCode::from(5));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.envelope());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.envelope());
            ExitCode::from(err.exit_code())
        }
    }
}
