use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use periclock::verify::{run_suite, traceability_matrix, SuiteOptions};

use periclock_cli::config::ScenarioConfig;
use periclock_cli::figures::{self, Figure};
use periclock_cli::scenario;

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(name = "periclock", version, about = "Relational dynamics with periodic clocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its JSON report.
    Run {
        config: PathBuf,
        /// Report path; overrides `report_path` in the config. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write figure data as CSV.
    EmitFigure {
        #[arg(value_enum)]
        fig: Figure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full verification suite and print the traceability matrix.
    Verify {
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// `PERICLOCK_TOL`, if set. A malformed value is a parse error.
fn env_tolerance() -> Result<Option<f64>, String> {
    match std::env::var("PERICLOCK_TOL") {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t > 0.0 => Ok(Some(t)),
            _ => Err(format!("PERICLOCK_TOL: `{v}` is not a positive number")),
        },
        Err(_) => Ok(None),
    }
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => io::stdout().write_all(bytes),
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, tol: Option<f64>) -> ExitCode {
    let text = match fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let report = match scenario::run(&cfg, tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    let target = out.or_else(|| cfg.report_path.as_ref().map(PathBuf::from));
    if let Err(e) = write_output(target.as_ref(), json.as_bytes()) {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    for r in report.checks.iter().filter(|r| !r.passed) {
        eprintln!("FAIL {} / {}: {:.3e} > {:.1e}", r.lemma, r.check, r.residual, r.tol);
    }
    eprintln!("{}: physical dim {}, {} checks", report.name, report.physical_dim, report.checks.len());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match env_tolerance() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    match cli.command {
        Command::Run { config, out } => run(config, out, tol),
        Command::EmitFigure { fig, out } => {
            let mut buf = Vec::new();
            figures::write_csv(fig, &mut buf).expect("in-memory CSV");
            match write_output(out.as_ref(), &buf) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("cannot write figure: {e}");
                    ExitCode::from(EXIT_FAIL)
                }
            }
        }
        Command::Verify { filter, seed } => {
            let records = match run_suite(&SuiteOptions { filter, seed, tol_override: tol }) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("verify: {e}");
                    return ExitCode::from(EXIT_FAIL);
                }
            };
            print!("{}", traceability_matrix(&records));
            let failed = records.iter().filter(|r| !r.passed).count();
            println!("{} checks, {failed} failed", records.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
    }
}
