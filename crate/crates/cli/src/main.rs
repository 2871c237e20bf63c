//! `sylsep`: solve Sylvester equations and inspect spectral separation from
//! JSON problem files.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sylsep::families::Family;
use sylsep::solvers::Method;

use commands::{Outcome, Overrides, EXIT_FAILURE};
use config::ProblemConfig;

#[derive(Debug, Parser)]
#[command(
    name = "sylsep",
    version,
    about = "Sylvester equations via polynomial separation of spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve AX − XB = C with the configured method.
    Solve(Common),
    /// Grid V_p(T) or pseudospectra and write graymap and CSV files.
    Region(Common),
    /// Search for a polynomial separating σ(A) from σ(B).
    Search(Common),
    /// Estimate the separation rate η(A,B) per degree.
    Eta(Common),
    /// Write a problem config for a seeded instance family.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, default_value_t = 6)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: sylsep::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: sylsep::Error| e.to_string())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_common(
    name: &'static str,
    args: Common,
    run: fn(&ProblemConfig, &Overrides) -> Outcome,
) -> ExitCode {
    let ov = Overrides {
        out: args.out.clone(),
        method: args.method,
        tol: args.tol,
        resolution: args.resolution,
        seed: args.seed,
    };
    let (outcome, out) = match ProblemConfig::load(&args.config) {
        Ok(cfg) => {
            let out = args.out.clone().or_else(|| {
                cfg.output
                    .as_ref()
                    .and_then(|o| o.report.clone())
                    .map(PathBuf::from)
            });
            let ov = Overrides {
                out: out.clone(),
                ..ov
            };
            (run(&cfg, &ov), out)
        }
        Err(msg) => {
            eprintln!("sylsep {name}: {msg}");
            (commands::config_failure(name, msg), args.out.clone())
        }
    };
    let out = out.as_ref();
    if let Err(msg) = emit(&outcome.report, out) {
        eprintln!("sylsep {name}: {msg}");
        return ExitCode::from(EXIT_FAILURE);
    }
    ExitCode::from(outcome.code)
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for inapplicable methods
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Solve(a) => run_common("solve", a, commands::cmd_solve),
        Command::Region(a) => run_common("region", a, commands::cmd_region),
        Command::Search(a) => run_common("search", a, commands::cmd_search),
        Command::Eta(a) => run_common("eta", a, commands::cmd_eta),
        Command::Generate(g) => {
            let cfg = commands::cmd_generate(g.family, g.size, g.seed);
            match emit(&cfg.to_json(), g.out.as_ref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(msg) => {
                    eprintln!("sylsep generate: {msg}");
                    ExitCode::from(EXIT_FAILURE)
                }
            }
        }
    }
}
