use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zerocorr::harness::{run, Command, MatrixSpec, OneOrMany, PointSpec, Settings};
use zerocorr::Error;

#[derive(Parser)]
#[command(name = "zerocorr", version, about = "Zero correlations of Gaussian random polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Limit pair correlation on a radial grid.
    TheoryCurve(Flags),
    /// Empirical pair correlation of rescaled SU(2) zeros.
    EmpiricalPc(Flags),
    /// Finite-degree Szegő kernel against its scaling limit.
    SzegoCheck(Flags),
    /// Gaussian log-moment integral for a Gram matrix or vector set.
    Gn(Flags),
    /// Fast end-to-end checks; exits with 4 if any fails.
    SelfTest(Flags),
}

#[derive(Args)]
struct Flags {
    /// Complex dimension m.
    #[arg(long)]
    m: Option<u32>,
    /// Polynomial degree N, or a comma-separated list.
    #[arg(long)]
    degree: Option<OneOrMany<u32>>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Window or grid radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Bin edges: start:stop:width or a comma-separated list.
    #[arg(long)]
    bins: Option<PointSpec>,
    /// Radial grid: start:stop:step or a comma-separated list.
    #[arg(long)]
    grid: Option<PointSpec>,
    /// Gram matrix as JSON rows; entries are numbers or [re, im].
    #[arg(long, value_parser = parse_matrix)]
    gram: Option<MatrixSpec>,
    /// Unit vectors as JSON rows; entries are numbers or [re, im].
    #[arg(long, value_parser = parse_matrix)]
    vectors: Option<MatrixSpec>,
    /// Output file; `.json` selects JSON, anything else CSV. Default stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default from ZEROCORR_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_matrix(s: &str) -> Result<MatrixSpec, String> {
    serde_json::from_str(s).map_err(|e| format!("invalid matrix JSON: {e}"))
}

fn settings(cmd: Command, f: Flags) -> zerocorr::Result<Settings> {
    let cli = Settings {
        m: f.m,
        degree: f.degree,
        samples: f.samples,
        seed: f.seed,
        radius: f.radius,
        bins: f.bins,
        grid: f.grid,
        out: f.out.map(|p| p.to_string_lossy().into_owned()),
        workers: f.workers,
        gram: f.gram,
        vectors: f.vectors,
    };
    let file = match f.config {
        Some(path) => Settings::from_json_file(&path)?,
        None => Settings::default(),
    };
    Ok(cli.over(file).over(Settings::defaults(cmd)))
}

fn execute(cmd: Command, flags: Flags) -> zerocorr::Result<bool> {
    let s = settings(cmd, flags)?;
    let outcome = run(cmd, &s)?;
    outcome.record.write(s.out.as_deref().map(std::path::Path::new))?;
    Ok(outcome.failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, flags) = match cli.command {
        Sub::TheoryCurve(f) => (Command::TheoryCurve, f),
        Sub::EmpiricalPc(f) => (Command::EmpiricalPc, f),
        Sub::SzegoCheck(f) => (Command::SzegoCheck, f),
        Sub::Gn(f) => (Command::Gn, f),
        Sub::SelfTest(f) => (Command::SelfTest, f),
    };
    match execute(cmd, flags) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            let e = Error::SelfTest("one or more checks failed".into());
            eprintln!("zerocorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("zerocorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
