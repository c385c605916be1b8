use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use invlrr_cli::harness::{self, Harness};
use invlrr_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "invlrr", version, about = "Invariant low-rank regression experiments")]
struct Cli {
    /// Experiment config (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic X.mat, Y.mat and Wtrue.mat.
    GenData,
    /// Closed-form optimum; writes W.mat.
    Solve,
    /// Regularization path over lambda_grid; writes path.csv.
    Path,
    /// Enumerate critical points; writes critical.csv.
    CriticalPoints,
    /// Adam training of a linear network; writes trainlog.csv and Wfinal.mat.
    Train,
    /// Kernel property suites; writes ntk.csv.
    NtkCheck,
    /// Compare two matrix files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Accepted relative Frobenius difference.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    if let Command::Compare { a, b, tol } = &cli.command {
        return harness::compare(a, b, *tol);
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let h = Harness::new(cfg, cli.out);
    match cli.command {
        Command::GenData => h.gen_data(),
        Command::Solve => h.solve(),
        Command::Path => h.path(),
        Command::CriticalPoints => h.critical_points(),
        Command::Train => h.train(),
        Command::NtkCheck => h.ntk_check(),
        Command::Compare { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    let result = run(cli);
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            match &e {
                CliError::Check(msg) => eprintln!("error: {msg}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(code as u8)
        }
    }
}
