//! `nonconv` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 bound or
//! experiment preconditions not met, 4 internal invariant violation.

mod commands;
mod output;
mod selftest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "nonconv",
    version,
    about = "Dead-layer bounds and non-convergence experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic inactivity bounds for a configuration.
    Bound(Common),
    /// Monte Carlo frequencies of inactive layers at initialization.
    McInit(Common),
    /// Train independent networks and measure non-convergence.
    Train(Common),
    /// Dead-at-init frequencies and bounds across depths.
    Sweep(Common),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    pub config: PathBuf,
    /// Number of trials; overrides the configuration.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; overrides the configuration and NONCONV_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for CSV, JSON and SVG artifacts.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Format printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write SVG plots into the output directory.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Precondition(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) | Failure::Precondition(m) => f.write_str(m),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<nonconv::Error> for Failure {
    fn from(e: nonconv::Error) -> Self {
        use nonconv::Error::*;
        match e {
            Config(_) | Architecture(_) | Dimension { .. } | InvalidParameter { .. } => Failure::Config(e.to_string()),
            Precondition(_) | Unsupported(_) => Failure::Precondition(e.to_string()),
            EmptyBatch => Failure::Internal(e.to_string()),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Bound(c) => commands::bound(&c, out),
        Command::McInit(c) => commands::mc_init(&c, out),
        Command::Train(c) => commands::train(&c, out),
        Command::Sweep(c) => commands::sweep(&c, out),
        Command::Selftest(a) => selftest::run(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "nonconv: {f}");
            f.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
