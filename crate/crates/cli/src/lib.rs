//! Command-line driver for relaxed storage dispatch.
//!
//! Every subcommand returns a process exit code from a stable contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success, conditions hold, relaxation exact |
//! | 1    | condition or exactness failure |
//! | 2    | infeasible case, or every pattern infeasible |
//! | 3    | solver failure |
//! | 4    | oracle pattern budget exceeded |
//! | 64   | usage error |
//! | 65   | malformed or invalid input data |
//! | 66   | input file missing |
//! | 74   | other I/O failure |

mod commands;
mod output;
mod sweep;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edrelax::casekit::Target;
use edrelax::oracle::DEFAULT_PATTERN_LIMIT;

pub use commands::{dispatch_rows, read_forecast_csv, DispatchRow};
pub use sweep::{sweep_instance, sweep_rows, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_EXACT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "EDRELAX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "edrelax",
    version,
    about = "Relaxed storage dispatch with exactness certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the relaxed dispatch and export prices and trajectories.
    Solve(SolveArgs),
    /// Check the sufficient conditions for an exact relaxation.
    Check(CheckArgs),
    /// Measure simultaneous charging and discharging in a dispatch.
    Verify(VerifyArgs),
    /// Compare the relaxed optimum with exhaustive pattern enumeration.
    Oracle(OracleArgs),
    /// Run seeded random instances and tabulate exactness per group.
    Sweep(SweepArgs),
    /// Write a built-in case.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 1e-6)]
    pub primal_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub dual_tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: u32,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub case: PathBuf,
    /// Solution JSON path, `-` for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step dispatch CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupSelector {
    A,
    B,
    C,
    Auto,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub case: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupSelector::Auto)]
    pub group: GroupSelector,
    /// Price forecast CSV with header `bus,step,lmp_forecast`.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Forecast error as a fraction; defaults to the document's value or 0.01.
    #[arg(long)]
    pub mape: Option<f64>,
    /// Check against prices of a solved dispatch.
    #[arg(long, conflicts_with_all = ["forecast", "priori"])]
    pub posteriori: bool,
    /// Require a forecast and check before dispatch.
    #[arg(long)]
    pub priori: bool,
    /// Report JSON path, `-` for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A case document or a solution written by `solve`.
    pub input: PathBuf,
    /// Largest p_ch·p_dc accepted as zero, MW².
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub case: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATTERN_LIMIT)]
    pub limit: u64,
    /// Include every pattern's objective in the report.
    #[arg(long)]
    pub table: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub instances: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "unconstrained", value_parser = parse_target)]
    pub target: Target,
    /// CSV path, `-` or absent for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Oracle pattern budget per instance.
    #[arg(long, default_value_t = DEFAULT_PATTERN_LIMIT)]
    pub limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinCase {
    Ieee30,
    Counterexample,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub case: BuiltinCase,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse()
}

/// A command outcome that is not a plain verdict.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        let code = if e.kind() == std::io::ErrorKind::NotFound {
            EXIT_NO_INPUT
        } else {
            EXIT_IO
        };
        Self::new(code, format!("{}: {e}", path.display()))
    }
}

impl From<edrelax::Error> for Failure {
    fn from(e: edrelax::Error) -> Self {
        use edrelax::Error as E;
        let code = match &e {
            E::Backend(_) => EXIT_SOLVER,
            E::BudgetExceeded { .. } => EXIT_BUDGET,
            E::AllPatternsInfeasible => EXIT_INFEASIBLE,
            _ => EXIT_DATA,
        };
        Failure::new(code, e.to_string())
    }
}

pub type CmdResult = Result<i32, Failure>;

/// Sizes the global worker pool from `EDRELAX_THREADS` when set.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Runs one parsed command, writing results to `out` and diagnostics to
/// `err`, and returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a, out, err),
        Command::Check(a) => commands::check(a, out, err),
        Command::Verify(a) => commands::verify(a, out, err),
        Command::Oracle(a) => commands::oracle(a, out, err),
        Command::Sweep(a) => sweep::sweep(a, out, err),
        Command::Gen(a) => commands::gen(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}
