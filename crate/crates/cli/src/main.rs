//! `quatcal`: batch front end for the quatcal library.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 property-suite failure.

mod commands;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "QUATCAL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "quatcal", version, about = "Quaternionic Dolbeault maps, calibrations and twistor scans on flat H^n")]
pub struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,

    /// Worker threads (default: $QUATCAL_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    mode: Mode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arith {
    Exact,
    Float,
}

impl Arith {
    fn tag(self) -> &'static str {
        match self {
            Arith::Exact => "exact",
            Arith::Float => "float",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Mode {
    /// Isotypic decomposition of Λ^k under su(2), as rows (k, s, multiplicity, dimension).
    Decompose(DecomposeArgs),
    /// The normalized calibration V^L_{n+i,n+i}, written to a form file.
    Calibration(CalibrationArgs),
    /// Multi-start lower bound for the comass of a form file.
    Comass(ComassArgs),
    /// Samples ψ(L) = ⟨V^L, ξ_W⟩ over the twistor sphere and classifies it.
    PsiScan(PsiScanArgs),
    /// Fits φ_Z(L) = ⟨V^L, [Z]⟩ by a homogeneous polynomial and lists its strict extrema.
    PhiFit(PhiFitArgs),
    /// Enumerates L-invariant rational subtori of bounded height.
    TorusScan(TorusScanArgs),
    /// Runs the representation, Dolbeault-map and calibration property suites.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub n: usize,
    /// A single degree; all degrees when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub arith: Arith,
}

#[derive(Args, Debug)]
pub struct CalibrationArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    /// `a,b,c` with a²+b²+c² = 1; fractions such as 3/5 in exact mode.
    #[arg(long = "L", value_name = "a,b,c", allow_hyphen_values = true)]
    pub l: String,
    #[arg(long, value_enum, default_value = "float")]
    pub arith: Arith,
    /// Form file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ComassArgs {
    #[arg(long)]
    pub form: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stopping tolerance on the projected gradient.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Random orthonormal frames sampled for the upper-bound evidence.
    #[arg(long, default_value_t = 10_000)]
    pub frames: usize,
    #[arg(long, value_enum, default_value = "float")]
    pub arith: Arith,
}

#[derive(Args, Debug)]
pub struct PsiScanArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    #[arg(long)]
    pub subspace: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
    #[arg(long, value_enum, default_value = "float")]
    pub arith: Arith,
}

#[derive(Args, Debug)]
pub struct PhiFitArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    #[arg(long)]
    pub class: PathBuf,
    /// Sample points for the fit.
    #[arg(long, default_value_t = 300)]
    pub grid: usize,
    /// Largest admissible fit residual.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Ascent seeds for the extrema search; the refinement uses four times as many.
    #[arg(long, default_value_t = 500)]
    pub seeds: usize,
    /// Largest admissible drift of the extrema under refinement.
    #[arg(long, default_value_t = 1e-4)]
    pub drift: f64,
    #[arg(long, value_enum, default_value = "float")]
    pub arith: Arith,
}

#[derive(Args, Debug)]
pub struct TorusScanArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    #[arg(long, default_value_t = 3)]
    pub height: i64,
    /// `a,b,c` or `random`.
    #[arg(long = "L", value_name = "a,b,c|random", allow_hyphen_values = true)]
    pub l: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximal number of line combinations examined.
    #[arg(long, default_value_t = 200_000)]
    pub budget: usize,
    #[arg(long, value_enum, default_value = "float")]
    pub arith: Arith,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub arith: Arith,
    /// Seed for the random polynomial forms of the intertwining checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn thread_count(flag: Option<usize>) -> Result<usize, String> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

fn usage_error(msg: &str) -> ExitCode {
    use clap::CommandFactory;
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_usage());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(msg) => return usage_error(&msg),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("warning: thread pool already configured: {e}");
    }

    let start = Instant::now();
    let report = match commands::run(&cli.mode) {
        Ok(r) => r,
        Err(commands::Failure::Usage(msg)) => return usage_error(&msg),
        Err(commands::Failure::Library(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.render(start.elapsed(), rayon::current_num_threads());
    match &cli.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.status.exit_code())
}
