mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prony_core::{CoeffLaw, Execution, RootMethod};

/// Multivariate Prony reconstruction of sparse exponential sums.
#[derive(Debug, Parser)]
#[command(name = "prony", version)]
struct Cli {
    /// Cap on worker threads; all cores by default.
    #[arg(long, global = true, env = "PRONY_THREADS")]
    threads: Option<usize>,

    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a model and its sampled moments.
    Generate(GenerateArgs),
    /// Recover parameters and coefficients from a moment grid.
    Reconstruct(ReconstructArgs),
    /// Evaluate the certificate and kernel energy on a uniform grid (CSV).
    Certify(CertifyArgs),
    /// Report singular values, rank, gap and condition numbers (JSON).
    Analyze(AnalyzeArgs),
    /// Compare an estimate against the true model.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Two unit atoms at (0,0) and (1/2,1/2), order 2.
    #[value(name = "example-2d")]
    Example2d,
    /// Unit atoms at 0.12, 1/π and e^{-1/2}, order 30.
    #[value(name = "example-1d")]
    Example1d,
    /// Two unit atoms in dimension 3, order 1.
    #[value(name = "two-atoms-3d")]
    TwoAtoms3d,
    /// Three atoms on a coordinate line, order 2 (not identifiable).
    #[value(name = "collinear-2d")]
    Collinear2d,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Law {
    /// Modulus in [0.5, 1.5], uniform phase.
    Default,
    /// Real, uniform in [0.5, 1.5].
    Positive,
    /// All coefficients one.
    Unit,
}

impl From<Law> for CoeffLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::Default => CoeffLaw::Default,
            Law::Positive => CoeffLaw::Positive,
            Law::Unit => CoeffLaw::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Auto,
    Companion,
    GridNewton,
}

impl From<Method> for RootMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => RootMethod::Auto,
            Method::Companion => RootMethod::Companion,
            Method::GridNewton => RootMethod::GridNewton,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Fixed instance; overrides the random-instance options.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Dimension d.
    #[arg(short = 'd', long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=8))]
    pub dim: u64,
    /// Number of terms M.
    #[arg(short = 'M', long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub terms: u64,
    /// Separation q the parameters must exceed, in (0, 0.5].
    #[arg(short = 'q', long, default_value_t = 0.2)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Law::Default)]
    pub law: Law,
    /// Sampling order n; defaults to max(2d/q, M) rounded up.
    #[arg(short = 'n', long)]
    pub order: Option<usize>,
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "moments.json")]
    pub moments: PathBuf,
}

/// Options shared by every command that decomposes the moment matrix.
#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Moment grid JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Use this rank instead of the numerical one.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: Option<u64>,
    /// Relative singular value threshold, in (0, 1).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Decide the rank from the triangularly weighted matrix.
    #[arg(long)]
    pub weights: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Grid points per axis for the root search; default 4n+1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: Option<u64>,
    /// Radius for merging nearby roots; default 1/(4n).
    #[arg(long)]
    pub dedup: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Grid points per axis.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// True model, to report its separation and the condition bound.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write every matrix entry as CSV.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
    /// JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// True model JSON.
    #[arg(long)]
    pub truth: PathBuf,
    /// Model JSON or reconstruction result JSON.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Tolerance on parameter distance and relative coefficient error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

fn main() -> ExitCode {
    // usage errors are configuration errors (exit 1), not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: PRONY_THREADS must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let outcome = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Reconstruct(a) => commands::reconstruct(a, exec),
        Command::Certify(a) => commands::certify(a, exec),
        Command::Analyze(a) => commands::analyze(a, exec),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
