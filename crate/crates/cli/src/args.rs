use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fused-kite", version, about = "Fused lasso solvers (SSNAL, ADMM, APG)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the regularized problem.
    Solve(SolveArgs),
    /// Solve the residual-constrained problem by level-set bisection.
    SolveConstrained(ConstrainedArgs),
    /// Run several solvers on one problem and compare.
    Bench(BenchArgs),
    /// Print the KKT residual of a stored solution.
    Check(CheckArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Ssnal,
    Admm,
    Iadmm,
    Ladmm,
    Apg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Input data (LIBSVM or CSV with b in the last column).
    #[arg(long)]
    pub data: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Keep the columns of A as read (default scales columns to norm at most one).
    #[arg(long)]
    pub no_normalize: bool,
}

/// Either `--alpha1/--alpha2` (`λ₁ = α₁‖Aᵀb‖∞`, `λ₂ = α₂λ₁`) or explicit `--lambda1/--lambda2`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RegArgs {
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    pub alpha1: Option<f64>,
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reg: RegArgs,
    #[arg(long, value_enum, default_value = "ssnal")]
    pub solver: Solver,
    /// Target KKT residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Outer iterations for ssnal, iterations for the others.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Include the per-iteration trace in the report.
    #[arg(long)]
    pub trace: bool,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the solution vector, one value per line.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstrainedArgs {
    #[command(flatten)]
    pub data: DataArgs,
    // only the ratio of the two weights matters here
    #[command(flatten)]
    pub reg: RegArgs,
    /// Residual bound as a fraction of ‖b‖, in (0, 1).
    #[arg(long, conflicts_with = "delta")]
    pub gamma: Option<f64>,
    /// Absolute residual bound.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Relative tolerance on |‖Ax − b‖ − δ|.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// KKT tolerance of each regularized probe.
    #[arg(long, default_value_t = 1e-8)]
    pub inner_tol: f64,
    /// Bisection steps.
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    /// Solve every probe from zero.
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reg: RegArgs,
    /// Solvers to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ssnal,admm,iadmm,ladmm,apg")]
    pub solvers: Vec<Solver>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Iteration cap for the first-order solvers.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Per-solver wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// JSON report path; the text table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reg: RegArgs,
    /// Solution file, one value per line.
    #[arg(long)]
    pub solution: PathBuf,
    /// Exit with status 3 when the residual exceeds this value.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Constant segments in the true signal.
    #[arg(long, default_value_t = 20)]
    pub k_blocks: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise_sd: f64,
    /// Fraction of nonzeros in A; 1 gives dense storage.
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    /// Fraction of segments that are zero.
    #[arg(long, default_value_t = 0.5)]
    pub zero_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the true signal.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}
