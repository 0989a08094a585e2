use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "prabhakar", version, about = "Prabhakar fractional calculus toolkit")]
pub struct Cli {
    /// Read default flag values from a `key = value` file; flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the three-parameter Mittag-Leffler function.
    #[command(allow_negative_numbers = true)]
    Mlf(MlfArgs),
    /// Apply the Prabhakar integral to f(u) on [a, x].
    #[command(name = "prabhakar-int", allow_negative_numbers = true)]
    PrabhakarInt(IntegralArgs),
    /// Apply the Prabhakar derivative to f(u) at x.
    #[command(name = "prabhakar-deriv", allow_negative_numbers = true)]
    PrabhakarDeriv(DerivativeArgs),
    /// Compare the numerical Laplace transform of the kernel with its closed form.
    #[command(name = "laplace-check", allow_negative_numbers = true)]
    LaplaceCheck(LaplaceArgs),
    /// Scan the Green's function on a lattice and check its properties.
    #[command(name = "green-verify", allow_negative_numbers = true)]
    GreenVerify(GreenArgs),
    /// Solve the boundary value problem and test the Lyapunov inequality.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Run eigen-mode solves over a parameter box.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Check the left-inverse (and optionally round-trip) operator identities.
    #[command(name = "verify-ops", allow_negative_numbers = true)]
    VerifyOps(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format; each command has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the main output here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    /// Number of quadrature cells.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// Mesh grading exponent in [1, 4].
    #[arg(long, default_value_t = 2.0)]
    pub grading: f64,
}

#[derive(Debug, Args)]
pub struct MlfArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
    pub z: Option<f64>,
    /// Evaluate on `n` evenly spaced points, `z0:z1:n`.
    #[arg(long, allow_hyphen_values = true, value_name = "Z0:Z1:N")]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 1e-15)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_terms: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IntegralArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Integrand, an expression in `u`.
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub x: f64,
    #[command(flatten)]
    pub quad: QuadratureArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DerivativeArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Function to differentiate, an expression in `u`.
    #[arg(long, allow_hyphen_values = true)]
    pub f: String,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub x: f64,
    /// Finite-difference step; defaults to (x − a)/(4n).
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub quad: QuadratureArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LaplaceArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Transform variable.
    #[arg(long)]
    pub s: f64,
    /// Relative tolerance for agreement.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub interval: IntervalArgs,
    /// Lattice cells per side (at least 16).
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Also write the full JSON report here.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write the violations as CSV here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Initial {
    Bump,
    Zero,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Grid cells (at least 8).
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// q(t).
    #[arg(long, allow_hyphen_values = true)]
    pub q: String,
    /// p(t, y).
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    pub p: String,
    /// Perturbation h_i(t, y); repeat for several terms.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Vec<String>,
    /// Constant K of the perturbed problem.
    #[arg(long = "K", visible_alias = "k")]
    pub k: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub interval: IntervalArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Picard damping in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, value_enum, default_value_t = Initial::Bump)]
    pub initial: Initial,
    /// Also write the full JSON report here.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write the solution as `t,y` CSV here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Values as `v1,v2,...` or `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: String,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: String,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: String,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: String,
    #[command(flatten)]
    pub interval: IntervalArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write failing points and their reports as JSON here.
    #[arg(long, value_name = "PATH")]
    pub repro: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub interval: IntervalArgs,
    /// Test function, an expression in `u`.
    #[arg(long, allow_hyphen_values = true)]
    pub g: String,
    #[command(flatten)]
    pub quad: QuadratureArgs,
    /// Also run the round-trip check (much slower).
    #[arg(long)]
    pub round_trip: bool,
    /// Exit 1 when an error exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Flags that take no value.
pub const SWITCHES: &[&str] = &["round-trip"];
/// Flags that may repeat.
pub const REPEATABLE: &[&str] = &["h"];
