//! `ncfree` command-line frontend.
//!
//! Exit codes: 0 on success, 1 when a computed invariant or inequality fails,
//! 2 on usage and parse errors.

pub mod commands;
pub mod config;
pub mod parser;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ncfree_core::Error as CoreError;
use thiserror::Error;

pub use config::{Family, Overrides, RunConfig};
pub use parser::{parse_poly, ParseError, PolyExpr};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A check ran to completion and did not hold.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Check(_) => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidInput(_)
                | CoreError::AlphabetMismatch { .. }
                | CoreError::IndexOutOfRange { .. }
                | CoreError::DegreeCap { .. }
                | CoreError::NotSelfAdjoint
                | CoreError::ModeMismatch(_) => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncfree", version, about = "Non-commutative derivatives, free Fisher information and regularity checks")]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

/// Run settings. Flags override the config file, which overrides the defaults.
#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// Flat `key = value` config file (keys: seed, N, t_grid, degree, tolerance, variance, family, h, seeds, out)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RNG seed for sampled matrices [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Matrix sizes, comma-separated and ascending [default: 200]
    #[arg(long = "N", global = true, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Perturbation grid: `lo:hi:k` (log-spaced) or a comma list [default: 1e-4:1e2:30]
    #[arg(long, global = true, value_parser = grid)]
    pub t_grid: Option<Grid>,
    /// Maximum word length for exhaustive checks [default: 6]
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Numerical tolerance for pass/fail and kernel cutoffs [default: 1e-9]
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Variance of the semicircular family [default: 1]
    #[arg(long, global = true)]
    pub variance: Option<f64>,
    /// Trace state or matrix ensemble [default: semicircular]
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    /// Histogram bin width [default: 0.05]
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Number of seeds in a sweep, starting at --seed [default: 100]
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// Output file (single-artifact commands) or directory [default: stdout or .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn grid(s: &str) -> Result<Grid, String> {
    config::parse_grid(s).map(Grid)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free difference quotients ∂ⱼP as a JSON tensor
    Derive {
        expr: String,
        /// Number of generators (inferred from the expression if omitted)
        #[arg(long)]
        n: Option<usize>,
        /// Generator to differentiate in (all if omitted)
        #[arg(long)]
        j: Option<usize>,
    },
    /// Moments τ(w) of all words up to --degree, or τ(P) of given polynomials
    Moments {
        /// Polynomials to trace (all words if none)
        exprs: Vec<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Residual of the conjugate relations over all monomials up to --degree
    ConjugateCheck {
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Custom conjugate variables ξ₁, …, ξₙ (semicircular ξⱼ = xⱼ/c if omitted)
        #[arg(long = "xi")]
        xi: Vec<String>,
    },
    /// Fisher information curve t ↦ Φ*(X + √t S) of the semicircular family.
    ///
    /// Writes into --out (a directory): fisher_curve.csv with columns
    /// t,phi_star,lower_bound,upper_bound; fisher_summary.json; fisher_bounds.json.
    FisherCurve {
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Non-microstates entropy χ* and the entropy-dimension estimate
    Entropy {
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Recovers the coefficient of the highest monomial through the Δ chain
    ExtractLeading {
        expr: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Kernel dimensions of P(X) and the zero-divisor quantities εᵢ (family: gue, bernoulli or degenerate)
    Probe {
        expr: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Spectral histograms of a self-adjoint P(X) over --N.
    ///
    /// Writes into --out (a directory) hist_N<size>.csv with columns
    /// bin_left,bin_right,mass for each size, and atom_trend.json.
    Atoms {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Identity suite on random polynomials and the three matrix inequality sweeps
    Verify {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Random polynomials in the identity suite
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },
}

impl Shared {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            dims: self.dims.clone(),
            t_grid: self.t_grid.clone().map(|g| g.0),
            degree: self.degree,
            tolerance: self.tolerance,
            variance: self.variance,
            family: self.family,
            h: self.h,
            seeds: self.seeds,
            out: self.out.clone(),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli
        .shared
        .resolve()
        .and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ncfree: {e}");
            e.exit_code()
        }
    }
}
