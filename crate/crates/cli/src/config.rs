//! Run configuration: built-in defaults, then a flat `key = value` file, then flags.
//!
//! Environment variables are never read, so a run is fixed by its command line
//! and config file alone.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncfree_core::fisher::log_grid;
use ncfree_core::moments::sample_gue;
use ncfree_core::{MatrixTuple, OracleDescriptor, Result as CoreResult, SemicircularOracle, TraceOracle};

use crate::CliError;

/// Family of the trace state a command runs against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    Semicircular,
    Gue,
    Bernoulli,
    Degenerate,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Semicircular => "semicircular",
            Family::Gue => "gue",
            Family::Bernoulli => "bernoulli",
            Family::Degenerate => "degenerate",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Family as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Matrix sizes, ascending.
    pub dims: Vec<usize>,
    /// Perturbation grid, ascending and positive.
    pub t_grid: Vec<f64>,
    pub degree: usize,
    pub tolerance: f64,
    pub variance: f64,
    pub family: Family,
    pub h: f64,
    pub seeds: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            dims: vec![200],
            t_grid: log_grid(1e-4, 1e2, 30).expect("valid default grid"),
            degree: 6,
            tolerance: 1e-9,
            variance: 1.0,
            family: Family::Semicircular,
            h: 0.05,
            seeds: 100,
            out: None,
        }
    }
}

/// Flag values; `None` falls through to the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dims: Option<Vec<usize>>,
    pub t_grid: Option<Vec<f64>>,
    pub degree: Option<usize>,
    pub tolerance: Option<f64>,
    pub variance: Option<f64>,
    pub family: Option<Family>,
    pub h: Option<f64>,
    pub seeds: Option<usize>,
    pub out: Option<PathBuf>,
}

fn bad(key: &str, value: &str, why: impl fmt::Display) -> CliError {
    CliError::Usage(format!("{key} = {value:?}: {why}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

/// Comma-separated list, e.g. `200,400,800`.
pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

/// `lo:hi:k` for a log-spaced grid, otherwise a comma-separated list.
pub fn parse_grid(value: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [lo, hi, k] => {
            let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
            let k: usize = k.trim().parse().map_err(|e| format!("{k:?}: {e}"))?;
            log_grid(lo, hi, k).map_err(|e| e.to_string())
        }
        [_] => parse_list(value),
        _ => Err("expected lo:hi:k or a comma-separated list".into()),
    }
}

impl RunConfig {
    /// Reads a config file over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.seed = scalar(key, value)?,
            "N" | "dims" => self.dims = parse_list(value).map_err(|e| bad(key, value, e))?,
            "t_grid" => self.t_grid = parse_grid(value).map_err(|e| bad(key, value, e))?,
            "degree" => self.degree = scalar(key, value)?,
            "tolerance" => self.tolerance = scalar(key, value)?,
            "variance" => self.variance = scalar(key, value)?,
            "family" => self.family = value.parse().map_err(|e| bad(key, value, e))?,
            "h" => self.h = scalar(key, value)?,
            "seeds" => self.seeds = scalar(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! take {
            ($($f:ident),*) => {$( if let Some(v) = o.$f { self.$f = v; } )*};
        }
        take!(seed, dims, t_grid, degree, tolerance, variance, family, h, seeds);
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.degree == 0 || self.seeds == 0 {
            return usage("degree and seeds must be positive".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return usage("N must list positive sizes".into());
        }
        if self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return usage("N must be strictly increasing".into());
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return usage("t_grid must hold positive finite values".into());
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return usage("t_grid must be strictly increasing".into());
        }
        for (name, v) in [("tolerance", self.tolerance), ("variance", self.variance), ("h", self.h)] {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// The trace state selected by `family`, on `n` generators, at the first size in `dims`.
    pub fn oracle(&self, n: usize) -> CoreResult<Box<dyn TraceOracle>> {
        Ok(match self.family {
            Family::Semicircular => Box::new(SemicircularOracle::uniform(n, self.variance)?),
            _ => Box::new(self.tuple(n, self.dims[0])?),
        })
    }

    pub fn tuple(&self, n: usize, dim: usize) -> CoreResult<MatrixTuple> {
        match self.family {
            Family::Semicircular | Family::Gue => Ok(sample_gue(n, dim, self.seed)),
            Family::Bernoulli => ncfree_core::moments::bernoulli_tuple(n, dim),
            Family::Degenerate => {
                if n != 2 {
                    return Err(ncfree_core::Error::InvalidInput(
                        "the degenerate pair has exactly two generators".into(),
                    ));
                }
                ncfree_core::analysis::degenerate_pair(dim, self.seed)
            }
        }
    }

    pub fn descriptor(&self, n: usize) -> CoreResult<OracleDescriptor> {
        Ok(self.oracle(n)?.descriptor())
    }
}
