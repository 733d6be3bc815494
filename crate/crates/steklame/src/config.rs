//! Subcommand settings. Each struct doubles as a clap argument group and a
//! JSON config file; flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Loads `path` as `T`, rejecting unknown keys.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fills every unset field of `self` from `file`.
pub trait Merge: Sized {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $t {
            fn merge(self, file: Self) -> Self {
                Self { config: self.config, $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

/// Reads `--config` if given and lets flags win.
pub fn resolve<T: Merge + DeserializeOwned>(flags: T, config: Option<&Path>) -> Result<T> {
    match config {
        Some(p) => Ok(flags.merge(load(p)?)),
        None => Ok(flags),
    }
}

fn require<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| CliError::Config(format!("missing required setting `{name}`")))
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskArgs {
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of eigenvalues, counted with multiplicity.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: Option<u64>,
    /// Output CSV (standard output if absent).
    #[serde(skip_serializing)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(DiskArgs { radius, lambda, mu, count, out });

impl DiskArgs {
    pub fn values(&self) -> Result<(f64, f64, f64, usize)> {
        let count = require(&self.count, "count")? as usize;
        if count == 0 {
            return Err(CliError::Config("count must be positive".into()));
        }
        Ok((
            require(&self.radius, "radius")?,
            require(&self.lambda, "lambda")?,
            require(&self.mu, "mu")?,
            count,
        ))
    }
}

/// Solver settings shared by several subcommands.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Boundary JSON file.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of sources N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of collocation points M (default 2N).
    #[arg(long)]
    pub m: Option<usize>,
    /// Absolute source offset; overrides `relative_alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Source offset as a fraction of the equal-area radius (default 0.3).
    #[arg(long)]
    pub relative_alpha: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Write eigenfunction samples on a G×G grid (requires `out_dir`).
    #[arg(long)]
    pub grid: Option<usize>,
    #[serde(skip_serializing)]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
merge_fields!(SolveArgs { boundary, lambda, mu, n, m, alpha, relative_alpha, count, residual_tol, grid, out_dir });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Source counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// 1-based eigenvalue indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub indices: Option<Vec<usize>>,
    #[arg(long)]
    pub relative_alpha: Option<f64>,
    /// Certification threshold for the study (default 1e-2).
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(ConvergeArgs { boundary, lambda, mu, n_list, indices, relative_alpha, residual_tol, out });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Explicit μ values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub mu_list: Option<Vec<f64>>,
    /// Uniform grid `mu_min..=mu_max` with `mu_steps` points, used without `mu_list`.
    #[arg(long)]
    pub mu_min: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub mu_steps: Option<usize>,
    /// Disk radius for the closed-form spectrum.
    #[arg(long)]
    pub radius: Option<f64>,
    /// General boundary solved numerically instead of the disk.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[serde(skip_serializing)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(SweepArgs { lambda, mu_list, mu_min, mu_max, mu_steps, radius, boundary, n, count, out });

impl SweepArgs {
    pub fn mu_grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.mu_list, self.mu_min, self.mu_max, self.mu_steps) {
            (Some(l), ..) => l.clone(),
            (None, Some(a), Some(b), Some(k)) if k >= 2 => {
                (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
            }
            (None, Some(a), _, Some(1)) => vec![a],
            _ => return Err(CliError::Config("give mu_list or mu_min, mu_max and mu_steps".into())),
        };
        if grid.is_empty() || grid.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(CliError::Config("mu values must be positive".into()));
        }
        Ok(grid)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Fourier,
    Support,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Constraint {
    Area,
    AreaConvex,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// 1-based index of the maximized eigenvalue.
    #[arg(long)]
    pub objective: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, value_enum)]
    pub parametrization: Option<Parametrization>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum)]
    pub constraint: Option<Constraint>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub initial_step: Option<f64>,
    /// Source counts used as the ascent settles, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Amplitude of the random initial perturbation.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Start from this boundary file instead of a random shape.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[serde(skip_serializing)]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
merge_fields!(OptimizeArgs {
    objective,
    lambda,
    mu,
    parametrization,
    order,
    constraint,
    max_iter,
    tol,
    initial_step,
    schedule,
    seed,
    amplitude,
    initial,
    out_dir,
});
