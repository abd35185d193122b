//! `wgf`: batch commands over the `wgflow` library.
//!
//! Every command reads its settings from defaults, an optional JSON config
//! (`--config`) and flags, in increasing priority, writes CSV/JSON results to
//! the output directory (`--out-dir`, else `$WGFLOW_OUT_DIR`, else `.`) and a
//! `<command>_manifest.json` that reproduces the run when passed back as
//! `--config`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure.

mod commands;
pub mod config;
pub mod error;
pub mod spec;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use error::CliError;

/// Environment variable naming the output directory.
pub const OUT_DIR_ENV: &str = "WGFLOW_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "wgf", version, about = "Wasserstein gradient flows and large-deviation rates in one dimension")]
pub struct Cli {
    /// JSON config with keys named after the long flags; a manifest also works.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; overrides $WGFLOW_OUT_DIR.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// W2 distance between two measures.
    W2(W2Args),
    /// Entropy, potential and free energy, Fisher information of a measure.
    Functionals(FunctionalsArgs),
    /// Fokker-Planck evolution by finite volumes or the exact kernel.
    Fpe(FpeArgs),
    /// Minimizing-movement (JKO) scheme.
    Jko(JkoArgs),
    /// Rate J_tau(rho1 | rho0), static and/or dynamic.
    Rate(RateArgs),
    /// Rate gaps over a decreasing sequence of tau.
    Gamma(GammaArgs),
    /// Particle ensembles and the law of large numbers.
    Particles(ParticlesArgs),
    /// Finite-window checks of the potential class assumptions.
    ValidatePotential(ValidateArgs),
    /// Tail splice of rho1 into the tails of rho0, with geodesic bounds.
    Splice(SpliceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::W2(_) => "w2",
            Command::Functionals(_) => "functionals",
            Command::Fpe(_) => "fpe",
            Command::Jko(_) => "jko",
            Command::Rate(_) => "rate",
            Command::Gamma(_) => "gamma",
            Command::Particles(_) => "particles",
            Command::ValidatePotential(_) => "validate-potential",
            Command::Splice(_) => "splice",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridArgs {
    /// Left end of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Right end of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of cells.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct W2Args {
    /// First measure: gauss:m,s | uniform:a,b | file:path.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Second measure.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Quantile levels.
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FunctionalsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    /// zero | quadratic:k | quartic:a | double_well:a,b.
    #[arg(long)]
    pub potential: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FpeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// fv | kernel.
    #[arg(long)]
    pub method: Option<String>,
    /// Recorded times besides 0 and t-end.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct JkoArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Quantile levels.
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho1: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// static | dynamic | both.
    #[arg(long)]
    pub method: Option<String>,
    /// Time intervals of the dynamic path.
    #[arg(long)]
    pub k: Option<usize>,
    /// Quantile levels of the dynamic path.
    #[arg(long)]
    pub m: Option<usize>,
    /// Marginal tolerance of the static solver.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GammaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho1: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// static | dynamic.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ParticlesArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Ensemble sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the largest ensemble of the first seed as `k,x`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump: Option<bool>,
    /// Run the deviation-frequency demo with this threshold on the mean.
    #[arg(long)]
    pub deviation: Option<f64>,
    /// Ensembles per size in the deviation demo.
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ValidateArgs {
    #[arg(long)]
    pub potential: Option<String>,
    /// Probe window half-width.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Probe cells.
    #[arg(long)]
    pub probe_n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SpliceArgs {
    /// Tails.
    #[arg(long, allow_hyphen_values = true)]
    pub rho0: Option<String>,
    /// Interior.
    #[arg(long, allow_hyphen_values = true)]
    pub rho1: Option<String>,
    /// Splice radius M.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Mollification width.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Convex potential for the geodesic bounds.
    #[arg(long)]
    pub potential: Option<String>,
    /// Geodesic samples minus one.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
