//! Command-line surface and the JSON-round-trippable effective config.
//!
//! Every flag is optional at the parser level; defaults and `--config` file
//! values are merged into an *effective* config which is what runs, what the
//! manifest echoes, and what reproduces a run byte-for-byte.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "gfbm",
    version,
    about = "Numerical experiments for generalized fractional Brownian motion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Covariance queries and Lamperti autocovariance fits
    Cov(CovArgs),
    /// Sample a path ensemble and export it as CSV
    Simulate(SimulateArgs),
    /// Monte Carlo small-ball probabilities and exponent fit
    Smallball(SmallballArgs),
    /// Lower-class integral criterion over a lambda grid
    Classify(ClassifyArgs),
    /// Recursive sequence constructions (lower-class and covering)
    Sequences(SequencesArgs),
    /// Chung-type law-of-the-iterated-logarithm statistics
    Lil(LilArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Kernel exponent α
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Singularity exponent γ
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Admit γ = 0 (fractional-Brownian oracle mode)
    #[arg(long)]
    pub fbm_limit: bool,
    /// Pin (α, γ) = (0.2, 0.1), the running example parameterization
    #[arg(long)]
    pub paper_defaults: bool,
    /// Covariance quadrature relative tolerance
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing); some queries print-only without it
    #[arg(long)]
    pub out: Option<String>,
    /// JSON config file; explicit flags override its fields
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct CovArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// First time point
    #[arg(long)]
    pub s: Option<f64>,
    /// Second time point
    #[arg(long)]
    pub t: Option<f64>,
    /// Process component: X (full), Y (history), Z (Riemann–Liouville)
    #[arg(long)]
    pub process: Option<String>,
    /// Fit the Lamperti autocovariance decay instead of a single entry
    #[arg(long)]
    pub lamperti: bool,
    /// Lamperti fit grid as lo:hi:count (uniform)
    #[arg(long)]
    pub t_grid: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub grid_kind: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub process: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SmallballArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated θ values
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub grid_kind: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Disable the default refine-until-stable grid doubling
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Parametric φ model, e.g. kappa=1,beta=0.5
    #[arg(long)]
    pub model: Option<String>,
    /// Empirical φ̂ table from a smallball.csv
    #[arg(long)]
    pub empirical: Option<String>,
    /// Test-function family (f-lambda)
    #[arg(long)]
    pub family: Option<String>,
    /// λ grid as lo:hi:count (log-spaced)
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub direction: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SequencesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// lower | covering
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub direction: Option<String>,
    /// sufficiency | necessity
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub terms: Option<usize>,
    /// Chaining constant L (> 2H)
    #[arg(long)]
    pub big_l: Option<f64>,
    /// Covering kind: right end of the covered interval
    #[arg(long)]
    pub b: Option<f64>,
    /// Covering kind: metric radius ε
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct LilArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub process: Option<String>,
    /// zero | infinity | fixed-point
    #[arg(long)]
    pub direction: Option<String>,
    /// Fixed time for the oscillation variant
    #[arg(long)]
    pub at: Option<f64>,
    /// Comma-separated seeds (one ensemble per seed)
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub k_lo: Option<u32>,
    #[arg(long)]
    pub k_hi: Option<u32>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub points_per_octave: Option<usize>,
}

/// Effective, fully-resolved configuration. Serializes losslessly and is
/// echoed into the run manifest.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct EffectiveConfig {
    pub subcommand: String,
    pub alpha: f64,
    pub gamma: f64,
    pub fbm_limit: bool,
    pub rel_tol: f64,
    pub seed: u64,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(flatten)]
    pub options: serde_json::Map<String, serde_json::Value>,
}

impl EffectiveConfig {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Worker cap from GFBM_THREADS (0 or unset = auto).
pub fn workers_from_env() -> usize {
    std::env::var("GFBM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

/// Parse "lo:hi:count" into a grid, log-spaced when `log` is set.
pub fn parse_grid_spec(s: &str, log: bool) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    anyhow::ensure!(parts.len() == 3, "grid spec must be lo:hi:count, got {s:?}");
    let lo: f64 = parts[0].parse()?;
    let hi: f64 = parts[1].parse()?;
    let count: usize = parts[2].parse()?;
    anyhow::ensure!(count >= 2 && lo < hi, "need lo < hi and count >= 2");
    if log {
        anyhow::ensure!(lo > 0.0, "log-spaced grid needs lo > 0");
    }
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect())
}

pub fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

pub fn parse_u64_list(s: &str) -> anyhow::Result<Vec<u64>> {
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(Into::into))
        .collect()
}

/// Parse "kappa=1,beta=0.5".
pub fn parse_model(s: &str) -> anyhow::Result<(f64, f64)> {
    let mut kappa = None;
    let mut beta = None;
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("model spec must be kappa=..,beta=.."))?;
        match k.trim() {
            "kappa" => kappa = Some(v.trim().parse::<f64>()?),
            "beta" => beta = Some(v.trim().parse::<f64>()?),
            other => anyhow::bail!("unknown model field {other:?}"),
        }
    }
    Ok((
        kappa.ok_or_else(|| anyhow::anyhow!("model needs kappa"))?,
        beta.ok_or_else(|| anyhow::anyhow!("model needs beta"))?,
    ))
}
