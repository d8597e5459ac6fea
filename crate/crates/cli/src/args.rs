use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use membrane_core::{StopKind, WeightKind};

#[derive(Debug, Parser)]
#[command(name = "membrane", version, about = "Axially symmetric reduced-membrane surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one profile; writes profile.csv and boundary.json
    Trace(Common),
    /// Sweep ẑ; writes scan.json with event and verdict per height and one
    /// profile CSV per height
    Scan(ScanArgs),
    /// Operator identities at n, 2n and 4n; writes identities.json
    Identities(Common),
    /// Dirichlet eigenpairs; writes spectrum.json and eigenfunctions.csv
    Spectrum(SpectrumArgs),
    /// Stability report; writes stability.json
    Stability(StabilityArgs),
    /// Energies and pointwise fields; writes energies.json and fields.csv
    Energy(Common),
    /// Every artifact for one surface
    Export(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stop {
    RprimeZero,
    PhiPi,
    ZZero,
    SigmaMax,
}

impl From<Stop> for StopKind {
    fn from(s: Stop) -> StopKind {
        match s {
            Stop::RprimeZero => StopKind::RPrimeZero,
            Stop::PhiPi => StopKind::PhiReachesMinusPi,
            Stop::ZZero => StopKind::ZApproachesZero,
            Stop::SigmaMax => StopKind::SigmaMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weight {
    Invzsq,
    Zsq,
}

impl From<Weight> for WeightKind {
    fn from(w: Weight) -> WeightKind {
        match w {
            Weight::Invzsq => WeightKind::InvZSq,
            Weight::Zsq => WeightKind::ZSq,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Surface {
    /// Spontaneous curvature c_o
    #[arg(long = "co", default_value_t = 2.0, allow_negative_numbers = true)]
    pub c_o: f64,
    #[arg(long, default_value = "rprime-zero")]
    pub stop: Stop,
    /// Hard cap on arc length
    #[arg(long, default_value_t = 20.0)]
    pub sigma_max: f64,
    /// Integrator tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Number of grid intervals after resampling
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Output directory
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Apex height ẑ
    #[arg(long, allow_negative_numbers = true)]
    pub zhat: f64,
    #[arg(long, default_value_t = 0)]
    pub mode: u32,
    #[command(flatten)]
    pub surface: Surface,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Apex heights: a range `a:b:n` (endpoints included) or a comma list
    #[arg(long, allow_hyphen_values = true)]
    pub zhat: String,
    #[command(flatten)]
    pub surface: Surface,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "zsq")]
    pub weight: Weight,
    /// Number of eigenpairs
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Exit with status 1 when the verdict is unstable
    #[arg(long)]
    pub assert_stable: bool,
}

/// Parse `a:b:n` into `n` equally spaced values from `a` to `b`, or a
/// comma-separated list.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(',') {
        return s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad height `{x}`")))
            .collect();
    }
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected `a:b:n`, got `{s}`");
    match parts.as_slice() {
        [x] => x.parse::<f64>().map(|v| vec![v]).map_err(|_| bad()),
        [a, b, n] => {
            let a: f64 = a.parse().map_err(|_| bad())?;
            let b: f64 = b.parse().map_err(|_| bad())?;
            let n: usize = n.parse().map_err(|_| bad())?;
            if n == 0 || !a.is_finite() || !b.is_finite() {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect())
        }
        _ => Err(bad()),
    }
}
