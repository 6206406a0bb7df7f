use std::path::PathBuf;

use clap::{Args, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "analog-dist", version, about = "Analog-to-target distance distributions: theory, estimation and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate Lorenz-63 and write a `.anacat` catalog.
    GenL63(GenL63Cmd),
    /// Write a synthetic traveling-wave field catalog with known dimension.
    GenSurrogate(GenSurrogateCmd),
    /// Max-normalized theoretical densities of r_k with mean and mode markers.
    TheoryCurves(TheoryCurvesCmd),
    /// Analog distances of one target against the fitted C k^{1/d} law.
    FitTarget(FitTargetCmd),
    /// Monte Carlo over subsampled catalogs: d, rho and rescaled distances per L.
    McDistances(McDistancesCmd),
    /// Empirical densities of rescaled distances against the theoretical h_k.
    RescaledDensity(RescaledDensityCmd),
    /// Ratio r_k / RMSD after EOF truncation against the d_max bound.
    DmaxScan(DmaxScanCmd),
    /// Gaussian-mixture clustering of grid points in EOF-loading space.
    Cluster(ClusterCmd),
    /// Local dimension statistics over time: histogram, daily, weekly, smoothed.
    DimStats(DimStatsCmd),
    /// Re-run a recorded command from its manifest.
    Rerun(RerunCmd),
}

/// Parse `1000`, `1e6` or `2.5e4` as an exact non-negative integer.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15 {
        Ok(v as u64)
    } else {
        Err(format!("not a whole non-negative count: {s}"))
    }
}

/// `a..b` (inclusive), `a..=b`, or a comma-separated list.
pub fn parse_index_list(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Validation(format!("bad list {s:?}: expected e.g. 2..20 or 1,2,5"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let v = s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad())).collect::<CliResult<Vec<_>>>()?;
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

/// Default values of an option group, as if no flags were given.
pub fn default_opts<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults").no_binary_name(true));
    let m = cmd.try_get_matches_from(Vec::<String>::new()).expect("option groups have defaults for every flag");
    T::from_arg_matches(&m).expect("option groups have defaults for every flag")
}

#[derive(Debug, Clone, Args)]
pub struct GenL63Cmd {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: GenL63Opts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenL63Opts {
    /// Number of retained states.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub n: u64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Integration steps discarded first.
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    /// Integration steps between retained states.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the uniform perturbation of the initial state.
    #[arg(long, default_value_t = 1.0)]
    pub jitter: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenSurrogateCmd {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: GenSurrogateOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenSurrogateOpts {
    /// Number of traveling waves m; the effective dimension.
    #[arg(long, default_value_t = 5)]
    pub modes: usize,
    /// Grid points per field.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1)]
    pub fields: usize,
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub stride_hours: i64,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude_decay: f64,
    /// Std of the hourly phase increments, radians.
    #[arg(long, default_value_t = 1.0)]
    pub phase_diffusion: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TheoryCurvesCmd {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: TheoryCurvesOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TheoryCurvesOpts {
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 5, 30])]
    pub k_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0f64])]
    pub d_list: Vec<f64>,
    #[arg(long = "L", default_value = "1000000", value_parser = parse_count)]
    pub l: u64,
    /// Grid points per curve.
    #[arg(long, default_value_t = 400)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExclusionOpts {
    /// Drop candidates closer than this to the target, in catalog time units.
    #[arg(long, default_value_t = 36)]
    pub exclusion_gap: i64,
    /// Keep every member of time-adjacent candidate runs.
    #[arg(long)]
    pub no_dedup: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitTargetCmd {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: FitTargetOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitTargetOpts {
    #[arg(long, default_value_t = 0)]
    pub target_index: usize,
    #[arg(long = "K", default_value_t = 150)]
    pub k: usize,
    #[command(flatten)]
    pub exclusion: ExclusionOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct McDistancesCmd {
    #[arg(long)]
    pub catalog_source: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: McDistancesOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McDistancesOpts {
    #[arg(long = "L-list", value_delimiter = ',', value_parser = parse_count, default_values = ["10000", "100000", "1000000"])]
    pub l_list: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub n_catalogs: usize,
    /// Row of the source catalog used as the fixed target.
    #[arg(long, default_value_t = 0)]
    pub target: usize,
    #[arg(long = "K-dim", default_value_t = 150)]
    pub k_dim: usize,
    /// Ranks whose distances are compared with theory.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 15, 30])]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 36)]
    pub exclusion_gap: i64,
    /// Average the dimension per catalog size instead of over all sizes.
    #[arg(long)]
    pub per_size_dimension: bool,
    #[arg(long, default_value_t = 0.15)]
    pub bw_d: f64,
    #[arg(long, default_value_t = 4.0)]
    pub bw_rho: f64,
    #[arg(long, default_value_t = 0.3)]
    pub bw_rescaled: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RescaledDensityCmd {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: RescaledDensityOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RescaledDensityOpts {
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// Analogs per target for the dimension and prefactor fit.
    #[arg(long = "K", default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub bandwidth: f64,
    /// Dimension of the theoretical curves; defaults to the mean estimate.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub n_targets: usize,
    #[command(flatten)]
    pub exclusion: ExclusionOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DmaxScanCmd {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: DmaxScanOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DmaxScanOpts {
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10, 20, 40])]
    pub k_list: Vec<usize>,
    /// EOF counts, e.g. `1..20` or `1,2,4,8`.
    #[arg(long, default_value = "1..20")]
    pub eof_counts: String,
    /// Effective independent sample count; defaults to L/24.
    #[arg(long = "L-eff", value_parser = parse_count)]
    pub l_eff: Option<u64>,
    #[arg(long, default_value_t = analog_dist::dimred::DEFAULT_RHO_BAR)]
    pub rho_bar: f64,
    /// Analogs per target for the dimension estimate.
    #[arg(long = "K", default_value_t = 40)]
    pub k_dim: usize,
    #[arg(long, default_value_t = 200)]
    pub n_targets: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_pairs: usize,
    #[command(flatten)]
    pub exclusion: ExclusionOpts,
    /// Ignore timestamps and only drop exact matches.
    #[arg(long)]
    pub no_exclusion: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterCmd {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: ClusterOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterOpts {
    /// Leading EOFs per block whose loadings describe each grid point.
    #[arg(long, default_value_t = 50)]
    pub n_eof: usize,
    /// Component counts to compare, e.g. `2..20`.
    #[arg(long, default_value = "2..20")]
    pub candidates: String,
    /// EM restarts per candidate.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Number of stacked fields in each state vector (e.g. 2 for u and v).
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long, default_value_t = analog_dist::clustering::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DimStatsCmd {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub opts: DimStatsOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DimStatsOpts {
    #[arg(long = "K", default_value_t = 40)]
    pub k: usize,
    #[command(flatten)]
    pub exclusion: ExclusionOpts,
    /// Evenly spaced targets; 0 uses every state.
    #[arg(long, default_value_t = 0)]
    pub n_targets: usize,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Width of the Gaussian smoothing window, days.
    #[arg(long, default_value_t = 80.0)]
    pub smooth_days: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RerunCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail unless every output matches the recorded checksum.
    #[arg(long)]
    pub verify: bool,
}
