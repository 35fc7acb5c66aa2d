use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ilm_core::assignment::MatchStrategy;
use ilm_core::pose_estimation::Estimator;
use ilm_sim::experiments::heatmap::RegistrationMethod;
use ilm_sim::experiments::trajectory::TrajectoryMethod;

#[derive(Debug, Parser)]
#[command(name = "ilm", version, about = "Iterative landmark matching localization experiments")]
pub struct Cli {
    /// TOML run configuration; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Map file (TOML). Defaults to the generated 14 x 9 m field.
    #[arg(long, global = true, value_name = "FILE")]
    pub map: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use full-scale experiment sizes instead of the desk-scale defaults.
    #[arg(long, global = true)]
    pub full_scale: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time the LAP solvers and pose estimators on simulated matching instances.
    Bench(BenchArgs),
    /// Correct-matching map over a grid of initial guesses.
    Heatmap(HeatmapArgs),
    /// Correct-matching rates against initial position and heading offsets.
    Rates(RatesArgs),
    /// DLT vs Kabsch pose error under observation noise.
    NoiseSweep(NoiseArgs),
    /// Simulate a trajectory and run localization pipelines over it.
    Trajectory(TrajectoryArgs),
    /// Start-of-match multi-hypothesis localization trials.
    GlobalInit(GlobalInitArgs),
    /// Run pipelines over a recorded frame file.
    Replay(ReplayArgs),
    /// Write or inspect map files.
    #[command(subcommand)]
    Map(MapCommand),
}

#[derive(Debug, Args, Default)]
pub struct RegistrationFlags {
    /// Landmark matching strategy for ILM.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<MatchStrategy>,
    /// Pose estimator for ILM.
    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Option<Estimator>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Matching instances per benchmark.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Leading instances solved but not timed.
    #[arg(long)]
    pub warmup: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Registration methods (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_registration_method, default_value = "ilm,icp")]
    pub method: Vec<RegistrationMethod>,
    /// Iteration budgets (comma separated); defaults to 1 through 8.
    #[arg(long, value_delimiter = ',')]
    pub max_iter: Option<Vec<usize>>,
    /// Grid cell size in meters.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[command(flatten)]
    pub reg: RegistrationFlags,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_registration_method, default_value = "ilm,icp")]
    pub method: Vec<RegistrationMethod>,
    /// True poses sampled across the field.
    #[arg(long)]
    pub pose_samples: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[command(flatten)]
    pub reg: RegistrationFlags,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Poses per noise width.
    #[arg(long)]
    pub poses: Option<usize>,
    /// Uniform noise half-widths in meters (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Pipelines (comma separated): ilm+pf, ilm+ekf, ilm, icp, dead-reckoning, amcl.
    #[arg(long, value_delimiter = ',', value_parser = parse_trajectory_method, default_value = "ilm+pf,ilm,dead-reckoning,amcl")]
    pub method: Vec<TrajectoryMethod>,
    /// `rect` loops the own goal area; `config` uses the configured waypoints.
    #[arg(long, default_value = "rect", value_parser = ["rect", "config"])]
    pub spec: String,
    #[arg(long)]
    pub laps: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[command(flatten)]
    pub reg: RegistrationFlags,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Frame record written by `trajectory`.
    #[arg(long, value_name = "FILE")]
    pub record: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_trajectory_method, default_value = "ilm+pf,ilm,dead-reckoning,amcl")]
    pub method: Vec<TrajectoryMethod>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[command(flatten)]
    pub reg: RegistrationFlags,
}

#[derive(Debug, Args)]
pub struct GlobalInitArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    /// Localize the frames of a record file instead of simulated starts.
    #[arg(long, value_name = "FILE")]
    pub record: Option<PathBuf>,
    #[command(flatten)]
    pub reg: RegistrationFlags,
}

#[derive(Debug, Subcommand)]
pub enum MapCommand {
    /// Write the generated default field map.
    Default {
        #[arg(long, default_value_t = crate::config::DEFAULT_FIELD_LENGTH)]
        length: f64,
        #[arg(long, default_value_t = crate::config::DEFAULT_FIELD_WIDTH)]
        width: f64,
        /// Destination; `<out>/map.toml` when omitted.
        #[arg(long, value_name = "FILE")]
        file: Option<PathBuf>,
    },
    /// Print a summary of the map selected by --map.
    Show,
}

fn parse_strategy(s: &str) -> Result<MatchStrategy, String> {
    s.parse()
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse()
}

fn parse_registration_method(s: &str) -> Result<RegistrationMethod, String> {
    RegistrationMethod::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method {s:?} (expected ilm or icp)"))
}

fn parse_trajectory_method(s: &str) -> Result<TrajectoryMethod, String> {
    s.parse()
}
