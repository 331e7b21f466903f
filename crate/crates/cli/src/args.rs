use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "krige", version, about = "Ordinary kriging, GLS mean estimation and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict at targets given inline or as a grid.
    Predict(PredictArgs),
    /// Estimate the field mean by generalized least squares.
    Mean(MeanArgs),
    /// Leave-one-out cross validation.
    Validate(ValidateArgs),
    /// Monte Carlo check of the prediction and estimator variances.
    Simulate(SimulateArgs),
    /// Biased (1/n) and unbiased (1/(n-1)) sample variance of the values.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// white_noise, exponential, gaussian or spherical.
    #[arg(long, default_value = "white_noise")]
    pub model: String,
    /// Correlation range (required except for white_noise).
    #[arg(long)]
    pub range: Option<f64>,
    /// Field variance.
    #[arg(long)]
    pub sigma2: f64,
    /// Fraction of correlation removed at nonzero distance, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub nugget: f64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write JSON lines here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include weights and Lagrange multipliers where applicable.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with header `x[,y[,z]],value`.
    #[arg(long)]
    pub data: PathBuf,
    /// Expected number of coordinate columns.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated coordinates; repeatable.
    #[arg(long)]
    pub target: Vec<String>,
    /// `min:max:steps`, once per axis; points are emitted row-major.
    #[arg(long)]
    pub grid: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also solve through the bordered kriging system and report the largest
    /// discrepancy between the two routes.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of sample locations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated increasing sample counts; one report each.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Field mean.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// unit_grid or random_uniform.
    #[arg(long, default_value = "unit_grid")]
    pub layout: String,
    /// Spatial dimension of the layout.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Bounding box `lo:hi`, applied to every axis.
    #[arg(long, default_value = "0:1")]
    pub bbox: String,
    /// Prediction target; defaults to the low corner of the bounding box.
    #[arg(long)]
    pub target: Option<String>,
    /// Maximum number of normal draws.
    #[arg(long, default_value_t = krige::mc::DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
