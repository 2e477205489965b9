use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dwl", version, about = "Bayesian dimensionality reduction and dual-channel network experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand. Flags override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run seed (data generation, split and initialization).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, global = true, value_name = "N")]
    pub seeds: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Blobs,
    Lowrank,
    Bars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Prior {
    Ard,
    ElementWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Channel {
    Dual,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LdArg {
    Bdr,
    Pca,
    #[value(name = "none")]
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitPart {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TagArg {
    #[value(name = "hd_out")]
    HdOut,
    Fused,
    #[value(name = "pre_head")]
    PreHead,
}

/// A CSV file to use instead of the configured data source.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV with a header row, replacing the configured data source.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Label column of --data.
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic data set.
    GenData(GenDataArgs),
    /// Fit a BDR projector and save it as a bundle.
    BdrFit(BdrFitArgs),
    /// Train a dual- or single-channel model.
    Train(TrainArgs),
    /// Score a saved model on a data split.
    Eval(EvalArgs),
    /// Train over a list of LD component counts.
    SweepComponents(SweepArgs),
    /// Write layer activations of a saved model.
    ExportFeatures(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    /// Generator; the configured data source is used when omitted.
    pub generator: Option<Generator>,
    /// Samples per class (blobs, bars) or total samples (lowrank).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Informative dimensions (blobs).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long)]
    pub distractor_std: Option<f64>,
    #[arg(long)]
    pub center_box: Option<f64>,
    /// Ambient dimension (lowrank).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Image side length (bars).
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BdrFitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub prior: Option<Prior>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub sigma_z_sq: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed of the projection initialization.
    #[arg(long)]
    pub bdr_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Dual keeps the LD channel; single drops it.
    #[arg(long)]
    pub channel: Option<Channel>,
    /// LD feature source for the dual channel.
    #[arg(long)]
    pub ld: Option<LdArg>,
    /// LD component count.
    #[arg(long)]
    pub r: Option<usize>,
    /// Epoch cap, overriding the config.
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model bundle directory.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitPart,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated component counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    #[arg(long, value_enum, default_value = "bdr")]
    pub ld: LdArg,
    /// Epoch cap, overriding the config.
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "pre_head")]
    pub tag: TagArg,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitPart,
}
