//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dgme_core::synth::{Domain, MotionClass};

#[derive(Debug, Parser)]
#[command(name = "dgme", version, about = "Camera movement classification with directional grid motion encodings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled synthetic corpus
    Synth(SynthArgs),
    /// Compute descriptors (and optionally stub embeddings) for annotated clips
    Extract(ExtractArgs),
    /// Fit per-dimension z-score statistics on a features file
    Stats(StatsArgs),
    /// Apply z-score statistics to a features file
    Normalize(NormalizeArgs),
    /// Fold source labels into a schema's classes
    Remap(RemapArgs),
    /// Stratified train/val/test split of a labelled CSV
    Split(SplitArgs),
    /// Repeat training rows up to per-class targets
    Oversample(OversampleArgs),
    /// Train a classification head
    Train(TrainArgs),
    /// Predict labels with a trained head
    Predict(PredictArgs),
    /// Score predictions: metrics JSON and confusion matrix CSV
    Eval(EvalArgs),
    /// Draw descriptors as SVG
    Viz(VizArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_delimiter = ',', default_value = "static,pan,tilt,zoom")]
    pub classes: Vec<MotionClass>,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long, default_value = "modern")]
    pub domain: Domain,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Frames per clip
    #[arg(long, default_value_t = 12)]
    pub frames: usize,
    /// Frame side in pixels
    #[arg(long, default_value_t = 96)]
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlowChoice {
    Farneback,
    BlockMatch,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Annotations CSV (`clip_path,label`); paths are relative to its directory
    #[arg(long)]
    pub ann: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Magnitude threshold in pixels
    #[arg(long, default_value_t = 0.5)]
    pub mthr: f64,
    #[arg(long, default_value_t = 12)]
    pub bins: usize,
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Frames sampled per clip
    #[arg(long, default_value_t = 12)]
    pub frames: usize,
    /// Stride between sampled frames
    #[arg(long, default_value_t = 6)]
    pub interval: usize,
    /// Side of the square frames fed to the flow estimator
    #[arg(long, default_value_t = 224)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = FlowChoice::Farneback)]
    pub flow: FlowChoice,
    /// Block side for block-matching flow
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    /// Search radius for block-matching flow
    #[arg(long, default_value_t = 6)]
    pub radius: usize,
    /// Apply the training augmentation (random scale/crop, brightness, contrast)
    #[arg(long)]
    pub augment: bool,
    #[arg(long, default_value_t = 0)]
    pub augment_seed: u64,
    /// Also write stub backbone embeddings to this CSV
    #[arg(long)]
    pub embed_out: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 0)]
    pub embed_seed: u64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RemapArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "modern4")]
    pub schema: String,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// CSV with a `label` column and a `clip_id` or `clip_path` column
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory receiving train.csv, val.csv and test.csv
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "modern4")]
    pub schema: String,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.2,0.2")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OversampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-class targets such as `tilt=1280,pan=1460`
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[arg(long, default_value = "modern4")]
    pub schema: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    DgmeOnly,
    Fusion,
}

/// Inputs shared by training and inference.
#[derive(Debug, Args)]
pub struct ModelInputs {
    /// Z-score statistics applied to every features file
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Backbone embeddings CSV, joined on clip_id (fusion head)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch training log CSV
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value = "modern4")]
    pub schema: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub lr_floor: f64,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV (`clip_id,label`); alternative to --model
    #[arg(long, conflicts_with = "model", requires = "truth")]
    pub pred: Option<PathBuf>,
    /// Labelled CSV the predictions are scored against
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, requires = "features")]
    pub model: Option<PathBuf>,
    /// Labelled features to predict and score (with --model)
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub confusion: PathBuf,
    #[arg(long, default_value = "modern4")]
    pub schema: String,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    #[command(subcommand)]
    pub kind: VizKind,
}

#[derive(Debug, Subcommand)]
pub enum VizKind {
    /// Direction rose summed over all clips of one class
    Rose {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cell magnitude and dominant direction of one clip
    Grid {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        clip: String,
        #[arg(long)]
        out: PathBuf,
    },
}
