//! Flag definitions. Every struct doubles as the `[section]` schema of the
//! config file: keys are the long flag names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sightwalk_core::{Split, TrainConfig};
use sightwalk_nets::NavMode;

#[derive(Debug, Parser)]
#[command(name = "sightwalk", version, about = "Synthetic RGB-D walking-assistant pipeline")]
pub struct Cli {
    /// TOML file with one table per subcommand, e.g. `[train-nav]`. Flags win over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled dataset.
    GenData(GenDataArgs),
    /// Train the segmentation network.
    TrainSeg(TrainSegArgs),
    /// Train a navigation network.
    TrainNav(TrainNavArgs),
    /// Score the four instruction methods per bucket on a test set.
    Eval(EvalArgs),
    /// Walk policies through generated corridors and count collisions.
    Simulate(SimulateArgs),
    /// Predict the instruction for one frame.
    Infer(InferArgs),
    /// Stream instructions and host touch-exploration sessions.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::TrainSeg(_) => "train-seg",
            Command::TrainNav(_) => "train-nav",
            Command::Eval(_) => "eval",
            Command::Simulate(_) => "simulate",
            Command::Infer(_) => "infer",
            Command::Serve(_) => "serve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
    /// Samples per bucket.
    #[arg(long, default_value_t = 100)]
    pub per_bucket: usize,
    /// Sample count for the low_obstacle bucket only.
    #[arg(long)]
    pub low_obstacle: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 96)]
    pub height: usize,
    /// Share of samples taken part-way along a pilot walk.
    #[arg(long, default_value_t = 0.5)]
    pub walk_fraction: f64,
    #[arg(long, default_value_t = 16)]
    pub max_walk_steps: usize,
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
}

/// Trainer hyperparameters shared by both training subcommands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Weight on the data term.
    #[arg(long, default_value_t = 100.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr0: f64,
    #[arg(long, default_value_t = 0.2)]
    pub dropout: f64,
    /// Seeds initialisation, shuffling and dropout.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TrainArgs {
    pub fn config(&self, input_side: usize) -> TrainConfig {
        TrainConfig {
            lambda_reg: self.lambda,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr0: self.lr0,
            dropout_p: self.dropout,
            seed: self.seed,
            input_side,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainSegArgs {
    /// Training dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Encoder stage widths.
    #[arg(long, value_delimiter = ',', default_value = "8,16")]
    pub widths: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value = "models")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainNavArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// rgb, rgbd or rgbds (rgb-c and rgbd-c are accepted too).
    #[arg(long, default_value = "rgbds")]
    pub mode: NavMode,
    /// Where RGBDS reads the semantic plane: `gt` or a segnet checkpoint.
    #[arg(long, default_value = "gt")]
    pub semantics: String,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,64")]
    pub widths: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub pool_rows: usize,
    #[arg(long, default_value_t = 2)]
    pub pool_cols: usize,
    #[arg(long, default_value_t = 64)]
    pub input_side: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value = "models")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    /// Test dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub rgb_c: Option<PathBuf>,
    #[arg(long)]
    pub rgbd_c: Option<PathBuf>,
    #[arg(long)]
    pub rgbds: Option<PathBuf>,
    /// Segmentation checkpoint feeding RGBDS; ground truth when absent.
    #[arg(long)]
    pub segnet: Option<PathBuf>,
    /// Replace every method by a stub. Only `identity` exists.
    #[arg(long)]
    pub stub: Option<String>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub corridors: usize,
    /// Corridor i is generated from seed + i; trial seeds derive from it too.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Any of oracle, random, straight, model.
    #[arg(long, value_delimiter = ',', default_value = "oracle,random,straight")]
    pub policies: Vec<String>,
    #[arg(long)]
    pub navnet: Option<PathBuf>,
    #[arg(long)]
    pub segnet: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    pub max_steps: usize,
    #[arg(long, default_value = "sim")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InferArgs {
    /// 8-bit RGB PNG.
    #[arg(long)]
    pub rgb: Option<PathBuf>,
    /// 16-bit depth PNG in millimetres, 0 = missing.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// 8-bit class-index PNG; used for RGBDS ahead of --segnet.
    #[arg(long)]
    pub semantic: Option<PathBuf>,
    #[arg(long)]
    pub navnet: Option<PathBuf>,
    #[arg(long)]
    pub segnet: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ServeArgs {
    #[arg(long)]
    pub navnet: Option<PathBuf>,
    #[arg(long)]
    pub segnet: Option<PathBuf>,
    /// Stream-socket listen address, or `off`.
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub tcp: String,
    /// WebSocket listen address, or `off`.
    #[arg(long, default_value = "127.0.0.1:7879")]
    pub ws: String,
    /// Replay this dataset's frames in a loop instead of a corridor walk.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed of the corridor whose pilot walk is streamed.
    #[arg(long, default_value_t = 0)]
    pub corridor_seed: u64,
    #[arg(long, default_value_t = 100)]
    pub interval_ms: u64,
    #[arg(long, default_value_t = 500)]
    pub near_mm: u32,
    #[arg(long, default_value_t = 5000)]
    pub far_mm: u32,
    /// Stop after this many seconds; runs until killed when absent.
    #[arg(long)]
    pub duration_s: Option<f64>,
}
