mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use funque::fusion::{Schema, SvrKernel};
use funque::transform::{CsfMode, TransformConfig, Wavelet, DEFAULT_PPD};
use funque::video_io::{PixelFormat, VideoSpec};

/// Full-reference video quality scoring in the wavelet domain.
#[derive(Debug, Parser)]
#[command(name = "funque", version)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a distorted video against its reference.
    Score(ScoreArgs),
    /// Write per-frame features of a video pair as CSV.
    Extract(ExtractArgs),
    /// Fit an SVR model on feature files joined with MOS.
    Train(TrainArgs),
    /// Cross-validate every feature subset and rank them.
    Select(SelectArgs),
    /// Per-database SROCC of a model, or cross-validated SROCC without one.
    Evaluate(EvaluateArgs),
    /// Time the pipeline against the full-resolution reference pipeline.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct VideoArgs {
    /// Reference raw YUV file.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Distorted raw YUV file.
    #[arg(long = "dis")]
    pub distorted: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long = "pix-fmt", default_value = "yuv420p")]
    pub pix_fmt: PixelFormat,
    #[arg(long, default_value_t = 8)]
    pub bitdepth: u8,
}

impl VideoArgs {
    pub fn spec(&self) -> funque::Result<VideoSpec> {
        VideoSpec::new(self.width, self.height, self.pix_fmt, self.bitdepth)
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, default_value = "haar")]
    pub wavelet: Wavelet,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// none, spatial_filter, frequency_filter, li_sw or watson_sw.
    #[arg(long, default_value = "spatial_filter")]
    pub csf: CsfMode,
    /// Apply SW weights inside DLM instead of to the shared pyramid.
    #[arg(long = "no-csf-share")]
    pub no_csf_share: bool,
    #[arg(long = "no-sast")]
    pub no_sast: bool,
    /// Viewing resolution in pixels per degree.
    #[arg(long, default_value_t = DEFAULT_PPD)]
    pub ppd: f64,
}

impl TransformArgs {
    pub fn config(&self) -> funque::Result<TransformConfig> {
        let cfg = TransformConfig {
            wavelet: self.wavelet,
            levels: self.levels,
            csf: self.csf,
            csf_shared: !self.no_csf_share,
            sast: !self.no_sast,
            pixels_per_degree: self.ppd,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Seed for every randomized step; echoed in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_schema(s: &str) -> funque::Result<Schema> {
    Schema::parse(s)
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Model file; defaults to $FUNQUE_MODEL_DIR/funque.model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Comma-separated feature names.
    #[arg(long, value_parser = parse_schema, default_value = "wd_essim,vif_scale1,vif_scale2,dlm,motion")]
    pub schema: Schema,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Feature CSV files (per-frame files are averaged, keyed by file stem).
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    /// MOS CSV with video_id, mos and optional content_id columns.
    #[arg(long)]
    pub mos: PathBuf,
    /// Use only these feature columns.
    #[arg(long, value_parser = parse_schema)]
    pub schema: Option<Schema>,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, default_value = "rbf")]
    pub kernel: SvrKernel,
    /// RBF width; defaults to 1 / feature count.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "c", default_value_t = 4.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.9)]
    pub nu: f64,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, default_value_t = 5000)]
    pub splits: usize,
    #[arg(long = "train-fraction", default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Split by video instead of by content.
    #[arg(long)]
    pub ungrouped: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Where to write the model.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// NAME:MOS_CSV:FEATURES_CSV[,FEATURES_CSV...]; repeat per database.
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<String>,
    /// Score with this model; without it each database is cross-validated.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub cv: CvArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub video: VideoArgs,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[arg(long, value_parser = parse_schema, default_value = "wd_essim,vif_scale1,vif_scale2,dlm,motion")]
    pub schema: Schema,
    /// Time at most this many frames.
    #[arg(long = "max-frames")]
    pub max_frames: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Score(a) => commands::score(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Train(a) => commands::train(&a),
        Command::Select(a) => commands::select(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
