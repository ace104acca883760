//! The `skillsphere` command-line front end.
//!
//! Every subcommand reads its inputs from files, writes its outputs
//! atomically, and derives all randomness from `--seed`. A JSON `--config`
//! file may supply shared settings; flags given on the command line win.
//!
//! Exit codes: 0 success, 2 argument error, 3 I/O or format error, 4 domain
//! error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "skillsphere", version, about = "Skill embeddings on the unit hypersphere")]
pub struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic gait dataset (manifest + clip files).
    Synth(SynthArgs),
    /// Train the classification encoder and export class means.
    TrainEncoder(TrainEncoderArgs),
    /// Nearest-center count variance of uniform sphere samples.
    Uniformity(UniformityArgs),
    /// Sample Embedding Expansion draws around one clip's center.
    Expand(ExpandArgs),
    /// Train the conditional discriminator on data alone.
    TrainDisc(TrainDiscArgs),
    /// Reconstruction-score coverage of a generated clip against a dataset.
    Score(ScoreArgs),
    /// 2-D PCA projection of centers and expansion samples.
    Pca(PcaArgs),
    /// Dump progress positional encodings as CSV.
    PeDump(PeDumpArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of clips (classes).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub clips: Option<u64>,
    /// Joints per frame.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub joints: u64,
    /// Frames per second.
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Shortest clip duration, seconds.
    #[arg(long, default_value_t = 2.0)]
    pub min_duration: f64,
    /// Longest clip duration, seconds.
    #[arg(long, default_value_t = 6.0)]
    pub max_duration: f64,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainEncoderArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory (encoder.ncse, encoder.ncse.json, encoder_trace.csv, class_means.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training epochs [default: 2000].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.01].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Latent dimension p [default: 64].
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Window length, seconds [default: 2].
    #[arg(long)]
    pub window_s: Option<f64>,
    /// Window stride, seconds [default: 0.5].
    #[arg(long)]
    pub stride_s: Option<f64>,
    /// Minibatch size.
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CenterSource {
    /// Simplex equiangular tight frame.
    Etf,
    /// I.i.d. uniform points on the sphere.
    Random,
    /// Class means from a `class_means.json` file (`--means`).
    Means,
}

#[derive(Debug, Args)]
pub struct UniformityArgs {
    /// Where the centers come from.
    #[arg(long, value_enum, default_value_t = CenterSource::Etf)]
    pub centers: CenterSource,
    /// Number of centers (etf, random).
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Sphere dimension (etf, random) [default: latent dim, 64].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Class-means file (means).
    #[arg(long)]
    pub means: Option<PathBuf>,
    /// Uniform samples per center.
    #[arg(long, default_value_t = 1000)]
    pub samples_per_center: usize,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Class-means file written by train-encoder.
    #[arg(long)]
    pub means: PathBuf,
    /// Clip (class) name whose center is expanded.
    #[arg(long)]
    pub clip: String,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// vMF concentration [default: 50].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Probability of the exact center [default: 0.5].
    #[arg(long)]
    pub p_center: Option<f64>,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainDiscArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Class-means file; without it, simplex ETF centers of the latent dimension are used.
    #[arg(long)]
    pub means: Option<PathBuf>,
    /// Output directory (disc.ncse, disc.ncse.json, disc_trace.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training steps.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Gradient-penalty weight [default: 5].
    #[arg(long)]
    pub w_gp: Option<f64>,
    /// vMF concentration [default: 50].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Probability of the exact center [default: 0.5].
    #[arg(long)]
    pub p_center: Option<f64>,
    /// Progress-encoding stage length, seconds [default: 0.5].
    #[arg(long)]
    pub interval_s: Option<f64>,
    /// Policy stand-in noise scale.
    #[arg(long, default_value_t = crate::adversarial::DEFAULT_NOISE_SIGMA)]
    pub noise_sigma: f64,
    /// Latent dimension for ETF centers [default: 64].
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Generated frames, as a clip file.
    #[arg(long)]
    pub generated: PathBuf,
    /// Coverage threshold.
    #[arg(long, default_value_t = crate::metrics::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Joint-position kernel sharpness [default: 2].
    #[arg(long)]
    pub alpha_jp: Option<f64>,
    /// Root-velocity kernel sharpness [default: 0.1].
    #[arg(long)]
    pub alpha_v: Option<f64>,
    /// Output directory (coverage.json, histogram.csv, completeness.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Where the centers come from.
    #[arg(long, value_enum, default_value_t = CenterSource::Etf)]
    pub centers: CenterSource,
    /// Number of centers (etf, random).
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Sphere dimension (etf, random) [default: latent dim, 64].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Class-means file (means).
    #[arg(long)]
    pub means: Option<PathBuf>,
    /// Expansion samples drawn around each center.
    #[arg(long, default_value_t = 100)]
    pub samples_per_center: usize,
    /// vMF concentration [default: 50].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Probability of the exact center [default: 0.5].
    #[arg(long)]
    pub p_center: Option<f64>,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (pca.csv, pca.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeDumpArgs {
    /// Number of stages (rows).
    #[arg(long, default_value_t = 64)]
    pub stages: u64,
    /// Encoding dimension; must be even.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Frequency base.
    #[arg(long, default_value_t = crate::progress::DEFAULT_BASE)]
    pub base: f64,
    /// Output CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            Error::UnknownClip(name) => CliError::Usage(format!("unknown clip {name:?}")),
            other => CliError::Run(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) => error_exit_code(e),
        }
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownClip(_) => EXIT_USAGE,
        Error::Io { .. }
        | Error::MalformedManifest { .. }
        | Error::MalformedClip { .. }
        | Error::DuplicateName(_)
        | Error::BadModelFile(_)
        | Error::EmptyGeneratedSet => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}\n\nFor more information, try '--help'."),
                CliError::Run(err) => eprintln!("error: {err}"),
            }
            e.exit_code()
        }
    }
}
