//! The `hybridnet` command line: `gen`, `train`, `eval`, `predict`.
//!
//! Every command writes a run manifest next to its outputs. `replay` reruns
//! a manifest's recorded arguments.

mod commands;
mod manifest;
mod pgm;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use commands::{load_design, load_split, Split};
pub use manifest::RunManifest;
pub use pgm::to_pgm;

#[derive(Debug, Parser)]
#[command(
    name = "hybridnet",
    version,
    about = "Multi-view graph congestion prediction"
)]
pub struct Cli {
    /// Base seed for generation, initialization and shuffling.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Directory receiving this command's outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for per-design graph construction (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic placed designs with RUDY labels.
    Gen(GenArgs),
    /// Train a model on the training split.
    Train(TrainArgs),
    /// Score a checkpoint on a split.
    Eval(EvalArgs),
    /// Export per-cell predictions and heatmaps for one design.
    Predict(PredictArgs),
    /// Rerun the command recorded in a run manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2000)]
    pub cells: usize,
    #[arg(long, default_value_t = 9)]
    pub designs: usize,
    /// Number of designs in the training split; the rest are test designs.
    #[arg(long, default_value_t = 6)]
    pub split: usize,
    /// Die side length (default: sized for about 70% utilization).
    #[arg(long)]
    pub die: Option<f64>,
    /// Tile side length (default: die / 32).
    #[arg(long)]
    pub tile: Option<f64>,
    #[arg(long, default_value_t = 0.6)]
    pub rent_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Full,
    Topo,
    Geo,
}

impl From<ModeArg> for hybridnet::model::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => Self::Full,
            ModeArg::Topo => Self::Topo,
            ModeArg::Geo => Self::Geo,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Directory holding `split.json` and `designs/`.
    #[arg(long, default_value = ".")]
    pub data: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub clique_cap: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 5.0)]
    pub grad_clip: f64,
    /// Write an intermediate checkpoint every N epochs (0 = only at the end).
    #[arg(long, default_value_t = 0)]
    pub log_every: usize,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 16)]
    pub rbf_k: usize,
    /// RBF cutoff in tiles of the first training design.
    #[arg(long, default_value_t = 8.0)]
    pub cutoff_tiles: f64,
    #[arg(long, default_value_t = 4)]
    pub fourier_bands: usize,
    /// Feed raw coordinates to the position MLP instead of Fourier features.
    #[arg(long)]
    pub raw_coords: bool,
    #[arg(long, default_value_t = 64)]
    pub out_width: usize,
    /// Print the loss every N epochs (0 = silent).
    #[arg(long, default_value_t = 10)]
    pub print_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Directory holding `config.json` and the checkpoint.
    #[arg(long, default_value = ".")]
    pub run: PathBuf,
    #[arg(long, default_value = ".")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SetArg::Test)]
    pub set: SetArg,
    /// Print one row per design.
    #[arg(long)]
    pub per_design: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, default_value = ".")]
    pub run: PathBuf,
    #[arg(long, default_value = ".")]
    pub data: PathBuf,
    /// Design name (default: first test design).
    #[arg(long)]
    pub design: Option<String>,
}

/// Parses `argv` and runs the command.
pub fn run_from<I, S>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(argv.clone())?;
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    run(cli, argv)
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    if cli.jobs > 0 {
        // A second initialization (e.g. repeated calls in one process) is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let ctx = commands::Context {
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
        argv,
    };
    match &cli.command {
        Command::Gen(a) => commands::gen(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Replay { manifest } => {
            let m = RunManifest::read(manifest)?;
            run_from(m.argv)
        }
    }
}
