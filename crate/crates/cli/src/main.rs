mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edgemem::prompts::LabelStyle;

/// Edge-map replay memory: compress exemplars, regenerate them, and run
/// class-incremental experiments.
///
/// Exit codes: 0 success, 2 invalid arguments or input, 3 generation
/// backend failure, 4 corrupted store, 1 anything else.
#[derive(Parser)]
#[command(name = "edgemem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select exemplars from a directory of labeled images and write a store.
    Compress(CompressArgs),
    /// Generate K images for every prompt in a store.
    Regenerate(RegenerateArgs),
    /// Run a class-incremental experiment described by a TOML config.
    RunCil(RunCilArgs),
    /// Verify a store and print its contents.
    Inspect(InspectArgs),
    /// Write the procedural polygon dataset as PNG files.
    GenDataset(GenDatasetArgs),
    /// Serve the generation protocol backed by the built-in stub generator.
    FakeServer(FakeServerArgs),
    /// Check a generation service against the protocol conformance corpus.
    Conformance(ConformanceArgs),
}

#[derive(Args)]
pub struct CompressArgs {
    /// Directory with one subdirectory of PNG images per class; subdirectories
    /// are matched to label lines in sorted name order.
    #[arg(long)]
    pub input: PathBuf,
    /// Raw class names, one per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Naming convention of the raw class names.
    #[arg(long, default_value = "food")]
    pub style: LabelStyle,
    /// Short-side target for edge maps: a multiple of 64, or "adaptive"
    /// (512 for images with short side >= 512, else 256).
    #[arg(long, default_value = "512")]
    pub gamma: String,
    /// Memory units per class.
    #[arg(long)]
    pub units: u32,
    /// Fraction of each class budget spent on edge-map prompts.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Edge maps per memory unit; computed from the image sizes when omitted.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Resize before edge detection (image-first) or after (edge-first).
    #[arg(long, default_value = "image-first")]
    pub scheme: SchemeArg,
    /// Output store directory; must not exist or be empty.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
pub enum SchemeArg {
    ImageFirst,
    EdgeFirst,
}

#[derive(Args)]
pub struct BackendArgs {
    /// URL of a generation service; the built-in stub is used when omitted.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Cache directory for generated images.
    #[arg(long, default_value = ".edgemem-cache")]
    pub cache: PathBuf,
}

#[derive(Args)]
pub struct RegenerateArgs {
    /// Store written by `compress` or `run-cil`.
    #[arg(long)]
    pub store: PathBuf,
    /// Images per prompt.
    #[arg(long, short = 'k', default_value_t = 1)]
    pub copies: u32,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Output directory; must not exist or be empty.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RunCilArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for report.json, report.txt and accuracy.csv; must not
    /// exist or be empty.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the exemplar store here after every phase.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Cache directory for generated images; in-memory when omitted.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Print one line per stored exemplar.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args)]
pub struct GenDatasetArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Images per class before the train/test split (one fifth is test).
    #[arg(long, default_value_t = 60)]
    pub per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; gets train/, test/ and labels.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FakeServerArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub addr: String,
}

#[derive(Args)]
pub struct ConformanceArgs {
    #[arg(long)]
    pub endpoint: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => commands::compress(a),
        Command::Regenerate(a) => commands::regenerate(a),
        Command::RunCil(a) => commands::run_cil(a),
        Command::Inspect(a) => commands::inspect(a),
        Command::GenDataset(a) => commands::gen_dataset(a),
        Command::FakeServer(a) => commands::fake_server(a),
        Command::Conformance(a) => commands::conformance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<SchemeArg> for edgemem::prompts::ResizeScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::ImageFirst => Self::ImageFirst,
            SchemeArg::EdgeFirst => Self::EdgeFirst,
        }
    }
}
