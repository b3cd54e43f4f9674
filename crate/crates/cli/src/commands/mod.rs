mod curate;
mod evaluate;
mod generate;
mod mixture;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fuzzforge",
    version,
    about = "Synthetic fire-imagery dataset generation, curation, and evaluation"
)]
pub struct Cli {
    /// Worker threads for batch subcommands (output is identical for any
    /// value).
    #[arg(long, global = true, env = "FUZZFORGE_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Trim flame frame sequences and build a tagged sprite catalog.
    #[command(name = "prep-sprites")]
    PrepSprites(PrepSpritesArgs),
    /// Generate frames by 3D billboard projection (corner-projection
    /// annotations plus alpha-tight reference annotations).
    #[command(name = "gen-m1")]
    GenM1(GenArgs),
    /// Generate frames by 2D overlay compositing (pixel-exact annotations).
    #[command(name = "gen-m2")]
    GenM2(GenArgs),
    /// Remove exact/near-duplicate images by embedding distance.
    Dedup(DedupArgs),
    /// Full curation: dedup, diversity-rank, and split an image collection.
    Curate(CurateArgs),
    /// Shuffle and split a manifest into train/val/test.
    Split(SplitArgs),
    /// Build real/synthetic training mixtures.
    Mix(MixArgs),
    /// Evaluate detections against ground truth (AP, AP50, fitness).
    Eval(EvalArgs),
    /// Render aggregated results as a Markdown or CSV table.
    Report(ReportArgs),
    /// Draw annotation boxes onto an image.
    Overlay(OverlayArgs),
    /// Compare projected-quad annotations with alpha-tight annotations.
    #[command(name = "diff-annotations")]
    DiffAnnotations(DiffArgs),
    /// Enumerate (n_real, n_synth) pairs feasible under cost/time budgets.
    Budget(BudgetArgs),
}

#[derive(Args)]
pub struct PrepSpritesArgs {
    /// Directories of rendered flame frames (tags parse from each
    /// directory name).
    #[arg(long, required = true, num_args = 1..)]
    pub roots: Vec<PathBuf>,
    /// Keep one frame in every `stride`.
    #[arg(long, default_value_t = 12)]
    pub stride: usize,
    /// Alpha values above this count as colored content.
    #[arg(long, default_value_t = 0)]
    pub alpha_threshold: u8,
    /// Output directory for trimmed sprites plus catalog.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GenArgs {
    /// Pipeline config TOML (defaults apply when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sprite catalog manifest from prep-sprites.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Number of frames to generate.
    #[arg(long)]
    pub count: u64,
    /// Master seed (overrides the config value).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset root to write into.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the config's background reference ("procedural" or a
    /// directory of PNGs).
    #[arg(long)]
    pub backgrounds: Option<String>,
}

#[derive(Args)]
pub struct DedupArgs {
    /// Directory of PNG images to embed and deduplicate.
    #[arg(long, conflicts_with = "embeddings")]
    pub images: Option<PathBuf>,
    /// Precomputed embedding cache (image name -> vector) to use instead of
    /// the built-in provider.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Near-duplicate distance threshold.
    #[arg(long, default_value_t = fuzzforge_core::curation::DEFAULT_TAU)]
    pub tau: f64,
    /// Output JSON list of kept image names.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the computed embedding cache here.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Args)]
pub struct CurateArgs {
    /// Directory of PNG images to curate.
    #[arg(long)]
    pub images: PathBuf,
    /// Near-duplicate distance threshold.
    #[arg(long, default_value_t = fuzzforge_core::curation::DEFAULT_TAU)]
    pub tau: f64,
    /// Number of diverse images to keep after dedup (0 keeps all).
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Rank by mean distance instead of farthest-point sampling.
    #[arg(long)]
    pub mean_distance: bool,
    /// train,val,test ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [0.714, 0.143, 0.143])]
    pub ratios: Vec<f64>,
    /// Shuffle seed for the split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the split manifests.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Manifest to shuffle and split.
    #[arg(long)]
    pub manifest: PathBuf,
    /// train,val,test ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [0.714, 0.143, 0.143])]
    pub ratios: Vec<f64>,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for train/val/test manifests.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct MixArgs {
    /// Real-image pool manifest.
    #[arg(long)]
    pub real: PathBuf,
    /// Synthetic-image pool manifest.
    #[arg(long)]
    pub synth: PathBuf,
    /// One mixture spec in R{m}_S{n} form (omit with --suite).
    #[arg(long, conflicts_with = "suite")]
    pub spec: Option<String>,
    /// Emit the full strategy suite (11 combinations per seed).
    #[arg(long)]
    pub suite: bool,
    /// Sampling seed for --spec.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seeds for --suite.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    pub seeds: Vec<u64>,
    /// Output directory for mixture manifests.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Detection results (JSON array).
    #[arg(long)]
    pub detections: PathBuf,
    /// Ground-truth manifest.
    #[arg(long)]
    pub truth: PathBuf,
    /// Root for paths referenced by the manifest (defaults to the
    /// manifest's directory).
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Write the evaluation report JSON here (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Pre-built rows file: {"columns": [...], "rows": [{name, cells}]}.
    #[arg(long, conflicts_with = "aggregate")]
    pub rows: Option<PathBuf>,
    /// Aggregate eval reports into one row per entry:
    /// name=report1.json,report2.json,...
    #[arg(long, num_args = 1..)]
    pub aggregate: Vec<String>,
    /// Output format.
    #[arg(long, default_value = "markdown", value_parser = ["markdown", "csv"])]
    pub format: String,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OverlayArgs {
    /// Image to annotate.
    #[arg(long)]
    pub image: PathBuf,
    /// Per-frame annotation JSON.
    #[arg(long)]
    pub record: PathBuf,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DiffArgs {
    /// Manifest of projected-quad annotations (gen-m1 output).
    #[arg(long)]
    pub m1: PathBuf,
    /// Manifest of alpha-tight annotations of the same renders.
    #[arg(long)]
    pub m2: PathBuf,
    /// Roots for the two manifests (default: each manifest's directory).
    #[arg(long)]
    pub m1_root: Option<PathBuf>,
    #[arg(long)]
    pub m2_root: Option<PathBuf>,
    /// Optional pairing file: JSON array of [m1_name, m2_name] rows
    /// (defaults to ordered pairing by image name).
    #[arg(long)]
    pub pairing: Option<PathBuf>,
    /// Write the statistics JSON here (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub c_real: f64,
    #[arg(long)]
    pub c_synth: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_real: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_synth: f64,
    #[arg(long)]
    pub c_total: f64,
    /// Time budget; non-binding when zero and both per-image times are zero.
    #[arg(long, default_value_t = 0.0)]
    pub t_total: f64,
    #[arg(long, default_value_t = 250)]
    pub step: usize,
    /// Cap on n_synth for degenerate zero-cost inputs.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_synth_max: usize,
    /// Write the feasible pairs JSON here (stdout table otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs.unwrap_or_else(num_default_jobs);
    match cli.command {
        Command::PrepSprites(args) => generate::prep_sprites(args),
        Command::GenM1(args) => generate::gen_m1(args, jobs),
        Command::GenM2(args) => generate::gen_m2(args, jobs),
        Command::Dedup(args) => curate::dedup(args, jobs),
        Command::Curate(args) => curate::curate(args, jobs),
        Command::Split(args) => curate::split(args),
        Command::Mix(args) => mixture::mix(args),
        Command::Eval(args) => evaluate::eval(args),
        Command::Report(args) => evaluate::report(args),
        Command::Overlay(args) => evaluate::overlay(args),
        Command::DiffAnnotations(args) => evaluate::diff(args),
        Command::Budget(args) => mixture::budget(args),
    }
}

fn num_default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
