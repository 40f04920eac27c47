//! Command-line front end: argument parsing, configuration layering and
//! artifact persistence on top of `pixtile-core`.

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use pixtile_core::config::PipelineConfig;

mod analysis;
mod io;
mod learn;
pub mod pipeline;
mod scene;
pub mod validate;

#[derive(Debug, Parser)]
#[command(name = "pixtile", version, about = "Pixel-art tileset analysis and tile scene synthesis")]
pub struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or directory for commands that write several files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Tileset image (PNG).
    pub image: PathBuf,
    #[arg(long)]
    pub tile_size: Option<u32>,
    /// SSIM adjacency threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub strip_width: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Precomputed embeddings (JSONL of {key, vector}).
    #[arg(long, conflicts_with = "hashing_dim")]
    pub embeddings: Option<PathBuf>,
    /// Use the built-in hashing embedder with this many dimensions.
    #[arg(long)]
    pub hashing_dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut a tileset into tiles and write them as PNGs plus tileset.json.
    Split {
        image: PathBuf,
        #[arg(long)]
        tile_size: Option<u32>,
        /// Pad each written tile by N pixels (4 when given without a value).
        #[arg(long, num_args = 0..=1, default_missing_value = "4")]
        pad: Option<u32>,
        /// Padding color as RRGGBBAA hex.
        #[arg(long, default_value = "00000000")]
        pad_color: String,
        /// Bicubic upscale factor applied to each written tile.
        #[arg(long)]
        upscale: Option<u32>,
    },
    /// Score every neighboring tile pair.
    Adjacency(GridArgs),
    /// Grow and classify object segments.
    Segment {
        #[command(flatten)]
        grid: GridArgs,
        /// JSON list of {parent, class} manual labels.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Infer the connected half-edge directions of each tile.
    Connectivity {
        #[command(flatten)]
        grid: GridArgs,
        /// Restrict to the tiles of these segments.
        #[arg(long)]
        segments: Option<PathBuf>,
    },
    /// Compare predicted and reference connectivity.
    EvalConnectivity {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Build or query a semantic index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Check captions against tile labels at the direct, synonym and
    /// embedding levels.
    MatchCaptions {
        /// JSONL of {tile_ref, caption}.
        #[arg(long)]
        captions: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Train, apply or evaluate the affordance classifier.
    #[command(subcommand)]
    Affordance(AffordanceCommand),
    /// Generate a cellular-automaton terrain map.
    Terrain {
        #[arg(long, default_value_t = 24)]
        rows: usize,
        #[arg(long, default_value_t = 24)]
        cols: usize,
    },
    /// Turn narrative predicates into placed and rendered scenes.
    Scene {
        /// Text with `# frame N` headers, or a JSON list of predicates.
        #[arg(long)]
        predicates: PathBuf,
        /// Directory holding records.json and embeddings.jsonl.
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 24)]
        rows: usize,
        #[arg(long, default_value_t = 24)]
        cols: usize,
        /// Extra relation aliases ({alias: canonical}).
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Replacement entity-keyword affordance lexicon.
        #[arg(long)]
        hints: Option<PathBuf>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Split, segment, classify and infer connectivity in one go.
    Pipeline {
        image: PathBuf,
        /// Also build an index from these records.
        #[arg(long, requires = "embeddings")]
        records: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Check artifact files for schema and cross-reference errors.
    Validate { path: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    Build {
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Only entries with one of these affordances.
        #[arg(long)]
        affordance: Vec<String>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum AffordanceCommand {
    Train {
        /// JSONL of {key?, vector, labels}.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        momentum: Option<f64>,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

/// Raised when `validate` finds problems; maps to exit code 1.
#[derive(Debug)]
pub struct ValidationFailed(pub usize);

impl fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s) found", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

/// 1 for domain failures (generation, placement, training divergence,
/// validation violations), 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<pixtile_core::Error>() {
            return if e.is_domain() { 1 } else { 2 };
        }
        if cause.is::<ValidationFailed>() {
            return 1;
        }
    }
    2
}

pub(crate) fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let out = cli.out.clone();
    match cli.command {
        Command::Split { image, tile_size, pad, pad_color, upscale } => {
            analysis::split(&cfg, out, image, tile_size, pad, &pad_color, upscale)
        }
        Command::Adjacency(grid) => analysis::adjacency(cfg, out, grid),
        Command::Segment { grid, overrides } => analysis::segment(cfg, out, grid, overrides),
        Command::Connectivity { grid, segments } => analysis::connectivity(cfg, out, grid, segments),
        Command::EvalConnectivity { pred, truth } => analysis::eval_connectivity(out, pred, truth),
        Command::Index(cmd) => learn::index(out, cmd),
        Command::MatchCaptions { captions, records, synonyms, threshold, embed } => {
            learn::match_captions(&cfg, out, captions, records, synonyms, threshold, embed)
        }
        Command::Affordance(cmd) => learn::affordance(cfg, out, cmd),
        Command::Terrain { rows, cols } => scene::terrain(&cfg, out, rows, cols),
        Command::Scene { predicates, index, rows, cols, relations, hints, embed } => {
            scene::scene(&cfg, out, scene::SceneInputs { predicates, index, rows, cols, relations, hints, embed })
        }
        Command::Pipeline { image, records, embeddings } => {
            let out = out.unwrap_or_else(|| PathBuf::from("pixtile-out"));
            pipeline::run_pipeline(&cfg, &image, &out, records.zip(embeddings)).map(|_| ())
        }
        Command::Validate { path } => {
            let report = validate::validate_path(&path)?;
            io::emit_json(out.as_deref(), &report)?;
            if report.violations.is_empty() {
                Ok(())
            } else {
                Err(ValidationFailed(report.violations.len()).into())
            }
        }
    }
}
