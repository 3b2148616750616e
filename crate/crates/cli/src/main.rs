//! `eosynth`: ontology validation, dataset generation, evaluation, anchor
//! scales and template fixtures from the command line.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable naming the default template store root.
pub const TEMPLATES_ENV: &str = "EOSYNTH_TEMPLATES";

#[derive(Parser, Debug)]
#[command(name = "eosynth", version, about = "Synthetic Earth-observation training data and detection evaluation")]
pub struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check an ontology document and print its diagnostics.
    ValidateOntology {
        /// Ontology XML; the shipped wind-farm ontology when omitted.
        path: Option<PathBuf>,
    },
    /// Build a dataset from a recipe.
    Generate(GenerateArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Print anchor box scale factors.
    Anchors(AnchorArgs),
    /// Write a synthetic template store.
    MakeFixtures(FixtureArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Builtin recipe name or path to a recipe JSON file.
    #[arg(long)]
    pub recipe: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ontology XML; the shipped wind-farm ontology when omitted.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Override the recipe's number of examples.
    #[arg(long)]
    pub total: Option<usize>,
    /// Override the recipe seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Template store root.
    #[arg(long, env = TEMPLATES_ENV)]
    pub templates: Option<PathBuf>,
    /// GeoJSON land/coast polygons replacing the procedural coastline.
    #[arg(long)]
    pub coastline: Option<PathBuf>,
    /// Scene side in meters; the ontology default when omitted.
    #[arg(long)]
    pub scene_size: Option<f64>,
    /// Pixel size in meters; the ontology default when omitted.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Rescale exported images to this many pixels per side.
    #[arg(long)]
    pub export_size: Option<usize>,
    /// Also write the composition geometry of every example as GeoJSON.
    #[arg(long)]
    pub debug_geojson: bool,
    /// Resolve the recipe and print class counts without generating.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NmsMode {
    /// Score filter at the threshold, then IoU suppression.
    Score,
    /// No score filter; suppression at IoU 0.8.
    Overlap,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Predictions GeoJSON with `score` properties.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Ground-truth GeoJSON with farm polygons and turbine points.
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Directory for report.json, report.txt and merged.geojson.
    #[arg(long)]
    pub out: PathBuf,
    /// Preset for the two NMS thresholds; explicit flags win.
    #[arg(long, value_enum, default_value_t = NmsMode::Score)]
    pub nms_mode: NmsMode,
    #[arg(long)]
    pub score_threshold: Option<f64>,
    #[arg(long)]
    pub nms_iou: Option<f64>,
    #[arg(long, default_value_t = eosynth_eval::DEFAULT_MERGE_IOU)]
    pub merge_iou: f64,
    #[arg(long, default_value_t = eosynth_eval::DEFAULT_MATCH_IOU)]
    pub match_iou: f64,
}

#[derive(Args, Debug)]
pub struct AnchorArgs {
    /// Target sizes in pixels, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "from_ontology")]
    pub sizes: Vec<f64>,
    /// Derive target sizes from the farm extents of an ontology; without a
    /// path the shipped one is used.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    pub from_ontology: Option<String>,
    /// Pixel size in meters for ontology-derived sizes.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Ontology-derived sizes are rounded up to a multiple of this.
    #[arg(long, default_value_t = 128.0)]
    pub granularity: f64,
    #[arg(long, default_value_t = 1024.0)]
    pub model_size: f64,
    #[arg(long, default_value_t = 2048.0)]
    pub image_size: f64,
    #[arg(long, default_value_t = 16.0)]
    pub stride: f64,
    /// Side of the scale-one anchor box in pixels.
    #[arg(long, default_value_t = 4.0)]
    pub anchor: f64,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    /// Template store root to create.
    #[arg(long, env = TEMPLATES_ENV)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2560)]
    pub tile_px: usize,
    #[arg(long, default_value_t = 10.0)]
    pub pixel_size: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Tiles per class (sea, coast-mix, land).
    #[arg(long, default_value_t = 2)]
    pub tiles: usize,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Domain(String),
    /// Exit 2.
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            if cli.json {
                eprintln!("{}", serde_json::json!({"error": f.message(), "exit_code": f.code()}));
            }
            ExitCode::from(f.code())
        }
    }
}
