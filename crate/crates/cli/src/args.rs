//! Command line grammar.

use std::path::PathBuf;

use badbands::detector::default_m_grid;
use badbands::error::{Error, Result};
use badbands::mf::Convention;
use badbands::synth::BandRange;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when none is given, so bare invocations reproduce.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "badbands",
    version,
    about = "Finds noise-dominated bands in hyperspectral cubes from matched-filter weight statistics"
)]
pub struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    /// Results do not depend on this setting.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect bad bands in an ENVI cube and write reports.
    Detect(DetectArgs),
    /// Map selected-band counts over a grid of target counts and thresholds.
    Sensitivity(SensitivityArgs),
    /// Generate a synthetic cube with known-bad bands.
    Simulate(SimulateArgs),
    /// Export bands of a cube as greyscale PGM images.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Path to the ENVI header (.hdr) of the input cube.
    #[arg(long)]
    pub input: PathBuf,

    /// Selection threshold: bands with MAV at or below it are reported bad.
    #[arg(long)]
    pub thres: f64,

    /// Number of randomly sampled target pixels.
    #[arg(long, default_value_t = 1000)]
    pub targets: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Band significance convention: norm-weighted or paper-literal.
    #[arg(long, default_value = "norm-weighted")]
    pub convention: Convention,

    /// Comma-separated subset of json,csv,svg.
    #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
    pub formats: Vec<Format>,

    /// Output directory for report files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Log-scale the y axis of the MAV plot.
    #[arg(long)]
    pub log_y: bool,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Path to the ENVI header (.hdr) of the input cube.
    #[arg(long)]
    pub input: PathBuf,

    /// Comma-separated list of thresholds to sweep.
    #[arg(long = "thres-list", value_delimiter = ',', required = true)]
    pub thres_list: Vec<f64>,

    /// Target-count grid: "default" or a comma-separated list of counts.
    #[arg(long, default_value = "default")]
    pub grid: String,

    /// Detection runs per (targets, threshold) cell.
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Band significance convention: norm-weighted or paper-literal.
    #[arg(long, default_value = "norm-weighted")]
    pub convention: Convention,

    /// Comma-separated subset of json,csv,svg.
    #[arg(long, value_delimiter = ',', default_value = "csv,svg")]
    pub formats: Vec<Format>,

    /// Output directory for sweep files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Cube recipe as a JSON file.
    #[arg(long, required_unless_present = "figure1", conflicts_with = "figure1")]
    pub spec: Option<PathBuf>,

    /// Generate the built-in 51x51x3 bright-square scene instead.
    #[arg(long)]
    pub figure1: bool,

    /// Override the recipe seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory for the cube and truth files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Base name of the generated .hdr/.dat pair.
    #[arg(long, default_value = "cube")]
    pub name: String,

    /// Run detection on the generated cube and score it against truth.
    #[arg(long)]
    pub score: bool,

    /// Threshold for --score; defaults to the gap heuristic.
    #[arg(long, requires = "score")]
    pub thres: Option<f64>,

    /// Number of sampled targets for --score.
    #[arg(long, default_value_t = 1000)]
    pub targets: usize,

    /// Band significance convention for --score.
    #[arg(long, default_value = "norm-weighted")]
    pub convention: Convention,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Path to the ENVI header (.hdr) of the input cube.
    #[arg(long)]
    pub input: PathBuf,

    /// Bands to export, as comma-separated indices or ranges: 1,5,20-25.
    #[arg(long)]
    pub bands: String,

    /// Output directory for the PGM images.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Expands a band list argument into sorted, deduplicated 1-based indices.
pub fn parse_band_list(text: &str) -> Result<Vec<usize>> {
    let mut bands = Vec::new();
    for item in text.split(',') {
        let range: BandRange = item.trim().parse()?;
        bands.extend(range.lo..=range.hi);
    }
    if bands.is_empty() {
        return Err(Error::InvalidArgument("empty band list".into()));
    }
    bands.sort_unstable();
    bands.dedup();
    Ok(bands)
}

/// Resolves the --grid argument to a list of target counts.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    if text.trim() == "default" {
        return Ok(default_m_grid());
    }
    text.split(',')
        .map(|item| {
            let v: usize = item.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("'{}' is not a valid target count", item.trim()))
            })?;
            if v == 0 {
                return Err(Error::InvalidArgument(
                    "target counts must be at least 1".into(),
                ));
            }
            Ok(v)
        })
        .collect()
}
