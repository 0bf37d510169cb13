use std::path::PathBuf;

use annulus_scan::params::ConfigEcho;
use annulus_scan::{ExtractConfig, Interpolation, RansacParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "annulus-scan",
    version,
    about = "Extract, linearise and invert convex ultrasound planes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the annulus-sector geometry of one or more images.
    Extract(ExtractArgs),
    /// Resample the plane along its scan lines into a rectangular image.
    Linearise(LineariseArgs),
    /// Project a linearised image back to convex geometry.
    Invert(InvertArgs),
    /// Score predicted key points and angles against annotations.
    Evaluate(EvaluateArgs),
    /// Render synthetic planes with exact ground truth.
    Synth(SynthArgs),
    /// Draw the detected geometry on top of an image.
    Overlay(OverlayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// RANSAC random seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// RANSAC inlier distance, pixels.
    #[arg(long, default_value_t = 2.0)]
    pub ransac_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub ransac_iters: usize,
    #[arg(long, value_enum, default_value_t = InterpArg::Spline)]
    pub interp: InterpArg,
    /// Divide the number of scan lines and samples per line by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub downsample: f64,
    /// Apply a 3x3 morphological closing to the plane mask.
    #[arg(long)]
    pub closing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    Spline,
    Bilinear,
}

impl From<InterpArg> for Interpolation {
    fn from(value: InterpArg) -> Self {
        match value {
            InterpArg::Spline => Interpolation::Spline,
            InterpArg::Bilinear => Interpolation::Bilinear,
        }
    }
}

/// Validated pipeline settings.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub extract: ExtractConfig,
    pub interp: Interpolation,
    pub downsample: f64,
}

impl RunConfig {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho::new(&self.extract.ransac, self.interp, self.extract.closing)
    }
}

impl PipelineArgs {
    pub fn validate(&self) -> Result<RunConfig, String> {
        if !(self.ransac_threshold.is_finite() && self.ransac_threshold > 0.0) {
            return Err(format!(
                "--ransac-threshold must be positive, got {}",
                self.ransac_threshold
            ));
        }
        if self.ransac_iters == 0 {
            return Err("--ransac-iters must be at least 1".into());
        }
        if !(self.downsample.is_finite() && self.downsample > 0.0) {
            return Err(format!("--downsample must be positive, got {}", self.downsample));
        }
        Ok(RunConfig {
            extract: ExtractConfig {
                ransac: RansacParams {
                    inlier_threshold: self.ransac_threshold,
                    iterations: self.ransac_iters,
                    seed: self.seed,
                },
                closing: self.closing,
            },
            interp: self.interp.into(),
            downsample: self.downsample,
        })
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Input images (PNG, JPEG or BMP).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for the per-image JSON files and summary.json.
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write the plane mask as `<image>.mask.png`.
    #[arg(long)]
    pub save_mask: bool,
    /// Also write the column accumulation profile as `<image>.symmetry.png`.
    #[arg(long)]
    pub save_symmetry_plot: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct LineariseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sector parameters from `extract`; estimated from the image when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Sample the whole image instead of zero-filling outside the plane mask.
    #[arg(long)]
    pub no_mask: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Original convex image; enables the round-trip report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Where to write the round-trip report (stdout when omitted).
    #[arg(long, requires = "reference")]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions: a parameter file, a JSON list, or a directory of parameter files.
    #[arg(long)]
    pub pred: PathBuf,
    /// Annotations in the same forms as `--pred`.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Two polygons (JSON lists of {row, col}) for circularity and Procrustes.
    #[arg(long, num_args = 2, value_names = ["CONVEX", "LINEAR"])]
    pub polygons: Option<Vec<PathBuf>>,
    /// Two images of equal size for MS-SSIM.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub ssim: Option<Vec<PathBuf>>,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub mode: Option<SynthMode>,
    /// Sector specification (JSON).
    #[arg(long, required = true)]
    pub spec: Option<PathBuf>,
    #[arg(long, required = true)]
    pub out: Option<PathBuf>,
    /// Ground truth parameter file.
    #[arg(long, required = true)]
    pub truth: Option<PathBuf>,
    /// Optional corruption specification (JSON).
    #[arg(long)]
    pub corruption: Option<PathBuf>,
    /// Seed for the corruption noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum SynthMode {
    /// Emit a standard acceptance grid.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridSet {
    Clean,
    Corrupted,
    All,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GridSet::Clean)]
    pub set: GridSet,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}
