use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use splatflow::{BoundaryMode, ExpMode, GccConfig, RadiusLaw, RenderConfig};

#[derive(Debug, Parser)]
#[command(name = "splatflow", version, about = "Tile-wise and Gaussian-wise 3DGS dataflow simulator")]
pub struct Cli {
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one camera with one pipeline
    Render(RenderArgs),
    /// Render with both pipelines and compare images and traffic
    Compare(CompareArgs),
    /// Footprint coverage and per-Gaussian load statistics
    Stats(StatsArgs),
    /// Roofline time estimates over a list of bandwidths
    Sweep(SweepArgs),
    /// Write a seeded synthetic scene
    GenScene(GenSceneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    Tile,
    Gcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum LawArg {
    ThreeSigma,
    OmegaSigma,
}

impl From<LawArg> for RadiusLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::ThreeSigma => RadiusLaw::ThreeSigma,
            LawArg::OmegaSigma => RadiusLaw::OmegaSigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpArg {
    Exact,
    Lut,
}

impl From<ExpArg> for ExpMode {
    fn from(e: ExpArg) -> Self {
        match e {
            ExpArg::Exact => ExpMode::Exact,
            ExpArg::Lut => ExpMode::Lut,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum BoundaryArg {
    PixelBfs,
    BlockOctant,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::PixelBfs => BoundaryMode::PixelBfs,
            BoundaryArg::BlockOctant => BoundaryMode::BlockOctant,
        }
    }
}

/// Scene inputs shared by the rendering commands.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Binary little-endian PLY model
    #[arg(long)]
    pub model: PathBuf,
    /// JSON camera file
    #[arg(long)]
    pub cameras: PathBuf,
    /// Camera to use from the camera file
    #[arg(long, default_value_t = 0)]
    pub camera_index: usize,
    /// JSON report path (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Renderer settings. Radius law defaults to three_sigma for the tile
/// pipeline and omega_sigma for the Gaussian-wise pipeline.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 16)]
    pub tile_size: u32,
    /// Footprint radius law for both pipelines [default: per pipeline]
    #[arg(long, value_enum)]
    pub radius_law: Option<LawArg>,
    #[arg(long, value_enum, default_value_t = ExpArg::Exact)]
    pub exp_mode: ExpArg,
    #[arg(long, default_value_t = 1.0 / 255.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub term_threshold: f64,
    #[arg(long, default_value_t = 0.3)]
    pub dilation: f64,
    /// Background color as r,g,b
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 0.0])]
    pub background: Vec<f64>,
    /// Maximum Gaussians per depth group
    #[arg(long, default_value_t = 256)]
    pub group_cap: u32,
    #[arg(long, default_value_t = 0.2)]
    pub depth_threshold: f64,
    #[arg(long, default_value_t = 1024)]
    pub bin_count: u32,
    #[arg(long, default_value_t = 8)]
    pub block_size: u32,
    #[arg(long, value_enum, default_value_t = BoundaryArg::BlockOctant)]
    pub boundary_mode: BoundaryArg,
    /// Compatibility mode sub-view size (off when omitted)
    #[arg(long, num_args = 0..=1, default_missing_value = "128")]
    pub cmode: Option<u32>,
}

impl ConfigArgs {
    fn background(&self) -> [f64; 3] {
        [self.background[0], self.background[1], self.background[2]]
    }

    pub fn tile(&self) -> RenderConfig {
        RenderConfig {
            tile_size: self.tile_size,
            radius_law: self.radius_law.map_or(RenderConfig::default().radius_law, Into::into),
            exp_mode: self.exp_mode.into(),
            alpha_min: self.alpha_min,
            term_threshold: self.term_threshold,
            dilation: self.dilation,
            background: self.background(),
        }
    }

    pub fn gcc(&self) -> GccConfig {
        GccConfig {
            group_cap: self.group_cap,
            depth_threshold: self.depth_threshold,
            bin_count: self.bin_count,
            block_size: self.block_size,
            boundary_mode: self.boundary_mode.into(),
            radius_law: self.radius_law.map_or(GccConfig::default().radius_law, Into::into),
            exp_mode: self.exp_mode.into(),
            alpha_min: self.alpha_min,
            term_threshold: self.term_threshold,
            dilation: self.dilation,
            cmode: self.cmode,
            background: self.background(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_enum)]
    pub pipeline: Pipeline,
    #[command(flatten)]
    pub input: InputArgs,
    /// Output image (.png, otherwise binary PPM)
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory for the two rendered images
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Per-Gaussian coverage CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Bandwidths in bytes/s, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub bandwidths: Vec<f64>,
    /// Compute rate in operations/s
    #[arg(long, default_value_t = 1e11)]
    pub compute_rate: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct GenSceneArgs {
    /// Output PLY model
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a camera file holding the generating camera
    #[arg(long)]
    pub cameras_out: Option<PathBuf>,
    /// JSON manifest path (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Number of Gaussians (behind an occluder wall when --occluder is set)
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub width: u32,
    #[arg(long, default_value_t = 256)]
    pub height: u32,
    /// Focal length in pixels
    #[arg(long, default_value_t = 256.0)]
    pub focal: f64,
    #[arg(long, default_value_t = 2.0)]
    pub depth_min: f64,
    #[arg(long, default_value_t = 12.0)]
    pub depth_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub opacity_min: f64,
    #[arg(long, default_value_t = 0.99)]
    pub opacity_max: f64,
    #[arg(long, default_value_t = 0.005)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 0.05)]
    pub scale_max: f64,
    /// Prepend an opaque wall at the near end of the depth range
    #[arg(long)]
    pub occluder: bool,
}
