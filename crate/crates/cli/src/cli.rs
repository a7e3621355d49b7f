//! Command-line surface. Lengths accept m/cm/mm/um suffixes; bare numbers are meters.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bos_core::metrics::DbConvention;
use bos_core::patterns::PatternKind;
use bos_core::reconstruct::Subpixel;
use bos_core::render::Colormap;

#[derive(Debug, Parser)]
#[command(name = "bos", version, about = "Background-oriented schlieren toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a background pattern PNG.
    Pattern(PatternArgs),
    /// Synthesize reference/distorted frames and ground truth for a plume.
    Simulate(SimulateArgs),
    /// Estimate displacement (or frame difference) from an image pair.
    Reconstruct(ReconstructArgs),
    /// Score fields and result maps; JSON on stdout.
    Metrics {
        #[command(subcommand)]
        which: MetricsCommand,
    },
    /// Visualize fields.
    Render {
        #[command(subcommand)]
        which: RenderCommand,
    },
    /// Full pipeline for all three pattern kinds with a summary report.
    Roundtrip(RoundtripArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Squares,
    Dots,
    Gray,
}

impl From<KindArg> for PatternKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Squares => PatternKind::RandomSquares,
            KindArg::Dots => PatternKind::RandomDots,
            KindArg::Gray => PatternKind::RandomGray,
        }
    }
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    #[arg(long, value_enum, default_value = "squares")]
    pub kind: KindArg,
    /// Width, pixels.
    #[arg(long, default_value_t = 1920)]
    pub width: usize,
    /// Height, pixels.
    #[arg(long, default_value_t = 1080)]
    pub height: usize,
    /// Cell side, pixels.
    #[arg(long, default_value_t = 8)]
    pub cell: usize,
    /// Probability that a cell is dark, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub fill: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Geometry JSON; enables the 3-5 px imaged-feature check.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Output PNG (or .pgm).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Use this image as the undistorted background instead of a generated pattern.
    #[arg(long)]
    pub background: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "squares")]
    pub kind: KindArg,
    /// Frame width, pixels.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Frame height, pixels.
    #[arg(long, default_value_t = 384)]
    pub height: usize,
    /// Pattern cell, print pixels.
    #[arg(long, default_value_t = 4)]
    pub cell: usize,
    #[arg(long, default_value_t = 0.5)]
    pub fill: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sensor pixels per print pixel; 1 images the pattern pixel for pixel.
    #[arg(long, default_value_t = 1.0)]
    pub print_scale: f64,
    /// Geometry JSON (overrides the geometry flags).
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Camera to schlieren object distance.
    #[arg(long, default_value = "47cm", value_parser = crate::units::parse_length)]
    pub d1: f64,
    /// Schlieren object to background distance.
    #[arg(long, default_value = "35cm", value_parser = crate::units::parse_length)]
    pub d2: f64,
    /// Lens focal length.
    #[arg(long, default_value = "4.73mm", value_parser = crate::units::parse_length)]
    pub focal: f64,
    /// Sensor pixel pitch.
    #[arg(long, default_value = "1.6um", value_parser = crate::units::parse_length)]
    pub pixel_pitch: f64,
    /// Background-plane length per image pixel [default: A4 width / frame width].
    #[arg(long, value_parser = crate::units::parse_length)]
    pub bg_scale: Option<f64>,
    /// Line-of-sight thickness of the refractive object.
    #[arg(long, default_value = "5cm", value_parser = crate::units::parse_length)]
    pub thickness: f64,
    /// Plume center x, pixels [default: frame center].
    #[arg(long)]
    pub plume_x: Option<f64>,
    /// Plume center y, pixels [default: frame center].
    #[arg(long)]
    pub plume_y: Option<f64>,
    /// Plume Gaussian width, pixels [default: min(width, height) / 16].
    #[arg(long)]
    pub plume_sigma: Option<f64>,
    /// Refractive-index deficit at the plume axis (dimensionless); overrides --peak-px.
    #[arg(long)]
    pub delta_n: Option<f64>,
    /// Largest ground-truth displacement, pixels.
    #[arg(long, default_value_t = 2.0)]
    pub peak_px: f64,
    /// Additive Gaussian noise std, intensity units in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Keep frames unquantized in memory (files are 8-bit regardless).
    #[arg(long)]
    pub no_quantize: bool,
    /// Number of pairs; delta_n ramps linearly to its final value over the frames.
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Method {
    Cfs,
    Cc,
    Hs,
    Farneback,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cfs, Method::Cc, Method::Hs, Method::Farneback];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cfs => "cfs",
            Method::Cc => "cc",
            Method::Hs => "hs",
            Method::Farneback => "farneback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubpixelArg {
    Gaussian3,
    Parabolic,
    None,
}

impl From<SubpixelArg> for Subpixel {
    fn from(s: SubpixelArg) -> Self {
        match s {
            SubpixelArg::Gaussian3 => Subpixel::Gaussian3,
            SubpixelArg::Parabolic => Subpixel::Parabolic,
            SubpixelArg::None => Subpixel::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PostFilterArg {
    None,
    Median3,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Reference (undisturbed) frame.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Target (disturbed) frame.
    #[arg(long)]
    pub target: PathBuf,
    /// Output: PNG for cfs, .flo otherwise.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: MethodParams,
}

#[derive(Debug, Clone, Args)]
pub struct MethodParams {
    /// CFS gain (>= 1).
    #[arg(long, default_value_t = 1.0)]
    pub gain: f32,
    /// CC interrogation window side, pixels.
    #[arg(long, default_value_t = 32)]
    pub window: usize,
    /// CC search range per axis, pixels.
    #[arg(long, default_value_t = 10)]
    pub search: usize,
    /// CC grid step, pixels.
    #[arg(long, default_value_t = 16)]
    pub step: usize,
    #[arg(long, value_enum, default_value = "gaussian3")]
    pub subpixel: SubpixelArg,
    /// CC windows with a lower correlation peak are invalid.
    #[arg(long, default_value_t = 0.3)]
    pub min_peak: f64,
    /// Optical-flow pyramid levels.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Optical-flow inter-level size factor, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    /// Solver iterations per level [default: 100 for hs, 3 for farneback].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Horn-Schunck smoothness weight, intensity units.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Farneback polynomial neighborhood half-size, pixels.
    #[arg(long, default_value_t = 5)]
    pub poly_n: usize,
    /// Farneback applicability width, pixels.
    #[arg(long, default_value_t = 1.1)]
    pub poly_sigma: f64,
    /// Farneback averaging window, pixels.
    #[arg(long, default_value_t = 15)]
    pub fb_window: usize,
    #[arg(long, value_enum, default_value = "none")]
    pub postfilter: PostFilterArg,
    /// Gaussian post-filter width, grid points.
    #[arg(long, default_value_t = 1.0)]
    pub postfilter_sigma: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DbArg {
    Amplitude,
    Power,
}

impl From<DbArg> for DbConvention {
    fn from(d: DbArg) -> Self {
        match d {
            DbArg::Amplitude => DbConvention::Amplitude,
            DbArg::Power => DbConvention::Power,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Endpoint error of an estimate against ground truth, pixels.
    Epe {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Exclude this many pixels at each edge.
        #[arg(long, default_value_t = bos_core::metrics::DEFAULT_BORDER)]
        border: usize,
        /// PNG mask (nonzero = evaluated); overrides --border.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (mean(sample) - mean(bg)) / std(bg) of an image or a field's magnitude.
    Snr {
        #[arg(long, conflicts_with = "field", required_unless_present = "field")]
        image: Option<PathBuf>,
        #[arg(long)]
        field: Option<PathBuf>,
        /// Sample region x,y,w,h in pixels.
        #[arg(long, value_parser = crate::units::parse_rect, required_unless_present = "sample_mask")]
        sample_rect: Option<[usize; 4]>,
        #[arg(long, conflicts_with = "sample_rect")]
        sample_mask: Option<PathBuf>,
        /// Background region x,y,w,h in pixels.
        #[arg(long, value_parser = crate::units::parse_rect, required_unless_present = "bg_mask")]
        bg_rect: Option<[usize; 4]>,
        #[arg(long, conflicts_with = "bg_rect")]
        bg_mask: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "amplitude")]
        db: DbArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Magnitude min/mean/max of a field, pixels.
    Stats {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColormapArg {
    Jet,
    Gray,
}

impl From<ColormapArg> for Colormap {
    fn from(c: ColormapArg) -> Self {
        match c {
            ColormapArg::Jet => Colormap::Jet,
            ColormapArg::Gray => Colormap::Grayscale,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum RenderCommand {
    /// Color-coded displacement magnitude, one pixel per grid point.
    Magnitude {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "jet")]
        colormap: ColormapArg,
        /// Magnitude mapped to the top of the colormap, pixels [default: field maximum].
        #[arg(long)]
        max: Option<f64>,
    },
    /// Arrows over a base image.
    Vectors {
        #[arg(long)]
        field: PathBuf,
        /// Base image [default: black canvas covering the field].
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Grid points between arrows.
        #[arg(long, default_value_t = 16)]
        stride: usize,
        /// Display pixels per displacement pixel.
        #[arg(long, default_value_t = 8.0)]
        scale: f32,
    },
    /// Equal-height panels with white gutters; labels go to `<out>.labels.txt`.
    SideBySide {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated panel labels [default: file stems].
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Methods to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Frame width, pixels.
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Frame height, pixels.
    #[arg(long, default_value_t = 384)]
    pub height: usize,
    /// Largest ground-truth displacement, pixels.
    #[arg(long, default_value_t = 2.0)]
    pub peak_px: f64,
    /// Plume Gaussian width, pixels.
    #[arg(long, default_value_t = 24.0)]
    pub plume_sigma: f64,
    /// Noise std, intensity units.
    #[arg(long, default_value_t = 0.005)]
    pub noise: f64,
    /// Pattern cell on the print, print pixels.
    #[arg(long, default_value_t = 8)]
    pub cell: usize,
    /// Sensor pixels per print pixel.
    #[arg(long, default_value_t = 0.5)]
    pub print_scale: f64,
}
