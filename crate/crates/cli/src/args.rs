use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "shrinker", version, about = "Rotationally symmetric self-shrinker laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the conical end of slope sigma and check its properties.
    End(EndArgs),
    /// Solve a family of ends and overlay them.
    Sweep(SweepArgs),
    /// Integrate one geodesic from an initial state.
    Geodesic(GeodesicArgs),
    /// Scan and refine closed geodesics shot from the r-axis.
    Torus(TorusArgs),
    /// Classify a curve given by initial data or a CSV file.
    Classify(ClassifyArgs),
    /// Solve the linearized equation at the plane.
    Linearized(LinearizedArgs),
    /// Re-run a manifest and compare checksums.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Hypersurface dimension (alpha = n - 1).
    #[arg(long, conflicts_with = "alpha")]
    pub n: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    /// key=value file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write a run manifest with output checksums.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EndArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Also run the Picard construction and report its agreement.
    #[arg(long)]
    pub picard: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated slopes.
    #[arg(long, allow_hyphen_values = true)]
    pub sigmas: String,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Directory for one CSV per slope.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Initial state "x,r,theta".
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
    #[arg(long)]
    pub length: Option<f64>,
    /// Half-width of the square window.
    #[arg(long)]
    pub window: Option<f64>,
    /// Stop at the axis instead of continuing into r < 0.
    #[arg(long)]
    pub stop_at_axis: bool,
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Scan "lo:hi:intervals" of starting radii.
    #[arg(long, default_value = "0.2:2.0:180")]
    pub scan: String,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Initial state "x,r,theta".
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    pub init: Option<String>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
    /// Curve CSV with at least the columns s, x, r, theta.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinearizedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Skip the comparison with ends of small inverse slope.
    #[arg(long)]
    pub no_sigma_limit: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the outputs here instead of their recorded paths.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
