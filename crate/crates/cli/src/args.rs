use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "se2ot", version, about = "Optimal transport experiments on the roto-translation group SE(2)")]
pub struct Cli {
    /// Cap on worker threads for the group convolutions; 1 gives
    /// deterministic single-threaded runs.
    #[arg(long, global = true, env = "SE2OT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance map from a source element to every lattice site.
    Distance(DistanceArgs),
    /// Entropic transport cost between two fields.
    Sinkhorn(SinkhornArgs),
    /// Displacement interpolation between two fields.
    Interpolate(InterpolateArgs),
    /// Weighted barycenter of several fields.
    Barycenter(BarycenterArgs),
    /// Entropic JKO steps of the porous-medium energy.
    GradientFlow(GradientFlowArgs),
    /// Lift an image to positive and negative orientation-score measures.
    Lift(LiftArgs),
    /// Recombine a lifted pair into an image.
    Project(ProjectArgs),
    /// Lift a CSV orientation field to a measure.
    LiftField(LiftFieldArgs),
    /// Read an orientation field back from a measure.
    ProjectField(ProjectFieldArgs),
    /// Interpolate two images through their orientation scores.
    InterpolateImage(InterpolateImageArgs),
    /// Costs of the rotation coupling and the optimal coupling on the circle.
    Counterexample(CounterexampleArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: usize,
    #[arg(long)]
    pub ntheta: usize,
    /// Spatial window.
    #[arg(long, num_args = 4, value_names = ["X0", "X1", "Y0", "Y1"], allow_negative_numbers = true)]
    pub window: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct MetricArgs {
    /// Metric weights along the local frame.
    #[arg(long, num_args = 3, value_names = ["W1", "W2", "W3"], default_values_t = [1.0, 1.0, 1.0])]
    pub weights: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Entropic regularization.
    #[arg(long)]
    pub eps: f64,
    /// Cost exponent.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    /// L1 marginal tolerance (successive-iterate tolerance for barycenters).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Kernel values below this are dropped from the stencil.
    #[arg(long, default_value_t = 1e-12)]
    pub kernel_cutoff: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Approx {
    #[value(name = "rho_b")]
    RhoB,
    #[value(name = "rho_c")]
    RhoC,
    Dijkstra,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, value_enum, default_value_t = Approx::RhoB)]
    pub approx: Approx,
    /// Neighbor radius of the lattice graph (dijkstra only).
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Source element "x,y,theta"; snapped to the nearest site.
    #[arg(long, allow_hyphen_values = true)]
    pub source: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SinkhornArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Iteration report (key=value lines).
    #[arg(long)]
    pub report: PathBuf,
    /// Report every this many iterations.
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
}

#[derive(Args, Debug)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// Weight of `mu`: t = 1 returns `mu`, t = 0 returns `nu`.
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BarycenterArgs {
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "lambda", required = true)]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradientFlowArgs {
    #[arg(long)]
    pub init: PathBuf,
    /// Porous-medium exponent (> 1).
    #[arg(long)]
    pub m: f64,
    /// JKO time step.
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Writes PREFIX_k.se2f and PREFIX_k.pgm for k = 0..=steps.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct WaveletArgs {
    #[arg(long, default_value_t = 16)]
    pub ntheta: usize,
    #[arg(long, default_value_t = 3)]
    pub spline_order: usize,
    /// Radial cut as a fraction of the Nyquist frequency.
    #[arg(long, default_value_t = 0.8)]
    pub radial_cut: f64,
    /// Odd wavelet support; defaults to the largest odd size up to
    /// min(width, height, 33).
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub wavelets: WaveletArgs,
    #[arg(long)]
    pub out_pos: PathBuf,
    #[arg(long)]
    pub out_neg: PathBuf,
    /// Masses of both components, as key=value lines.
    #[arg(long)]
    pub masses: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    pub pos: PathBuf,
    #[arg(long)]
    pub neg: PathBuf,
    #[arg(long)]
    pub masses: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write plain (P2) instead of binary (P5) PGM.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Args, Debug)]
pub struct LiftFieldArgs {
    /// CSV with header x,y,angle,magnitude.
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectFieldArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sites with spatial mass below this are dropped.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InterpolateImageArgs {
    #[arg(long)]
    pub image_a: PathBuf,
    #[arg(long)]
    pub image_b: PathBuf,
    /// Weight of image A: t = 1 reproduces A, t = 0 reproduces B.
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub wavelets: WaveletArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub epsilon_angle: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
