use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use outerproj::{
    ConstraintKind, ErrorSchedule, LossKind, ProjectionOptions, SolverConfig, StepPolicy,
};
use serde::{Deserialize, Serialize};

pub const OUT_ENV: &str = "OUTERPROJ_OUT";

#[derive(Debug, Parser)]
#[command(name = "outerproj", version, about = "Constrained sparse classification and regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic regulatory-network dataset.
    Synth(SynthArgs),
    /// Fit one model, or a path of models over a grid of bounds.
    Solve(SolveArgs),
    /// Project a single vector onto a constraint set.
    Project(ProjectArgs),
    /// Compare constraints over repeated random train/test splits.
    Eval(EvalArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Solve(_) => "solve",
            Command::Project(_) => "project",
            Command::Eval(_) => "eval",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskArg {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossArg {
    Logistic,
    Matsusita,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Matsusita => LossKind::Matsusita,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintArg {
    L1,
    PairwiseMax,
    PairwiseDiff,
    SignedPairwiseDiff,
}

impl From<ConstraintArg> for ConstraintKind {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::L1 => ConstraintKind::L1,
            ConstraintArg::PairwiseMax => ConstraintKind::PairwiseMax,
            ConstraintArg::PairwiseDiff => ConstraintKind::PairwiseDiff,
            ConstraintArg::SignedPairwiseDiff => ConstraintKind::SignedPairwiseDiff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Reference regressor (1, 2 or 3).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub example: u8,
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub n_reg: usize,
    #[arg(long, default_value_t = 10)]
    pub n_g: usize,
    #[arg(long, default_value_t = 0.7)]
    pub correlation: f64,
    /// Response noise standard deviation.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Classification turns the responses into their signs.
    #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
    pub task: TaskArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Directory holding X.csv, y.csv and optionally graph.tsv / signed_graph.tsv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Design matrix, one sample per row.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Targets, one per line.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Feature graph for the graph constraints.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// The CSV files start with a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
    pub task: TaskArg,
    #[arg(long, value_enum, default_value_t = LossArg::Logistic)]
    pub loss: LossArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Explicit comma-separated bounds, sorted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eta_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    pub eta_min: f64,
    #[arg(long, default_value_t = 500.0)]
    pub eta_max: f64,
    /// Number of geometrically spaced bounds between eta-min and eta-max.
    #[arg(long, default_value_t = 20)]
    pub eta_count: usize,
}

impl GridArgs {
    pub fn resolve(&self) -> anyhow::Result<Vec<f64>> {
        if let Some(grid) = &self.eta_grid {
            anyhow::ensure!(!grid.is_empty(), "empty eta grid");
            return Ok(grid.clone());
        }
        geometric_grid(self.eta_min, self.eta_max, self.eta_count)
    }
}

/// `count` points from `lo` to `hi` with a constant ratio.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> anyhow::Result<Vec<f64>> {
    anyhow::ensure!(lo > 0.0 && hi >= lo, "geometric grid needs 0 < eta-min <= eta-max");
    anyhow::ensure!(count >= 1, "eta-count must be at least 1");
    if count == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo * (ratio * i as f64).exp() })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Step as a multiple of 1/β, inside [0.001, 1.999].
    #[arg(long, default_value_t = 1.0, conflicts_with = "step")]
    pub step_factor: f64,
    /// Fixed step size, used as given.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_outer_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_change_tolerance: f64,
    /// Stop as soon as the iterate has at most this many nonzeros.
    #[arg(long)]
    pub target_l0: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub zero_threshold: f64,
    #[arg(long, default_value_t = 50)]
    pub max_inner_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub feasibility_tolerance: f64,
    #[arg(long)]
    pub distance_tolerance: Option<f64>,
    /// Shrink the inner-loop tolerance as scale/(n+1)^1.1 so projection
    /// errors are summable.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub strict_scale: f64,
    #[arg(long, default_value_t = 10_000)]
    pub strict_max_inner_iters: usize,
}

impl SolverArgs {
    pub fn projection(&self) -> ProjectionOptions {
        ProjectionOptions {
            max_inner_iters: self.max_inner_iters,
            feasibility_tolerance: self.feasibility_tolerance,
            distance_tolerance: self.distance_tolerance,
        }
    }

    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            step_policy: match self.step {
                Some(g) => StepPolicy::Fixed(g),
                None => StepPolicy::ConstantOverBeta(self.step_factor),
            },
            projection: self.projection(),
            max_outer_iters: self.max_outer_iters,
            rel_change_tolerance: self.rel_change_tolerance,
            target_l0: self.target_l0,
            zero_threshold: self.zero_threshold,
            initial_w: None,
            error_schedule: self.strict.then_some(ErrorSchedule {
                scale: self.strict_scale,
                max_inner_iters: self.strict_max_inner_iters,
                ..ErrorSchedule::default()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub constraint: ConstraintArg,
    /// Single bound; without it the grid options apply.
    #[arg(long, conflicts_with = "eta_grid")]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Held-out design matrix for predictive metrics.
    #[arg(long, requires = "test_y")]
    pub test_x: Option<PathBuf>,
    #[arg(long, requires = "test_x")]
    pub test_y: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProjectArgs {
    /// Vector to project, one value per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub constraint: ConstraintArg,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub max_inner_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub feasibility_tolerance: f64,
    #[arg(long)]
    pub distance_tolerance: Option<f64>,
    /// Also write per-iteration distances to projection_trace.csv.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Signed graph for signed-pairwise-diff; defaults to signed_graph.tsv in the data directory.
    #[arg(long)]
    pub signed_graph: Option<PathBuf>,
    /// Constraints to compare.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [ConstraintArg::L1, ConstraintArg::PairwiseMax, ConstraintArg::SignedPairwiseDiff]
    )]
    pub constraints: Vec<ConstraintArg>,
    #[arg(long, default_value_t = 50)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
    /// Write the outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
