use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use ufo_core::benchmarks::BenchmarkId;
use ufo_core::model::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "ufo", version, about = "Train and evaluate UFO neural operators on PDE benchmarks")]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset file and its manifest.
    Generate(GenerateArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Train UFO with and without the adaptive phase on the same data.
    Ablate(AblateArgs),
    /// Train and evaluate once per protocol seed.
    Seeds(SeedsArgs),
    /// Burgers resolution study for a trained checkpoint.
    Resolution(ResolutionArgs),
    /// Finite-difference gradient check on toy models.
    Gradcheck(GradcheckArgs),
    /// Print trainable parameter counts of the default models.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Bench {
    Stepheat,
    DeltaHelmholtz,
    Burgers,
    GrfHelmholtz,
}

impl From<Bench> for BenchmarkId {
    fn from(b: Bench) -> Self {
        match b {
            Bench::Stepheat => BenchmarkId::StepHeat,
            Bench::DeltaHelmholtz => BenchmarkId::DeltaHelmholtz,
            Bench::Burgers => BenchmarkId::Burgers,
            Bench::GrfHelmholtz => BenchmarkId::GrfHelmholtz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Kind {
    Ufo,
    UfoAblated,
    Deeponet,
}

impl From<Kind> for ModelKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ufo => ModelKind::Ufo,
            Kind::UfoAblated => ModelKind::UfoAblated,
            Kind::Deeponet => ModelKind::Deeponet,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Random,
    Regular,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub benchmark: Bench,
    /// Dataset file to write; the manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of samples drawn uniformly from the parameter range.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub s_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub delta_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub lambda_range: Option<Vec<f64>>,
    /// Explicit parameter values instead of a random draw.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["n", "s_range", "delta_range", "lambda_range"])]
    pub values: Option<Vec<f64>>,
    /// The standard evaluation scenarios of the benchmark.
    #[arg(long, conflicts_with_all = ["n", "values"])]
    pub test: bool,
    /// Points per side of the Burgers grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// δ-Helmholtz input layout.
    #[arg(long, value_enum)]
    pub layout: Option<Layout>,
    /// Input observation count (StepHeat, δ-Helmholtz).
    #[arg(long)]
    pub n_input: Option<usize>,
    /// GRF-Helmholtz wavenumber.
    #[arg(long)]
    pub k: Option<f64>,
    /// GRF-Helmholtz correlation lengths.
    #[arg(long, value_delimiter = ',')]
    pub ells: Option<Vec<f64>>,
    #[arg(long)]
    pub per_ell: Option<usize>,
}

/// Training hyperparameters; unset values come from the benchmark recipe.
#[derive(Clone, Debug, Default, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Keep the learning rate constant instead of cosine decay.
    #[arg(long)]
    pub constant_lr: bool,
    /// Query points per minibatch; 0 uses all of them.
    #[arg(long)]
    pub query_subset: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "ufo")]
    pub model: Kind,
    /// Checkpoint to write; the loss history and manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Training dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluation dataset.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct SeedsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value = "ufo")]
    pub model: Kind,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Defaults to the five protocol seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ResolutionMode {
    /// Coarsen the input observations, targets fixed.
    Input,
    /// Refine the query grid, inputs fixed.
    Output,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ResolutionMode,
    /// Points per side of each grid in the sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grids: Vec<usize>,
    #[arg(long, default_value_t = 5.8, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CheckKind {
    Ufo,
    UfoAblated,
    Deeponet,
    All,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub model: CheckKind,
    #[arg(long, default_value_t = 5)]
    pub n_input: usize,
    #[arg(long, default_value_t = 3)]
    pub n_query: usize,
    #[arg(long, default_value_t = 4)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Failure threshold on the maximum relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Negative control: check a loss whose backward rule is wrong.
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
