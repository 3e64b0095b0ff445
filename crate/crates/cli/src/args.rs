use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "cpc", version, about = "Classification-based independence testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test independence of two column blocks.
    Test(TestArgs),
    /// Run an experiment described by a key = value config file.
    Simulate(SimulateArgs),
    /// Null calibration of the standardized statistic.
    Calibrate(CalibrateArgs),
    /// Wall-clock timing over an (n, d) grid.
    Bench(BenchArgs),
    /// Run the oracle suite.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cpc,
    Dcor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Logistic,
    Mlp,
    Quadratic,
}

impl ClassifierArg {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierArg::Logistic => "logistic",
            ClassifierArg::Mlp => "mlp",
            ClassifierArg::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    Identity,
    CrossProducts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Classifier hyperparameters; unset flags keep the classifier's defaults.
#[derive(Debug, Clone, Args)]
pub struct ClassifierArgs {
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierArg>,
    /// L1 penalty (logistic, quadratic).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Feature map for the logistic classifier.
    #[arg(long, value_enum)]
    pub features: Option<FeaturesArg>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Hidden width of the MLP.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub l1_penalty: Option<f64>,
    #[arg(long)]
    pub dropout_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    pub step: Option<f64>,
    /// Basis subset size (quadratic).
    #[arg(long)]
    pub s1: Option<usize>,
    /// Basis functions per subset (quadratic).
    #[arg(long)]
    pub k_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Headed CSV holding both blocks.
    #[arg(long, conflicts_with_all = ["sparse_x", "sparse_y"])]
    pub csv: Option<PathBuf>,
    /// Comma-separated x columns.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Comma-separated y columns.
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<String>,
    /// Sparse triplet file for the x block.
    #[arg(long)]
    pub sparse_x: Option<PathBuf>,
    /// Sparse triplet file for the y block.
    #[arg(long)]
    pub sparse_y: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cpc")]
    pub method: MethodArg,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Permutation replicates for dcor.
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Skip per-column standardization of dense inputs.
    #[arg(long)]
    pub no_standardize: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for tables and the manifest.
    #[arg(long, default_value = "cpc-out")]
    pub out: PathBuf,
    /// Overrides the file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d1: usize,
    #[arg(long, default_value_t = 2)]
    pub d2: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Standardize each simulated sample before testing.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "cpc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Grid axes such as `n=1000,2000 d=100`.
    #[arg(long, num_args = 1.., required = true)]
    pub grid: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cpc,dcor")]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "cpc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Reduced instance counts.
    #[arg(long)]
    pub fast: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}
