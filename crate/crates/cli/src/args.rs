use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsvm_core::{Encoding, Estimator, TranspileMode};

#[derive(Parser, Debug)]
#[command(name = "qsvm", version, about = "Quantum-kernel SVM experiments on a trapped-ion gate set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or inspect datasets
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Compute a Gram (train x train) or cross (test x train) kernel matrix
    Kernel(KernelArgs),
    /// Train an SVM from a Gram matrix written by `kernel --format json`
    Train(TrainArgs),
    /// Classify rows of a cross-kernel with a trained model
    Predict(PredictArgs),
    /// Run the full pipeline and report accuracies and kernel distances
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Lower CX to native gates, optionally optimizing
    Transpile(TranspileArgs),
    /// Mean classical infidelity of graph-kernel circuits per MS count
    Figure3(Figure3Args),
}

#[derive(Subcommand, Debug)]
pub enum DatasetCommand {
    /// Select the pinned digit split and write its manifest
    Digits {
        #[arg(long, default_value = "data/optdigits.tes")]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        class_a: u8,
        #[arg(long, default_value_t = 1)]
        class_b: u8,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a labeled ring-graph dataset
    Graphs {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        train: usize,
        #[arg(long, default_value_t = 10)]
        test: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the spectrum and label of every graph in a dataset file
    Inspect {
        path: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Ry,
    Rycx,
    Amplitude,
    Graph,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Ry => Encoding::Ry,
            EncodingArg::Rycx => Encoding::RyCx,
            EncodingArg::Amplitude => Encoding::Amplitude,
            EncodingArg::Graph => Encoding::Graph,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Nonopt,
    Opt,
}

impl From<ModeArg> for TranspileMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Nonopt => TranspileMode::NonOptimized,
            ModeArg::Opt => TranspileMode::Optimized,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Beta2Arg {
    Corrected,
    Verbatim,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

pub fn parse_shots(s: &str) -> Result<Estimator, String> {
    if s == "exact" {
        return Ok(Estimator::Exact);
    }
    match s.parse::<u64>() {
        Ok(0) => Err("shot count must be at least 1".into()),
        Ok(n) => Ok(Estimator::Shots(n)),
        Err(_) => Err(format!("expected a shot count or `exact`, got `{s}`")),
    }
}

/// Where samples come from.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Optdigits CSV
    #[arg(long, default_value = "data/optdigits.tes")]
    pub data: PathBuf,
    /// Digit split manifest
    #[arg(long, default_value = "data/digits_manifest.json")]
    pub manifest: PathBuf,
    /// Graph dataset JSON (required for `--encoding graph`)
    #[arg(long)]
    pub graphs: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct KernelFlags {
    #[arg(long, value_enum, default_value = "ry")]
    pub encoding: EncodingArg,
    #[arg(long, value_enum, default_value = "nonopt")]
    pub mode: ModeArg,
    /// Shots per kernel entry, or `exact`
    #[arg(long, value_parser = parse_shots, default_value = "exact")]
    pub shots: Estimator,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `off`, `default`, or a JSON noise config file
    #[arg(long, default_value = "off")]
    pub noise: String,
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "corrected")]
    pub beta2: Beta2Arg,
    /// Set square-matrix diagonals to 1 instead of estimating them
    #[arg(long)]
    pub pin_diagonal: bool,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[command(flatten)]
    pub kernel: KernelFlags,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Print the smallest eigenvalue of a square matrix
    #[arg(long)]
    pub min_eigenvalue: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Gram matrix JSON
    #[arg(long)]
    pub kernel: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Cross-kernel JSON (rows: samples to classify, columns: training set)
    #[arg(long)]
    pub kernel: PathBuf,
    /// Look up true labels and report accuracy
    #[arg(long)]
    pub score: bool,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RunFlags {
    #[arg(long, value_enum, default_value = "nonopt")]
    pub mode: ModeArg,
    #[arg(long, value_parser = parse_shots, default_value = "exact")]
    pub shots: Estimator,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "off")]
    pub noise: String,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub pin_diagonal: bool,
    /// Add wall-clock time to the report (breaks byte-identical reruns)
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ExperimentCommand {
    /// Digit classification on the pinned split
    Digits {
        #[arg(long, value_enum, default_value = "ry")]
        encoding: EncodingArg,
        #[arg(long, value_enum, default_value = "corrected")]
        beta2: Beta2Arg,
        /// Run the full grid (8 rows x both modes) instead of one cell
        #[arg(long)]
        grid: bool,
        #[arg(long, default_value = "data/optdigits.tes")]
        data: PathBuf,
        #[arg(long, default_value = "data/digits_manifest.json")]
        manifest: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Ising-graph classification
    Graphs {
        /// Vertex count; ignored with --grid
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Use this dataset instead of generating one
        #[arg(long)]
        graphs: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        gamma: f64,
        /// Run n = 3, 4, 5 in both modes
        #[arg(long)]
        grid: bool,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args, Debug)]
pub struct TranspileArgs {
    /// Circuit text file
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "nonopt")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Figure3Args {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long, default_value = "default")]
    pub noise: String,
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
