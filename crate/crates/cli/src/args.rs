use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use falls_core::blogit::{EvidenceApprox, DEFAULT_PRIOR_VARIANCE};
use falls_core::{Horizon, Method, Scheme, Weighting};

const SCHEMES: &str = "updrs1, updrs2, updrs3, updrs4, all_items, subtotal, composite";

#[derive(Debug, Parser)]
#[command(name = "falls", version, about = "Fall-risk classification from UPDRS item scores")]
pub struct Cli {
    /// Worker threads for cross-validation folds [default: one per core]
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics of fallers vs non-fallers, with p-values
    Describe(DescribeArgs),
    /// Fit one method on all participants and write its model summary
    Fit(AnalysisArgs),
    /// Leave-one-out evaluation of one scheme/method/horizon cell
    Crossval(AnalysisArgs),
    /// Leave-one-out evaluation of every scheme x method x horizon cell
    Grid(GridArgs),
    /// Write a synthetic cohort CSV
    Synth(SynthArgs),
    /// Leave-one-out ROC curve of one cell, as threshold,fpr,tpr rows
    RocExport(AnalysisArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Cohort CSV
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Item schema CSV (id,part,name,min_score,max_score) [default: built-in UPDRS schema]
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
}

/// Alternatives to the default behaviour, each replacing one default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Fidelity {
    /// Select LOGIT/BMA variables once on all rows and refit them in each fold
    FullDataSelection,
    /// Weight BMA members by lml / sum(lml) instead of the posterior softmax
    LmlRatioWeights,
    /// Split trees on entropy instead of Gini impurity
    EntropySplits,
    /// Pick the threshold balancing sensitivity and specificity instead of Youden's J
    ThresholdBalance,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Master seed; required whenever a random forest is fitted
    #[arg(long)]
    pub seed: Option<u64>,

    /// Prior variance v0 of every logistic coefficient
    #[arg(long, default_value_t = DEFAULT_PRIOR_VARIANCE)]
    pub v0: f64,

    /// Marginal-likelihood approximation: laplace, corrected or gauss-hermite
    #[arg(long, default_value_t = EvidenceApprox::default())]
    pub evidence: EvidenceApprox,

    /// BMA weighting: posterior-softmax or lml-ratio [default: posterior-softmax]
    #[arg(long)]
    pub weighting: Option<Weighting>,

    /// Comma-separated behaviour toggles
    #[arg(long, value_enum, value_delimiter = ',')]
    pub fidelity: Vec<Fidelity>,

    /// Trees per random forest
    #[arg(long, default_value_t = 500)]
    pub n_trees: usize,

    /// Features tried per forest node [default: floor(sqrt(p))]
    #[arg(long)]
    pub mtry: Option<usize>,

    /// Smallest node the decision tree may split
    #[arg(long, default_value_t = 5)]
    pub min_node_size: usize,

    /// Deepest level of the decision tree
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,

    /// Smallest weighted impurity decrease that justifies a decision-tree split
    #[arg(long, default_value_t = 0.01)]
    pub min_impurity_decrease: f64,

    /// Number of top-importance variables reported as selected by RF
    #[arg(long, default_value_t = 5)]
    pub rf_top_k: usize,

    /// Number of heaviest BMA members shown in the membership table
    #[arg(long, default_value_t = 5)]
    pub bma_top: usize,

    /// Exit with status 2 when any cell or candidate model fails numerically
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, help = format!("Predictor scheme: {SCHEMES}"))]
    pub scheme: Scheme,

    /// Classifier: dt, rf, logit or bma
    #[arg(long)]
    pub method: Method,

    /// Fall horizon: m6 or m12
    #[arg(long, default_value_t = Horizon::M6)]
    pub horizon: Horizon,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_delimiter = ',', help = format!("Schemes to run [default: all of {SCHEMES}]"))]
    pub scheme: Vec<Scheme>,

    /// Methods to run [default: dt,rf,logit,bma]
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,

    /// Horizons to run [default: m6,m12]
    #[arg(long, value_delimiter = ',')]
    pub horizon: Vec<Horizon>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Fall horizon: m6 or m12 [default: both]
    #[arg(long)]
    pub horizon: Option<Horizon>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator seed
    #[arg(long)]
    pub seed: u64,

    /// Scenario file of `key = value` lines [default: 51 participants, no causal items]
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,

    /// Item schema CSV [default: built-in UPDRS schema]
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,

    /// Output cohort CSV
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}
