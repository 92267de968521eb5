use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expg::base::Family;
use expg::inference::TestKind;

#[derive(Debug, Parser)]
#[command(name = "expg", version, about = "Fit, test and query exp-G distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum likelihood fit of exp-G (or of the base model with --fix-lambda 0).
    Fit(FitArgs),
    /// Test a fixed value of lambda (default 0, the base model).
    Test(TestArgs),
    /// Raw and central moments with the route used and a quadrature cross-check.
    Moments(MomentsArgs),
    /// Shannon entropy, its constraint expectations and both KL divergences.
    Entropy(EntropyArgs),
    /// Seeded random draws, one per line.
    Sample(SampleArgs),
    /// TSV table of a curve over an x grid or a lambda grid.
    Curves(CurvesArgs),
    /// Both fatigue-life fits, the three tests and a fitted-density table.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Weibull,
    Beta,
    Frechet,
    Bernoulli,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Weibull => Family::Weibull,
            FamilyArg::Beta => Family::Beta,
            FamilyArg::Frechet => Family::Frechet,
            FamilyArg::Bernoulli => Family::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Lr,
    Wald,
    Score,
}

impl From<StatArg> for TestKind {
    fn from(s: StatArg) -> TestKind {
        match s {
            StatArg::Lr => TestKind::Lr,
            StatArg::Wald => TestKind::Wald,
            StatArg::Score => TestKind::Score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Pdf,
    Cdf,
    Hazard,
    Skewness,
    /// Excess kurtosis, zero for the normal law.
    Kurtosis,
}

/// A fully specified distribution.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Base parameters: shape,scale for weibull and frechet; a,b for beta; p for bernoulli.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// CSV file of observations.
    #[arg(long)]
    pub data: PathBuf,
    /// Pin lambda instead of estimating it.
    #[arg(long, allow_hyphen_values = true)]
    pub fix_lambda: Option<f64>,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = StatArg::Lr)]
    pub stat: StatArg,
    /// Value of lambda under the null.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub fix_lambda: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Moment order; a positive integer also yields every lower order and the central moments.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub order: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of draws.
    #[arg(short = 'n', long = "n")]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    /// x grid `a:b:step` for pdf, cdf and hazard.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "lambda_grid")]
    pub grid: Option<String>,
    /// lambda grid `a:b:step` for skewness and kurtosis.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Replace the embedded 100-value listing, e.g. with a 101-value file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// x grid of the fitted-density table.
    #[arg(long, default_value = "60:220:1", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    pub out: OutFormat,
}
