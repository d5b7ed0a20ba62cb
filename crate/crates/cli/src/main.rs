//! `ssalt`: robust estimation for interval-monitored step-stress life tests
//! with competing risks.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssalt_core::Error;

/// Exit status for each error class.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } => 3,
        Error::IllPosed(_) => 4,
        Error::NonConvergence { .. } => 5,
        Error::SingularInformation { .. } => 6,
        _ => 1,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ssalt",
    version,
    about = "Robust DPD inference for step-stress life tests with competing risks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the model for each tuning parameter and report estimates, covariance and intervals.
    Fit(FitArgs),
    /// Point estimates and intervals for MTTF, reliability and a quantile at the use stress.
    Characterize(CharacterizeArgs),
    /// Parametric BCa bootstrap interval for one quantity.
    Bootstrap(BootstrapArgs),
    /// Gross-error and self-standardized sensitivity across tuning parameters.
    Sensitivity(SensitivityArgs),
    /// Monte Carlo MSE and coverage study from a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Dataset file.
    #[arg(required_unless_present = "bundled", conflicts_with = "bundled")]
    pub dataset: Option<PathBuf>,
    /// Use a dataset shipped with the library instead of a file.
    #[arg(long, value_enum)]
    pub bundled: Option<Bundled>,
    /// Divide every time in the dataset by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub time_scale: f64,
    /// Override the dataset's stress normalization for temperature headers.
    #[arg(long)]
    pub normalize_stress: Option<bool>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundled {
    /// Solar lighting devices, second inspection at 300 hours.
    ElectronicDevices,
    /// Same units with the second inspection at 400 hours.
    ElectronicDevicesIt400,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// DPD tuning parameter; repeat for several values.
    #[arg(long = "beta", default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
    pub betas: Vec<f64>,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Write every reported number to this JSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct CharacterizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mission time for the reliability; omitted when not given.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Lower quantile level.
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    /// Bootstrap replicates for BCa intervals; 0 skips the bootstrap.
    #[arg(long = "B", default_value_t = 0)]
    pub replicates: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Restrict to the marginal lifetime of one risk (one-based).
    #[arg(long)]
    pub cause: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Mttf,
    Reliability,
    Quantile,
    Param,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = TargetKind::Mttf)]
    pub target: TargetKind,
    /// Mission time when the target is the reliability.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    /// Parameter index (one-based) when the target is a parameter.
    #[arg(long)]
    pub param: Option<usize>,
    /// Restrict to the marginal lifetime of one risk (one-based).
    #[arg(long)]
    pub cause: Option<usize>,
    #[arg(long = "B", default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    /// Dataset file; the model is evaluated at its β = 0 fit.
    #[arg(conflicts_with_all = ["bundled", "scenario"])]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "scenario")]
    pub bundled: Option<Bundled>,
    /// Scenario file; the model is evaluated at its true parameters.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub time_scale: f64,
    #[arg(long)]
    pub normalize_stress: Option<bool>,
    /// Tuning parameters; defaults to 0, 0.1, ..., 1.
    #[arg(long = "beta")]
    pub betas: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Mse,
    Coverage,
    Both,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file.
    pub scenario: PathBuf,
    /// Override the scenario's tuning parameters.
    #[arg(long = "beta")]
    pub betas: Vec<f64>,
    /// Override the number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override bootstrap replicates for BCa coverage.
    #[arg(long = "B")]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_enum, default_value_t = Study::Both)]
    pub study: Study,
    /// Quantity whose interval coverage is studied.
    #[arg(long, value_enum, default_value_t = TargetKind::Mttf)]
    pub coverage_of: TargetKind,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    /// Include BCa intervals in the coverage study.
    #[arg(long)]
    pub bca: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Characterize(a) => commands::characterize(&a),
        Command::Bootstrap(a) => commands::bootstrap(&a),
        Command::Sensitivity(a) => commands::sensitivity(&a),
        Command::Simulate(a) => commands::simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
