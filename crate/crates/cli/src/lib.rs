//! Command-line front end: model evaluation and sweeps, simulation runs and
//! sweeps, and model-versus-measurement comparison.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use manet_overhead::model::ModelError;
use manet_overhead::scenario::ConfigError;
use manet_overhead::sim::SimError;

pub use commands::execute;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter {
                name,
                value,
                reason,
            } => CliError::Usage(format!("--{}: {value} {reason}", name.replace('_', "-"))),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Config(c),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "manet-overhead",
    version,
    about = "Proactive MANET routing overhead: model and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical overhead model.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Discrete-event simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Simulated control traffic next to the model prediction.
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Evaluate the overhead components at one point.
    Eval(ModelEvalArgs),
    /// Evaluate overheads and sensitivities over a grid of one parameter.
    Sweep(ModelSweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// One simulation run.
    Run(SimRunArgs),
    /// Cross product of axis values, seeds and protocols.
    Sweep(SimSweepArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct ModelFlags {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub t_pr: Option<f64>,
    #[arg(long)]
    pub mu_k: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t_trig: Option<f64>,
    #[arg(long)]
    pub l_avg: Option<u32>,
    #[arg(long)]
    pub pn_avg: Option<u32>,
    #[arg(long)]
    pub hello: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputFlags {
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelEvalArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Use the OLSR form (HELLO/TC intervals instead of t_pr).
    #[arg(long)]
    pub olsr: bool,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    N,
    #[value(name = "t_pr")]
    TPr,
    #[value(name = "mu_k")]
    MuK,
    Lambda,
    #[value(name = "t_trig")]
    TTrig,
    Hello,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::TPr => "t_pr",
            Axis::MuK => "mu_k",
            Axis::Lambda => "lambda",
            Axis::TTrig => "t_trig",
            Axis::Hello => "hello",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Ceiling {
    #[default]
    Printed,
    Measure,
}

#[derive(Debug, Args)]
pub struct ModelSweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long)]
    pub min: f64,
    #[arg(long)]
    pub max: f64,
    #[arg(long)]
    pub steps: usize,
    /// How ceiling factors enter the sensitivities.
    #[arg(long, value_enum, default_value_t)]
    pub ceiling: Ceiling,
    #[arg(long)]
    pub olsr: bool,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

/// Overrides for scenario file values.
#[derive(Debug, Clone, Args, Default)]
pub struct ScenarioFlags {
    /// Scenario file; defaults apply to anything it leaves out.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<u32>,
    #[arg(long)]
    pub area_m: Option<f64>,
    #[arg(long)]
    pub range_m: Option<f64>,
    #[arg(long)]
    pub bandwidth_bps: Option<f64>,
    #[arg(long)]
    pub propagation_s: Option<f64>,
    #[arg(long)]
    pub flows: Option<u32>,
    #[arg(long)]
    pub rate_pps: Option<f64>,
    #[arg(long)]
    pub payload_bytes: Option<u32>,
    #[arg(long)]
    pub start_s: Option<f64>,
    /// static or random_waypoint.
    #[arg(long)]
    pub mobility: Option<String>,
    #[arg(long)]
    pub speed_min: Option<f64>,
    #[arg(long)]
    pub speed_max: Option<f64>,
    #[arg(long)]
    pub pause_s: Option<f64>,
    #[arg(long)]
    pub step_s: Option<f64>,
    /// dsdv, olsr or fsr.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub periodic_s: Option<f64>,
    #[arg(long)]
    pub hello_s: Option<f64>,
    #[arg(long)]
    pub settling_s: Option<f64>,
    #[arg(long)]
    pub fsr_inner_hops: Option<u32>,
    #[arg(long)]
    pub fsr_outer_factor: Option<f64>,
    #[arg(long)]
    pub neighbor_loss_intervals: Option<u32>,
    /// immediate or scheduled.
    #[arg(long)]
    pub tc_trigger: Option<String>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// per_hop or per_origination.
    #[arg(long)]
    pub nrl: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimRunArgs {
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[arg(long)]
    pub seed: u64,
    /// Append percentile, in-flight and failure columns.
    #[arg(long)]
    pub extended: bool,
    /// Per-event trace file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    #[value(name = "pause_s")]
    PauseS,
    Nodes,
}

#[derive(Debug, Args)]
pub struct SimSweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    /// First seed; run i uses seed + i.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 1)]
    pub seeds: u32,
    #[arg(long, value_delimiter = ',', default_value = "dsdv,olsr,fsr")]
    pub protocols: Vec<String>,
    #[arg(long)]
    pub extended: bool,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "dsdv,olsr,fsr")]
    pub protocols: Vec<String>,
    /// Model-only parameters; the rest come from the scenario.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub mu_k: Option<f64>,
    #[arg(long)]
    pub t_trig: Option<f64>,
    #[arg(long)]
    pub l_avg: Option<u32>,
    #[arg(long)]
    pub pn_avg: Option<u32>,
    #[command(flatten)]
    pub output: OutputFlags,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to standard error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
