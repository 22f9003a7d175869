mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use params::ParamArgs;

#[derive(Parser)]
#[command(
    name = "shiftflow",
    version,
    about = "Division-free velocity estimation for event cameras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate flow over an event file and write detections as CSV.
    Run(RunArgs),
    /// Generate a synthetic event stream and its ground truth from a scene file.
    Synth(SynthArgs),
    /// Evaluate accuracy over a grid of bin durations and thresholds.
    Sweep(SweepArgs),
    /// Print the storage and latency cost model.
    Cost(CostArgs),
    /// Fuzz the scorers against the brute-force reference.
    OracleCheck(OracleArgs),
    /// Render one bin of a detections file as SVG.
    Render(RenderArgs),
}

/// Estimator parameters plus an optional TOML file with the same keys.
#[derive(Args)]
struct Estimator {
    /// TOML file with parameter keys (dt_us, theta_e, L, J, ...). Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Count fixed-width checks on the scoring path and report violations.
    #[arg(long)]
    audit: bool,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Event file, one `t x y p` per line (t in seconds).
    #[arg(long, short)]
    input: PathBuf,
    /// Detections CSV [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write one SVG per bin with detections into this directory.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    /// Ground-truth segments CSV; prints a directional accuracy report.
    #[arg(long)]
    segments: Option<PathBuf>,
    #[command(flatten)]
    estimator: Estimator,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene TOML.
    #[arg(long)]
    scene: PathBuf,
    /// Overrides the scene's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output event file [default: stdout].
    #[arg(long)]
    events: Option<PathBuf>,
    /// Output ground-truth CSV.
    #[arg(long)]
    gt: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Event file to sweep (needs --segments).
    #[arg(long, conflicts_with = "scene", requires = "segments")]
    input: Option<PathBuf>,
    /// Ground-truth segments for --input.
    #[arg(long)]
    segments: Option<PathBuf>,
    /// Scene TOML; events are generated and scored against the objects.
    #[arg(long, required_unless_present = "input")]
    scene: Option<PathBuf>,
    /// Comma-separated bin durations in microseconds.
    #[arg(long, value_delimiter = ',', required = true)]
    dt_us_list: Vec<u64>,
    /// Comma-separated occupancy thresholds.
    #[arg(long, value_delimiter = ',', required = true)]
    theta_e_list: Vec<u32>,
    /// Cell table as CSV [default: stdout].
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Heat map SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    estimator: Estimator,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 240)]
    nx: u64,
    #[arg(long, default_value_t = 180)]
    ny: u64,
    /// Temporal depth.
    #[arg(long = "L", visible_alias = "l", default_value_t = 16)]
    depth: u64,
    /// Largest hypothesis magnitude.
    #[arg(long = "J", visible_alias = "j", default_value_t = 15)]
    j_max: u64,
    #[arg(long, default_value_t = 100_000_000)]
    clock_hz: u64,
    #[arg(long, value_enum, default_value = "trace")]
    variant: params::VariantArg,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 10_000)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run cases on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Detections CSV written by `run`.
    #[arg(long)]
    detections: PathBuf,
    /// Event file the detections came from.
    #[arg(long)]
    events: PathBuf,
    /// Bin index to draw.
    #[arg(long)]
    bin: u64,
    /// Bin duration [default: the `delta_t_us` comment in the detections file].
    #[arg(long)]
    dt_us: Option<u64>,
    #[arg(long, default_value_t = 240)]
    nx: u16,
    #[arg(long, default_value_t = 180)]
    ny: u16,
    #[arg(long, short)]
    output: PathBuf,
}

/// Failures split by exit code: bad configuration exits 2, anything that
/// goes wrong while processing exits 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Processing(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Processing(e.into())
    }
}

pub fn config_err(msg: impl std::fmt::Display) -> Failure {
    Failure::Config(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Synth(a) => commands::synth(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Cost(a) => commands::cost(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
        Command::Render(a) => commands::render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Processing(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
