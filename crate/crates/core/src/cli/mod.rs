//! `bearnav` command line.
//!
//! Exit codes: 0 success, 1 unexpected I/O failure, 2 usage or parse error,
//! 3 teaching failed, 4 a repeat traversal did not complete, 5 an experiment
//! check failed.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::sim::{NoiseModel, Scenario, TraversalConfig};
use crate::types::NavigatorConfig;
use crate::vision::{CameraModel, CorruptionModel};

pub use commands::parse_range;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TEACH: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;
pub const EXIT_ACCEPTANCE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "bearnav", version, about = "Bearing-only teach-and-repeat navigation")]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file overriding navigator, camera, noise, corruption or traversal settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Teach a route from a scenario file and save it as a binary route file.
    Teach(TeachArgs),
    /// Repeat a taught route in simulation.
    Repeat(RepeatArgs),
    /// Eigenvalues of the error dynamics at one operating point or over a grid.
    Analyze(AnalyzeArgs),
    /// Run a named experiment and write its CSVs and verdict.
    Experiment(ExperimentArgs),
    /// Route file utilities.
    #[command(subcommand)]
    Route(RouteCommand),
}

#[derive(Debug, Args)]
pub struct TeachArgs {
    /// Scenario JSON.
    pub scenario: PathBuf,
    /// Route file to write; defaults to `route.route` in the output directory.
    #[arg(long, value_name = "FILE")]
    pub route: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RepeatArgs {
    /// Route file written by `teach`.
    #[arg(long, value_name = "FILE")]
    pub route: PathBuf,
    /// Scenario JSON supplying noise, corruption, start offset and loop count.
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// World JSON; defaults to `world.json` next to the route file.
    #[arg(long, value_name = "FILE")]
    pub world: Option<PathBuf>,
    /// Number of consecutive traversals; defaults to the scenario's loop count.
    #[arg(long)]
    pub loops: Option<usize>,
    /// Replay the profile without visual correction.
    #[arg(long)]
    pub disable_vision: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Forward velocity, m/s.
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    /// Angular velocity, rad/s.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Feature distance, m.
    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<f64>,
    /// Velocity range `min:max:steps` for a sweep.
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    pub v_range: Option<String>,
    /// Angular velocity range `min:max:steps` for a sweep.
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    pub omega_range: Option<String>,
    /// Feature distance range `min:max:steps` for a sweep.
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    pub l_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One of exp1, exp2-oval, exp2-lemniscate, exp3-noise.
    pub name: String,
    /// Seeded runs per Monte Carlo check.
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
}

#[derive(Debug, Subcommand)]
pub enum RouteCommand {
    /// Print a route file as JSON.
    Inspect {
        file: PathBuf,
        /// Print only metadata and counts.
        #[arg(long)]
        summary: bool,
    },
}

/// Partial settings applied on top of a scenario.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub navigator: Option<NavigatorConfig>,
    pub camera: Option<CameraModel>,
    pub noise: Option<NoiseModel>,
    pub corruption: Option<CorruptionModel>,
    pub traversal: Option<TraversalConfig>,
}

impl ConfigOverrides {
    pub fn apply(&self, scenario: &mut Scenario) {
        if let Some(n) = self.navigator {
            scenario.navigator = n;
        }
        if let Some(c) = self.camera {
            scenario.camera = c;
        }
        if let Some(n) = self.noise {
            scenario.noise = n;
        }
        if let Some(c) = self.corruption {
            scenario.corruption = c;
        }
        if let Some(t) = self.traversal {
            scenario.traversal = t;
        }
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Initializes logging from `BEARNAV_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("BEARNAV_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

/// Entry point used by the `bearnav` binary.
pub fn main() -> i32 {
    init_logging();
    run(std::env::args_os())
}
