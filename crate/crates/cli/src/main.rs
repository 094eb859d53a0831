//! `aeromap`: simulate missions, extract walls, classify air quality, run
//! the robustness experiment and serve telemetry from one binary.

mod error;
mod run;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aeromap_telemetry::DEFAULT_WATCHDOG_MS;

#[derive(Debug, Parser)]
#[command(name = "aeromap", version, about = "Indoor air-quality mapping robot: simulator, wall mapper and classifier")]
pub struct Cli {
    /// World configuration file (TOML); the built-in default room when omitted
    #[arg(long, short, global = true, env = "AEROMAP_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    pub fn enabled(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Guess from the content: JSON mission log or x/y text
    Auto,
    Log,
    Xy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Channel {
    Voc,
    Co2,
    Smoke,
    Temperature,
    Humidity,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run one mission (sweep then return to dock) and write its log
    Simulate {
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's sensor noise switch
        #[arg(long, value_enum)]
        noise: Option<Toggle>,
        /// Log file; stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fit the wall model to a mission log or an x/y point file
    ExtractWalls {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
        format: InputFormat,
        /// World config holding the true room and gas sources
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Wall model file; stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Error report file (needs --truth); summary on stderr when omitted
        #[arg(long, requires = "truth")]
        report: Option<PathBuf>,
    },
    /// Classify every sensor frame of a mission log
    Classify {
        input: PathBuf,
        /// Fuzzy classifier config; the world config's classifier when omitted
        #[arg(long)]
        fuzzy: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Crisp vs fuzzy robustness under sensor noise, with per-channel ablation
    Experiment {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        noise: Toggle,
        /// Ablation row for this input only
        #[arg(long, value_enum)]
        only_channel: Option<Channel>,
        /// Print the result as JSON
        #[arg(long)]
        json: bool,
    },
    /// Seeded batch of missions: wall-dimension error and homing error
    Report {
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long, value_enum)]
        noise: Option<Toggle>,
        #[arg(long)]
        json: bool,
    },
    /// Serve telemetry over HTTP and WebSocket until interrupted
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_WATCHDOG_MS)]
        watchdog_ms: u64,
        /// Mission steps per 50 ms tick
        #[arg(long, default_value_t = 1)]
        steps_per_tick: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        noise: Option<Toggle>,
    },
    /// Re-emit a mission log as the telemetry frames a live session sends
    Replay {
        input: PathBuf,
        /// Frame stream (one JSON document per line); stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aeromap: {e}");
            e.exit_code()
        }
    }
}
