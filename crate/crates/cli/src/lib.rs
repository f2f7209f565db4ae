//! Driver for collision-model transport runs: spec files in, CSV series,
//! JSON metadata and SVG figures out.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use scm_core::{FrequencyAxis, Observable, Window};

pub mod exec;
pub mod output;
pub mod plot;
pub mod spec;

/// Worker-count override read when `--workers` is absent.
pub const WORKERS_ENV: &str = "SCM_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: spec file, arguments, CSV layout. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Failure during computation or while writing results. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scm", version, about = "Excitation transport in XXZ chains under stochastic collisions")]
pub struct Cli {
    /// Override the master seed of the spec.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for trajectory ensembles.
    #[arg(long, global = true, env = WORKERS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_plots: bool,
    /// Output directory (overrides the spec).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every listed noise point of a spec.
    Run { spec: PathBuf },
    /// Run the Cartesian (shape, rate) grid of a spec.
    Sweep { spec: PathBuf },
    /// Difference spectrum of two stored runs (`a − b`).
    Fft {
        run_a: PathBuf,
        run_b: PathBuf,
        /// central, ipr, ier, width or mz:<site>.
        #[arg(long, default_value = "central")]
        observable: Observable,
        #[arg(long, value_enum, default_value_t = AxisArg::Angular)]
        axis: AxisArg,
        #[arg(long, value_enum, default_value_t = WindowArg::Rectangular)]
        window: WindowArg,
        /// Use the whole grid instead of the common pre-boundary window.
        #[arg(long)]
        all_times: bool,
    },
    /// Check a spec file without running it.
    Validate { spec: PathBuf },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum AxisArg {
    Angular,
    Ordinary,
}

impl From<AxisArg> for FrequencyAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Angular => FrequencyAxis::Angular,
            AxisArg::Ordinary => FrequencyAxis::Ordinary,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum WindowArg {
    Rectangular,
    Hann,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Rectangular => Window::Rectangular,
            WindowArg::Hann => Window::Hann,
        }
    }
}

/// Parse `args` (including the program name), execute, and return the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let command_line = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    match exec::dispatch(&cli, &command_line) {
        Ok(()) => 0,
        Err(e) => {
            let kind = match e {
                CliError::Validation(_) => "invalid input",
                CliError::Runtime(_) => "run failed",
            };
            eprintln!("error ({kind}): {e}");
            e.exit_code()
        }
    }
}
