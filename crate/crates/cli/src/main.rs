//! `gammares`: resonance solves, simulations and spectra from the command line.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gammares::Parity;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration (exit 2).
    Config(String),
    /// Integration-quality failure (exit 3).
    Quality(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Quality(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Quality(m) => write!(f, "integration quality: {m}"),
        }
    }
}

impl From<gammares::Error> for CliError {
    fn from(e: gammares::Error) -> Self {
        match e {
            gammares::Error::IntegrationQuality { .. } => CliError::Quality(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "gammares",
    version,
    about = "Multiphoton resonance in three-level Gamma systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ResonanceArgs {
    /// Preset system (hydrogen, ion_a2_4plus).
    #[arg(long)]
    system: String,
    #[arg(long)]
    order: u32,
    /// Defaults to the parity of the order.
    #[arg(long, value_parser = parse_parity)]
    parity: Option<Parity>,
    /// Field-strength ratio M_R/ω₀.
    #[arg(long, allow_hyphen_values = true)]
    ratio: f64,
    /// Add α_K to the coupling.
    #[arg(long)]
    alpha: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    order: u32,
    #[arg(long, value_parser = parse_parity)]
    parity: Option<Parity>,
    #[arg(long)]
    rmin: f64,
    #[arg(long)]
    rmax: f64,
    #[arg(long)]
    steps: usize,
    /// CSV destination (standard output when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.trajectory`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    /// Use the analytic dipole instead of a numerical run.
    #[arg(long, conflicts_with_all = ["two_level", "total"])]
    analytic: bool,
    /// Drop the third state.
    #[arg(long)]
    two_level: bool,
    /// Total spectrum from three runs instead of the coherent part.
    #[arg(long)]
    total: bool,
    /// Peak threshold relative to the maximum.
    #[arg(long)]
    threshold: Option<f64>,
    /// Peak merge distance in resolution bins.
    #[arg(long)]
    min_separation: Option<usize>,
    /// Detect peaks on S(ω) instead of S(ω)/ω⁴.
    #[arg(long)]
    use_s: bool,
    /// Upper frequency in units of ω₀.
    #[arg(long)]
    harmonics: Option<f64>,
    /// Overrides `output.spectrum`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `output.peaks`.
    #[arg(long)]
    peaks: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.report`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for ω₀ and E₀ of a K-photon resonance (JSON).
    Resonance(ResonanceArgs),
    /// Trajectory CSV for a run configuration.
    Simulate(SimulateArgs),
    /// Spectrum CSV and peak list JSON.
    Spectrum(SpectrumArgs),
    /// Numerical against analytic branch (JSON report).
    Compare(CompareArgs),
    /// Resonance solves over a grid of ratios (CSV).
    Scan(ScanArgs),
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    match s.to_ascii_lowercase().as_str() {
        "odd" | "n" => Ok(Parity::Odd),
        "even" | "p" => Ok(Parity::Even),
        _ => Err(format!("unknown parity `{s}` (odd or even)")),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GAMMA_RES_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            CliError::config(format!(
                "GAMMA_RES_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Resonance(a) => {
            commands::resonance(&a.system, a.order, a.parity, a.ratio, a.alpha)
        }
        Command::Simulate(a) => commands::simulate(&a.config, a.output),
        Command::Spectrum(a) => commands::spectrum(
            &a.config,
            commands::SpectrumRequest {
                analytic: a.analytic,
                two_level: a.two_level,
                total: a.total,
                threshold: a.threshold,
                min_separation: a.min_separation,
                use_s: a.use_s,
                harmonics: a.harmonics,
                output: a.output,
                peaks: a.peaks,
            },
        ),
        Command::Compare(a) => commands::compare(&a.config, a.output),
        Command::Scan(a) => commands::scan(
            &a.system, a.order, a.parity, a.rmin, a.rmax, a.steps, a.output,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gammares: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
