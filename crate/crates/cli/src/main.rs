mod commands;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "sonolearn", version, about = "Learn which sounds convey a robot's functional state")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML config file for the command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a sound library and its manifest.
    GenSounds(GenSoundsArgs),
    /// Run a simulated cohort.
    Simulate(SimulateArgs),
    /// Summaries, ranked statistics, heatmaps and a trial CSV for cohorts.
    Analyze(AnalyzeArgs),
    /// Serve the study API.
    Serve(ServeArgs),
    /// Rebuild a session from its JSONL log.
    Replay(ReplayArgs),
    /// Write pitch-dominant priors for a level mapping.
    Priors(PriorsArgs),
}

#[derive(Args, Debug)]
pub struct GenSoundsArgs {
    /// `builtin` or a WAV file.
    #[arg(long)]
    pub base: Option<String>,
    /// Levels per parameter as `bpm,bpl,pitch`, e.g. `2,2,2`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Library id recorded in the manifest.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub cohort_size: Option<usize>,
    #[arg(long)]
    pub error_rate: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Cohort directories (from `simulate`) or service data directories.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub log: PathBuf,
}

#[derive(Args, Debug)]
pub struct PriorsArgs {
    #[arg(long)]
    pub grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)))
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
