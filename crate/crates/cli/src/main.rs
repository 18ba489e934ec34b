mod export;
mod ingest;
mod serve;
mod sessions;

use std::io::IsTerminal;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "timelines", version, about = "Search timelines service and admin tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Validate a catalog file and build the search index.
    Ingest(ingest::IngestArgs),
    /// Run the HTTP API until interrupted.
    Serve(serve::ServeArgs),
    /// Per-session durations of one topic.
    Sessions(sessions::SessionsArgs),
    /// Print a user's event log as line-delimited JSON.
    Export(export::ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    #[value(alias = "structured")]
    Json,
}

/// One year.
const MAX_IDLE_GAP_MIN: u64 = 366 * 24 * 60;

#[derive(Debug, Clone, Args)]
pub struct IdleGap {
    /// Inactivity, in minutes, that separates two sessions.
    #[arg(long = "idle-gap-min", env = "TS_IDLE_GAP_MIN", default_value_t = 30,
          value_parser = clap::value_parser!(u64).range(1..=MAX_IDLE_GAP_MIN))]
    pub minutes: u64,
}

impl IdleGap {
    pub fn duration(&self) -> Duration {
        Duration::from_secs(self.minutes * 60)
    }
}

pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const INDEX_FILE: &str = "index.json";

pub fn require_dir(path: &Path, what: &str) -> anyhow::Result<()> {
    anyhow::ensure!(path.is_dir(), "{what} {} is not a directory", path.display());
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Ingest(args) => ingest::run(args),
        Cmd::Serve(args) => serve::run(args),
        Cmd::Sessions(args) => sessions::run(args),
        Cmd::Export(args) => export::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
