//! `ncd`: assets, modes, sampling, training, queries, benchmarks, slices and
//! accuracy evaluation for code-conditioned neural collision detection.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Invalid flags, settings or config files (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "ncd", version, about = "Neural collision detection for deformable objects")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub run_dir: PathBuf,
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the procedural fixtures: bumpy tet ball and capsule character.
    GenAssets(commands::GenAssetsArgs),
    /// Linear modes of a tetrahedral mesh.
    Modes(commands::ModesArgs),
    /// Generate poses and sample signed distances into a dataset file.
    Sample(commands::SampleArgs),
    /// Train the network on a dataset.
    Train(commands::TrainArgs),
    /// Distances, normals and triangle IDs for a point list.
    Query(commands::QueryArgs),
    /// Time tree rebuild-and-query against the network.
    Bench(commands::BenchArgs),
    /// Level-set slice through the learned field as CSV and PGM.
    Slice(commands::SliceArgs),
    /// Near-surface accuracy on held-out poses.
    Eval(commands::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = ["ok", "usage", "io", "numeric"][code as usize];
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("ncd: error code={code} kind={kind} message={msg:?}");
            ExitCode::from(code)
        }
    }
}

/// 1 usage, 2 I/O or file format, 3 numeric or pipeline failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    use ncd_core::Error as E;
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::InvalidArgument(_) => 1,
                E::Io { .. } | E::Parse { .. } | E::Format(_) => 2,
                _ => 3,
            };
        }
    }
    3
}
