//! Reproducible experiment driver: manifests in, reports and CSV/JSON
//! artifacts out.
//!
//! Exit codes: 0 every check matched its expected outcome, 1 usage or
//! validation problem, 2 a check missed its expectation.

mod commands;
mod manifest;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::RunOptions;
use manifest::ExperimentManifest;

#[derive(Debug)]
pub struct CliError {
    message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<beable_core::Error> for CliError {
    fn from(e: beable_core::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "beable",
    version,
    about = "Hidden-variable models for two qubits: Born checks, CHSH runs, support-overlap certificates and condition audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Override the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for tabulation (0 = auto). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory; defaults to $BEABLE_OUT, then ./beable_out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the persisted table artifact.
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify Born-rule consistency of the selected model over the menus.
    BornCheck {
        #[command(flatten)]
        run: RunArgs,
        /// Also dump this many raw samples as CSV.
        #[arg(long)]
        dump: Option<u64>,
    },
    /// Estimate the four-correlation combination from model samples and
    /// compare it with the closed-form value.
    Chsh {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Certify overlapping supports for the manifest's two preparations.
    Overlap {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Tabulate the experiment and audit the requested conditions.
    Audit {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Tabulate the constrained-infimum profile z(c^2) as CSV.
    Zmap {
        /// Grid resolution over the reference overlap.
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Output directory; defaults to $BEABLE_OUT, then ./beable_out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag
        .or_else(|| std::env::var_os("BEABLE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("beable_out"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn load(run: &RunArgs) -> Result<(ExperimentManifest, RunOptions), CliError> {
    let manifest = ExperimentManifest::load(&run.manifest)?;
    let workers = if run.workers == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get().min(8))
            .unwrap_or(1)
    } else {
        run.workers
    };
    let opts = RunOptions {
        seed: run.seed.unwrap_or(manifest.seed),
        workers,
        out_dir: out_dir(run.out.clone())?,
        format: run.format,
    };
    Ok((manifest, opts))
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let started = std::time::Instant::now();
    let result = match cli.command {
        Cmd::BornCheck { run, dump } => {
            let (manifest, opts) = load(&run)?;
            commands::born_check(&manifest, &opts, dump)
        }
        Cmd::Chsh { run } => {
            let (manifest, opts) = load(&run)?;
            commands::chsh(&manifest, &opts)
        }
        Cmd::Overlap { run } => {
            let (manifest, opts) = load(&run)?;
            commands::overlap_cmd(&manifest, &opts)
        }
        Cmd::Audit { run } => {
            let (manifest, opts) = load(&run)?;
            commands::audit(&manifest, &opts)
        }
        Cmd::Zmap { points, out } => commands::zmap(points, &out_dir(out)?),
    };
    eprintln!("elapsed_ms={}", started.elapsed().as_millis());
    result
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(2),
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.message, "kind": "validation" })
            );
            std::process::exit(1);
        }
    }
}
