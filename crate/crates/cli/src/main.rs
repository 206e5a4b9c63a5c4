//! `mlal`: generate data, run oracle experiments, serve labeling sessions
//! and merge results.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
//! Diagnostics go to stderr; stdout only lists produced artifacts.

mod config;
mod error;
mod report;
mod run;

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlal_core::data::save_csv;
use mlal_core::engine::{load_checkpoint_file, AlState};
use mlal_service::Engine;

use config::{load_config, RunConfig};
use error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mlal",
    version,
    about = "Multi-label active learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML experiment file
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value`, applied after the file (repeatable)
    #[arg(long = "override", value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the configured dataset as features/labels/splits CSVs
    GenerateData {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Run the oracle experiment for every configured seed
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Serve an interactive labeling session over HTTP
    Serve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Session checkpoint; resumed when it exists, rewritten after every change
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Merge the runs under a directory into comparison tables and plots
    Report {
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

fn base_dir(cfg: &ConfigArgs) -> PathBuf {
    cfg.config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn load(cfg: &ConfigArgs) -> Result<(RunConfig, mlal_core::DatasetPool)> {
    let config = load_config(cfg.config.as_deref(), &cfg.overrides)?;
    let pool = config.dataset.load(&base_dir(cfg))?;
    Ok((config, pool))
}

fn serve(cfg: &ConfigArgs, addr: SocketAddr, checkpoint: Option<PathBuf>) -> Result<()> {
    let state = match checkpoint.as_deref().filter(|p| p.exists()) {
        Some(path) => {
            eprintln!("resuming {}", path.display());
            load_checkpoint_file(path)?
        }
        None => {
            let (config, pool) = load(cfg)?;
            AlState::start(config.experiment(config.seeds()[0], false), pool)?
        }
    };
    let session = format!("{}-seed{}", state.config.query.label(), state.config.seed);
    let engine = Engine::spawn(state, session, checkpoint);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("http://{addr}");
    runtime
        .block_on(mlal_service::serve(addr, Some(engine)))
        .map_err(|e| CliError::Runtime(format!("{addr}: {e}")))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenerateData { cfg, out } => {
            let (_, pool) = load(&cfg)?;
            save_csv(&pool, &out).map_err(|e| CliError::Runtime(e.to_string()))?;
            for name in ["features.csv", "labels.csv", "splits.csv"] {
                println!("{}", out.join(name).display());
            }
        }
        Command::Run { cfg, out } => {
            let (config, pool) = load(&cfg)?;
            let dir = run::run(&config, &pool, &out)?;
            println!("{}", dir.display());
        }
        Command::Serve {
            cfg,
            port,
            bind,
            checkpoint,
        } => serve(&cfg, SocketAddr::new(bind, port), checkpoint)?,
        Command::Report { out } => {
            for path in report::report(&out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
