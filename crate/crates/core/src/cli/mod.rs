//! Command-line driver.
//!
//! Every subcommand reads an optional `key = value` config file (`--config`)
//! and flags with the same names; flags win. Exit codes: 0 on success, 2 on
//! a configuration error, 3 on a data error. Failures print one line to
//! stderr of the form `error kind=<config|data> code=<n> message=<text>`.

mod bench;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use bench::{cmd_bench, mean_qgrams, peak_rss_kb, BENCH_COLUMNS};
pub use commands::{cmd_attack, cmd_encode, cmd_evaluate, cmd_generate, cmd_link, print_rows, Inputs};
pub use config::{BenchAxes, RunConfig, Settings};

#[derive(Debug, Parser)]
#[command(name = "mpprl", version, about = "Multi-party privacy-preserving record linkage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic party files with known overlap.
    Generate {
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Encode plaintext party files into Bloom filters with blocking keys.
    Encode {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Link party files and write the match set.
    Link {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Dump summation transcripts (cbf-protocol mode only).
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a match set against the entity ids of the party files.
    Evaluate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        matches: PathBuf,
        /// Report file to append the row to.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Linkage attack on filters and on protocol sums.
    Attack {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Runtime, memory and quality sweep on generated data.
    Bench {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Generate { common, .. }
            | Command::Encode { common, .. }
            | Command::Link { common, .. }
            | Command::Evaluate { common, .. }
            | Command::Attack { common, .. }
            | Command::Bench { common, .. } => common,
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let file = match &common.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    RunConfig::resolve(file.overlay(common.settings.clone()))
}

fn execute(command: Command, cfg: &RunConfig) -> Result<()> {
    let stdout = std::io::stdout().lock();
    match command {
        Command::Generate { out_dir, .. } => {
            for path in cmd_generate(cfg, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Encode { inputs, out_dir, .. } => {
            for path in cmd_encode(cfg, &inputs, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Link {
            inputs,
            out,
            transcript,
            ..
        } => {
            let outcome = cmd_link(cfg, &inputs, &out, transcript.as_deref())?;
            for d in &outcome.diagnostics {
                eprintln!("warning: {d}");
            }
            println!(
                "clusters={} blocks={} comparisons={}",
                outcome.matches.len(),
                outcome.blocks,
                outcome.comparisons
            );
        }
        Command::Evaluate {
            inputs, matches, out, ..
        } => print_rows(stdout, &[cmd_evaluate(cfg, &inputs, &matches, out.as_deref())?])?,
        Command::Attack { inputs, out, .. } => print_rows(stdout, &cmd_attack(cfg, &inputs, out.as_deref())?)?,
        Command::Bench { out, .. } => {
            let rows = cmd_bench(cfg, &out)?;
            let mut w = csv::Writer::from_writer(stdout);
            w.write_record(BENCH_COLUMNS)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Exit code for an error: 2 for configuration problems, 3 for data.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) => 2,
        _ => 3,
    }
}

fn fail(err: &Error) -> ExitCode {
    let code = exit_code(err);
    let kind = if code == 2 { "config" } else { "data" };
    let message = err.to_string().replace('\n', " ");
    eprintln!("error kind={kind} code={code} message={message}");
    ExitCode::from(code)
}

/// Parses `args` and runs the subcommand.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(&Error::InvalidParameter(e.kind().to_string()));
        }
    };
    let cfg = match resolve(cli.command.common()) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => return fail(&Error::InvalidParameter(format!("worker pool: {e}"))),
    };
    match pool.install(|| execute(cli.command, &cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

pub fn main() -> ExitCode {
    run(std::env::args_os())
}
