//! Command-line verbs.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{self, resolve_workers, WORKERS_ENV};
use crate::error::{Result, EXIT_CONFIG};
use crate::report;
use crate::run;

#[derive(Debug, Parser)]
#[command(
    name = "dphase",
    version,
    about = "Spectral Galerkin runs, sweeps and reports"
)]
pub struct Cli {
    /// Worker threads; overrides the config file.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario, then any sweep or property studies it declares.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run only the sweep members and studies of a scenario.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the digest of a run directory and write plots/*.dat.
    Report { dir: PathBuf },
    /// Parse and validate a scenario without solving.
    Validate { config: PathBuf },
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let loaded = config::load(&config)?;
            let workers = resolve_workers(cli.workers, &loaded.config);
            let o = run::run(&loaded, out.as_deref(), workers)?;
            println!(
                "{}: {:?} -> {}",
                o.manifest.scenario,
                o.manifest.verdict,
                o.dir.display()
            );
            Ok(o.exit_code())
        }
        Command::Sweep { config, out } => {
            let loaded = config::load(&config)?;
            let workers = resolve_workers(cli.workers, &loaded.config);
            let o = run::sweep(&loaded, out.as_deref(), workers)?;
            println!(
                "{}: {:?} -> {}",
                o.manifest.scenario,
                o.manifest.verdict,
                o.dir.display()
            );
            Ok(o.exit_code())
        }
        Command::Report { dir } => {
            report::report(&dir, &mut std::io::stdout().lock())?;
            Ok(0)
        }
        Command::Validate { config } => {
            let loaded = config::load(&config)?;
            let rep = loaded.validate()?;
            for c in &rep.conditions {
                println!(
                    "{:<8} {:<4} margin {:.4e}  {}",
                    c.name,
                    if c.passed { "ok" } else { "FAIL" },
                    c.margin,
                    c.statement
                );
            }
            println!("{}: valid", loaded.config.scenario);
            Ok(0)
        }
    }
}

/// Parses `args` and runs the verb, returning the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
