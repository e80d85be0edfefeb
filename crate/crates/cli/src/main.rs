use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mphd_core::gsim::HomodyneRecord;
use mphd_core::BranchId;

mod commands;
mod config;
mod report;

use commands::{Outcome, EXIT_ERROR};
use config::{ConfigDoc, Overrides};

/// Multi-pixel homodyne detection synthesis and simulation.
#[derive(Parser, Debug)]
#[command(name = "mphd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide feasibility of a target and solve for LO phases and gains.
    Synthesize(CommonArgs),
    /// Build a cluster-state unitary from a graph.
    Cluster(CommonArgs),
    /// Synthesize a teleportation gate program and optionally verify it.
    Gate(CommonArgs),
    /// Sample homodyne records for a synthesized solution.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Sample CSV path; defaults to the report path with a .csv extension.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Square-root branch as a bit string, e.g. 1001.
    #[arg(long, value_parser = parse_branch)]
    branch: Option<BranchId>,
    #[arg(long)]
    tol: Option<f64>,
}

fn parse_branch(s: &str) -> std::result::Result<BranchId, String> {
    s.parse().map_err(|e: mphd_core::MphdError| e.to_string())
}

fn load(args: &CommonArgs) -> Result<ConfigDoc> {
    let mut doc = ConfigDoc::load(&args.config)?;
    doc.apply(&Overrides {
        seed: args.seed,
        branch: args.branch.clone(),
        tol: args.tol,
    });
    doc.validate()?;
    Ok(doc)
}

fn write_report(outcome: &Outcome, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&outcome.report)?;
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn write_csv(records: &[HomodyneRecord], path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["shot", "mode", "angle", "outcome"])?;
    for r in records {
        w.serialize((r.shot, r.mode, r.angle, r.outcome))?;
    }
    w.flush()?;
    Ok(())
}

/// CSV path: explicit, else beside the report, else beside the config.
fn csv_path(explicit: Option<&Path>, common: &CommonArgs) -> PathBuf {
    match (explicit, &common.out) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(out)) => out.with_extension("csv"),
        (None, None) => common.config.with_extension("samples.csv"),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let (outcome, common, csv) = match &cli.command {
        Command::Synthesize(a) => (commands::synthesize(&load(a)?)?, a, None),
        Command::Cluster(a) => (commands::cluster(&load(a)?)?, a, None),
        Command::Gate(a) => (commands::gate(&load(a)?)?, a, None),
        Command::Simulate { common, csv } => {
            (commands::simulate(&load(common)?)?, common, Some(csv_path(csv.as_deref(), common)))
        }
    };
    if let Some(path) = csv {
        write_csv(&outcome.records, &path)?;
        log::info!("wrote {} records to {}", outcome.records.len(), path.display());
    }
    write_report(&outcome, common.out.as_deref())?;
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MPHD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
