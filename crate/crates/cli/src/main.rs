//! `hyplab run <experiment>`: seeded experiments writing CSV/JSON artifacts
//! and a manifest with the PASS/FAIL status of every invariant checked.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or the
//! experiment cannot complete, 2 for command-line or configuration errors.

mod experiments;
mod settings;

use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use experiments::Outcome;
use settings::{ConfigError, RunArgs, Settings};

#[derive(Debug, Parser)]
#[command(name = "hyplab", version, about = "Experiments on hyperbolic times, pre-balls and fat sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts to the output directory.
    Run(RunArgs),
}

fn write_artifacts(settings: &Settings, outcome: &Outcome) -> Result<serde_json::Value> {
    let dir = &settings.out;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in &outcome.files {
        write_file(&dir.join(name), body)?;
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "tool": "hyplab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": settings.experiment.name(),
        "created_unix": created,
        "parallel": cfg!(feature = "parallel"),
        "config": settings.describe(),
        "files": outcome.files.iter().map(|f| &f.0).collect::<Vec<_>>(),
        "checks": outcome.checks,
        "summary": outcome.summary,
        "pass": pass,
    });
    write_file(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn run(args: &RunArgs) -> Result<bool> {
    let settings = Settings::resolve(args)?;
    let outcome = experiments::run(&settings)?;
    let manifest = write_artifacts(&settings, &outcome)?;
    if settings.json {
        println!("{}", serde_json::to_string_pretty(&manifest)?);
    } else {
        for c in &outcome.checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        println!("wrote {} files to {}", outcome.files.len() + 1, settings.out.display());
    }
    Ok(outcome.checks.iter().all(|c| c.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
