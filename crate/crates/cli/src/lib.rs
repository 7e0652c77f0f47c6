//! File formats, commands and benchmarks on top of [`ntd_core`].
//!
//! The binary is a thin wrapper over [`run`], which tests drive directly.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod clock;
pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod naive;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub use crate::args::{Cli, Command};
pub use crate::clock::InstantClock;
pub use crate::error::{CliError, Result};
pub use crate::manifest::{RunManifest, MANIFEST_FILE};

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub summary: String,
    pub out_dir: Option<PathBuf>,
}

/// Parses `argv` (program name first) and executes the command.
pub fn run<I, T>(argv: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cwd = std::env::current_dir().map_err(|e| CliError::io(std::path::Path::new("."), e))?;

    match cli.command {
        Command::Replay(r) => {
            let manifest = RunManifest::read(&r.manifest)?;
            let mut full = vec!["ntd".to_string()];
            full.extend(manifest.argv.iter().cloned());
            let mut command = Cli::try_parse_from(&full)?.command;
            command.retarget(&manifest.cwd, &r.out)?;
            let mut outcome = execute(command, manifest.argv, manifest.cwd)?;
            outcome.command = "replay";
            Ok(outcome)
        }
        command => execute(command, recorded, cwd),
    }
}

fn execute(command: Command, argv: Vec<String>, cwd: PathBuf) -> Result<Outcome> {
    let start = Instant::now();
    let name = command.name();
    let inputs = command
        .inputs()
        .iter()
        .map(|p| commands::absolute(&cwd.join(p)))
        .collect();
    let (report, out_dir) = match &command {
        Command::Decompose(a) => (commands::decompose(a)?, Some(a.out.clone())),
        Command::Pipeline(a) => (commands::pipeline(a)?, Some(a.out.clone())),
        Command::Eval(a) => (commands::eval(a)?, a.out.clone()),
        Command::Bench(a) => (commands::bench(a)?, Some(a.out.clone())),
        Command::Replay(_) => return Err(CliError::Argument("nested replay".into())),
    };
    if let Some(dir) = &out_dir {
        RunManifest {
            command: name.to_string(),
            argv,
            cwd,
            inputs,
            config: report.config,
            output_dir: commands::absolute(dir),
            wall_clock_seconds: commands::elapsed_seconds(start),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
        .write(dir)?;
    }
    Ok(Outcome {
        command: name,
        summary: report.summary,
        out_dir,
    })
}
