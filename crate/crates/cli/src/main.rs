// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod checks;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, CommandKind};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let manifest = match config::manifest_from_cli(&cli) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run `sbhe --help` for usage");
            return ExitCode::from(2);
        }
    };
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    let outcome = match manifest.command {
        CommandKind::Convergence => commands::convergence(&manifest),
        CommandKind::Simulate => commands::simulate_cmd(&manifest),
        CommandKind::Check => commands::check(&manifest),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
