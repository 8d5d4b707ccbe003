//! `faber-phase` command-line driver.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 invalid
//! configuration, 3 solver or I/O failure.

mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use settings::{parse_config, Cli, Settings};

const THREADS_ENV: &str = "FABER_PHASE_THREADS";

fn config_error(errors: &[String]) -> ExitCode {
    for e in errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let mut flags = cli.flags;
    if let Some(path) = flags.config.clone() {
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return config_error(&[format!("--config {}: {e}", path.display())]),
        };
        match parse_config(&text) {
            Ok(map) => flags = flags.merge(&map),
            Err(errors) => return config_error(&errors),
        }
    }
    let settings = match Settings::resolve(cli.command, &flags) {
        Ok(s) => s,
        Err(errors) => return config_error(&errors),
    };
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return config_error(&[format!("{THREADS_ENV}: expected a positive integer, got {raw:?}")]),
        }
    }
    match commands::run(&settings) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.json).expect("JSON values serialize"));
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
