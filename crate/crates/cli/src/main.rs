mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use shrinkerlab::report::Report;
use shrinkerlab::Error;

use config::RunConfig;

/// A command that could not produce its artifact.
#[derive(Debug)]
pub struct Failure {
    pub config_error: bool,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { config_error: true, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self { config_error: false, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let config_error = !matches!(
            e,
            Error::NoFiringRadius { .. }
                | Error::ZeroField
                | Error::SingularMass { .. }
                | Error::DegenerateStar { .. }
                | Error::PointOffSurface { .. }
        );
        Self { config_error, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o: {e}"))
    }
}

/// What a command produced: its checks and the artifact body.
pub struct Outcome {
    pub reports: Vec<Report>,
    pub artifact: Artifact,
}

pub enum Artifact {
    /// Extra JSON payload placed next to the reports.
    Json(serde_json::Value),
    /// CSV body; the config and reports go into a `#` header line.
    Csv(String),
}

fn render(config: &RunConfig, outcome: &Outcome) -> String {
    let pass = outcome.reports.iter().all(|r| r.pass);
    match &outcome.artifact {
        Artifact::Json(data) => {
            let doc = json!({ "config": config.to_json(), "pass": pass, "reports": outcome.reports, "data": data });
            serde_json::to_string_pretty(&doc).expect("artifact serializes") + "\n"
        }
        Artifact::Csv(body) => {
            let header = json!({ "config": config.to_json(), "pass": pass, "reports": outcome.reports });
            format!("# {header}\n{body}")
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SHRINKERLAB_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Failure::config(format!("SHRINKERLAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))
}

fn run(config: &RunConfig) -> Result<Outcome, Failure> {
    configure_threads()?;
    config.validate()?;
    commands::dispatch(config)
}

fn emit(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fail(config: &RunConfig, kind: &str, message: &str, reports: &[Report]) {
    let doc = json!({
        "pass": false,
        "kind": kind,
        "command": config.command,
        "error": message,
        "failed": reports.iter().filter(|r| !r.pass).collect::<Vec<_>>(),
        "config": config.to_json(),
    });
    eprintln!("{}", serde_json::to_string_pretty(&doc).expect("failure serializes"));
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(outcome) => {
            if let Err(f) = emit(&config, &render(&config, &outcome)) {
                fail(&config, "config", &f.message, &[]);
                return ExitCode::from(2);
            }
            if outcome.reports.iter().all(|r| r.pass) {
                ExitCode::SUCCESS
            } else {
                fail(&config, "check", "one or more checks failed", &outcome.reports);
                ExitCode::from(1)
            }
        }
        Err(f) if f.config_error => {
            fail(&config, "config", &f.message, &[]);
            ExitCode::from(2)
        }
        Err(f) => {
            fail(&config, "check", &f.message, &[]);
            ExitCode::from(1)
        }
    }
}
