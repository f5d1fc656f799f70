//! `orbtrace run|validate|schema`: batch experiments from one TOML config.
//!
//! Exit codes: 0 pass, 1 property violation, 2 config error, 3 capacity.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Violation(String),
    Capacity(String),
}

impl CliError {
    /// Library errors raised while building the experiment from its config.
    pub fn from_config(e: orbtrace::Error) -> Self {
        if e.is_capacity() {
            CliError::Capacity(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }

    /// Library errors raised while the experiment runs.
    pub fn from_lib(e: orbtrace::Error) -> Self {
        use orbtrace::Error::*;
        match e {
            Capacity { .. } => CliError::Capacity(e.to_string()),
            PseudoOrbitViolation(_) | Generation(_) | Relation(_) | NotFound { .. } | Numerical(_) => {
                CliError::Violation(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Violation(m) => format!("property violation: {m}"),
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Capacity(m) => format!("capacity: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "orbtrace", version, about = "Pseudo-orbit tracing experiments for group actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write its report.
    Run { config: PathBuf },
    /// Check the config and build the experiment without running it.
    Validate { config: PathBuf },
    /// Print the JSON schema of the config file.
    Schema,
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    passed: bool,
    config: &'a ExperimentConfig,
    result: serde_json::Value,
    disclaimers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock_seconds: Option<f64>,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn run(path: &Path) -> Result<bool, CliError> {
    let start = Instant::now();
    let loaded = config::load(path)?;
    let cfg = &loaded.config;
    let plan = run::plan(cfg, &loaded.base_dir)?;
    let outcome = run::execute(cfg, plan)?;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: "orbtrace",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        passed: outcome.passed,
        config: cfg,
        result: outcome.result,
        disclaimers: outcome.disclaimers,
        wall_clock_seconds: cfg.output.wall_clock.then(|| start.elapsed().as_secs_f64()),
    };
    let report_path = loaded
        .base_dir
        .join(cfg.output.report.clone().unwrap_or_else(|| PathBuf::from("report.json")));
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    write(&report_path, &text)?;
    if let (Some(csv_path), Some(csv)) = (&cfg.output.grid_csv, &outcome.grid_csv) {
        write(&loaded.base_dir.join(csv_path), csv)?;
    }
    println!(
        "{}: {} (report: {})",
        cfg.experiment.name(),
        if outcome.passed { "PASS" } else { "FAIL" },
        report_path.display()
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serialises"));
            Ok(true)
        }
        Command::Validate { config } => config::load(&config)
            .and_then(|l| run::plan(&l.config, &l.base_dir).map(|_| l))
            .map(|l| {
                println!("{}: valid {} config", config.display(), l.config.experiment.name());
                true
            }),
        Command::Run { config } => run(&config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("orbtrace: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
