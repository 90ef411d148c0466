//! `bohmlab run <config>`, `bohmlab check <config>`, `bohmlab list`.
//!
//! Exit codes: 0 all checks passed, 1 a check failed (or the run aborted),
//! 2 the config was rejected.

use std::path::PathBuf;
use std::process::ExitCode;

use bohmlab::scenarios::{self, ConfigError, ScenarioError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bohmlab", version, about = "Run pilot-wave and classical Hamilton-Jacobi scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json plus CSV dumps.
    Run {
        config: PathBuf,
        /// Output root; defaults to $BOHMLAB_OUTPUT_ROOT, then `runs`.
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Validate a config without running it.
    Check { config: PathBuf },
    /// List registered scenarios.
    List {
        /// Machine-readable listing.
        #[arg(long)]
        json: bool,
    },
}

const PASS: u8 = 0;
const CHECK_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(CONFIG_ERROR)
}

fn list(json: bool) {
    let reg = scenarios::registry();
    if json {
        let v: Vec<_> = reg
            .iter()
            .map(|s| serde_json::json!({"name": s.name, "anchor": s.anchor, "summary": s.summary, "required": s.required}))
            .collect();
        println!("{}", serde_json::to_string_pretty(&v).expect("plain values"));
        return;
    }
    for s in reg {
        println!("{:<28} [{}] {}", s.name, s.anchor, s.summary);
        println!("{:<28} requires: {}", "", s.required.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            list(json);
            ExitCode::from(PASS)
        }
        Command::Check { config } => match scenarios::load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.scenario);
                ExitCode::from(PASS)
            }
            Err(e) => config_error(&e),
        },
        Command::Run { config, output_root } => {
            let cfg = match scenarios::load_config(&config) {
                Ok(c) => c,
                Err(e) => return config_error(&e),
            };
            let root = output_root.unwrap_or_else(scenarios::output_root);
            match scenarios::run_scenario_in(&cfg, &root) {
                Ok(report) => {
                    for c in &report.checks {
                        let tag = if c.passed { "PASS" } else { "FAIL" };
                        println!("{tag} {:<28} {:e} (needs {} {:e})", c.name, c.value, c.comparison, c.threshold);
                    }
                    for w in &report.warnings {
                        println!("warning: {w}");
                    }
                    println!("report: {}", root.join(&cfg.output.directory).join("report.json").display());
                    if report.passed {
                        ExitCode::from(PASS)
                    } else {
                        eprintln!("failed checks: {}", report.failed_checks().join(", "));
                        ExitCode::from(CHECK_FAILED)
                    }
                }
                Err(ScenarioError::Config(e)) => config_error(&e),
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(CHECK_FAILED)
                }
            }
        }
    }
}
