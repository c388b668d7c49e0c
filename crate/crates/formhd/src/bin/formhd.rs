//! Scenario-driven front end: run simulations from TOML configs, validate
//! closure blocks, and expose the isotropy validator and the invariant
//! selfcheck as subcommands.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numeric
//! blow-ups, 4 when a validation or configured check fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use formhd::curie;
use formhd::error::{Category, Error};
use formhd::scenario::{self, Scenario};
use formhd::selfcheck::{selfcheck, Sabotage, SelfcheckOptions};

#[derive(Parser)]
#[command(
    name = "formhd",
    version,
    about = "Structure-preserving dissipative MHD in discrete differential forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write CSV, summary JSON and checkpoints.
    Run {
        /// Scenario TOML file.
        config: PathBuf,
        /// Artifact directory; defaults to $FORMHD_ARTIFACT_DIR, then `.`.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        /// Base name for artifacts; defaults to the config file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Grade a scenario's closure block without running it.
    Validate {
        /// Scenario TOML file.
        config: PathBuf,
        /// Rotation samples for the isotropy probe.
        #[arg(long, default_value_t = 120)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the small invariant suites and print a pass/fail table.
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Test fixture: inject a sign error into the Hodge check.
        #[arg(long, hide = true)]
        sabotage_hodge: bool,
    },
    /// Print the isotropy classification tables as JSON.
    Curie {
        /// Ambient dimension (2 or 3).
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_for(e: &Error) -> u8 {
    match e.category() {
        Category::Config => 2,
        Category::Numeric => 3,
        Category::Validation => 4,
        Category::Other => 1,
    }
}

fn cmd_run(
    config: &Path,
    artifacts: Option<PathBuf>,
    name: Option<String>,
) -> Result<u8, Error> {
    let scenario = Scenario::from_path(config)?;
    let dir = artifacts
        .or_else(|| std::env::var_os("FORMHD_ARTIFACT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let name = name.unwrap_or_else(|| {
        config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string())
    });
    let outcome = scenario::run_scenario(&scenario, &name, &dir)?;
    let summary = &outcome.summary;
    println!(
        "{}: {} steps of dt = {} to t = {}",
        name, summary.steps, summary.dt, summary.final_time
    );
    for check in &summary.checks {
        let verdict = if check.pass { "pass" } else { "FAIL" };
        println!(
            "  check {:<18} {:>12.5e} against {:.1e}  {verdict}",
            check.name, check.value, check.tolerance
        );
    }
    println!("  artifacts: {}", outcome.artifacts.summary.display());
    if let Some(message) = &summary.blow_up {
        eprintln!("run ended early: {message} (partial artifacts kept)");
        return Ok(3);
    }
    if !summary.ok {
        eprintln!("configured checks failed; see the summary for details");
        return Ok(4);
    }
    Ok(0)
}

fn cmd_validate(config: &Path, samples: usize, seed: u64) -> Result<u8, Error> {
    let scenario = Scenario::from_path(config)?;
    let report = scenario::validate_scenario(&scenario, samples, seed)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?
    );
    Ok(if report.ok { 0 } else { 4 })
}

fn cmd_selfcheck(seed: u64, sabotage_hodge: bool) -> Result<u8, Error> {
    let options = SelfcheckOptions {
        seed,
        sabotage: sabotage_hodge.then_some(Sabotage::HodgeSign),
    };
    let report = selfcheck(&options)?;
    print!("{}", report.table());
    Ok(if report.ok() { 0 } else { 4 })
}

fn cmd_curie(n: usize, samples: usize, seed: u64) -> Result<u8, Error> {
    let report = curie::curie_report(n, samples, seed)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            artifacts,
            name,
        } => cmd_run(&config, artifacts, name),
        Command::Validate {
            config,
            samples,
            seed,
        } => cmd_validate(&config, samples, seed),
        Command::Selfcheck {
            seed,
            sabotage_hodge,
        } => cmd_selfcheck(seed, sabotage_hodge),
        Command::Curie { n, samples, seed } => cmd_curie(n, samples, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
