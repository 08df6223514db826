use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kirkwood::io::{compare, error_report, load_scenario, run, write_json, Mode, RunOptions};
use kirkwood::Error;
use serde_json::json;

/// Reconstruct Kirkwood-Dirac pseudo-distributions from weak-measurement data.
///
/// Exit status: 0 on success, 1 on I/O failure, 2 on invalid input or a domain
/// error (an `error.json` is written to the output directory), 3 when `compare`
/// finds a difference above tolerance.
#[derive(Debug, Parser)]
#[command(name = "kirkwood", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct a distribution from simulated weak data (discrete-* and cv-* scenarios).
    Reconstruct(RunArgs),
    /// Write the directly computed ground truth for a scenario.
    Oracle(RunArgs),
    /// Simulate the photonic k-sweep shot by shot.
    Experiment(RunArgs),
    /// Evaluate the commutator witness, exactly or from simulated joints.
    Ccr(RunArgs),
    /// Diff two distribution files.
    Compare {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "KIRKWOOD_OUT", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance of the reconstruction-vs-oracle check.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the oracle and record the deviation in the diagnostics.
    #[arg(long)]
    emit_oracle: bool,
}

fn status(e: &Error) -> u8 {
    if e.is_io() {
        1
    } else {
        2
    }
}

fn fail(e: &Error, out: Option<&Path>) -> ExitCode {
    let report = error_report(e);
    eprintln!("{report}");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            // best effort: the stderr report above is authoritative
            let _ = write_json(&dir.join("error.json"), &report);
        }
    }
    ExitCode::from(status(e))
}

fn execute(mode: Mode, args: &RunArgs) -> ExitCode {
    let outcome = load_scenario(&args.scenario).and_then(|s| {
        let options = RunOptions { out_dir: args.out.clone(), emit_oracle: args.emit_oracle, seed: args.seed, tol: args.tol };
        run(&s, mode, &options)
    });
    match outcome {
        Ok(summary) => {
            let artifacts: Vec<String> = summary.artifacts.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({ "kind": summary.kind, "artifacts": artifacts }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&args.out)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Reconstruct(a) => execute(Mode::Reconstruct, a),
        Command::Oracle(a) => execute(Mode::Oracle, a),
        Command::Experiment(a) => execute(Mode::Experiment, a),
        Command::Ccr(a) => execute(Mode::Ccr, a),
        Command::Compare { left, right, tol } => match compare(left, right, *tol) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report is plain data"));
                if report.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => fail(&e, None),
        },
    }
}
