//! Batch front end: run scenario files and named property sweeps, emit
//! machine-readable verification reports.
//!
//! Exit codes: 0 on a clean run, 1 when any check reported a violation,
//! 2 on configuration or parse errors.

mod config;
mod report;
mod sweeps;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::ConfigFile;
use report::{Report, ScenarioSummary, SzilardSummary, Violation};

#[derive(Parser)]
#[command(
    name = "qithermo",
    version,
    about = "quantum information-thermodynamics laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and report its ledger and inequality slacks.
    Run {
        /// Path to a JSON scenario file.
        config: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a named property sweep over randomized trials.
    Sweep {
        /// One of: lemma1, new2ndlaw, old2ndlaw, theorem3, theorem4,
        /// theorem5, appendix, identities.
        check: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => run_command(&config, out.as_deref(), format),
        Command::Sweep {
            check,
            trials,
            seed,
            out,
            format,
        } => sweep_command(&check, trials, seed, out.as_deref(), format),
    }
}

fn run_command(path: &std::path::Path, out: Option<&std::path::Path>, format: Format) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let parsed: ConfigFile = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cannot parse {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if parsed.scenario.is_none() && parsed.szilard.is_none() && parsed.sweep.is_none() {
        eprintln!("error: config declares nothing to run");
        return ExitCode::from(2);
    }

    let mut report = Report::new(parsed.sweep.as_ref().map(|s| s.seed));
    let config_value: serde_json::Value = serde_json::from_str(&text).expect("already parsed");

    if let Some(sc_cfg) = &parsed.scenario {
        let scenario = match sc_cfg.build() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: invalid scenario: {e}");
                return ExitCode::from(2);
            }
        };
        match qithermo::thermo::run_process(&scenario) {
            Ok(ledger) => {
                let slacks = qithermo::thermo::check_inequalities(&ledger);
                if slacks.entanglement_bound < -1e-7 || slacks.qc_bound < -1e-7 {
                    report.violations.push(Violation {
                        check: "scenario".into(),
                        trial: None,
                        seed: None,
                        message: format!(
                            "second-law slack negative: new {} old {}",
                            slacks.entanglement_bound, slacks.qc_bound
                        ),
                        replay: config_value.clone(),
                    });
                }
                if slacks.energy_residual.abs() > 1e-9 {
                    report.violations.push(Violation {
                        check: "scenario".into(),
                        trial: None,
                        seed: None,
                        message: format!("energy accounting residual {}", slacks.energy_residual),
                        replay: config_value.clone(),
                    });
                }
                report.scenario = Some(ScenarioSummary::from_ledger(&ledger, &slacks));
            }
            Err(e) => {
                report.violations.push(Violation {
                    check: "scenario".into(),
                    trial: None,
                    seed: None,
                    message: format!("process failed: {e}"),
                    replay: config_value.clone(),
                });
            }
        }
    }

    if let Some(sz) = &parsed.szilard {
        match qithermo::thermo::run_szilard(&sz.params()) {
            Ok(ledger) => {
                if ledger.slack_entanglement < -1e-7 {
                    report.violations.push(Violation {
                        check: "szilard".into(),
                        trial: None,
                        seed: None,
                        message: format!("second-law slack {}", ledger.slack_entanglement),
                        replay: config_value.clone(),
                    });
                }
                report.szilard = Some(SzilardSummary::from_ledger(&ledger));
            }
            Err(e) => {
                report.violations.push(Violation {
                    check: "szilard".into(),
                    trial: None,
                    seed: None,
                    message: format!("szilard run failed: {e}"),
                    replay: config_value.clone(),
                });
            }
        }
    }

    if let Some(sw) = &parsed.sweep {
        for check in &sw.checks {
            match sweeps::run_sweep(check, sw.trials, sw.seed) {
                Ok((sweep_report, mut violations)) => {
                    report.violations.append(&mut violations);
                    report.sweeps.push(sweep_report);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    }

    emit(&report, out, format)
}

fn sweep_command(
    check: &str,
    trials: usize,
    seed: u64,
    out: Option<&std::path::Path>,
    format: Format,
) -> ExitCode {
    let mut report = Report::new(Some(seed));
    match sweeps::run_sweep(check, trials, seed) {
        Ok((sweep_report, mut violations)) => {
            report.violations.append(&mut violations);
            report.sweeps.push(sweep_report);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    emit(&report, out, format)
}

fn emit(report: &Report, out: Option<&std::path::Path>, format: Format) -> ExitCode {
    let mut body = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{body}"),
    }
    if report.has_violations() {
        eprintln!("{} violation(s) reported", report.violations.len());
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
