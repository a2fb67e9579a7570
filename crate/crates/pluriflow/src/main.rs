use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pluriflow::error::RunError;
use pluriflow::run::{self, RunOptions, CHECKS};
use pluriflow::study::{parse_ladder, run_study};
use pluriflow::{io, Scenario};

#[derive(Parser)]
#[command(name = "pluriflow", version, about = "Parabolic complex Monge-Ampère flow on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Comma-separated checks to run instead of the scenario's list.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and run its checks.
    Solve {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence study over a ladder of spatial steps.
    Study {
        scenario: PathBuf,
        /// Spatial steps, e.g. `1/8,1/16,1/32`; defaults to the scenario's ladder.
        #[arg(long)]
        ladder: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the checks on a stored solution CSV.
    Verify {
        csv: PathBuf,
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn options(common: &Common) -> Result<RunOptions, RunError> {
    if !(common.tol_scale > 0.0 && common.tol_scale.is_finite()) {
        return Err(RunError::Schema(format!("--tol-scale must be positive, got {}", common.tol_scale)));
    }
    if let Some(checks) = &common.checks {
        if let Some(bad) = checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
            return Err(RunError::Schema(format!("unknown check `{bad}`; known: {}", CHECKS.join(", "))));
        }
    }
    Ok(RunOptions {
        out: common.out.clone(),
        tol_scale: common.tol_scale,
        checks: common.checks.clone(),
    })
}

fn summary(name: &str, pass: bool, failed: &[String]) {
    if pass {
        println!("{name}: PASS");
    } else {
        println!("{name}: FAIL ({})", failed.join(", "));
    }
}

fn execute(command: Command) -> Result<bool, RunError> {
    match command {
        Command::Solve { scenario, common } => {
            let opts = options(&common)?;
            let scenario = Scenario::load(&scenario)?;
            let outcome = run::run_scenario(&scenario, &opts)?;
            if let Some(e) = outcome.verdict.error {
                println!("{}: linf error {e:e}", scenario.name);
            }
            summary(&scenario.name, outcome.pass(), &outcome.verdict.failed);
            Ok(outcome.pass())
        }
        Command::Study {
            scenario,
            ladder,
            common,
        } => {
            let opts = options(&common)?;
            let scenario = Scenario::load(&scenario)?;
            let ladder = match ladder {
                Some(s) => parse_ladder(&s).map_err(RunError::Schema)?,
                None => scenario
                    .ladder
                    .clone()
                    .ok_or_else(|| RunError::Schema("no --ladder and no ladder in the scenario".into()))?,
            };
            let result = run_study(&scenario, &ladder, &opts)?;
            for l in &result.levels {
                println!(
                    "h = {:<10} dt = {:<10.4e} error = {:<12} order = {:<8} {}",
                    l.h_x,
                    l.dt,
                    l.error.map_or("-".into(), |e| format!("{e:.3e}")),
                    l.order.map_or(if l.saturated { "saturated".into() } else { "-".into() }, |o| format!("{o:.2}")),
                    if l.pass { "pass" } else { "FAIL" }
                );
            }
            if let Some(out) = &opts.out {
                std::fs::create_dir_all(out).map_err(RunError::io(out))?;
                io::write_json(&out.join("study.json"), &result)?;
            }
            summary(&scenario.name, result.pass, &[]);
            Ok(result.pass)
        }
        Command::Verify {
            csv,
            scenario,
            common,
        } => {
            let opts = options(&common)?;
            let scenario = Scenario::load(&scenario)?;
            let (verdict, tol) = run::verify_stored(&csv, &scenario, &opts)?;
            if let Some(out) = &opts.out {
                std::fs::create_dir_all(out).map_err(RunError::io(out))?;
                let doc = serde_json::json!({
                    "scenario": scenario.name, "pass": verdict.pass(), "failed": verdict.failed,
                    "error": verdict.error, "tolerances": tol, "checks": verdict.reports,
                });
                io::write_json(&out.join("reports.json"), &doc)?;
            }
            summary(&scenario.name, verdict.pass(), &verdict.failed);
            Ok(verdict.pass())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("PLURIFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Solve { common, .. } | Command::Study { common, .. } | Command::Verify { common, .. } => {
            common.out.clone()
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            run::write_error(out.as_deref(), &e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
