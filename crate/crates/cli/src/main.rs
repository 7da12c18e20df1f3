use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use trajopt_cli::{emit, parse_config, run_case, verify_trajectory, AlgorithmChoice, Case, RunConfig};
use trajopt_ocp::TrajectoryIterate;

#[derive(Parser)]
#[command(name = "trajopt", version, about = "Trajectory optimization by lossless convexification and SCP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case and write report.json, trajectory.json, convergence.csv and timeseries.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else ./out/<case>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        algorithm: Option<AlgorithmChoice>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
    },
    /// Re-check a saved trajectory against a case by nonlinear propagation.
    Verify {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        case: Case,
        /// Config with the parameter overrides the trajectory was solved with.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Run { config, out, algorithm, max_iters } => {
            let cfg = parse_config(&config)?.with_switches(algorithm, max_iters);
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(cfg.case.name()));
            let output = run_case(&cfg)?;
            let files = emit(&output.report, &output.artifact, &dir)?;
            let r = &output.report;
            println!(
                "{}: {:?} after {} iterations, cost {:.6e}, tf {:.4}, verdict {:?}",
                cfg.case.name(),
                r.outcome,
                r.iterations.len(),
                r.summary.cost,
                r.summary.final_time,
                r.verdict
            );
            for reason in &r.reasons {
                println!("  {reason}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(r.verdict.exit_code())
        }
        Command::Verify { trajectory, case, config } => {
            let mut cfg = match config {
                Some(path) => parse_config(&path)?,
                None => RunConfig::new(case),
            };
            anyhow::ensure!(cfg.case == case, "config is for case {}, not {}", cfg.case.name(), case.name());
            let text = std::fs::read_to_string(&trajectory).with_context(|| trajectory.display().to_string())?;
            let it: TrajectoryIterate = serde_json::from_str(&text).with_context(|| trajectory.display().to_string())?;
            if !case.is_lcvx() || case == trajopt_cli::Case::LcvxToy {
                cfg.grid.n = Some(it.len());
            }
            let checks = verify_trajectory(&cfg.resolve()?, &it)?;
            println!("{}", serde_json::to_string_pretty(&checks)?);
            let failures = checks.failures();
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            Ok(if failures.is_empty() { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TRAJOPT_LOG", "warn")).init();
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
