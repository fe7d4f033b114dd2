use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use driftbandit::envs::{generate_uniform_log, write_event_log, ContextSource, DriftingLinearEnv};
use driftbandit::harness::{
    emit_csv, format_csv, run_experiment, stream, ExperimentConfig, ExperimentReport, Mode,
};
use driftbandit::types::numbered_arms;
use driftbandit::{derive_stream, BanditError, Result};

/// Contextual bandit experiments under drift and hierarchy.
#[derive(Debug, Parser)]
#[command(name = "driftbandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a policy against the drifting simulator.
    Simulate(RunArgs),
    /// Evaluate a policy offline on a logged event file.
    Replay(RunArgs),
    /// Run a policy on a synthetic hierarchical environment and report RSR.
    Hier(RunArgs),
    /// Write a uniformly-random event log from the simulator settings.
    GenLog(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output path; `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs, mode: Mode) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file_for(&args.config, Some(mode))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(cfg: &ExperimentConfig) -> Option<&Path> {
    cfg.output.as_deref().filter(|p| *p != Path::new("-"))
}

/// `out.csv` → `out.random.csv`.
fn baseline_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}.random.{ext}"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.6}"))
}

fn report(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let summary = match cfg.mode {
        Mode::Hier => format!(
            "policy={} ctr={} rsr={}",
            report.policy,
            fmt_opt(report.ctr()),
            fmt_opt(report.rsr)
        ),
        _ => format!("policy={} ctr={}", report.policy, fmt_opt(report.ctr())),
    };
    match output_path(cfg) {
        Some(out) => {
            emit_csv(&report.buckets, out)?;
            if let Some(base) = &report.baseline {
                emit_csv(base, baseline_path(out))?;
            }
            println!("{summary}");
        }
        None => {
            print!("{}", format_csv(&report.buckets));
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn gen_log(cfg: &ExperimentConfig) -> Result<()> {
    let out = output_path(cfg)
        .ok_or_else(|| BanditError::Config("gen-log needs --out or output".into()))?;
    let mut env = DriftingLinearEnv::new(
        numbered_arms("arm", cfg.arms),
        cfg.dim,
        cfg.change_prob,
        cfg.drift_pattern(),
        cfg.reward_model()?,
        &mut derive_stream(cfg.seed, &[stream::ENV]),
    )?;
    let log = generate_uniform_log(
        &mut env,
        &ContextSource::SyntheticGaussian,
        cfg.horizon,
        &derive_stream(cfg.seed, &[stream::REPLAY]),
    )?;
    write_event_log(out, &log)?;
    println!("events={} arms={} dim={}", log.len(), cfg.arms, cfg.dim);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = load(&a, Mode::Simulate)?;
            report(&cfg, &run_experiment(&cfg)?)
        }
        Command::Replay(a) => {
            let cfg = load(&a, Mode::Replay)?;
            report(&cfg, &run_experiment(&cfg)?)
        }
        Command::Hier(a) => {
            let cfg = load(&a, Mode::Hier)?;
            report(&cfg, &run_experiment(&cfg)?)
        }
        Command::GenLog(a) => gen_log(&load(&a, Mode::Simulate)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftbandit: {e}");
            ExitCode::FAILURE
        }
    }
}
