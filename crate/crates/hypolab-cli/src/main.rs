use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hypolab::harness::{run_experiment, ExperimentConfig, RunOptions, RunReport, Stage};

#[derive(Parser)]
#[command(name = "hypolab", version, about = "Certified hypocoercive decay rates for the 1D Vlasov-Poisson-Fokker-Planck equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random initial profiles.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Continue past failed assumption checks.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the confinement assumptions on the potential.
    CheckAssumptions,
    /// Solve the Poisson-Boltzmann steady state.
    SteadyState,
    /// Estimate the constants and certify a decay rate.
    CertifyRate,
    /// Run the configured simulation and fit its decay.
    Simulate,
    /// Sweep the parabolic scaling parameter.
    EpsSweep,
    /// Everything above plus the diffusion-limit comparison.
    Full,
}

impl Command {
    fn stage(self) -> Stage {
        match self {
            Command::CheckAssumptions => Stage::CheckAssumptions,
            Command::SteadyState => Stage::SteadyState,
            Command::CertifyRate => Stage::CertifyRate,
            Command::Simulate => Stage::Simulate,
            Command::EpsSweep => Stage::EpsSweep,
            Command::Full => Stage::Full,
        }
    }
}

fn summarize(report: &RunReport) {
    if let Some(stage) = &report.failed_stage {
        eprintln!(
            "stage {stage} failed: {}",
            report.error.as_deref().unwrap_or("unknown error")
        );
    }
    if let Some(r) = &report.rates {
        println!(
            "certified lambda = {:.6} (delta = {:.6}, C_M = {:.6}, lambda_M = {:.6})",
            r.constants.lambda, r.constants.chosen_delta, r.constants.c_m, r.constants.lambda_big
        );
    }
    if let Some(l) = report.lambda_fit {
        println!("fitted lambda = {l:.6}");
    }
    for v in &report.verdicts {
        println!("[{}] {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let config = cli.config.context("--config PATH is required")?;
    let cfg = ExperimentConfig::load(&config)?;
    let out = cli
        .out
        .or(cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.name.clone().unwrap_or_default()));
    let opts = RunOptions {
        out,
        force: cli.force,
        workers: cli.workers,
    };
    let report = run_experiment(&config, cli.command.stage(), &opts, cli.seed)?;
    summarize(&report);
    println!("wrote {} files to {}", report.files.len(), opts.out.display());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
