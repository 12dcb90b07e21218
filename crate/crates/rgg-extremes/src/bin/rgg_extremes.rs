//! Thin CLI over the experiment runner. Each subcommand selects an
//! experiment kind with sensible defaults; a config file and per-flag
//! overrides refine it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rgg_extremes::limit_laws::{RadiusSchedule, ScheduleRegime};
use rgg_extremes::runner::{run_experiment, ExperimentConfig, ExperimentKind};
use rgg_extremes::unit_ball_volume;

#[derive(Parser)]
#[command(name = "rgg-extremes", about = "Degree extremes of random geometric graphs: \
simulation and verification experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Flat key=value config file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; replicate i uses stream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for records.csv, summary.json, plot_*.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Point count, or a comma-separated grid.
    #[arg(long)]
    n: Option<String>,
    /// Fixed degree k (fixed-k kinds).
    #[arg(long)]
    k: Option<usize>,
    /// Intensity parameter β of the radius schedule.
    #[arg(long)]
    beta: Option<f64>,
    /// Dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Norm: euclidean | max | sum.
    #[arg(long)]
    norm: Option<String>,
    /// Density: uniform | radial<S> (e.g. radial2).
    #[arg(long)]
    density: Option<String>,
    /// Number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold-radius Weibull limit (fixed k).
    Weibull(CommonFlags),
    /// Gumbel limit of the growing-degree threshold statistic.
    Gumbel(CommonFlags),
    /// Degree-k point process at fixed k vs its compound-Poisson limit.
    PhiFixed(CommonFlags),
    /// Degree-k_n point process in the growing regime vs Poisson.
    PhiGrowing(CommonFlags),
    /// Maximum-degree two-point concentration.
    Concentration(CommonFlags),
    /// Atlas of graph classes with Monte Carlo μ constants.
    Mu(CommonFlags),
    /// Chernoff tail bounds vs exact Binomial/Poisson CDFs.
    Bounds(CommonFlags),
    /// Palm formula: both Monte Carlo sides.
    Palm(CommonFlags),
    /// Audit CSV of a growing-degree radius schedule.
    ScheduleDump(CommonFlags),
}

fn build_config(kind: ExperimentKind, flags: &CommonFlags) -> Result<ExperimentConfig, rgg_extremes::Error> {
    let mut config = ExperimentConfig::new(kind);
    if let Some(path) = &flags.config {
        config.apply_file(path)?;
    }
    if let Some(v) = flags.seed {
        config.master_seed = v;
    }
    if let Some(v) = flags.workers {
        config.workers = v;
    }
    if let Some(v) = &flags.out {
        config.out_dir = v.clone();
    }
    if let Some(v) = &flags.n {
        config.set("n", v)?;
    }
    if let Some(v) = flags.k {
        config.k = v;
    }
    if let Some(v) = flags.beta {
        config.beta = v;
    }
    if let Some(v) = flags.d {
        config.d = v;
    }
    if let Some(v) = &flags.norm {
        config.norm = v.parse()?;
    }
    if let Some(v) = &flags.density {
        config.density = v.parse()?;
    }
    if let Some(v) = flags.replicates {
        config.replicates = v;
    }
    Ok(config)
}

fn schedule_dump(flags: &CommonFlags) -> Result<(), rgg_extremes::Error> {
    // reuse the config plumbing for parameters; no replicates involved
    let config = build_config(ExperimentKind::ThresholdGumbel, flags)?;
    let theta = unit_ball_volume(config.d, config.norm)?;
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: config.kn_rule, beta: config.beta },
        config.d,
        theta,
        config.density,
    );
    let stdout = std::io::stdout();
    sched.dump_csv(&config.n_grid, stdout.lock())
}

fn run(kind: ExperimentKind, flags: &CommonFlags) -> Result<(), rgg_extremes::Error> {
    let config = build_config(kind, flags)?;
    let out = run_experiment(&config)?;
    println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary is plain JSON"));
    eprintln!("records: {}", out.records_path.display());
    eprintln!("summary: {}", out.summary_path.display());
    for p in &out.plot_paths {
        eprintln!("plot:    {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Weibull(f) => run(ExperimentKind::ThresholdWeibull, f),
        Command::Gumbel(f) => run(ExperimentKind::ThresholdGumbel, f),
        Command::PhiFixed(f) => run(ExperimentKind::PhiFixedK, f),
        Command::PhiGrowing(f) => run(ExperimentKind::PhiGrowingK, f),
        Command::Concentration(f) => run(ExperimentKind::MaxDegreeConcentration, f),
        Command::Mu(f) => run(ExperimentKind::MuConstants, f),
        Command::Bounds(f) => run(ExperimentKind::BoundsSuite, f),
        Command::Palm(f) => run(ExperimentKind::PalmSuite, f),
        Command::ScheduleDump(f) => schedule_dump(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
