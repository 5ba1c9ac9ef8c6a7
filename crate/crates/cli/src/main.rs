//! Batch front-end for the hyperplane-process regression engine.
//!
//! Configuration comes from an optional TOML file plus per-flag overrides
//! (flags win). Subcommands: simulate, fit, predict, evaluate.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::FitMode;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "poishp", version, about = "Hyperplane-process regression")]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = POISHP_WORKERS env var, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GeneratorFlags {
    /// Preset: sim1 | sim2 | sim3 | sim4.
    #[arg(long)]
    preset: Option<String>,
    /// Input dimension.
    #[arg(long)]
    p: Option<usize>,
    /// True plane count.
    #[arg(long)]
    m: Option<usize>,
    /// Number of rows.
    #[arg(long)]
    n: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
    /// Train fraction of the split.
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Args)]
struct FitFlags {
    /// Training CSV.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Sampler / decomposition mode.
    #[arg(long, value_enum, default_value = "whole")]
    mode: FitMode,
    /// Number of particles L.
    #[arg(long)]
    particles: Option<usize>,
    /// Number of annealing steps R.
    #[arg(long)]
    power_steps: Option<usize>,
    /// Number of hyperplanes |P|.
    #[arg(long)]
    planes: Option<usize>,
    /// Sub-model count K for decompositions.
    #[arg(long)]
    k: Option<usize>,
    /// Partition axis for decmp2.
    #[arg(long)]
    axis: Option<usize>,
    /// MCMC iteration budget (mcmc mode).
    #[arg(long)]
    iterations: Option<usize>,
    /// Write a checkpoint snapshot every this many annealing iterations.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Resume a whole-model fit from a checkpoint snapshot.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Response column (name or zero-based index).
    #[arg(long)]
    response: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: train/test CSVs plus the ground truth.
    Simulate {
        #[command(flatten)]
        generator: GeneratorFlags,
    },
    /// Fit the model and write the ensemble (or decomposition manifest).
    Fit {
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Predictions (with intervals where available) for a feature file.
    Predict {
        /// Fit artifact: ensemble/chain snapshot or decomposition manifest.
        #[arg(long)]
        fit: PathBuf,
        /// Input CSV (same schema as training data).
        #[arg(long)]
        data: PathBuf,
        /// Output CSV path (default: <out>/predictions.csv).
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Credible level for intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Response column (name or zero-based index).
        #[arg(long)]
        response: Option<String>,
    },
    /// RMSE, coverage, and interval-length metrics on held-out data.
    Evaluate {
        /// Fit artifact: ensemble/chain snapshot or decomposition manifest.
        #[arg(long)]
        fit: PathBuf,
        /// Test CSV (default: data.test from the config).
        #[arg(long)]
        test: Option<PathBuf>,
        /// Credible level for intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Response column (name or zero-based index).
        #[arg(long)]
        response: Option<String>,
    },
}

fn build_config(cli: &Cli) -> poishp::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> poishp::Result<()> {
    let mut config = build_config(&cli)?;
    match cli.command {
        Command::Simulate { generator } => {
            if let Some(preset) = generator.preset {
                config.data.generator.preset = preset;
            }
            if let Some(p) = generator.p {
                config.data.generator.p = p;
            }
            if let Some(m) = generator.m {
                config.data.generator.m = m;
            }
            if let Some(n) = generator.n {
                config.data.generator.n = n;
            }
            if let Some(noise) = generator.noise {
                config.data.generator.noise_sd = noise;
            }
            if let Some(split) = generator.split {
                config.data.split_fraction = split;
            }
            commands::cmd_simulate(&config)
        }
        Command::Fit { fit } => {
            if let Some(train) = fit.train {
                config.data.train = Some(train);
            }
            if let Some(particles) = fit.particles {
                config.smc.particles = particles;
            }
            if let Some(steps) = fit.power_steps {
                config.smc.power_steps = steps;
            }
            if let Some(planes) = fit.planes {
                config.hyperparams.n_planes = planes;
            }
            if let Some(k) = fit.k {
                config.decomposition.k = k;
            }
            if let Some(axis) = fit.axis {
                config.decomposition.axis = axis;
            }
            if let Some(iterations) = fit.iterations {
                config.mcmc.iterations = iterations;
            }
            if let Some(response) = fit.response {
                config.data.response = response;
            }
            commands::cmd_fit(&config, fit.mode, fit.checkpoint_every, fit.resume.as_deref())
        }
        Command::Predict {
            fit,
            data,
            predictions,
            level,
            response,
        } => {
            if let Some(response) = response {
                config.data.response = response;
            }
            commands::cmd_predict(&config, &fit, &data, predictions.as_deref(), level)
        }
        Command::Evaluate {
            fit,
            test,
            level,
            response,
        } => {
            if let Some(response) = response {
                config.data.response = response;
            }
            commands::cmd_evaluate(&config, &fit, test.as_deref(), level)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
