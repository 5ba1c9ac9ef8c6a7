//! The four pipeline commands. Each validates its full configuration before
//! touching the filesystem.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use poishp::data::{
    gen_simulation, load_csv, normalize_to_ball, train_test_split, write_csv, ColumnSelector,
};
use poishp::decomposition::{
    fit_domain_decomp, fit_intensity_decomp, read_decomp_fit, write_decomp_fit, DecompFit,
    DecompScheme,
};
use poishp::evaluation::{coverage, mean_ci_length, posterior_predictive, rmse, PredictiveSummary};
use poishp::inference::{
    mcmc_run, read_snapshot, write_snapshot, Particle, ParticleEnsemble, SmcRun,
};
use poishp::rng::{self, tag};
use poishp::{BallTransform, Dataset, Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMode {
    /// One annealed SMC fit on the whole data.
    Whole,
    /// Intensity decomposition: K sub-fits of n_planes / K planes each.
    Decmp1,
    /// Domain decomposition: one sub-fit per partition cell.
    Decmp2,
    /// The non-annealed MH baseline chain.
    Mcmc,
}

fn response_selector(config: &RunConfig) -> ColumnSelector {
    ColumnSelector::parse(&config.data.response)
}

fn feature_selectors(config: &RunConfig) -> Vec<ColumnSelector> {
    config
        .data
        .features
        .iter()
        .map(|f| ColumnSelector::parse(f))
        .collect()
}

fn load_dataset(config: &RunConfig, path: &Path) -> Result<Dataset> {
    load_csv(path, &response_selector(config), &feature_selectors(config))
}

/// The ground-truth manifest written next to simulated datasets.
#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthManifest {
    p: usize,
    m: usize,
    n: usize,
    noise_sd: f64,
    seed: u64,
    split_fraction: f64,
    weights: Vec<f64>,
    planes: Vec<(f64, Vec<f64>)>,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let (p, m, n, noise_sd) = config.data.generator.resolved()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;

    let mut gen_rng = rng::stream(config.seed, &[tag::DATA]);
    let (data, truth) = gen_simulation(p, m, n, noise_sd, &mut gen_rng)?;
    let mut split_rng = rng::stream(config.seed, &[tag::SPLIT]);
    let (train, test) = train_test_split(&data, config.data.split_fraction, &mut split_rng)?;

    write_csv(&train, out.join("train.csv"))?;
    write_csv(&test, out.join("test.csv"))?;
    let manifest = GroundTruthManifest {
        p,
        m,
        n,
        noise_sd,
        seed: config.seed,
        split_fraction: config.data.split_fraction,
        weights: truth.weights.to_vec(),
        planes: truth
            .planes
            .planes()
            .iter()
            .map(|h| (h.offset(), h.normal().to_vec()))
            .collect(),
    };
    std::fs::write(
        out.join("ground_truth.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut report = Report::new();
    report.push("command", "simulate");
    report.push("p", p);
    report.push("m", m);
    report.push("n", n);
    report.push("noise_sd", noise_sd);
    report.push("seed", config.seed);
    report.push("train_rows", train.len());
    report.push("test_rows", test.len());
    report.print();
    Ok(())
}

/// Equal-weight ensemble over the second half of an MCMC chain.
fn chain_tail_ensemble(chain: &[poishp::ModelParams]) -> Result<ParticleEnsemble> {
    let start = chain.len() / 2;
    let particles = chain[start..]
        .iter()
        .map(|params| Particle {
            params: params.clone(),
            log_weight: 0.0,
        })
        .collect();
    ParticleEnsemble::new(particles, 0)
}

fn train_rmse(ensemble: &ParticleEnsemble, data: &Dataset) -> Result<f64> {
    let preds = (0..data.len())
        .map(|i| ensemble.posterior_mean_prediction(data.x().row(i)))
        .collect::<Result<Vec<_>>>()?;
    rmse(&preds, data.y().view())
}

pub fn cmd_fit(
    config: &RunConfig,
    mode: FitMode,
    checkpoint_every: Option<usize>,
    resume: Option<&Path>,
) -> Result<()> {
    config.validate()?;
    if mode == FitMode::Decmp1 && config.hyperparams.n_planes % config.decomposition.k != 0 {
        return Err(Error::Config(format!(
            "intensity decomposition needs the plane count ({}) divisible by K ({})",
            config.hyperparams.n_planes, config.decomposition.k
        )));
    }
    if mode == FitMode::Decmp2 {
        config.partition()?;
    }
    if resume.is_some() && mode != FitMode::Whole {
        return Err(Error::Config("--resume only applies to whole-model fits".into()));
    }
    let train_path = config
        .data
        .train
        .as_ref()
        .ok_or_else(|| Error::Config("data.train is required for fit".into()))?;
    let train_raw = load_dataset(config, train_path)?;

    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;

    let (train, transform) = normalize_to_ball(&train_raw)?;
    let hyper = config.hyperparams();
    let schedule = config.schedule()?;
    let smc_config = config.smc_config();
    let p = train.dimension();

    let start = Instant::now();
    let mut report = Report::new();
    report.push("command", "fit");
    report.push("seed", config.seed);
    report.push("n_train", train.len());
    report.push("dimension", p);
    report.push("n_planes", hyper.n_planes);

    let artifact: PathBuf = match mode {
        FitMode::Whole => {
            report.push("mode", "whole");
            report.push("particles", smc_config.particles);
            report.push("power_steps", schedule.num_steps());
            let mut run = match resume {
                Some(path) => {
                    let snap = read_snapshot(path)?;
                    SmcRun::with_state(
                        &train,
                        &hyper,
                        &schedule,
                        smc_config.clone(),
                        config.seed,
                        snap.ensemble,
                        snap.log_normalizer,
                    )?
                }
                None => SmcRun::new(&train, &hyper, &schedule, smc_config.clone(), config.seed)?,
            };
            let checkpoint_path = out.join("checkpoint.jsonl");
            while run.step()? {
                if let Some(every) = checkpoint_every {
                    if every > 0 && run.ensemble().iteration() % every == 0 {
                        write_snapshot(
                            &checkpoint_path,
                            run.ensemble(),
                            run.log_normalizer(),
                            p,
                            hyper.domain_radius,
                            Some(&transform),
                        )?;
                    }
                }
            }
            let result = run.finish()?;
            let path = out.join("ensemble.jsonl");
            write_snapshot(
                &path,
                &result.ensemble,
                result.log_normalizer,
                p,
                hyper.domain_radius,
                Some(&transform),
            )?;
            report.push("ess", format!("{:.3}", result.final_ess));
            report.push("acceptance_rate", format!("{:.4}", result.acceptance_rate));
            report.push("log_normalizer", format!("{:.4}", result.log_normalizer));
            report.push(
                "train_rmse",
                format!("{:.6}", train_rmse(&result.ensemble, &train)?),
            );
            path
        }
        FitMode::Decmp1 | FitMode::Decmp2 => {
            let fit = if mode == FitMode::Decmp1 {
                report.push("mode", "decmp1");
                fit_intensity_decomp(
                    &train,
                    &hyper,
                    config.decomposition.k,
                    &schedule,
                    &smc_config,
                    config.seed,
                )?
            } else {
                report.push("mode", "decmp2");
                let partition = config.partition()?;
                fit_domain_decomp(&train, &hyper, &partition, &schedule, &smc_config, config.seed)?
            };
            report.push("k", fit.k());
            report.push("particles", smc_config.particles);
            report.push("power_steps", schedule.num_steps());
            for (i, sub) in fit.subfits().iter().enumerate() {
                report.push(&format!("sub{i}.ess"), format!("{:.3}", sub.final_ess));
                report.push(
                    &format!("sub{i}.acceptance_rate"),
                    format!("{:.4}", sub.acceptance_rate),
                );
                report.push(
                    &format!("sub{i}.log_normalizer"),
                    format!("{:.4}", sub.log_normalizer),
                );
            }
            let preds = decomp_predictions(&fit, train.x())?;
            report.push("train_rmse", format!("{:.6}", rmse(&preds, train.y().view())?));
            write_decomp_fit(out, "decomp", &fit, p, hyper.domain_radius, Some(&transform))?
        }
        FitMode::Mcmc => {
            report.push("mode", "mcmc");
            report.push("iterations", config.mcmc.iterations);
            let mut chain_rng = rng::stream(config.seed, &[tag::MCMC]);
            let chain = mcmc_run(&train, &hyper, config.mcmc.iterations, &mut chain_rng)?;
            let ensemble = ParticleEnsemble::new(
                chain
                    .iter()
                    .map(|params| Particle {
                        params: params.clone(),
                        log_weight: 0.0,
                    })
                    .collect(),
                0,
            )?;
            let path = out.join("chain.jsonl");
            write_snapshot(&path, &ensemble, 0.0, p, hyper.domain_radius, Some(&transform))?;
            let moves = chain
                .windows(2)
                .filter(|w| w[0].planes() != w[1].planes())
                .count();
            if chain.len() > 1 {
                report.push(
                    "plane_change_rate",
                    format!("{:.4}", moves as f64 / (chain.len() - 1) as f64),
                );
            }
            report.push(
                "train_rmse",
                format!("{:.6}", train_rmse(&chain_tail_ensemble(&chain)?, &train)?),
            );
            path
        }
    };

    report.push("runtime_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    report.push("artifact", artifact.display());
    report.write(&out.join("fit_report.txt"))?;
    report.print();
    Ok(())
}

/// A loaded fit artifact of any kind.
enum Artifact {
    Ensemble {
        ensemble: ParticleEnsemble,
        transform: Option<BallTransform>,
        is_chain: bool,
    },
    Decomp {
        fit: DecompFit,
        transform: Option<BallTransform>,
    },
}

fn load_artifact(path: &Path) -> Result<Artifact> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "fit artifact {} not found",
            path.display()
        )));
    }
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let (fit, transform) = read_decomp_fit(path)?;
        return Ok(Artifact::Decomp { fit, transform });
    }
    let snap = read_snapshot(path)?;
    let is_chain = path
        .file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with("chain"));
    Ok(Artifact::Ensemble {
        ensemble: snap.ensemble,
        transform: snap.transform,
        is_chain,
    })
}

fn apply_transform(transform: &Option<BallTransform>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    match transform {
        Some(t) => t.apply_matrix(x),
        None => Ok(x.to_owned()),
    }
}

fn decomp_predictions(fit: &DecompFit, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    (0..x.nrows())
        .map(|i| match fit.scheme() {
            DecompScheme::Intensity => {
                poishp::decomposition::predict_intensity_decomp(fit, x.row(i))
            }
            DecompScheme::Domain => poishp::decomposition::predict_domain_decomp(fit, x.row(i)),
        })
        .collect()
}

/// Interval summaries for a domain fit: each row is answered by the cell
/// that owns it.
fn domain_summaries(
    fit: &DecompFit,
    x: ArrayView2<'_, f64>,
    level: f64,
) -> Result<Vec<PredictiveSummary>> {
    let mut out = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let cell = fit.cell_for(x.row(i))?;
        let row = x.row(i).insert_axis(ndarray::Axis(0));
        let summary = posterior_predictive(&fit.subfits()[cell].ensemble, row, level)?;
        out.push(summary[0]);
    }
    Ok(out)
}

/// Predictions (and intervals where the artifact supports them) for the
/// rows of a feature file.
pub fn cmd_predict(
    config: &RunConfig,
    fit_path: &Path,
    data_path: &Path,
    out_path: Option<&Path>,
    level: f64,
) -> Result<()> {
    config.validate()?;
    let artifact = load_artifact(fit_path)?;
    let data = load_dataset(config, data_path)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let out_path = out_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join("predictions.csv"));

    let mut text = String::new();
    match &artifact {
        Artifact::Ensemble {
            ensemble,
            transform,
            is_chain,
        } => {
            let ensemble = if *is_chain {
                chain_tail_from(ensemble)?
            } else {
                ensemble.clone()
            };
            let x = apply_transform(transform, data.x())?;
            let summaries = posterior_predictive(&ensemble, x.view(), level)?;
            text.push_str("mean,lower,upper\n");
            for s in &summaries {
                text.push_str(&format!("{},{},{}\n", s.mean, s.lower, s.upper));
            }
        }
        Artifact::Decomp { fit, transform } => {
            let x = apply_transform(transform, data.x())?;
            match fit.scheme() {
                DecompScheme::Domain => {
                    let summaries = domain_summaries(fit, x.view(), level)?;
                    text.push_str("mean,lower,upper\n");
                    for s in &summaries {
                        text.push_str(&format!("{},{},{}\n", s.mean, s.lower, s.upper));
                    }
                }
                DecompScheme::Intensity => {
                    // Averaged sub-model predictions carry no single
                    // predictive distribution; emit means only.
                    let preds = decomp_predictions(fit, x.view())?;
                    text.push_str("mean\n");
                    for p in &preds {
                        text.push_str(&format!("{p}\n"));
                    }
                }
            }
        }
    }
    std::fs::write(&out_path, text)?;
    println!("predictions = {}", out_path.display());
    Ok(())
}

fn chain_tail_from(ensemble: &ParticleEnsemble) -> Result<ParticleEnsemble> {
    let params: Vec<_> = ensemble
        .particles()
        .iter()
        .map(|p| p.params.clone())
        .collect();
    chain_tail_ensemble(&params)
}

pub fn cmd_evaluate(
    config: &RunConfig,
    fit_path: &Path,
    test_path: Option<&Path>,
    level: f64,
) -> Result<()> {
    config.validate()?;
    let test_path = match test_path {
        Some(p) => p.to_path_buf(),
        None => config
            .data
            .test
            .clone()
            .ok_or_else(|| Error::Config("no test data given (flag or data.test)".into()))?,
    };
    let artifact = load_artifact(fit_path)?;
    let test = load_dataset(config, &test_path)?;
    std::fs::create_dir_all(&config.output_dir)?;

    let mut report = Report::new();
    report.push("command", "evaluate");
    report.push("n_test", test.len());
    report.push("level", level);

    let mut per_point = String::new();
    match &artifact {
        Artifact::Ensemble {
            ensemble,
            transform,
            is_chain,
        } => {
            let ensemble = if *is_chain {
                chain_tail_from(ensemble)?
            } else {
                ensemble.clone()
            };
            let x = apply_transform(transform, test.x())?;
            let summaries = posterior_predictive(&ensemble, x.view(), level)?;
            let preds: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
            report.push("rmse", format!("{:.6}", rmse(&preds, test.y().view())?));
            report.push(
                "coverage",
                format!("{:.6}", coverage(&summaries, test.y().view())?),
            );
            report.push(
                "mean_ci_length",
                format!("{:.6}", mean_ci_length(&summaries)?),
            );
            per_point.push_str("mean,lower,upper,y\n");
            for (s, y) in summaries.iter().zip(test.y()) {
                per_point.push_str(&format!("{},{},{},{y}\n", s.mean, s.lower, s.upper));
            }
        }
        Artifact::Decomp { fit, transform } => {
            let x = apply_transform(transform, test.x())?;
            match fit.scheme() {
                DecompScheme::Domain => {
                    let summaries = domain_summaries(fit, x.view(), level)?;
                    let preds: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
                    report.push("scheme", "domain");
                    report.push("rmse", format!("{:.6}", rmse(&preds, test.y().view())?));
                    report.push(
                        "coverage",
                        format!("{:.6}", coverage(&summaries, test.y().view())?),
                    );
                    report.push(
                        "mean_ci_length",
                        format!("{:.6}", mean_ci_length(&summaries)?),
                    );
                    per_point.push_str("mean,lower,upper,y\n");
                    for (s, y) in summaries.iter().zip(test.y()) {
                        per_point.push_str(&format!("{},{},{},{y}\n", s.mean, s.lower, s.upper));
                    }
                }
                DecompScheme::Intensity => {
                    let preds = decomp_predictions(fit, x.view())?;
                    report.push("scheme", "intensity");
                    report.push("rmse", format!("{:.6}", rmse(&preds, test.y().view())?));
                    per_point.push_str("mean,y\n");
                    for (p, y) in preds.iter().zip(test.y()) {
                        per_point.push_str(&format!("{p},{y}\n"));
                    }
                }
            }
        }
    }

    std::fs::write(config.output_dir.join("per_point.csv"), per_point)?;
    report.write(&config.output_dir.join("metrics.txt"))?;
    report.print();
    Ok(())
}
