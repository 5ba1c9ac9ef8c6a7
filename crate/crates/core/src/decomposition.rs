//! Scaling by decomposition: fit `K` independent sub-models and aggregate
//! their predictions.
//!
//! The intensity scheme splits the process itself: `K` sub-fits on the full
//! dataset, each carrying `n_planes / K` hyperplanes, with predictions
//! averaged. The domain scheme splits the data: rows are routed to the
//! slabs of an axis-aligned partition, one full-size sub-fit per slab, and
//! a prediction comes from the slab owning the point.

use std::path::{Path, PathBuf};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::data::{BallTransform, Dataset};
use crate::error::{Error, Result};
use crate::geometry::DomainPartition;
use crate::inference::{
    annealed_smc, read_snapshot, write_snapshot, AnnealingSchedule, Particle, ParticleEnsemble,
    SmcConfig, SmcResult,
};
use crate::model::{sample_prior, Hyperparams};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompScheme {
    Intensity,
    Domain,
}

/// `K` fitted sub-models plus, for the domain scheme, the partition that
/// routes points to them.
#[derive(Debug)]
pub struct DecompFit {
    scheme: DecompScheme,
    subfits: Vec<SmcResult>,
    partition: Option<DomainPartition>,
}

impl DecompFit {
    pub fn scheme(&self) -> DecompScheme {
        self.scheme
    }

    pub fn k(&self) -> usize {
        self.subfits.len()
    }

    pub fn subfits(&self) -> &[SmcResult] {
        &self.subfits
    }

    pub fn submodels(&self) -> impl Iterator<Item = &ParticleEnsemble> {
        self.subfits.iter().map(|s| &s.ensemble)
    }

    pub fn partition(&self) -> Option<&DomainPartition> {
        self.partition.as_ref()
    }

    /// The sub-model owning `x` under the domain scheme.
    pub fn cell_for(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        let partition = self.partition.as_ref().ok_or_else(|| {
            Error::Config("cell lookup needs a domain-scheme fit".into())
        })?;
        partition
            .cell_of(x[partition.axis()])
            .ok_or_else(|| Error::OutOfDomain(format!(
                "coordinate {} on axis {} lies outside the ball of radius {}",
                x[partition.axis()],
                partition.axis(),
                partition.domain_radius()
            )))
    }

    pub fn from_parts(
        scheme: DecompScheme,
        subfits: Vec<SmcResult>,
        partition: Option<DomainPartition>,
    ) -> Result<Self> {
        if subfits.is_empty() {
            return Err(Error::Config("decomposition needs at least one sub-model".into()));
        }
        if scheme == DecompScheme::Domain {
            let partition = partition
                .as_ref()
                .ok_or_else(|| Error::Config("domain scheme needs a partition".into()))?;
            if partition.num_cells() != subfits.len() {
                return Err(Error::Config(format!(
                    "partition has {} cells but {} sub-models were given",
                    partition.num_cells(),
                    subfits.len()
                )));
            }
        }
        let dims: Vec<usize> = subfits
            .iter()
            .map(|s| s.ensemble.particles()[0].params.dimension())
            .collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Config(format!(
                "sub-models disagree on the input dimension: {dims:?}"
            )));
        }
        Ok(Self {
            scheme,
            subfits,
            partition,
        })
    }
}

fn subfit_seed(seed: u64, k: usize, index: usize) -> u64 {
    // A single sub-fit is exactly the whole fit, so it keeps the master
    // seed; real decompositions give every sub-fit its own stream family.
    if k == 1 {
        seed
    } else {
        rng::derive_seed(seed, &[tag::SUBFIT, index as u64])
    }
}

/// Intensity decomposition: `K` independent fits of `n_planes / K` planes
/// each, all on the full dataset.
pub fn fit_intensity_decomp(
    data: &Dataset,
    hyper: &Hyperparams,
    k: usize,
    schedule: &AnnealingSchedule,
    config: &SmcConfig,
    seed: u64,
) -> Result<DecompFit> {
    if k == 0 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    if hyper.n_planes % k != 0 {
        return Err(Error::Config(format!(
            "plane count {} is not divisible by K = {k}",
            hyper.n_planes
        )));
    }
    let sub_hyper = Hyperparams {
        n_planes: hyper.n_planes / k,
        ..*hyper
    };
    let subfits = (0..k)
        .map(|i| annealed_smc(data, &sub_hyper, schedule, config, subfit_seed(seed, k, i)))
        .collect::<Result<Vec<_>>>()?;
    DecompFit::from_parts(DecompScheme::Intensity, subfits, None)
}

/// The average of the `K` sub-models' posterior-mean predictions.
pub fn predict_intensity_decomp(fit: &DecompFit, x: ArrayView1<'_, f64>) -> Result<f64> {
    if fit.scheme() != DecompScheme::Intensity {
        return Err(Error::Config(
            "intensity prediction on a non-intensity fit".into(),
        ));
    }
    let mut total = 0.0;
    for ensemble in fit.submodels() {
        total += ensemble.posterior_mean_prediction(x)?;
    }
    Ok(total / fit.k() as f64)
}

/// Domain decomposition: rows routed to partition cells, one full-size fit
/// per cell. An empty cell logs a warning and gets a prior-only sub-model.
pub fn fit_domain_decomp(
    data: &Dataset,
    hyper: &Hyperparams,
    partition: &DomainPartition,
    schedule: &AnnealingSchedule,
    config: &SmcConfig,
    seed: u64,
) -> Result<DecompFit> {
    if (partition.domain_radius() - hyper.domain_radius).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "partition radius {} does not match the model domain radius {}",
            partition.domain_radius(),
            hyper.domain_radius
        )));
    }
    if partition.axis() >= data.dimension() {
        return Err(Error::Config(format!(
            "partition axis {} out of range for {} features",
            partition.axis(),
            data.dimension()
        )));
    }
    let k = partition.num_cells();
    let mut routed: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..data.len() {
        let coord = data.x()[(i, partition.axis())];
        let cell = partition.cell_of(coord).ok_or_else(|| {
            Error::OutOfDomain(format!(
                "row {i}: coordinate {coord} on axis {} outside the ball",
                partition.axis()
            ))
        })?;
        routed[cell].push(i);
    }

    let mut subfits = Vec::with_capacity(k);
    for (cell, rows) in routed.iter().enumerate() {
        let sub_seed = subfit_seed(seed, k, cell);
        if rows.is_empty() {
            log::warn!("partition cell {cell} holds no training rows; using its prior");
            subfits.push(prior_only_fit(hyper, data.dimension(), schedule, config, sub_seed)?);
            continue;
        }
        let cell_data = data.select_rows(rows)?;
        subfits.push(annealed_smc(&cell_data, hyper, schedule, config, sub_seed)?);
    }
    DecompFit::from_parts(DecompScheme::Domain, subfits, Some(partition.clone()))
}

/// A uniform-weight ensemble of prior draws, standing in for a cell with no
/// data.
fn prior_only_fit(
    hyper: &Hyperparams,
    dimension: usize,
    schedule: &AnnealingSchedule,
    config: &SmcConfig,
    seed: u64,
) -> Result<SmcResult> {
    let particles = (0..config.particles)
        .map(|t| {
            let mut stream = rng::stream(seed, &[tag::INIT, t as u64]);
            Ok(Particle {
                params: sample_prior(hyper, dimension, &mut stream)?,
                log_weight: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ensemble = ParticleEnsemble::new(particles, schedule.num_steps())?;
    let final_ess = ensemble.ess()?;
    Ok(SmcResult {
        ensemble,
        log_normalizer: 0.0,
        acceptance_rate: 0.0,
        final_ess,
    })
}

/// The owning cell's posterior-mean prediction; exactly one indicator
/// fires, and points outside the ball's axis extent are an error.
pub fn predict_domain_decomp(fit: &DecompFit, x: ArrayView1<'_, f64>) -> Result<f64> {
    if fit.scheme() != DecompScheme::Domain {
        return Err(Error::Config("domain prediction on a non-domain fit".into()));
    }
    let cell = fit.cell_for(x)?;
    fit.subfits()[cell].ensemble.posterior_mean_prediction(x)
}

/// The manifest that ties a decomposition fit's snapshot files together.
#[derive(Debug, Serialize, Deserialize)]
pub struct DecompManifest {
    pub scheme: DecompScheme,
    pub k: usize,
    pub submodel_files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<DomainPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<BallTransform>,
}

/// Writes `<stem>.manifest.json` plus one snapshot per sub-model next to it.
pub fn write_decomp_fit(
    dir: impl AsRef<Path>,
    stem: &str,
    fit: &DecompFit,
    dimension: usize,
    domain_radius: f64,
    transform: Option<&BallTransform>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut files = Vec::with_capacity(fit.k());
    for (i, sub) in fit.subfits().iter().enumerate() {
        let name = format!("{stem}.sub{i}.jsonl");
        write_snapshot(
            dir.join(&name),
            &sub.ensemble,
            sub.log_normalizer,
            dimension,
            domain_radius,
            None,
        )?;
        files.push(name);
    }
    let manifest = DecompManifest {
        scheme: fit.scheme(),
        k: fit.k(),
        submodel_files: files,
        partition: fit.partition().cloned(),
        transform: transform.cloned(),
    };
    let path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Loads a manifest and its referenced snapshots back into a fit.
pub fn read_decomp_fit(manifest_path: impl AsRef<Path>) -> Result<(DecompFit, Option<BallTransform>)> {
    let manifest_path = manifest_path.as_ref();
    let manifest: DecompManifest =
        serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    if manifest.submodel_files.len() != manifest.k {
        return Err(Error::Snapshot(format!(
            "manifest announces K = {} but lists {} files",
            manifest.k,
            manifest.submodel_files.len()
        )));
    }
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut subfits = Vec::with_capacity(manifest.k);
    for file in &manifest.submodel_files {
        let snap = read_snapshot(dir.join(file))?;
        let final_ess = snap.ensemble.ess()?;
        subfits.push(SmcResult {
            ensemble: snap.ensemble,
            log_normalizer: snap.log_normalizer,
            acceptance_rate: f64::NAN, // not recorded in snapshots
            final_ess,
        });
    }
    let fit = DecompFit::from_parts(manifest.scheme, subfits, manifest.partition)?;
    Ok((fit, manifest.transform))
}
