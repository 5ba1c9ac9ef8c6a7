//! Ensemble snapshots: a line-delimited record format for checkpoint and
//! resume.
//!
//! The first line is a `meta` record (format version, annealing iteration,
//! particle count, dimension, domain radius, accumulated log-normalizer,
//! and the ball transform when one was fitted). Every following line is one
//! `particle` record carrying its planes as `(offset, normal)` tuples, the
//! output weights, the noise variance, and the log-weight.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::BallTransform;
use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, HyperplaneSet};
use crate::inference::{Particle, ParticleEnsemble};
use crate::model::ModelParams;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Meta {
        version: u32,
        iteration: usize,
        particles: usize,
        dimension: usize,
        domain_radius: f64,
        log_normalizer: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<BallTransform>,
    },
    Particle {
        log_weight: f64,
        sigma_sq: f64,
        weights: Vec<f64>,
        planes: Vec<(f64, Vec<f64>)>,
    },
}

/// A deserialized snapshot: the ensemble plus run metadata.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub ensemble: ParticleEnsemble,
    pub log_normalizer: f64,
    pub dimension: usize,
    pub domain_radius: f64,
    pub transform: Option<BallTransform>,
}

/// Writes one ensemble as a snapshot file.
pub fn write_snapshot(
    path: impl AsRef<Path>,
    ensemble: &ParticleEnsemble,
    log_normalizer: f64,
    dimension: usize,
    domain_radius: f64,
    transform: Option<&BallTransform>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let meta = Record::Meta {
        version: SNAPSHOT_VERSION,
        iteration: ensemble.iteration(),
        particles: ensemble.len(),
        dimension,
        domain_radius,
        log_normalizer,
        transform: transform.cloned(),
    };
    serde_json::to_writer(&mut out, &meta)?;
    out.write_all(b"\n")?;
    for particle in ensemble.particles() {
        let params = &particle.params;
        let planes = params
            .planes()
            .planes()
            .iter()
            .map(|h| (h.offset(), h.normal().to_vec()))
            .collect();
        let record = Record::Particle {
            log_weight: particle.log_weight,
            sigma_sq: params.sigma_sq(),
            weights: params.weights().to_vec(),
            planes,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a snapshot back, validating counts and reconstructing every type
/// invariant.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut lines = reader.lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::Snapshot("snapshot file is empty".into()))??;
    let (iteration, count, dimension, domain_radius, log_normalizer, transform) =
        match serde_json::from_str::<Record>(&meta_line)? {
            Record::Meta {
                version,
                iteration,
                particles,
                dimension,
                domain_radius,
                log_normalizer,
                transform,
            } => {
                if version != SNAPSHOT_VERSION {
                    return Err(Error::Snapshot(format!(
                        "snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})"
                    )));
                }
                (
                    iteration,
                    particles,
                    dimension,
                    domain_radius,
                    log_normalizer,
                    transform,
                )
            }
            Record::Particle { .. } => {
                return Err(Error::Snapshot(
                    "first record must be the meta record".into(),
                ))
            }
        };

    let mut particles = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(&line)? {
            Record::Meta { .. } => {
                return Err(Error::Snapshot("unexpected second meta record".into()))
            }
            Record::Particle {
                log_weight,
                sigma_sq,
                weights,
                planes,
            } => {
                let planes = planes
                    .into_iter()
                    .map(|(offset, normal)| Hyperplane::new(Array1::from_vec(normal), offset))
                    .collect::<Result<Vec<_>>>()?;
                let set = HyperplaneSet::new(dimension, domain_radius, planes)?;
                let params = ModelParams::new(set, Array1::from_vec(weights), sigma_sq)?;
                particles.push(Particle { params, log_weight });
            }
        }
    }
    if particles.len() != count {
        return Err(Error::Snapshot(format!(
            "meta record announces {count} particles, file holds {}",
            particles.len()
        )));
    }
    let ensemble = ParticleEnsemble::new(particles, iteration)?;
    Ok(Snapshot {
        ensemble,
        log_normalizer,
        dimension,
        domain_radius,
        transform,
    })
}
