//! Resampling: pruning low-weight particles by redrawing the population
//! from the weighted empirical distribution. Output weights are reset to
//! unity (log-weight zero).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Particle, ParticleEnsemble};
use crate::error::Result;

/// Which resampling rule the SMC driver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Resampler {
    /// `L` i.i.d. draws proportional to the weights.
    #[default]
    Multinomial,
    /// One uniform offset with `L` evenly spaced points over the CDF.
    Systematic,
}

impl Resampler {
    pub fn resample<R: Rng + ?Sized>(
        &self,
        ensemble: &ParticleEnsemble,
        rng: &mut R,
    ) -> Result<ParticleEnsemble> {
        match self {
            Resampler::Multinomial => resample_multinomial(ensemble, rng),
            Resampler::Systematic => resample_systematic(ensemble, rng),
        }
    }
}

fn cumulative_weights(ensemble: &ParticleEnsemble) -> Result<Vec<f64>> {
    let weights = ensemble.normalized_weights()?;
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cumulative.push(acc);
    }
    // Guard the last edge against rounding below 1.
    if let Some(last) = cumulative.last_mut() {
        *last = f64::max(*last, 1.0);
    }
    Ok(cumulative)
}

fn select(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c < u).min(cumulative.len() - 1)
}

fn rebuild(ensemble: &ParticleEnsemble, picks: Vec<usize>) -> Result<ParticleEnsemble> {
    let particles = picks
        .into_iter()
        .map(|t| Particle {
            params: ensemble.particles()[t].params.clone(),
            log_weight: 0.0,
        })
        .collect();
    ParticleEnsemble::new(particles, ensemble.iteration())
}

/// `L` i.i.d. categorical draws with probability proportional to the
/// weights; the expected copy count of particle `t` is `L` times its
/// normalized weight.
pub fn resample_multinomial<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    let cumulative = cumulative_weights(ensemble)?;
    let picks = (0..ensemble.len())
        .map(|_| select(&cumulative, rng.random_range(0.0..1.0)))
        .collect();
    rebuild(ensemble, picks)
}

/// Systematic resampling: a single uniform offset in `[0, 1/L)` fixes all
/// `L` strata, giving lower resampling variance than multinomial draws.
pub fn resample_systematic<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    let cumulative = cumulative_weights(ensemble)?;
    let l = ensemble.len();
    let offset: f64 = rng.random_range(0.0..1.0) / l as f64;
    let picks = (0..l)
        .map(|k| select(&cumulative, offset + k as f64 / l as f64))
        .collect();
    rebuild(ensemble, picks)
}
