//! Posterior samplers: conjugate Gibbs updates, the random-walk MH kernel
//! over hyperplanes, and an annealed SMC driver with resampling and ESS
//! tracking.

mod kernel;
mod resample;
mod smc;
mod snapshot;

pub use kernel::{gibbs_sigma_sq, gibbs_weight, mh_step};
pub use resample::{resample_multinomial, resample_systematic, Resampler};
pub use smc::{annealed_smc, mcmc_run, SmcConfig, SmcResult, SmcRun};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::model::{predict_point, ModelParams};

/// The tempering powers `phi_0 = 0 < phi_1 < ... < phi_R = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingSchedule {
    powers: Vec<f64>,
}

/// How [`make_schedule`] spaces the powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleShape {
    /// `phi_r = r / R`.
    Linear,
    /// Increments grow geometrically by this rate, so early powers are
    /// packed near zero (rate > 1) or near one (rate < 1).
    Geometric(f64),
}

impl AnnealingSchedule {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.len() < 2 {
            return Err(Error::InvalidParameter(
                "schedule needs at least phi_0 = 0 and phi_R = 1".into(),
            ));
        }
        if powers[0] != 0.0 || *powers.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "schedule must start at 0 and end at 1, got [{}, ..., {}]",
                powers[0],
                powers.last().unwrap()
            )));
        }
        for pair in powers.windows(2) {
            if pair[0] >= pair[1] || pair.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidParameter(format!(
                    "schedule must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { powers })
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Number of annealing iterations `R`.
    pub fn num_steps(&self) -> usize {
        self.powers.len() - 1
    }
}

/// A valid schedule with `R` steps.
pub fn make_schedule(r_steps: usize, shape: ScheduleShape) -> Result<AnnealingSchedule> {
    if r_steps < 1 {
        return Err(Error::InvalidParameter("schedule needs R >= 1".into()));
    }
    let r = r_steps as f64;
    let powers = match shape {
        ScheduleShape::Linear => (0..=r_steps).map(|k| k as f64 / r).collect(),
        ScheduleShape::Geometric(rate) => {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "geometric rate must be positive, got {rate}"
                )));
            }
            if (rate - 1.0).abs() < 1e-12 {
                (0..=r_steps).map(|k| k as f64 / r).collect()
            } else {
                let denom = rate.powi(r_steps as i32) - 1.0;
                let mut powers: Vec<f64> = (0..=r_steps)
                    .map(|k| (rate.powi(k as i32) - 1.0) / denom)
                    .collect();
                powers[0] = 0.0;
                powers[r_steps] = 1.0;
                powers
            }
        }
    };
    AnnealingSchedule::new(powers)
}

/// One weighted parameter sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub params: ModelParams,
    pub log_weight: f64,
}

/// The SMC state: `L` weighted particles at annealing iteration `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    particles: Vec<Particle>,
    iteration: usize,
}

impl ParticleEnsemble {
    pub fn new(particles: Vec<Particle>, iteration: usize) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::DegenerateEnsemble(
                "ensemble needs at least one particle".into(),
            ));
        }
        Ok(Self {
            particles,
            iteration,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub(crate) fn particles_mut(&mut self) -> &mut Vec<Particle> {
        &mut self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Annealing iteration this ensemble has reached.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub(crate) fn set_iteration(&mut self, r: usize) {
        self.iteration = r;
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight).collect()
    }

    /// Self-normalized weights, summing to one.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        let lw = self.log_weights();
        let lse = log_sum_exp(&lw);
        if !lse.is_finite() {
            return Err(Error::DegenerateEnsemble(
                "all particle weights are zero".into(),
            ));
        }
        Ok(lw.iter().map(|&w| (w - lse).exp()).collect())
    }

    /// Effective sample size of the current weights.
    pub fn ess(&self) -> Result<f64> {
        ess(&self.log_weights())
    }

    /// The ensemble's point prediction: the weighted mean of each particle's
    /// noiseless prediction.
    pub fn posterior_mean_prediction(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let weights = self.normalized_weights()?;
        let mut out = 0.0;
        for (particle, w) in self.particles.iter().zip(&weights) {
            out += w * predict_point(&particle.params, x)?;
        }
        Ok(out)
    }
}

/// `(sum w)^2 / sum w^2` over the normalized weights; lies in `[1, L]`.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    if log_weights.is_empty() {
        return Err(Error::DegenerateEnsemble("no weights".into()));
    }
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::DegenerateEnsemble(
            "all weights are zero; ESS undefined".into(),
        ));
    }
    let doubled: Vec<f64> = log_weights.iter().map(|&w| 2.0 * w).collect();
    let lse2 = log_sum_exp(&doubled);
    Ok((2.0 * lse - lse2).exp())
}

/// `log(sum exp(x_i))`, guarded against empty input and -inf spikes.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
