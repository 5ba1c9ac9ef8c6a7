//! The annealed SMC driver and the plain MCMC baseline.
//!
//! Each annealing iteration propagates every particle through one kernel
//! sweep at the current power, adds the power increment times the post-move
//! log-likelihood to its log-weight, and (before the final iteration)
//! resamples. Particle propagation between resampling barriers runs in
//! parallel; every particle draws from its own stream keyed by
//! `(master seed, iteration, particle index)`, so results are bit-identical
//! for any worker count.

use rand::Rng;
use rayon::prelude::*;

use super::kernel::kernel_sweep;
use super::resample::Resampler;
use super::{log_sum_exp, AnnealingSchedule, Particle, ParticleEnsemble};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{sample_prior, Hyperparams, ModelParams};
use crate::rng::{self, tag};

/// Driver options. `particles` is the population size `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmcConfig {
    pub particles: usize,
    pub resampler: Resampler,
    /// When set, resample only if the ESS falls below
    /// `ess_threshold * particles` instead of at every iteration.
    pub adaptive_resampling: bool,
    pub ess_threshold: f64,
    /// Worker threads for particle propagation; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            resampler: Resampler::Multinomial,
            adaptive_resampling: false,
            ess_threshold: 0.5,
            workers: 0,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!(
                "SMC needs at least 2 particles, got {}",
                self.particles
            )));
        }
        if !(self.ess_threshold > 0.0 && self.ess_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "ESS threshold must lie in (0, 1], got {}",
                self.ess_threshold
            )));
        }
        Ok(())
    }
}

/// Final state of a run: the weighted ensemble plus run diagnostics.
#[derive(Debug, Clone)]
pub struct SmcResult {
    pub ensemble: ParticleEnsemble,
    /// Accumulated estimate of the log normalizing constant (log evidence).
    pub log_normalizer: f64,
    /// Fraction of plane-move proposals accepted across all iterations.
    pub acceptance_rate: f64,
    /// ESS of the final weighted ensemble.
    pub final_ess: f64,
}

/// An in-flight annealed SMC run, stepped one annealing iteration at a
/// time. Supports checkpoint snapshots between iterations and exact
/// resumption (per-iteration streams make a resumed run identical to an
/// uninterrupted one).
pub struct SmcRun<'a> {
    data: &'a Dataset,
    hyper: &'a Hyperparams,
    schedule: &'a AnnealingSchedule,
    config: SmcConfig,
    seed: u64,
    pool: Option<rayon::ThreadPool>,
    ensemble: ParticleEnsemble,
    log_normalizer: f64,
    accepted: u64,
    proposed: u64,
}

impl<'a> SmcRun<'a> {
    /// Initializes `L` prior particles with unit weights (iteration 0).
    pub fn new(
        data: &'a Dataset,
        hyper: &'a Hyperparams,
        schedule: &'a AnnealingSchedule,
        config: SmcConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        hyper.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyData("SMC needs observations".into()));
        }
        let p = data.dimension();
        let particles = (0..config.particles)
            .map(|t| {
                let mut stream = rng::stream(seed, &[tag::INIT, t as u64]);
                Ok(Particle {
                    params: sample_prior(hyper, p, &mut stream)?,
                    log_weight: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ensemble = ParticleEnsemble::new(particles, 0)?;
        Self::with_state(data, hyper, schedule, config, seed, ensemble, 0.0)
    }

    /// Rebuilds a run from a checkpointed ensemble and log-normalizer.
    pub fn with_state(
        data: &'a Dataset,
        hyper: &'a Hyperparams,
        schedule: &'a AnnealingSchedule,
        config: SmcConfig,
        seed: u64,
        ensemble: ParticleEnsemble,
        log_normalizer: f64,
    ) -> Result<Self> {
        config.validate()?;
        if ensemble.len() != config.particles {
            return Err(Error::Config(format!(
                "ensemble holds {} particles, config says {}",
                ensemble.len(),
                config.particles
            )));
        }
        if ensemble.iteration() > schedule.num_steps() {
            return Err(Error::Config(format!(
                "ensemble is at iteration {}, schedule has only {} steps",
                ensemble.iteration(),
                schedule.num_steps()
            )));
        }
        let pool = if config.workers > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            data,
            hyper,
            schedule,
            config,
            seed,
            pool,
            ensemble,
            log_normalizer,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn is_finished(&self) -> bool {
        self.ensemble.iteration() >= self.schedule.num_steps()
    }

    /// Runs one annealing iteration: propagate, weight, maybe resample.
    /// Returns false once the schedule is exhausted.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let r = self.ensemble.iteration() + 1;
        let powers = self.schedule.powers();
        let phi = powers[r];
        let delta_phi = phi - powers[r - 1];
        let final_iteration = r == self.schedule.num_steps();

        let data = self.data;
        let hyper = self.hyper;
        let seed = self.seed;
        let propagate = |particles: &[Particle]| -> Result<Vec<(ModelParams, bool, bool, f64)>> {
            particles
                .par_iter()
                .enumerate()
                .map(|(t, particle)| {
                    let mut stream = rng::stream(seed, &[tag::KERNEL, r as u64, t as u64]);
                    let mut params = particle.params.clone();
                    let outcome = kernel_sweep(&mut params, data, hyper, phi, &mut stream)?;
                    Ok((params, outcome.proposed, outcome.accepted, outcome.log_likelihood))
                })
                .collect()
        };
        let moved = match &self.pool {
            Some(pool) => pool.install(|| propagate(self.ensemble.particles()))?,
            None => propagate(self.ensemble.particles())?,
        };

        // Weighting: log(sum_t Wprev_t * exp(inc_t)) extends the normalizer
        // estimate; each particle then carries its updated log-weight.
        let prev_lw = self.ensemble.log_weights();
        let prev_lse = log_sum_exp(&prev_lw);
        if !prev_lse.is_finite() {
            return Err(Error::DegenerateEnsemble(
                "all particle weights vanished before weighting".into(),
            ));
        }
        let mut weighted_terms = Vec::with_capacity(moved.len());
        for (t, ((params, proposed, accepted, log_lik), prev)) in
            moved.into_iter().zip(&prev_lw).enumerate()
        {
            let increment = delta_phi * log_lik;
            let log_weight = prev + increment;
            if log_weight.is_nan() {
                return Err(Error::DegenerateEnsemble(
                    "particle weight became NaN during weighting".into(),
                ));
            }
            weighted_terms.push((prev - prev_lse) + increment);
            if proposed {
                self.proposed += 1;
                if accepted {
                    self.accepted += 1;
                }
            }
            self.ensemble.particles_mut()[t] = Particle { params, log_weight };
        }
        self.log_normalizer += log_sum_exp(&weighted_terms);
        self.ensemble.set_iteration(r);

        if !final_iteration {
            let resample_now = if self.config.adaptive_resampling {
                self.ensemble.ess()? < self.config.ess_threshold * self.config.particles as f64
            } else {
                true
            };
            if resample_now {
                let mut stream = rng::stream(self.seed, &[tag::RESAMPLE, r as u64]);
                self.ensemble = self.config.resampler.resample(&self.ensemble, &mut stream)?;
            }
        }
        Ok(true)
    }

    /// Runs the remaining iterations and returns the final result.
    pub fn finish(mut self) -> Result<SmcResult> {
        while self.step()? {}
        let final_ess = self.ensemble.ess()?;
        let acceptance_rate = if self.proposed > 0 {
            self.accepted as f64 / self.proposed as f64
        } else {
            0.0
        };
        Ok(SmcResult {
            ensemble: self.ensemble,
            log_normalizer: self.log_normalizer,
            acceptance_rate,
            final_ess,
        })
    }
}

/// Full annealed SMC run; see [`SmcRun`] for stepping/checkpointing.
pub fn annealed_smc(
    data: &Dataset,
    hyper: &Hyperparams,
    schedule: &AnnealingSchedule,
    config: &SmcConfig,
    seed: u64,
) -> Result<SmcResult> {
    SmcRun::new(data, hyper, schedule, config.clone(), seed)?.finish()
}

/// The non-annealed baseline: a plain MH chain at full power, one state per
/// iteration. Two runs with equal seeds produce identical chains.
pub fn mcmc_run<R: Rng + ?Sized>(
    data: &Dataset,
    hyper: &Hyperparams,
    iterations: usize,
    rng: &mut R,
) -> Result<Vec<ModelParams>> {
    if iterations < 1 {
        return Err(Error::InvalidParameter("need at least one iteration".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyData("MCMC needs observations".into()));
    }
    let mut state = sample_prior(hyper, data.dimension(), rng)?;
    let mut chain = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        kernel_sweep(&mut state, data, hyper, 1.0, rng)?;
        chain.push(state.clone());
    }
    Ok(chain)
}
