//! Bayesian regression with Poisson hyperplane processes.
//!
//! A two-layer ReLU network whose hidden layer is a realization of a Poisson
//! hyperplane process on a bounded ball: each hidden unit is a hyperplane
//! `(offset, normal)` and activates as `relu(<x, normal> - offset)`. Output
//! weights carry Gaussian priors and the noise variance an inverse-gamma
//! prior, so the weight and variance conditionals are conjugate. Posterior
//! inference runs either a random-walk Metropolis-Hastings chain or an
//! annealed sequential Monte Carlo sampler whose kernels combine the
//! conjugate Gibbs updates with an independence plane-move.
//!
//! Module map:
//!
//! - [`geometry`]: hyperplanes, process sampling, the ReLU feature map, and
//!   the superposition/restriction constructions.
//! - [`model`]: priors, the deterministic predictor, and the Gaussian
//!   likelihood.
//! - [`inference`]: Gibbs/MH kernels, multinomial and systematic resampling,
//!   annealing schedules, the SMC driver, and ensemble snapshots.
//! - [`decomposition`]: intensity-split and domain-split fitting with
//!   averaged / indicator-routed prediction aggregation.
//! - [`data`]: synthetic generators, CSV ingestion, splits, and ball
//!   normalization.
//! - [`evaluation`]: posterior-predictive summaries, RMSE, coverage, and
//!   interval-length metrics.

pub mod data;
pub mod decomposition;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod inference;
pub mod model;
pub mod rng;

pub use data::{BallTransform, Dataset, GroundTruth};
pub use decomposition::{DecompFit, DecompScheme};
pub use error::{Error, Result};
pub use evaluation::PredictiveSummary;
pub use geometry::{DomainPartition, Hyperplane, HyperplaneSet};
pub use inference::{
    AnnealingSchedule, Particle, ParticleEnsemble, Resampler, SmcConfig, SmcResult,
};
pub use model::{Hyperparams, ModelParams};
