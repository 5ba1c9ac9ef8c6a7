//! The MH transition kernel: tempered conjugate Gibbs updates for the noise
//! variance and each output weight, then an independence proposal on one
//! uniformly chosen hyperplane.
//!
//! All three updates carry the annealing power `phi`. Raising the Gaussian
//! likelihood to `phi` rescales its noise variance to `sigma_sq / phi`, so
//! the weight and variance conditionals stay conjugate and one sweep leaves
//! the tempered posterior invariant; at `phi = 1` the sweep is exactly the
//! untempered kernel.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::sample_hyperplane;
use crate::model::{sample_inverse_gamma, Hyperparams, ModelParams};

pub(crate) struct SweepOutcome {
    /// Whether a plane move was proposed (false only when `|P| = 0`).
    pub proposed: bool,
    /// Whether the proposed plane replaced the current one.
    pub accepted: bool,
    /// Log-likelihood of the post-sweep state.
    pub log_likelihood: f64,
}

fn validate_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "annealing power must lie in (0, 1], got {phi}"
        )));
    }
    Ok(())
}

fn validate_inputs(theta: &ModelParams, data: &Dataset, hyper: &Hyperparams) -> Result<()> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData("kernel updates need observations".into()));
    }
    if data.dimension() != theta.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "data has dimension {}, model has {}",
            data.dimension(),
            theta.dimension()
        )));
    }
    Ok(())
}

/// Feature columns for one parameter state, stored column-contiguous:
/// `columns[j]` is feature `j` over all rows (`j = 0` the constant).
struct FeatureColumns {
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl FeatureColumns {
    fn build(theta: &ModelParams, data: &Dataset) -> Self {
        let n = data.len();
        let mut columns = Vec::with_capacity(theta.planes().len() + 1);
        columns.push(vec![1.0; n]);
        for plane in theta.planes().planes() {
            columns.push(Self::plane_column(plane, data));
        }
        Self { columns, n }
    }

    fn plane_column(plane: &crate::geometry::Hyperplane, data: &Dataset) -> Vec<f64> {
        let x = data.x();
        (0..x.nrows()).map(|i| plane.activation(x.row(i))).collect()
    }

    /// Residuals `y_i - sum_j w_j z_ij`.
    fn residuals(&self, weights: ndarray::ArrayView1<'_, f64>, data: &Dataset) -> Vec<f64> {
        let mut r: Vec<f64> = data.y().iter().copied().collect();
        for (j, col) in self.columns.iter().enumerate() {
            let w = weights[j];
            if w != 0.0 {
                for (ri, &z) in r.iter_mut().zip(col) {
                    *ri -= w * z;
                }
            }
        }
        r
    }
}

fn sum_sq(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

/// Tempered conditional for the noise variance, given current residuals.
fn sigma_sq_posterior(hyper: &Hyperparams, phi: f64, n: usize, residual_ss: f64) -> (f64, f64) {
    let a = hyper.a0 + phi * n as f64 / 2.0;
    let b = hyper.b0 + phi * residual_ss / 2.0;
    (a, b)
}

/// Tempered conditional for weight `j`: mean and variance of the normal
/// draw, from the partial-residual cross moment and the column sum of
/// squares. The effective noise variance is `sigma_sq / phi`.
fn weight_posterior(
    hyper: &Hyperparams,
    phi: f64,
    sigma_sq: f64,
    cross: f64,
    col_ss: f64,
) -> (f64, f64) {
    let noise = sigma_sq / phi;
    let denom = noise + hyper.sigma0_sq * col_ss;
    let mean = (hyper.mu0 * noise + hyper.sigma0_sq * cross) / denom;
    let var = noise * hyper.sigma0_sq / denom;
    (mean, var)
}

/// One full kernel application in place: variance update, weight sweep in
/// ascending index order, then (when any plane exists) one plane move.
/// Returns the outcome together with the post-sweep log-likelihood.
pub(crate) fn kernel_sweep<R: Rng + ?Sized>(
    theta: &mut ModelParams,
    data: &Dataset,
    hyper: &Hyperparams,
    phi: f64,
    rng: &mut R,
) -> Result<SweepOutcome> {
    validate_phi(phi)?;
    validate_inputs(theta, data, hyper)?;

    let mut features = FeatureColumns::build(theta, data);
    let n = features.n;
    let mut residuals = features.residuals(theta.weights(), data);

    // (i) noise variance
    let (a, b) = sigma_sq_posterior(hyper, phi, n, sum_sq(&residuals));
    let sigma_sq = sample_inverse_gamma(a, b, rng)?;
    theta.set_sigma_sq(sigma_sq)?;

    // (ii) weights, j = 0 ..= |P| in index order
    for j in 0..theta.weights().len() {
        let w_old = theta.weights()[j];
        let col = &features.columns[j];
        let mut col_ss = 0.0;
        let mut cross = 0.0;
        for (&z, &r) in col.iter().zip(&residuals) {
            col_ss += z * z;
            // partial residual: r_{i,-j} = r_i + w_j z_ij
            cross += (r + w_old * z) * z;
        }
        let (mean, var) = weight_posterior(hyper, phi, sigma_sq, cross, col_ss);
        let draw: f64 = StandardNormal.sample(rng);
        let w_new = mean + var.sqrt() * draw;
        theta.set_weight(j, w_new);
        let delta = w_old - w_new;
        if delta != 0.0 {
            for (r, &z) in residuals.iter_mut().zip(col) {
                *r += delta * z;
            }
        }
    }

    // (iii) one plane move
    let num_planes = theta.planes().len();
    let mut proposed = false;
    let mut accepted = false;
    if num_planes >= 1 {
        proposed = true;
        let plane_idx = rng.random_range(0..num_planes);
        let weight_idx = plane_idx + 1;
        let proposal = sample_hyperplane(
            theta.dimension(),
            theta.planes().domain_radius(),
            rng,
        )?;
        let new_col = FeatureColumns::plane_column(&proposal, data);
        let w = theta.weights()[weight_idx];
        let old_col = &features.columns[weight_idx];
        let mut candidate: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            candidate.push(residuals[i] + w * (old_col[i] - new_col[i]));
        }
        let log_ratio = plane_move_log_ratio(sum_sq(&residuals), sum_sq(&candidate), sigma_sq);
        let u: f64 = rng.random_range(0.0..1.0);
        if u.ln() < phi * log_ratio {
            accepted = true;
            theta.planes_mut().replace_plane(plane_idx, proposal)?;
            features.columns[weight_idx] = new_col;
            residuals = candidate;
        }
    }

    let log_likelihood = gaussian_log_likelihood(n, sum_sq(&residuals), sigma_sq);
    Ok(SweepOutcome {
        proposed,
        accepted,
        log_likelihood,
    })
}

/// Untempered log acceptance ratio of a plane move: the log-likelihood
/// difference `l(theta*) - l(theta)` expressed through residual sums of
/// squares (the normalization constants cancel).
pub(crate) fn plane_move_log_ratio(ss_current: f64, ss_proposed: f64, sigma_sq: f64) -> f64 {
    (ss_current - ss_proposed) / (2.0 * sigma_sq)
}

pub(crate) fn gaussian_log_likelihood(n: usize, residual_ss: f64, sigma_sq: f64) -> f64 {
    let norm_const = -0.5 * (2.0 * std::f64::consts::PI * sigma_sq).ln();
    n as f64 * norm_const - residual_ss / (2.0 * sigma_sq)
}

/// A draw from the tempered variance conditional
/// `IG(a0 + phi N / 2, b0 + phi/2 * sum r_i^2)` with the full residuals
/// `r_i = y_i - sum_{j=0}^{|P|} z_ij w_j`.
pub fn gibbs_sigma_sq<R: Rng + ?Sized>(
    theta: &ModelParams,
    data: &Dataset,
    hyper: &Hyperparams,
    phi: f64,
    rng: &mut R,
) -> Result<f64> {
    validate_phi(phi)?;
    validate_inputs(theta, data, hyper)?;
    let features = FeatureColumns::build(theta, data);
    let residuals = features.residuals(theta.weights(), data);
    let (a, b) = sigma_sq_posterior(hyper, phi, features.n, sum_sq(&residuals));
    sample_inverse_gamma(a, b, rng)
}

/// A draw from the tempered conditional of weight `j` (`j = 0` is the
/// intercept, paired with the constant feature).
pub fn gibbs_weight<R: Rng + ?Sized>(
    theta: &ModelParams,
    j: usize,
    data: &Dataset,
    hyper: &Hyperparams,
    phi: f64,
    rng: &mut R,
) -> Result<f64> {
    validate_phi(phi)?;
    validate_inputs(theta, data, hyper)?;
    if j > theta.planes().len() {
        return Err(Error::InvalidParameter(format!(
            "weight index {j} out of range for |P| = {}",
            theta.planes().len()
        )));
    }
    let features = FeatureColumns::build(theta, data);
    let residuals = features.residuals(theta.weights(), data);
    let col = &features.columns[j];
    let w_old = theta.weights()[j];
    let mut col_ss = 0.0;
    let mut cross = 0.0;
    for (&z, &r) in col.iter().zip(&residuals) {
        col_ss += z * z;
        cross += (r + w_old * z) * z;
    }
    let (mean, var) = weight_posterior(hyper, phi, theta.sigma_sq(), cross, col_ss);
    let draw: f64 = StandardNormal.sample(rng);
    Ok(mean + var.sqrt() * draw)
}

/// One full kernel application returning the new state and whether the
/// plane move was accepted. With no planes the conjugate updates still run
/// and the flag is false.
pub fn mh_step<R: Rng + ?Sized>(
    theta: &ModelParams,
    data: &Dataset,
    hyper: &Hyperparams,
    phi: f64,
    rng: &mut R,
) -> Result<(ModelParams, bool)> {
    let mut next = theta.clone();
    let outcome = kernel_sweep(&mut next, data, hyper, phi, rng)?;
    Ok((next, outcome.accepted))
}
