//! The hierarchical regression model.
//!
//! Planes come from the hyperplane process prior, the noise variance from an
//! inverse-gamma prior, and each output weight (intercept included) from an
//! independent normal prior. Conditional on all three, responses are
//! Gaussian around the two-layer ReLU predictor.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{sample_php, HyperplaneSet, PhpMode};

/// Prior hyperparameters plus the prespecified plane count and ball radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Inverse-gamma shape for the noise variance.
    pub a0: f64,
    /// Inverse-gamma scale for the noise variance.
    pub b0: f64,
    /// Prior mean of every output weight.
    pub mu0: f64,
    /// Prior variance of every output weight.
    pub sigma0_sq: f64,
    /// Number of realized hyperplanes, fixed for a run.
    pub n_planes: usize,
    /// Radius of the ball bounding the (normalized) data domain.
    pub domain_radius: f64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a0", self.a0),
            ("b0", self.b0),
            ("sigma0_sq", self.sigma0_sq),
            ("domain_radius", self.domain_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.mu0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu0 must be finite, got {}",
                self.mu0
            )));
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            a0: 2.0,
            b0: 1.0,
            mu0: 0.0,
            sigma0_sq: 1.0,
            n_planes: 2,
            domain_radius: 1.0,
        }
    }
}

/// One complete parameter state: planes, output weights (intercept first),
/// and the noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    planes: HyperplaneSet,
    weights: Array1<f64>,
    sigma_sq: f64,
}

impl ModelParams {
    pub fn new(planes: HyperplaneSet, weights: Array1<f64>, sigma_sq: f64) -> Result<Self> {
        if weights.len() != planes.len() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "weights length {} must equal |P| + 1 = {}",
                weights.len(),
                planes.len() + 1
            )));
        }
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be positive, got {sigma_sq}"
            )));
        }
        Ok(Self {
            planes,
            weights,
            sigma_sq,
        })
    }

    pub fn planes(&self) -> &HyperplaneSet {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut HyperplaneSet {
        &mut self.planes
    }

    /// Output weights; index 0 is the intercept paired with the constant
    /// feature, index j >= 1 with plane j - 1.
    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn set_weight(&mut self, index: usize, value: f64) {
        self.weights[index] = value;
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn set_sigma_sq(&mut self, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be positive, got {value}"
            )));
        }
        self.sigma_sq = value;
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.planes.dimension()
    }
}

/// An inverse-gamma draw with shape `a` and scale `b` (mean `b / (a - 1)`),
/// as the reciprocal of a gamma draw with shape `a` and rate `b`. This is
/// the parameterization under which the conjugate variance update holds.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse-gamma parameters must be positive, got ({a}, {b})"
        )));
    }
    let gamma = Gamma::new(a, 1.0 / b)
        .map_err(|e| Error::InvalidParameter(format!("gamma({a}, rate {b}): {e}")))?;
    loop {
        let g = gamma.sample(rng);
        if g > 0.0 && g.is_finite() {
            return Ok(1.0 / g);
        }
    }
}

/// A draw from the joint prior: planes, then the noise variance, then the
/// weights.
pub fn sample_prior<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    p: usize,
    rng: &mut R,
) -> Result<ModelParams> {
    hyper.validate()?;
    let planes = sample_php(
        p,
        hyper.domain_radius,
        PhpMode::FixedCount(hyper.n_planes),
        rng,
    )?;
    let sigma_sq = sample_inverse_gamma(hyper.a0, hyper.b0, rng)?;
    let normal = Normal::new(hyper.mu0, hyper.sigma0_sq.sqrt())
        .map_err(|e| Error::InvalidParameter(format!("weight prior: {e}")))?;
    let weights = Array1::from_iter((0..=hyper.n_planes).map(|_| normal.sample(rng)));
    ModelParams::new(planes, weights, sigma_sq)
}

/// The noiseless mean response at `x`:
/// `w0 + sum_j w_j * relu(<x, n_j> - mu_j)`.
pub fn predict_point(theta: &ModelParams, x: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != theta.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "input has dimension {}, model has {}",
            x.len(),
            theta.dimension()
        )));
    }
    let w = theta.weights();
    let mut out = w[0];
    for (j, plane) in theta.planes().planes().iter().enumerate() {
        out += w[j + 1] * plane.activation(x);
    }
    Ok(out)
}

/// Gaussian log-likelihood of the whole dataset, summed in log space.
pub fn log_likelihood(theta: &ModelParams, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("log-likelihood needs observations".into()));
    }
    if data.dimension() != theta.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "data has dimension {}, model has {}",
            data.dimension(),
            theta.dimension()
        )));
    }
    let sigma_sq = theta.sigma_sq();
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    let norm_const = -0.5 * (2.0 * std::f64::consts::PI * sigma_sq).ln();
    let mut total = 0.0;
    for i in 0..data.len() {
        let mean = predict_point(theta, data.x().row(i))?;
        let r = data.y()[i] - mean;
        total += norm_const - r * r / (2.0 * sigma_sq);
    }
    Ok(total)
}
