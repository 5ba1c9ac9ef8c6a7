//! Shared test oracles: classical goodness-of-fit machinery and an
//! independent quadrature oracle for the conjugate linear sub-model.
//!
//! Everything here deliberately avoids the library's inference path: design
//! matrices are rebuilt with plain loops and posteriors come from analytic
//! marginalization plus one-dimensional quadrature, so sampler bugs cannot
//! cancel against oracle bugs.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

// ---------------------------------------------------------------------------
// Goodness-of-fit helpers
// ---------------------------------------------------------------------------

/// Pearson chi-square p-value for observed counts vs expected counts.
/// Degrees of freedom: bins - 1.
pub fn chi_square_p_value(observed: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive dof");
    1.0 - chi.cdf(statistic)
}

/// Chi-square test of integer draws against a Poisson law. Count bins with
/// expected mass below 5 are merged into the tails.
pub fn poisson_gof_p_value(draws: &[usize], lambda: f64) -> f64 {
    let n = draws.len() as f64;
    let max_k = *draws.iter().max().expect("draws nonempty");

    // Poisson pmf by recurrence.
    let mut pmf = Vec::with_capacity(max_k + 2);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for k in 1..=max_k {
        p *= lambda / k as f64;
        pmf.push(p);
    }

    let mut counts = vec![0.0; max_k + 1];
    for &d in draws {
        counts[d] += 1.0;
    }

    // Merge low-expectation bins from both tails and pool the upper
    // remainder mass into the last bin.
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for k in 0..=max_k {
        acc_o += counts[k];
        acc_e += n * pmf[k];
        if acc_e >= 5.0 {
            observed.push(acc_o);
            expected.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    // Remaining upper tail (including mass beyond max_k).
    let tail_mass: f64 = 1.0 - pmf.iter().sum::<f64>();
    acc_e += n * tail_mass.max(0.0);
    if acc_e > 0.0 || acc_o > 0.0 {
        if let (Some(o), Some(e)) = (observed.last_mut(), expected.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        }
    }
    chi_square_p_value(&observed, &expected)
}

/// Kolmogorov-Smirnov p-value of draws against the Uniform(0, 1) CDF
/// (asymptotic Kolmogorov distribution; fine for the sample sizes here).
pub fn ks_uniform_p_value(draws: &mut [f64]) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let mut d_stat: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let upper = (i as f64 + 1.0) / n - x;
        let lower = x - i as f64 / n;
        d_stat = d_stat.max(upper).max(lower);
    }
    let t = n.sqrt() * d_stat;
    let mut p = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        p += sign * (-2.0 * (k as f64) * (k as f64) * t * t).exp();
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Sample correlation coefficient.
pub fn sample_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Independent conjugate oracle
// ---------------------------------------------------------------------------

/// The linear sub-model with the hyperplanes held fixed:
/// `y ~ N(Z w, sigma_sq I)` tempered to power `phi`, independent priors
/// `w_j ~ N(mu0, sigma0_sq)` and `sigma_sq ~ IG(a0, b0)`.
///
/// Conditional on `sigma_sq` everything is Gaussian in closed form; the
/// `sigma_sq` dimension is integrated on a dense log grid.
pub struct ConjugateOracle {
    z: DMatrix<f64>,
    y: DVector<f64>,
    pub a0: f64,
    pub b0: f64,
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub phi: f64,
    // eigendecomposition of Z Z^T for the y-marginal
    eigvals: Vec<f64>,
    y_tilde: Vec<f64>,
}

/// Quadrature grid over log(sigma_sq).
const LOG_VAR_LO: f64 = -18.0;
const LOG_VAR_HI: f64 = 9.0;
const LOG_VAR_POINTS: usize = 2400;

impl ConjugateOracle {
    pub fn new(
        z: DMatrix<f64>,
        y: DVector<f64>,
        a0: f64,
        b0: f64,
        mu0: f64,
        sigma0_sq: f64,
        phi: f64,
    ) -> Self {
        let n = z.nrows();
        let ones = DVector::from_element(z.ncols(), 1.0);
        let prior_mean = &z * (&ones * mu0);
        let centered = &y - prior_mean;
        let zzt = &z * z.transpose();
        let eigen = nalgebra::SymmetricEigen::new(zzt);
        let mut eigvals: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        for v in &mut eigvals {
            *v = v.max(0.0); // clamp tiny negative rounding
        }
        let y_tilde: Vec<f64> = (eigen.eigenvectors.transpose() * centered)
            .iter()
            .copied()
            .collect();
        assert_eq!(y_tilde.len(), n);
        Self {
            z,
            y,
            a0,
            b0,
            mu0,
            sigma0_sq,
            phi,
            eigvals,
            y_tilde,
        }
    }

    fn log_ig_density(&self, sigma_sq: f64) -> f64 {
        self.a0 * self.b0.ln() - ln_gamma(self.a0) - (self.a0 + 1.0) * sigma_sq.ln()
            - self.b0 / sigma_sq
    }

    /// log of `c(sigma_sq, phi) * N(y; mu0 Z 1, (sigma_sq/phi) I + sigma0_sq Z Z^T)`,
    /// the tempered likelihood with the weights integrated out.
    fn log_marginal_given_var(&self, sigma_sq: f64) -> f64 {
        let n = self.y_tilde.len() as f64;
        let log_c = 0.5 * n * (1.0 - self.phi) * (2.0 * std::f64::consts::PI * sigma_sq).ln()
            - 0.5 * n * self.phi.ln();
        let noise = sigma_sq / self.phi;
        let mut log_det = 0.0;
        let mut quad = 0.0;
        for (&d, &yt) in self.eigvals.iter().zip(&self.y_tilde) {
            let lambda = noise + self.sigma0_sq * d;
            log_det += lambda.ln();
            quad += yt * yt / lambda;
        }
        log_c - 0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
    }

    /// Conditional posterior mean of the weights given `sigma_sq`.
    fn weight_mean_given_var(&self, sigma_sq: f64) -> DVector<f64> {
        let d = self.z.ncols();
        let noise = sigma_sq / self.phi;
        let mut a = self.z.transpose() * &self.z / noise;
        for i in 0..d {
            a[(i, i)] += 1.0 / self.sigma0_sq;
        }
        let rhs = self.z.transpose() * &self.y / noise
            + DVector::from_element(d, self.mu0 / self.sigma0_sq);
        a.cholesky().expect("posterior precision is PD").solve(&rhs)
    }

    fn grid(&self) -> impl Iterator<Item = f64> {
        let du = (LOG_VAR_HI - LOG_VAR_LO) / (LOG_VAR_POINTS as f64 - 1.0);
        (0..LOG_VAR_POINTS).map(move |i| LOG_VAR_LO + du * i as f64)
    }

    /// Unnormalized log posterior weight of each grid node (the `e^u`
    /// Jacobian for integration in `u = ln sigma_sq` included).
    fn node_log_weights(&self) -> Vec<f64> {
        self.grid()
            .map(|u| {
                let var = u.exp();
                self.log_ig_density(var) + self.log_marginal_given_var(var) + u
            })
            .collect()
    }

    fn normalized_node_weights(&self) -> Vec<f64> {
        let lw = self.node_log_weights();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = lw.iter().map(|&v| (v - max).exp()).collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        w
    }

    /// Exact posterior mean of the weight vector.
    pub fn posterior_weight_mean(&self) -> Vec<f64> {
        let weights = self.normalized_node_weights();
        let mut mean = DVector::zeros(self.z.ncols());
        for (u, w) in self.grid().zip(&weights) {
            mean += self.weight_mean_given_var(u.exp()) * *w;
        }
        mean.iter().copied().collect()
    }

    /// Exact posterior variance of each weight, by the law of total
    /// variance over the noise-variance grid.
    pub fn posterior_weight_variance(&self) -> Vec<f64> {
        let d = self.z.ncols();
        let weights = self.normalized_node_weights();
        let mut second = DVector::<f64>::zeros(d);
        let mut first = DVector::<f64>::zeros(d);
        for (u, w) in self.grid().zip(&weights) {
            let var = u.exp();
            let m = self.weight_mean_given_var(var);
            // Conditional covariance diagonal from the precision inverse.
            let noise = var / self.phi;
            let mut a = self.z.transpose() * &self.z / noise;
            for i in 0..d {
                a[(i, i)] += 1.0 / self.sigma0_sq;
            }
            let cov = a.try_inverse().expect("posterior precision invertible");
            for j in 0..d {
                second[j] += w * (cov[(j, j)] + m[j] * m[j]);
                first[j] += w * m[j];
            }
        }
        (0..d).map(|j| second[j] - first[j] * first[j]).collect()
    }

    /// Exact posterior mean of the noise variance.
    pub fn posterior_var_mean(&self) -> f64 {
        let weights = self.normalized_node_weights();
        self.grid()
            .zip(&weights)
            .map(|(u, w)| u.exp() * w)
            .sum()
    }

    /// log of the tempered evidence `integral p(y|theta)^phi p(theta)`.
    pub fn log_marginal(&self) -> f64 {
        let lw = self.node_log_weights();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = lw.iter().map(|&v| (v - max).exp()).sum();
        let du = (LOG_VAR_HI - LOG_VAR_LO) / (LOG_VAR_POINTS as f64 - 1.0);
        max + (sum * du).ln()
    }
}

// ---------------------------------------------------------------------------
// The discretized one-plane problem and its enumerated posterior
// ---------------------------------------------------------------------------

/// Frozen N = 5, p = 1 regression problem for the grid-enumeration oracle.
pub const GRID_X: [f64; 5] = [-0.9, -0.45, 0.1, 0.5, 0.9];
pub const GRID_Y: [f64; 5] = [0.42, 0.21, 0.35, 0.25, 0.98];
pub const GRID_BINS: usize = 50;

pub fn grid_hyper() -> poishp::Hyperparams {
    poishp::Hyperparams {
        a0: 2.0,
        b0: 0.5,
        mu0: 0.0,
        sigma0_sq: 1.0,
        n_planes: 1,
        domain_radius: 1.0,
    }
}

pub fn grid_dataset() -> poishp::Dataset {
    let x = ndarray::Array2::from_shape_fn((5, 1), |(i, _)| GRID_X[i]);
    let y = ndarray::Array1::from_iter(GRID_Y);
    poishp::Dataset::new(x, y, None).unwrap()
}

/// Design matrix of the one-plane model at (sign, offset), built with plain
/// loops (independent of the library's feature map).
fn grid_design(sign: f64, offset: f64) -> DMatrix<f64> {
    DMatrix::from_fn(5, 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            (sign * GRID_X[i] - offset).max(0.0)
        }
    })
}

/// Enumerated tempered posterior mass of each offset bin, the plane sign
/// marginalized out. Bin k covers (k/B, (k+1)/B]; within-bin integration by
/// Simpson on five points.
pub fn grid_oracle_bin_masses(phi: f64) -> Vec<f64> {
    let hyper = grid_hyper();
    let y = DVector::from_row_slice(&GRID_Y);
    let log_mass_at = |sign: f64, mu: f64| -> f64 {
        let oracle = ConjugateOracle::new(
            grid_design(sign, mu),
            y.clone(),
            hyper.a0,
            hyper.b0,
            hyper.mu0,
            hyper.sigma0_sq,
            phi,
        );
        oracle.log_marginal()
    };

    let b = GRID_BINS;
    let mut masses = vec![0.0; b];
    let width = 1.0 / b as f64;
    // Simpson weights over five equally spaced points.
    let simpson = [1.0, 4.0, 2.0, 4.0, 1.0];
    let mut max_log = f64::NEG_INFINITY;
    let mut logs: Vec<Vec<f64>> = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k as f64 * width;
        let mut pts = Vec::with_capacity(10);
        for sign in [1.0, -1.0] {
            for (s, &w) in simpson.iter().enumerate() {
                let mu = (lo + width * s as f64 / 4.0).max(1e-9);
                let lm = log_mass_at(sign, mu) + f64::ln(w);
                max_log = max_log.max(lm);
                pts.push(lm);
            }
        }
        logs.push(pts);
    }
    for (k, pts) in logs.iter().enumerate() {
        masses[k] = pts.iter().map(|&l| (l - max_log).exp()).sum();
    }
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    masses
}

/// Bins plane offsets into the oracle's grid.
pub fn offset_bin(offset: f64) -> usize {
    ((offset * GRID_BINS as f64).floor() as usize).min(GRID_BINS - 1)
}
