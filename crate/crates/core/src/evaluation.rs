//! Posterior-predictive summaries and the regression metrics.
//!
//! Predictive intervals come from the weighted Gaussian mixture
//! `sum_t w_t N(predict(theta_t, x), sigma_sq_t)`: the noise variance is
//! part of the mixture so the intervals cover the noisy response, not just
//! the mean surface. Quantiles are found by bisection on the analytic
//! mixture CDF.

use ndarray::{ArrayView1, ArrayView2};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::inference::ParticleEnsemble;
use crate::model::predict_point;

/// Tolerance of the quantile bisection, in response units.
const BISECTION_TOL: f64 = 1e-8;

/// One test point's predictive mean and central credible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// The weighted mixture components at one input point.
struct Mixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl Mixture {
    fn cdf(&self, q: f64) -> f64 {
        let mut total = 0.0;
        for ((&w, &m), &sd) in self.weights.iter().zip(&self.means).zip(&self.sds) {
            // Component CDFs via the standard normal; sd > 0 by invariant.
            let z = (q - m) / sd;
            total += w * standard_normal_cdf(z);
        }
        total
    }

    /// Smallest q with CDF(q) >= prob, by bisection.
    fn quantile(&self, prob: f64) -> f64 {
        let max_sd = self.sds.iter().copied().fold(0.0, f64::max);
        let mut lo = self.means.iter().copied().fold(f64::INFINITY, f64::min) - 12.0 * max_sd;
        let mut hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 12.0 * max_sd;
        while self.cdf(lo) > prob {
            lo -= 12.0 * max_sd;
        }
        while self.cdf(hi) < prob {
            hi += 12.0 * max_sd;
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    // statrs' unit normal; construction cannot fail for (0, 1).
    static UNIT: std::sync::LazyLock<Normal> =
        std::sync::LazyLock::new(|| Normal::new(0.0, 1.0).expect("unit normal"));
    UNIT.cdf(z)
}

/// Predictive mean and central `level` interval for every row of `x`.
pub fn posterior_predictive(
    ensemble: &ParticleEnsemble,
    x: ArrayView2<'_, f64>,
    level: f64,
) -> Result<Vec<PredictiveSummary>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let weights = ensemble.normalized_weights()?;
    let sds: Vec<f64> = ensemble
        .particles()
        .iter()
        .map(|p| p.params.sigma_sq().sqrt())
        .collect();
    let lower_p = (1.0 - level) / 2.0;
    let upper_p = (1.0 + level) / 2.0;

    let mut out = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let row = x.row(i);
        let means = ensemble
            .particles()
            .iter()
            .map(|p| predict_point(&p.params, row))
            .collect::<Result<Vec<f64>>>()?;
        let mean = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
        let mixture = Mixture {
            weights: weights.clone(),
            means,
            sds: sds.clone(),
        };
        out.push(PredictiveSummary {
            mean,
            lower: mixture.quantile(lower_p),
            upper: mixture.quantile(upper_p),
            level,
        });
    }
    Ok(out)
}

/// Root mean squared error, `sqrt(sum (pred_i - y_i)^2 / N)`.
pub fn rmse(predictions: &[f64], y: ArrayView1<'_, f64>) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyData("RMSE needs predictions".into()));
    }
    if predictions.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} responses",
            predictions.len(),
            y.len()
        )));
    }
    let ss: f64 = predictions
        .iter()
        .zip(y.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((ss / predictions.len() as f64).sqrt())
}

/// Fraction of responses falling inside their interval.
pub fn coverage(summaries: &[PredictiveSummary], y: ArrayView1<'_, f64>) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::EmptyData("coverage needs intervals".into()));
    }
    if summaries.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} intervals vs {} responses",
            summaries.len(),
            y.len()
        )));
    }
    let hits = summaries
        .iter()
        .zip(y.iter())
        .filter(|(s, &yi)| s.lower <= yi && yi <= s.upper)
        .count();
    Ok(hits as f64 / summaries.len() as f64)
}

/// Mean interval width.
pub fn mean_ci_length(summaries: &[PredictiveSummary]) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::EmptyData("interval lengths need intervals".into()));
    }
    let total: f64 = summaries.iter().map(|s| s.upper - s.lower).sum();
    Ok(total / summaries.len() as f64)
}
