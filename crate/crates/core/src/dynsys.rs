//! Largest Lyapunov exponent from a scalar series (Rosenstein et al. 1993).
//!
//! Each point of the delay-embedded orbit is paired with its nearest
//! neighbour outside a Theiler window; the mean log distance of the pairs
//! after `k` further steps grows like `ln C + lambda1 * k` while the pairs
//! stay small, and `lambda1` is the least-squares slope over the fit range.
//! Exponents are per sample: divide by the sampling interval for per-time
//! units.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluate::ClassLabel;
use crate::numeric::{check_finite, compensated_sum, linear_fit};
use crate::{Error, Result};

/// Fits with r² below this are flagged as low confidence.
pub const LOW_CONFIDENCE_R2: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub dim: usize,
    pub lag: usize,
    /// Neighbours must satisfy `|i - j| > theiler`.
    pub theiler: usize,
    /// Inclusive step range `(k_min, k_max)` of the slope fit.
    pub fit_range: (usize, usize),
    /// Last divergence step tracked.
    pub max_steps: usize,
}

impl EmbedConfig {
    pub const DEFAULT_DIM: usize = 3;
    pub const DEFAULT_MAX_STEPS: usize = 100;

    /// `dim = 3`, lag from the 1/e autocorrelation crossing, Theiler window
    /// `lag * dim`, 100 tracked steps fitted over `[0, 25]`.
    pub fn for_series(series: &[f64]) -> Self {
        let lag = default_lag(series);
        let dim = Self::DEFAULT_DIM;
        Self {
            dim,
            lag,
            theiler: lag * dim,
            fit_range: (0, Self::DEFAULT_MAX_STEPS / 4),
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.lag == 0 {
            return Err(Error::InvalidParameter("embedding dimension and lag must be >= 1".into()));
        }
        let (lo, hi) = self.fit_range;
        if lo >= hi || hi > self.max_steps {
            return Err(Error::InvalidParameter(format!(
                "fit range ({lo}, {hi}) must satisfy k_min < k_max <= max_steps = {}",
                self.max_steps
            )));
        }
        Ok(())
    }
}

/// First lag at which the sample autocorrelation drops below `1/e`.
/// Falls back to 1 for series too short or too flat to tell.
pub fn default_lag(series: &[f64]) -> usize {
    let max_lag = series.len() / 2;
    if max_lag < 2 {
        return 1;
    }
    match crate::garch::acf(series, max_lag) {
        Ok(r) => r.iter().skip(1).position(|v| *v < (-1.0f64).exp()).map(|p| p + 1).unwrap_or(max_lag),
        Err(_) => 1,
    }
}

/// `point_j = (x_j, x_{j+lag}, ..., x_{j+(dim-1)lag})`.
pub fn delay_embed(series: &[f64], dim: usize, lag: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || lag == 0 {
        return Err(Error::InvalidParameter("embedding dimension and lag must be >= 1".into()));
    }
    let span = (dim - 1) * lag;
    if series.len() < span + 1 {
        return Err(Error::InsufficientData { needed: span + 1, got: series.len() });
    }
    Ok((0..series.len() - span).map(|j| (0..dim).map(|d| series[j + d * lag]).collect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub step: usize,
    /// Mean of `ln d_j(step)` over the pairs still inside the series.
    pub mean_log_distance: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Per sample.
    pub lambda1: f64,
    pub divergence_curve: Vec<DivergencePoint>,
    /// Fitted `ln C`.
    pub intercept: f64,
    pub fit_r2: f64,
    pub n_pairs: usize,
}

impl LyapunovEstimate {
    pub fn is_low_confidence(&self) -> bool {
        self.fit_r2 < LOW_CONFIDENCE_R2
    }

    pub fn per_time_unit(&self, sampling_interval: f64) -> f64 {
        self.lambda1 / sampling_interval
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn estimate_lambda1(series: &[f64], config: &EmbedConfig) -> Result<LyapunovEstimate> {
    config.validate()?;
    check_finite(series)?;
    let points = delay_embed(series, config.dim, config.lag)?;
    let m = points.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::DegenerateGeometry);
    }

    // Nearest admissible neighbour of every point; coincident points are
    // skipped since they carry no divergence information.
    let neighbours: Vec<Option<usize>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..m {
                if i.abs_diff(j) <= config.theiler {
                    continue;
                }
                let d = distance(&points[i], &points[j]);
                if d > 0.0 && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            best.map(|(_, j)| j)
        })
        .collect();

    let pairs: Vec<(usize, usize)> = neighbours.iter().enumerate().filter_map(|(i, n)| n.map(|j| (i, j))).collect();
    if pairs.is_empty() {
        return Err(Error::NoNeighbourPairs);
    }

    let max_steps = config.max_steps;
    let logs: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let reach = (m - i.max(j)).min(max_steps + 1);
            (0..reach)
                .map(|k| {
                    let d = distance(&points[i + k], &points[j + k]);
                    if d > 0.0 {
                        d.ln()
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();

    let mut curve = Vec::new();
    for k in 0..=max_steps {
        let values: Vec<f64> = logs.iter().filter_map(|l| l.get(k).copied()).filter(|v| !v.is_nan()).collect();
        if values.is_empty() {
            continue;
        }
        curve.push(DivergencePoint {
            step: k,
            mean_log_distance: compensated_sum(values.iter().copied()) / values.len() as f64,
            pairs: values.len(),
        });
    }

    let (lo, hi) = config.fit_range;
    let fit: Vec<&DivergencePoint> = curve.iter().filter(|p| p.step >= lo && p.step <= hi).collect();
    if fit.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: fit.len() });
    }
    let xs: Vec<f64> = fit.iter().map(|p| p.step as f64).collect();
    let ys: Vec<f64> = fit.iter().map(|p| p.mean_log_distance).collect();
    let (lambda1, intercept, fit_r2) = linear_fit(&xs, &ys);

    Ok(LyapunovEstimate { lambda1, divergence_curve: curve, intercept, fit_r2, n_pairs: pairs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub lambda1: std::result::Result<f64, Error>,
}

/// `estimate_lambda1` on every prefix length in `n_grid`, same config.
pub fn convergence_study(series: &[f64], n_grid: &[usize], config: &EmbedConfig) -> Vec<ConvergenceRow> {
    n_grid
        .par_iter()
        .map(|&n| ConvergenceRow {
            n,
            lambda1: if n > series.len() {
                Err(Error::InsufficientData { needed: n, got: series.len() })
            } else {
                estimate_lambda1(&series[..n], config).map(|e| e.lambda1)
            },
        })
        .collect()
}

/// Class I for a positive exponent, class II otherwise.
pub fn lyapunov_forecast_sign(estimate: &LyapunovEstimate) -> ClassLabel {
    if estimate.lambda1 > 0.0 {
        ClassLabel::Up
    } else {
        ClassLabel::Down
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimate_with(lambda1: f64) -> LyapunovEstimate {
        LyapunovEstimate { lambda1, divergence_curve: vec![], intercept: 0.0, fit_r2: 1.0, n_pairs: 1 }
    }

    #[test]
    fn embed_counts() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(delay_embed(&x, 2, 1).unwrap().len(), 9);
        let p = delay_embed(&x, 1, 4).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.iter().zip(&x).all(|(a, b)| a == &vec![*b]));
        assert_eq!(delay_embed(&x, 3, 2).unwrap()[1], vec![1.0, 3.0, 5.0]);
        assert!(matches!(delay_embed(&x[..5], 3, 3), Err(Error::InsufficientData { needed: 7, got: 5 })));
    }

    #[test]
    fn sign_rule() {
        assert_eq!(lyapunov_forecast_sign(&estimate_with(0.3)), ClassLabel::Up);
        assert_eq!(lyapunov_forecast_sign(&estimate_with(-0.3)), ClassLabel::Down);
        assert_eq!(lyapunov_forecast_sign(&estimate_with(0.0)), ClassLabel::Down);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let cfg = EmbedConfig { dim: 3, lag: 1, theiler: 3, fit_range: (0, 5), max_steps: 10 };
        assert_eq!(estimate_lambda1(&[4.0; 200], &cfg), Err(Error::DegenerateGeometry));
    }

    #[test]
    fn config_checks() {
        let mut cfg = EmbedConfig { dim: 3, lag: 1, theiler: 3, fit_range: (5, 5), max_steps: 10 };
        assert!(cfg.validate().is_err());
        cfg.fit_range = (0, 11);
        assert!(cfg.validate().is_err());
        cfg.fit_range = (0, 10);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn no_admissible_neighbours() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let cfg = EmbedConfig { dim: 1, lag: 1, theiler: 20, fit_range: (0, 2), max_steps: 3 };
        assert_eq!(estimate_lambda1(&x, &cfg), Err(Error::NoNeighbourPairs));
    }

    #[test]
    fn ramp_has_zero_slope() {
        let x: Vec<f64> = (0..400).map(|t| t as f64 * 0.5).collect();
        let cfg = EmbedConfig { dim: 3, lag: 2, theiler: 6, fit_range: (0, 25), max_steps: 100 };
        let e = estimate_lambda1(&x, &cfg).unwrap();
        assert!(e.lambda1.abs() < 1e-9, "{}", e.lambda1);
    }

    #[test]
    fn curve_starts_at_mean_initial_log_distance() {
        let x: Vec<f64> = (0..300).map(|t| ((t as f64) * 0.37).sin() + 0.01 * ((t * t) % 17) as f64).collect();
        let cfg = EmbedConfig { dim: 2, lag: 3, theiler: 6, fit_range: (0, 10), max_steps: 20 };
        let e = estimate_lambda1(&x, &cfg).unwrap();
        let first = e.divergence_curve[0];
        assert_eq!(first.step, 0);
        assert_eq!(first.pairs, e.n_pairs);
        assert!(e.divergence_curve.iter().all(|p| p.pairs >= 1 && p.mean_log_distance.is_finite()));
        assert!((0.0..=1.0).contains(&e.fit_r2));
    }

    #[test]
    fn default_lag_of_slow_sine() {
        // acf of a sine with period 100 crosses 1/e near lag 100 * acos(1/e) / (2 pi) ~= 19
        let x: Vec<f64> = (0..2000).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 100.0).sin()).collect();
        let lag = default_lag(&x);
        assert!((18..=20).contains(&lag), "{lag}");
        assert_eq!(default_lag(&[1.0; 50]), 1);
    }
}
