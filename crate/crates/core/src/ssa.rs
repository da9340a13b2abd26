//! Singular spectrum analysis.
//!
//! A series `x_0..x_{N-1}` is embedded into the `L x K` trajectory matrix
//! whose columns are the lagged vectors `(x_i, ..., x_{i+L-1})`,
//! `K = N - L + 1`. The eigenpairs of `X X^T` split `X` into rank-one terms
//! `U_i (X^T U_i)^T`; any group of them is turned back into a series by
//! averaging along anti-diagonals.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::evaluate::ClassLabel;
use crate::numeric::{check_finite, mean};
use crate::{Error, Result};

/// Relative gap below which the trend and window means count as equal.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsaConfig {
    /// Embedding window `L`.
    pub window_length: usize,
    /// Rolling window `W` of observations handed to the forecaster.
    pub series_window: usize,
    /// Rank of the component compared against the window mean.
    pub component: usize,
}

impl SsaConfig {
    pub fn new(window_length: usize, series_window: usize, component: usize) -> Result<Self> {
        let cfg = Self { window_length, series_window, component };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 {
            return Err(Error::InvalidParameter(format!("L must be >= 2, got {}", self.window_length)));
        }
        if self.window_length >= self.series_window {
            return Err(Error::InvalidParameter(format!(
                "L must be < W (L = {}, W = {})",
                self.window_length, self.series_window
            )));
        }
        if self.component >= self.window_length {
            return Err(Error::ComponentOutOfRange { index: self.component, window_length: self.window_length });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaDecomposition {
    /// Descending, clamped at zero.
    eigenvalues: Vec<f64>,
    /// Orthonormal, length `L`, largest-magnitude entry positive.
    eigenvectors: Vec<Vec<f64>>,
    /// `X^T U_i`, length `K` (the factor vectors scaled by their singular values).
    factor_vectors: Vec<Vec<f64>>,
    source_length: usize,
}

impl SsaDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn factor_vectors(&self) -> &[Vec<f64>] {
        &self.factor_vectors
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn window_length(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn k(&self) -> usize {
        self.source_length - self.window_length() + 1
    }

    /// Each eigenvalue as a fraction of their total (0 for an all-zero series).
    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
    }

    /// Diagonally averaged sum of the selected rank-one terms.
    pub fn reconstruct(&self, components: &[usize]) -> Result<Vec<f64>> {
        let l = self.window_length();
        if let Some(&index) = components.iter().find(|&&c| c >= l) {
            return Err(Error::ComponentOutOfRange { index, window_length: l });
        }
        let n = self.source_length;
        let k = self.k();
        let mut out = vec![0.0; n];
        for (t, slot) in out.iter_mut().enumerate() {
            let lo = t.saturating_sub(k - 1);
            let hi = t.min(l - 1);
            let mut acc = 0.0;
            for &c in components {
                let u = &self.eigenvectors[c];
                let v = &self.factor_vectors[c];
                for a in lo..=hi {
                    acc += u[a] * v[t - a];
                }
            }
            *slot = acc / (hi - lo + 1) as f64;
        }
        Ok(out)
    }
}

/// Eigendecomposition of the lag-covariance matrix `X X^T` of `series`.
pub fn decompose(series: &[f64], window_length: usize) -> Result<SsaDecomposition> {
    let n = series.len();
    let l = window_length;
    if l < 1 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    if n <= l {
        return Err(Error::InsufficientData { needed: l + 1, got: n });
    }
    check_finite(series)?;
    let k = n - l + 1;

    let mut lag_cov = DMatrix::<f64>::zeros(l, l);
    for a in 0..l {
        for b in a..l {
            let s: f64 = (0..k).map(|j| series[j + a] * series[j + b]).sum();
            lag_cov[(a, b)] = s;
            lag_cov[(b, a)] = s;
        }
    }
    let eig = SymmetricEigen::new(lag_cov);

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    let mut eigenvalues = Vec::with_capacity(l);
    let mut eigenvectors = Vec::with_capacity(l);
    let mut factor_vectors = Vec::with_capacity(l);
    for idx in order {
        let mut u: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let mut pivot = 0;
        for (i, v) in u.iter().enumerate() {
            if v.abs() > u[pivot].abs() {
                pivot = i;
            }
        }
        if u[pivot] < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        let factor: Vec<f64> = (0..k).map(|j| u.iter().enumerate().map(|(a, ua)| ua * series[j + a]).sum()).collect();
        // X X^T is positive semi-definite: negative values are rounding noise
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        eigenvectors.push(u);
        factor_vectors.push(factor);
    }
    Ok(SsaDecomposition { eigenvalues, eigenvectors, factor_vectors, source_length: n })
}

/// Class I when the mean of the reconstructed component exceeds the mean of
/// the window, class II otherwise (including a tie within [`TIE_TOLERANCE`]
/// relative to the window's mean absolute value).
pub fn ssa_forecast_sign(window: &[f64], config: &SsaConfig) -> Result<ClassLabel> {
    config.validate()?;
    if window.len() != config.series_window {
        return Err(Error::InvalidParameter(format!(
            "window has {} observations, expected W = {}",
            window.len(),
            config.series_window
        )));
    }
    let decomp = decompose(window, config.window_length)?;
    let trend = decomp.reconstruct(&[config.component])?;
    let diff = mean(&trend) - mean(window);
    let scale = mean(&window.iter().map(|v| v.abs()).collect::<Vec<_>>());
    Ok(if diff > TIE_TOLERANCE * scale { ClassLabel::Up } else { ClassLabel::Down })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|t| t as f64).collect()
    }

    #[test]
    fn constant_series_is_rank_one() {
        let x = vec![2.5; 20];
        let d = decompose(&x, 3).unwrap();
        let top = d.eigenvalues()[0];
        assert!(d.eigenvalues()[1..].iter().all(|v| *v <= 1e-12 * top));
        let rec = d.reconstruct(&[0]).unwrap();
        for v in rec {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn full_reconstruction_is_identity() {
        let x: Vec<f64> = (0..50).map(|t| ((t * 7 % 13) as f64).sin() + 0.1 * t as f64).collect();
        let d = decompose(&x, 8).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let rec = d.reconstruct(&all).unwrap();
        for (a, b) in rec.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_sorted_and_sign_fixed() {
        let x: Vec<f64> = (0..40).map(|t| (t as f64 * 0.7).cos() * (1.0 + t as f64 / 40.0)).collect();
        let d = decompose(&x, 6).unwrap();
        assert!(d.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        for u in d.eigenvectors() {
            let big = u.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
        let shares: f64 = d.shares().iter().sum();
        assert!((shares - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_errors() {
        assert!(matches!(decompose(&[1.0, 2.0, 3.0], 3), Err(Error::InsufficientData { .. })));
        assert_eq!(decompose(&[1.0, f64::NAN, 3.0, 4.0], 2), Err(Error::NonFiniteInput(1)));
        let d = decompose(&ramp(10), 3).unwrap();
        assert_eq!(d.reconstruct(&[3]), Err(Error::ComponentOutOfRange { index: 3, window_length: 3 }));
    }

    #[test]
    fn config_validation() {
        assert!(SsaConfig::new(3, 30, 0).is_ok());
        assert!(SsaConfig::new(1, 30, 0).is_err());
        assert!(SsaConfig::new(30, 30, 0).is_err());
        assert!(SsaConfig::new(3, 30, 3).is_err());
    }

    #[test]
    fn constant_window_ties_to_class_two() {
        let cfg = SsaConfig::new(3, 30, 0).unwrap();
        assert_eq!(ssa_forecast_sign(&[0.7; 30], &cfg).unwrap(), ClassLabel::Down);
        assert_eq!(ssa_forecast_sign(&[0.0; 30], &cfg).unwrap(), ClassLabel::Down);
    }

    #[test]
    fn window_length_mismatch() {
        let cfg = SsaConfig::new(3, 30, 0).unwrap();
        assert!(ssa_forecast_sign(&[1.0; 29], &cfg).is_err());
    }
}
