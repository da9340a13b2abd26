//! Mean-model removal, Gaussian GARCH(p, q) maximum likelihood, variance
//! forecasts and autocorrelation diagnostics.
//!
//! Conditional variance:
//! `h_t = omega + sum_j alpha_j eps_{t-j}^2 + sum_j beta_j h_{t-j}`,
//! with `q` ARCH terms (`alpha`) and `p` GARCH terms (`beta`). Pre-sample
//! `eps^2` and `h` are both set to the sample variance of the residuals
//! (taken about zero, since residuals come out of a mean model).

use serde::{Deserialize, Serialize};

use crate::evaluate::ClassLabel;
use crate::numeric::{check_finite, compensated_sum, mean};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanModel {
    pub intercept: f64,
    pub ma_coeffs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Conditional sum of squared residuals.
    pub css: f64,
}

impl MeanModel {
    pub fn n_params(&self) -> usize {
        1 + self.ma_coeffs.len()
    }

    /// Gaussian log-likelihood of the residuals with the ML variance `css / n`.
    pub fn loglik(&self) -> f64 {
        let n = self.residuals.len() as f64;
        -0.5 * n * (LN_2PI + (self.css / n).ln() + 1.0)
    }
}

fn ma_residuals(y: &[f64], mu: f64, theta: &[f64], out: &mut Vec<f64>) -> f64 {
    out.clear();
    let mut css = 0.0;
    for t in 0..y.len() {
        let mut e = y[t] - mu;
        for (j, th) in theta.iter().enumerate() {
            if t > j {
                e -= th * out[t - j - 1];
            }
        }
        css += e * e;
        out.push(e);
    }
    css
}

/// Demeaning (`q = 0`) or MA(q) by conditional sum of squares with
/// pre-sample errors set to zero.
pub fn fit_mean_model(returns: &[f64], q: usize) -> Result<MeanModel> {
    let needed = 10 * (q + 1);
    if returns.len() < needed {
        return Err(Error::InsufficientData { needed, got: returns.len() });
    }
    check_finite(returns)?;
    let mu0 = mean(returns);
    if q == 0 {
        let residuals: Vec<f64> = returns.iter().map(|r| r - mu0).collect();
        let css = compensated_sum(residuals.iter().map(|e| e * e));
        return Ok(MeanModel { intercept: mu0, ma_coeffs: vec![], residuals, css });
    }

    // fit on the standardized series so tolerances are scale free
    let scale = (compensated_sum(returns.iter().map(|r| (r - mu0) * (r - mu0))) / returns.len() as f64).sqrt();
    if scale == 0.0 {
        return Err(Error::DegenerateInput("returns have zero variance"));
    }
    let z: Vec<f64> = returns.iter().map(|r| (r - mu0) / scale).collect();
    let n = z.len() as f64;
    let objective = |x: &[f64]| {
        let mut buf = Vec::with_capacity(z.len());
        ma_residuals(&z, x[0], &x[1..], &mut buf) / n
    };
    let start = vec![0.0; q + 1];
    let step = vec![0.1; q + 1];
    let opts = NelderMeadOptions { f_tol: 1e-12, x_tol: 1e-7, max_iter: 20_000, restarts: 3 };
    let min = nelder_mead(objective, &start, &step, &opts);
    if !min.converged || !min.value.is_finite() {
        return Err(Error::OptimizerFailure { iterations: min.iterations, last_value: min.value });
    }
    let intercept = mu0 + scale * min.x[0];
    let ma_coeffs = min.x[1..].to_vec();
    let mut residuals = Vec::with_capacity(returns.len());
    let css = ma_residuals(returns, intercept, &ma_coeffs, &mut residuals);
    Ok(MeanModel { intercept, ma_coeffs, residuals, css })
}

/// Fits MA(q) for every `q` in `0..=max_q` and returns the one chosen by
/// [`select_model`].
pub fn select_mean_model(returns: &[f64], max_q: usize) -> Result<MeanModel> {
    let fits: Vec<MeanModel> = (0..=max_q).map(|q| fit_mean_model(returns, q)).collect::<Result<_>>()?;
    let criteria: Vec<InformationCriteria> =
        fits.iter().map(|m| information_criteria(m.loglik(), m.n_params() + 1, m.residuals.len() as f64)).collect();
    let best = select_model(&criteria).expect("at least one candidate");
    Ok(fits.into_iter().nth(best).expect("index in range"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub omega: f64,
    /// ARCH coefficients `alpha_1..alpha_q`.
    pub alpha: Vec<f64>,
    /// GARCH coefficients `beta_1..beta_p`.
    pub beta: Vec<f64>,
    pub loglik: f64,
    /// Log-likelihood at the documented starting point.
    pub start_loglik: f64,
    pub h_path: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Last `q` squared residuals, oldest first.
    recent_sq_resid: Vec<f64>,
}

impl GarchFit {
    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    pub fn n_params(&self) -> usize {
        1 + self.alpha.len() + self.beta.len()
    }
}

fn sample_second_moment(eps: &[f64]) -> f64 {
    compensated_sum(eps.iter().map(|e| e * e)) / eps.len() as f64
}

/// Conditional variances for given coefficients, with the pre-sample fill
/// described in the module docs.
pub fn conditional_variances(residuals: &[f64], omega: f64, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let fill = sample_second_moment(residuals);
    let mut h = Vec::with_capacity(residuals.len());
    for t in 0..residuals.len() {
        let mut v = omega;
        for (j, a) in alpha.iter().enumerate() {
            let e2 = if t > j { residuals[t - j - 1].powi(2) } else { fill };
            v += a * e2;
        }
        for (j, b) in beta.iter().enumerate() {
            let hp = if t > j { h[t - j - 1] } else { fill };
            v += b * hp;
        }
        h.push(v);
    }
    h
}

/// `-1/2 * sum(ln 2pi + ln h_t + eps_t^2 / h_t)`.
pub fn gaussian_loglik(residuals: &[f64], h: &[f64]) -> f64 {
    -0.5 * compensated_sum(residuals.iter().zip(h).map(|(e, v)| LN_2PI + v.ln() + e * e / v))
}

struct Transform {
    q: usize,
    p: usize,
}

impl Transform {
    /// `[ln omega, u_1..u_{q+p}]` -> (omega, alpha, beta) with
    /// `w_k = e^{u_k} / (1 + sum e^{u_j})`, so every weight is positive and
    /// they sum to less than one.
    fn unpack(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let omega = x[0].exp();
        let shift = x[1..].iter().copied().fold(0.0f64, f64::max);
        let exps: Vec<f64> = x[1..].iter().map(|u| (u - shift).exp()).collect();
        let denom = (-shift).exp() + exps.iter().sum::<f64>();
        let w: Vec<f64> = exps.iter().map(|e| e / denom).collect();
        (omega, w[..self.q].to_vec(), w[self.q..].to_vec())
    }

    fn pack(&self, omega: f64, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let slack = 1.0 - alpha.iter().sum::<f64>() - beta.iter().sum::<f64>();
        let mut x = vec![omega.ln()];
        x.extend(alpha.iter().chain(beta).map(|w| (w / slack).ln()));
        debug_assert_eq!(x.len(), 1 + self.q + self.p);
        x
    }
}

/// Maximum-likelihood GARCH(p, q) on mean-model residuals.
///
/// The optimizer runs on residuals divided by their root mean square, from
/// `omega = 0.1` (one tenth of the unit variance), `alpha = 0.05`,
/// `beta = 0.90` split evenly across lags; `omega` is rescaled afterwards.
pub fn fit_garch(residuals: &[f64], p: usize, q: usize) -> Result<GarchFit> {
    if q == 0 {
        return Err(Error::InvalidParameter("GARCH needs at least one ARCH term (q >= 1)".into()));
    }
    if residuals.len() < 100 {
        return Err(Error::InsufficientData { needed: 100, got: residuals.len() });
    }
    check_finite(residuals)?;
    let var = sample_second_moment(residuals);
    if !(var > 0.0) {
        return Err(Error::DegenerateInput("residuals have zero variance"));
    }
    let scale = var.sqrt();
    let z: Vec<f64> = residuals.iter().map(|e| e / scale).collect();

    let tf = Transform { q, p };
    let alpha0 = vec![0.05 / q as f64; q];
    let beta0 = if p > 0 { vec![0.90 / p as f64; p] } else { vec![] };
    let start = tf.pack(0.1, &alpha0, &beta0);
    let objective = |x: &[f64]| {
        let (omega, alpha, beta) = tf.unpack(x);
        let h = conditional_variances(&z, omega, &alpha, &beta);
        -gaussian_loglik(&z, &h)
    };
    let start_value = objective(&start);
    let step = vec![0.5; start.len()];
    let min = nelder_mead(objective, &start, &step, &NelderMeadOptions::default());
    if !min.value.is_finite() {
        return Err(Error::OptimizerFailure { iterations: min.iterations, last_value: min.value });
    }

    let (omega_z, alpha, beta) = tf.unpack(&min.x);
    let omega = omega_z * var;
    let h_path = conditional_variances(residuals, omega, &alpha, &beta);
    let loglik = gaussian_loglik(residuals, &h_path);
    // the likelihood of the raw residuals differs from the standardized one by n ln(scale)
    let start_loglik = -start_value - residuals.len() as f64 * scale.ln();
    let recent_sq_resid = residuals[residuals.len() - q..].iter().map(|e| e * e).collect();
    Ok(GarchFit {
        omega,
        alpha,
        beta,
        loglik,
        start_loglik,
        h_path,
        converged: min.converged,
        iterations: min.iterations,
        recent_sq_resid,
    })
}

/// Forecast `sqrt(h_{T+k})` for `k = 1..=horizon`. Beyond one step, future
/// squared residuals are replaced by their conditional expectation, which
/// for GARCH(1,1) gives `h_{T+k} = omega + (alpha + beta) h_{T+k-1}`.
pub fn forecast_sigma_path(fit: &GarchFit, horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("forecast horizon must be >= 1".into()));
    }
    let q = fit.alpha.len();
    let p = fit.beta.len();
    let mut e2 = fit.recent_sq_resid.clone();
    let mut h: Vec<f64> = fit.h_path[fit.h_path.len().saturating_sub(p)..].to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut v = fit.omega;
        for j in 0..q {
            v += fit.alpha[j] * e2[e2.len() - 1 - j];
        }
        for j in 0..p {
            v += fit.beta[j] * h[h.len() - 1 - j];
        }
        out.push(v.max(0.0).sqrt());
        e2.push(v);
        h.push(v);
    }
    Ok(out)
}

/// Class I when the forecast exceeds the last observed sigma.
pub fn garch_forecast_sign(sigma_hat_next: f64, sigma_prev: f64) -> ClassLabel {
    if sigma_hat_next > sigma_prev {
        ClassLabel::Up
    } else {
        ClassLabel::Down
    }
}

/// Sample autocorrelations for lags `0..=n_lags` (`acf[0] = 1`).
pub fn acf(series: &[f64], n_lags: usize) -> Result<Vec<f64>> {
    if n_lags >= series.len() {
        return Err(Error::InvalidParameter(format!("n_lags {n_lags} must be < length {}", series.len())));
    }
    check_finite(series)?;
    let m = mean(series);
    let centred: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom = compensated_sum(centred.iter().map(|x| x * x));
    if !(denom > 0.0) {
        return Err(Error::DegenerateInput("series has zero variance"));
    }
    Ok((0..=n_lags).map(|k| compensated_sum(centred.iter().zip(&centred[k..]).map(|(a, b)| a * b)) / denom).collect())
}

/// Partial autocorrelations for lags `0..=n_lags` via Durbin-Levinson
/// (`pacf[0] = 1`).
pub fn pacf(series: &[f64], n_lags: usize) -> Result<Vec<f64>> {
    let r = acf(series, n_lags)?;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=n_lags {
        let num = r[k] - (0..k - 1).map(|j| phi[j] * r[k - 1 - j]).sum::<f64>();
        let kk = if v > 0.0 { num / v } else { 0.0 };
        let mut next = vec![0.0; k];
        for j in 0..k - 1 {
            next[j] = phi[j] - kk * phi[k - 2 - j];
        }
        next[k - 1] = kk;
        phi = next;
        v *= 1.0 - kk * kk;
        out.push(kk);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
}

/// `n_obs` is taken as a real so the formula can be checked at non-integer
/// sizes; callers pass the observation count.
pub fn information_criteria(loglik: f64, n_params: usize, n_obs: f64) -> InformationCriteria {
    let k = n_params as f64;
    InformationCriteria { aic: 2.0 * k - 2.0 * loglik, bic: k * n_obs.ln() - 2.0 * loglik }
}

/// Index of the minimum-AIC candidate, BIC breaking ties, then position.
pub fn select_model(candidates: &[InformationCriteria]) -> Option<usize> {
    (0..candidates.len()).min_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        x.aic.total_cmp(&y.aic).then(x.bic.total_cmp(&y.bic)).then(a.cmp(&b))
    })
}
