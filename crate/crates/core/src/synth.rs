//! Seeded synthetic series used as oracles: Lorenz trajectories, GARCH
//! returns and sums of sinusoids plus Gaussian noise.

use std::f64::consts::PI;

use chrono::{DateTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::marketdata::ReturnSeries;
use crate::rng::SeededRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    /// RK4 step.
    pub dt: f64,
    /// Samples kept per axis.
    pub n: usize,
    /// Transient steps integrated and dropped before the first sample.
    pub discard: usize,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, x0: 1.0, y0: 1.0, z0: 1.0, dt: 0.01, n: 3000, discard: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LorenzTrajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

fn lorenz_rhs(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    [p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]]
}

fn rk4_step(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    let h = p.dt;
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = lorenz_rhs(p, s);
    let k2 = lorenz_rhs(p, add(s, k1, h / 2.0));
    let k3 = lorenz_rhs(p, add(s, k2, h / 2.0));
    let k4 = lorenz_rhs(p, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Fixed-step RK4 integration of the Lorenz system. Sample `k` is the state
/// after `discard + k` steps.
pub fn gen_lorenz(params: &LorenzParams) -> Result<LorenzTrajectory> {
    if !(params.dt > 0.0 && params.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", params.dt)));
    }
    let mut out = LorenzTrajectory {
        x: Vec::with_capacity(params.n),
        y: Vec::with_capacity(params.n),
        z: Vec::with_capacity(params.n),
    };
    if params.n == 0 {
        return Ok(out);
    }
    let mut state = [params.x0, params.y0, params.z0];
    let total = params.discard + params.n - 1;
    for step in 0..=total {
        if step > 0 {
            state = rk4_step(params, state);
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        if step >= params.discard {
            out.x.push(state[0]);
            out.y.push(state[1]);
            out.z.push(state[2]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchSimParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
}

impl GarchSimParams {
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need omega > 0 and alpha, beta >= 0 (got {}, {}, {})",
                self.omega, self.alpha, self.beta
            )));
        }
        let persistence = self.alpha + self.beta;
        if persistence >= 1.0 {
            return Err(Error::Stationarity { persistence });
        }
        Ok(())
    }
}

/// Simulated GARCH(1,1) innovations and their conditional variances.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchSample {
    pub returns: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GarchSample {
    /// Attaches synthetic timestamps `start + k * step`.
    pub fn into_return_series(self, start: DateTime<chrono::Utc>, step: TimeDelta) -> ReturnSeries {
        let timestamps = (0..self.returns.len()).map(|k| start + step * k as i32).collect();
        ReturnSeries { timestamps, returns: self.returns }
    }
}

/// `eps_t = z_t * sqrt(h_t)` with `h_0 = omega / (1 - alpha - beta)` and
/// `h_t = omega + alpha * eps_{t-1}^2 + beta * h_{t-1}`.
pub fn gen_garch(params: &GarchSimParams) -> Result<GarchSample> {
    params.validate()?;
    let mut rng = SeededRng::new(params.seed);
    let mut returns = Vec::with_capacity(params.n);
    let mut variances = Vec::with_capacity(params.n);
    let mut h = params.unconditional_variance();
    for t in 0..params.n {
        if t > 0 {
            let prev = returns[t - 1];
            h = params.omega + params.alpha * prev * prev + params.beta * h;
        }
        let eps = rng.standard_normal() * h.sqrt();
        variances.push(h);
        returns.push(eps);
    }
    Ok(GarchSample { returns, variances })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
}

/// `s_t = sum_k A_k sin(2 pi t / T_k + phi_k) + noise_sigma * z_t`.
pub fn gen_harmonic(components: &[Harmonic], noise_sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if let Some(c) = components.iter().find(|c| !(c.period > 0.0)) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {}", c.period)));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise sigma must be non-negative".into()));
    }
    let mut rng = SeededRng::new(seed);
    Ok((0..n)
        .map(|t| {
            let clean: f64 =
                components.iter().map(|c| c.amplitude * (2.0 * PI * t as f64 / c.period + c.phase).sin()).sum();
            if noise_sigma > 0.0 {
                clean + noise_sigma * rng.standard_normal()
            } else {
                clean
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenz_empty() {
        let t = gen_lorenz(&LorenzParams { n: 0, ..Default::default() }).unwrap();
        assert!(t.x.is_empty() && t.y.is_empty() && t.z.is_empty());
    }

    #[test]
    fn lorenz_deterministic() {
        let p = LorenzParams { n: 500, ..Default::default() };
        let a = gen_lorenz(&p).unwrap();
        let b = gen_lorenz(&p).unwrap();
        assert!(a.x.iter().zip(&b.x).all(|(u, v)| u.to_bits() == v.to_bits()));
        assert_eq!(a.x.len(), 500);
    }

    #[test]
    fn lorenz_blows_up_with_huge_step() {
        let p = LorenzParams { dt: 5.0, n: 100, discard: 0, ..Default::default() };
        assert!(matches!(gen_lorenz(&p), Err(Error::NonFiniteState { .. })));
    }

    #[test]
    fn lorenz_rejects_bad_dt() {
        assert!(gen_lorenz(&LorenzParams { dt: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn garch_stationarity_violation() {
        let p = GarchSimParams { omega: 0.1, alpha: 0.3, beta: 0.7, n: 10, seed: 1 };
        assert!(matches!(gen_garch(&p), Err(Error::Stationarity { .. })));
    }

    #[test]
    fn garch_without_dynamics_is_iid_with_variance_omega() {
        let p = GarchSimParams { omega: 0.25, alpha: 0.0, beta: 0.0, n: 50_000, seed: 9 };
        let s = gen_garch(&p).unwrap();
        assert!(s.variances.iter().all(|h| *h == 0.25));
        let v = s.returns.iter().map(|r| r * r).sum::<f64>() / s.returns.len() as f64;
        assert!((v - 0.25).abs() < 0.01, "{v}");
    }

    #[test]
    fn garch_same_seed_same_series() {
        let p = GarchSimParams { omega: 0.05, alpha: 0.1, beta: 0.85, n: 1000, seed: 4 };
        assert_eq!(gen_garch(&p).unwrap(), gen_garch(&p).unwrap());
        let q = GarchSimParams { seed: 5, ..p };
        assert_ne!(gen_garch(&p).unwrap().returns, gen_garch(&q).unwrap().returns);
    }

    #[test]
    fn harmonic_sine_table() {
        let c = Harmonic { amplitude: 1.0, period: 8.0, phase: 0.0 };
        let s = gen_harmonic(&[c], 0.0, 8, 0).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[2], 1.0);
        assert!((s[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s[6] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_linear_in_components() {
        let a = Harmonic { amplitude: 1.5, period: 12.0, phase: 0.3 };
        let b = Harmonic { amplitude: 0.5, period: 5.0, phase: -1.0 };
        let both = gen_harmonic(&[a, b], 0.0, 64, 0).unwrap();
        let sa = gen_harmonic(&[a], 0.0, 64, 0).unwrap();
        let sb = gen_harmonic(&[b], 0.0, 64, 0).unwrap();
        for i in 0..64 {
            assert!((both[i] - sa[i] - sb[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn harmonic_seeded() {
        let c = [Harmonic { amplitude: 1.0, period: 10.0, phase: 0.0 }];
        assert_eq!(gen_harmonic(&c, 0.3, 100, 11).unwrap(), gen_harmonic(&c, 0.3, 100, 11).unwrap());
        assert!(gen_harmonic(&[Harmonic { amplitude: 1.0, period: 0.0, phase: 0.0 }], 0.0, 4, 0).is_err());
    }
}
