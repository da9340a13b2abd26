use super::{ClassLabel, Forecaster, WindowInput};
use crate::dynsys::{estimate_lambda1, lyapunov_forecast_sign, EmbedConfig};
use crate::garch::{fit_garch, fit_mean_model, forecast_sigma_path, garch_forecast_sign};
use crate::marketdata::VolatilitySeries;
use crate::ssa::{ssa_forecast_sign, SsaConfig};
use crate::{Error, Result};

/// Mean of the selected SSA component against the mean of the window.
#[derive(Debug, Clone, Copy)]
pub struct SsaForecaster {
    pub config: SsaConfig,
}

impl SsaForecaster {
    pub fn new(config: SsaConfig) -> Self {
        Self { config }
    }
}

impl Forecaster for SsaForecaster {
    fn id(&self) -> String {
        format!("ssa(L={},S={})", self.config.window_length, self.config.component)
    }

    fn predict(&self, input: &WindowInput<'_>, _horizon: usize) -> Result<ClassLabel> {
        ssa_forecast_sign(input.sigmas, &self.config)
    }

    fn check(&self, _series: &VolatilitySeries, window: usize) -> Result<()> {
        if window != self.config.series_window {
            return Err(Error::InvalidParameter(format!(
                "backtest window {window} differs from SSA W = {}",
                self.config.series_window
            )));
        }
        Ok(())
    }
}

/// Sign of the largest Lyapunov exponent of the window. Without a fixed
/// config the defaults of [`EmbedConfig::for_series`] are derived per window.
#[derive(Debug, Clone, Copy, Default)]
pub struct LyapunovForecaster {
    pub config: Option<EmbedConfig>,
}

impl Forecaster for LyapunovForecaster {
    fn id(&self) -> String {
        match &self.config {
            Some(c) => format!("lyapunov(m={},tau={})", c.dim, c.lag),
            None => "lyapunov(auto)".into(),
        }
    }

    fn predict(&self, input: &WindowInput<'_>, _horizon: usize) -> Result<ClassLabel> {
        let config = self.config.unwrap_or_else(|| EmbedConfig::for_series(input.sigmas));
        Ok(lyapunov_forecast_sign(&estimate_lambda1(input.sigmas, &config)?))
    }
}

/// GARCH(p, q) fitted on the window's bucket returns after the mean model;
/// the `horizon`-step sigma forecast is compared with the last observed
/// realized sigma.
#[derive(Debug, Clone, Copy)]
pub struct GarchForecaster {
    pub p: usize,
    pub q: usize,
    pub mean_q: usize,
}

impl Default for GarchForecaster {
    fn default() -> Self {
        Self { p: 1, q: 1, mean_q: 0 }
    }
}

impl Forecaster for GarchForecaster {
    fn id(&self) -> String {
        format!("garch({},{})", self.p, self.q)
    }

    fn predict(&self, input: &WindowInput<'_>, horizon: usize) -> Result<ClassLabel> {
        let returns =
            input.returns.ok_or_else(|| Error::InvalidParameter("GARCH forecaster needs bucket returns".into()))?;
        let mean_model = fit_mean_model(returns, self.mean_q)?;
        let fit = fit_garch(&mean_model.residuals, self.p, self.q)?;
        let path = forecast_sigma_path(&fit, horizon)?;
        let last = *input.sigmas.last().ok_or(Error::EmptyInput("window"))?;
        Ok(garch_forecast_sign(path[horizon - 1], last))
    }

    fn check(&self, series: &VolatilitySeries, _window: usize) -> Result<()> {
        if series.bucket_returns().is_none() {
            return Err(Error::InvalidParameter("GARCH forecaster needs bucket returns".into()));
        }
        Ok(())
    }
}

/// Always the same label.
#[derive(Debug, Clone, Copy)]
pub struct ConstantForecaster(pub ClassLabel);

impl Forecaster for ConstantForecaster {
    fn id(&self) -> String {
        format!("constant({})", self.0)
    }

    fn predict(&self, _input: &WindowInput<'_>, _horizon: usize) -> Result<ClassLabel> {
        Ok(self.0)
    }
}

/// Adapter for closures, mostly test stubs.
pub struct FnForecaster<F> {
    name: String,
    f: F,
}

impl<F> FnForecaster<F>
where
    F: Fn(&WindowInput<'_>, usize) -> Result<ClassLabel> + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> Forecaster for FnForecaster<F>
where
    F: Fn(&WindowInput<'_>, usize) -> Result<ClassLabel> + Sync,
{
    fn id(&self) -> String {
        self.name.clone()
    }

    fn predict(&self, input: &WindowInput<'_>, horizon: usize) -> Result<ClassLabel> {
        (self.f)(input, horizon)
    }
}
