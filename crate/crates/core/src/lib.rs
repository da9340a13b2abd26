//! Volatility-direction forecasting toolkit.
//!
//! Three forecasters of the direction of realized volatility are provided
//! and evaluated over rolling windows:
//!
//! - [`ssa`]: singular spectrum analysis, comparing the mean of a selected
//!   reconstructed component against the mean of the window;
//! - [`dynsys`]: largest Lyapunov exponent of the delay-embedded window
//!   (Rosenstein nearest-neighbour divergence), forecasting "up" on a
//!   positive exponent;
//! - [`garch`]: Gaussian GARCH(p, q) fitted by maximum likelihood, forecasting
//!   "up" when the predicted sigma exceeds the last observed one.
//!
//! [`marketdata`] turns OHLC or tick files into bucketed realized volatility,
//! [`synth`] provides seeded oracles (Lorenz, GARCH, harmonic signals) and
//! [`evaluate`] runs the backtests and classification metrics.

pub mod dynsys;
pub mod error;
pub mod evaluate;
pub mod garch;
pub mod marketdata;
pub mod optim;
pub mod rng;
pub mod ssa;
pub mod synth;

mod numeric;

pub use error::{Error, Result};
pub use evaluate::ClassLabel;
