use std::fs::File;
use std::path::Path;

use fxvol_core::dynsys::{self, EmbedConfig};
use fxvol_core::evaluate::{self, ConfusionMatrix, Forecaster, Metrics};
use fxvol_core::evaluate::{GarchForecaster, LyapunovForecaster, SsaForecaster};
use fxvol_core::marketdata::{self, PriceSeries, VolatilitySeries};
use fxvol_core::ssa::{self, SsaConfig};
use fxvol_core::{garch, synth};
use serde::Serialize;

use crate::args::*;
use crate::table::{num, read_column, sink, write_json, write_table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fxvol_core::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn id(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.id(),
            CliError::Io(_) => "io",
            CliError::Input(_) => "bad-input",
            CliError::Usage(_) => "usage",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => {
            let prices = load_prices(&a.price)?;
            marketdata::write_price_csv(sink(a.out.as_deref())?, &prices)?;
        }
        Command::Vol(a) => {
            let prices = load_prices(&a.price)?;
            let returns = marketdata::log_returns(&prices)?;
            let vol = marketdata::realized_volatility(&returns, a.bucket)?;
            if vol.skipped() > 0 {
                eprintln!("note: {} bucket(s) with fewer than two returns skipped", vol.skipped());
            }
            marketdata::write_volatility_csv(sink(a.out.as_deref())?, &vol)?;
            if let Some(path) = &a.returns_out {
                marketdata::write_bucket_returns_csv(sink(Some(path))?, &vol)?;
            }
        }
        Command::Ssa(c) => run_ssa(c)?,
        Command::Lyapunov(c) => run_lyapunov(c)?,
        Command::Garch(c) => run_garch(c)?,
        Command::Backtest(a) => {
            let series = load_vol(&a.model)?;
            let model = build_model(&a.model)?;
            let report = evaluate::rolling_backtest(&series, model.as_ref(), a.model.window, a.horizon)?;
            if !report.skipped.is_empty() {
                eprintln!("note: {} step(s) skipped, first: {}", report.skipped.len(), report.skipped[0].reason);
            }
            write_json(a.out.as_deref(), &BacktestSummary::new(&report))?;
            if let Some(path) = &a.records_out {
                evaluate::write_records_csv(sink(Some(path))?, &report)?;
            }
        }
        Command::Gridsearch(a) => {
            let series = marketdata::read_volatility_csv(open(&a.input)?)?;
            let w_grid = a.w_grid.map(|g| g.0).unwrap_or_else(evaluate::default_w_grid);
            let grid = evaluate::ssa_grid_search(&series, &w_grid, &a.l_grid.0, &a.s_grid.0)?;
            match grid.best_row() {
                Some(b) => eprintln!("best: W={} L={} S={} accuracy={} f1={}", b.w, b.l, b.s, b.accuracy, b.f1),
                None => eprintln!("best: none (no cell could be evaluated)"),
            }
            evaluate::write_grid_csv(sink(a.out.as_deref())?, &grid)?;
        }
        Command::HorizonSweep(a) => {
            let series = load_vol(&a.model)?;
            let model = build_model(&a.model)?;
            let rows = evaluate::horizon_sweep(&series, model.as_ref(), a.model.window, &a.horizons.0);
            evaluate::write_horizon_csv(sink(a.out.as_deref())?, &rows)?;
        }
        Command::Synth(c) => run_synth(c)?,
        Command::Metrics(a) => {
            let confusion = match &a.input {
                Some(path) => evaluate::read_label_pairs_csv(open(path)?)?,
                None => match (a.tp, a.fp, a.tn, a.fn_) {
                    (Some(tp), Some(fp), Some(tn), Some(fn_)) => ConfusionMatrix { tp, fp, tn, fn_ },
                    _ => return Err(CliError::Usage("give --input or all of --tp --fp --tn --fn".into())),
                },
            };
            write_json(a.out.as_deref(), &MetricsSummary::new(confusion))?;
        }
    }
    Ok(())
}

fn load_prices(a: &PriceInput) -> Result<PriceSeries> {
    let file = open(&a.input)?;
    if a.tick {
        let ticks = marketdata::parse_tick_csv(file)?;
        match a.interval {
            Some(interval) => Ok(marketdata::resample_ticks(&ticks, interval)?),
            None => Ok(PriceSeries::new(a.pair.clone(), ticks.timestamps().to_vec(), ticks.prices().to_vec())?),
        }
    } else {
        if a.interval.is_some() {
            return Err(CliError::Usage("--interval applies to tick input only".into()));
        }
        Ok(marketdata::parse_ohlc_csv(file, a.field, &a.pair)?)
    }
}

fn load_vol(a: &ModelArgs) -> Result<VolatilitySeries> {
    let series = marketdata::read_volatility_csv(open(&a.input)?)?;
    match &a.returns {
        Some(path) => Ok(marketdata::read_bucket_returns_csv(open(path)?, series)?),
        None => Ok(series),
    }
}

fn build_model(a: &ModelArgs) -> Result<Box<dyn Forecaster>> {
    Ok(match a.model {
        ModelKind::Ssa => Box::new(SsaForecaster::new(SsaConfig::new(a.l, a.window, a.s)?)),
        ModelKind::Lyapunov => {
            let config = a.lag.map(|lag| {
                let dim = a.dim.unwrap_or(EmbedConfig::DEFAULT_DIM);
                let max_steps = EmbedConfig::DEFAULT_MAX_STEPS;
                EmbedConfig { dim, lag, theiler: lag * dim, fit_range: (0, max_steps / 4), max_steps }
            });
            if let Some(c) = &config {
                c.validate()?;
            }
            Box::new(LyapunovForecaster { config })
        }
        ModelKind::Garch => Box::new(GarchForecaster { p: a.order.p, q: a.order.q, mean_q: a.order.mean_q }),
    })
}

#[derive(Serialize)]
struct BacktestSummary<'a> {
    model: &'a str,
    window: usize,
    horizon: usize,
    n_evaluated: usize,
    n_skipped: usize,
    confusion: ConfusionMatrix,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

impl<'a> BacktestSummary<'a> {
    fn new(r: &'a evaluate::BacktestReport) -> Self {
        let Metrics { accuracy, precision, recall, f1 } = r.metrics;
        Self {
            model: &r.model,
            window: r.window,
            horizon: r.horizon,
            n_evaluated: r.records.len(),
            n_skipped: r.skipped.len(),
            confusion: r.confusion,
            accuracy,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Serialize)]
struct MetricsSummary {
    confusion: ConfusionMatrix,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

impl MetricsSummary {
    fn new(confusion: ConfusionMatrix) -> Self {
        let Metrics { accuracy, precision, recall, f1 } = evaluate::metrics(&confusion);
        Self { confusion, accuracy, precision, recall, f1 }
    }
}

fn run_ssa(c: SsaCommand) -> Result<()> {
    match c {
        SsaCommand::Decompose { series, l, out, components_out, components } => {
            let x = read_column(&series.input, series.column.as_deref())?;
            let d = ssa::decompose(&x, l)?;
            let rows: Vec<Vec<String>> = d
                .eigenvalues()
                .iter()
                .zip(d.shares())
                .enumerate()
                .map(|(i, (ev, share))| vec![i.to_string(), num(*ev), num(share)])
                .collect();
            write_table(out.as_deref(), &["rank", "eigenvalue", "share"], &rows)?;
            if let Some(path) = components_out {
                let k = components.unwrap_or(l).min(l);
                let recon: Vec<Vec<f64>> =
                    (0..k).map(|i| d.reconstruct(&[i])).collect::<std::result::Result<_, _>>()?;
                let header: Vec<String> =
                    std::iter::once("t".to_string()).chain((0..k).map(|i| format!("c{i}"))).collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows: Vec<Vec<String>> = (0..x.len())
                    .map(|t| std::iter::once(t.to_string()).chain(recon.iter().map(|c| num(c[t]))).collect())
                    .collect();
                write_table(Some(&path), &header, &rows)?;
            }
        }
        SsaCommand::Forecast { series, l, w, s, out } => {
            let x = read_column(&series.input, series.column.as_deref())?;
            let cfg = SsaConfig::new(l, w, s)?;
            if x.len() < w {
                return Err(fxvol_core::Error::InsufficientData { needed: w, got: x.len() }.into());
            }
            let rows: Vec<Vec<String>> = (w..=x.len())
                .map(|step| Ok(vec![step.to_string(), ssa::ssa_forecast_sign(&x[step - w..step], &cfg)?.to_string()]))
                .collect::<Result<_>>()?;
            write_table(out.as_deref(), &["step", "predicted"], &rows)?;
        }
    }
    Ok(())
}

fn embed_config(a: &EmbedArgs, series: &[f64]) -> Result<EmbedConfig> {
    let lag = a.lag.unwrap_or_else(|| dynsys::default_lag(series));
    let config = EmbedConfig {
        dim: a.dim,
        lag,
        theiler: a.theiler.unwrap_or(lag * a.dim),
        fit_range: (a.fit_min, a.fit_max.unwrap_or(a.max_steps / 4)),
        max_steps: a.max_steps,
    };
    config.validate()?;
    Ok(config)
}

fn run_lyapunov(c: LyapunovCommand) -> Result<()> {
    match c {
        LyapunovCommand::Estimate { series, embed, out, curve_out } => {
            let x = read_column(&series.input, series.column.as_deref())?;
            let est = dynsys::estimate_lambda1(&x, &embed_config(&embed, &x)?)?;
            if est.is_low_confidence() {
                eprintln!("note: low-confidence fit (r2 = {})", est.fit_r2);
            }
            let row = vec![num(est.lambda1), num(est.intercept), num(est.fit_r2), est.n_pairs.to_string()];
            write_table(out.as_deref(), &["lambda1", "intercept", "r2", "n_pairs"], &[row])?;
            if let Some(path) = curve_out {
                let rows: Vec<Vec<String>> = est
                    .divergence_curve
                    .iter()
                    .map(|p| vec![p.step.to_string(), num(p.mean_log_distance), p.pairs.to_string()])
                    .collect();
                write_table(Some(&path), &["step", "mean_log_distance", "pairs"], &rows)?;
            }
        }
        LyapunovCommand::Sweep { series, embed, grid, out } => {
            let x = read_column(&series.input, series.column.as_deref())?;
            let config = embed_config(&embed, &x)?;
            let rows: Vec<Vec<String>> = dynsys::convergence_study(&x, &grid.0, &config)
                .into_iter()
                .map(|r| match r.lambda1 {
                    Ok(v) => vec![r.n.to_string(), num(v), "ok".into()],
                    Err(e) => vec![r.n.to_string(), String::new(), format!("{}: {e}", e.id())],
                })
                .collect();
            write_table(out.as_deref(), &["n", "lambda1", "status"], &rows)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GarchSummary {
    omega: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    loglik: f64,
    aic: f64,
    bic: f64,
    converged: bool,
    iterations: usize,
}

fn fit_with_mean(series: &SeriesInput, order: GarchOrder) -> Result<(garch::MeanModel, garch::GarchFit)> {
    let x = read_column(&series.input, series.column.as_deref())?;
    let mean = garch::fit_mean_model(&x, order.mean_q)?;
    let fit = garch::fit_garch(&mean.residuals, order.p, order.q)?;
    Ok((mean, fit))
}

fn run_garch(c: GarchCommand) -> Result<()> {
    match c {
        GarchCommand::Fit { series, order, out } => {
            let (mean, fit) = fit_with_mean(&series, order)?;
            let n_params = fit.n_params() + mean.n_params();
            let ic = garch::information_criteria(fit.loglik, n_params, fit.h_path.len() as f64);
            let summary = GarchSummary {
                omega: fit.omega,
                alpha: fit.alpha,
                beta: fit.beta,
                loglik: fit.loglik,
                aic: ic.aic,
                bic: ic.bic,
                converged: fit.converged,
                iterations: fit.iterations,
            };
            write_json(out.as_deref(), &summary)?;
        }
        GarchCommand::Forecast { series, order, horizon, out } => {
            let (_, fit) = fit_with_mean(&series, order)?;
            let rows: Vec<Vec<String>> = garch::forecast_sigma_path(&fit, horizon)?
                .iter()
                .enumerate()
                .map(|(i, s)| vec![(i + 1).to_string(), num(*s)])
                .collect();
            write_table(out.as_deref(), &["step", "sigma_hat"], &rows)?;
        }
    }
    Ok(())
}

fn value_rows(values: &[f64]) -> Vec<Vec<String>> {
    values.iter().map(|v| vec![num(*v)]).collect()
}

fn run_synth(c: SynthCommand) -> Result<()> {
    match c {
        SynthCommand::Lorenz { sigma, rho, beta, x0, y0, z0, dt, n, discard, out } => {
            let t = synth::gen_lorenz(&synth::LorenzParams { sigma, rho, beta, x0, y0, z0, dt, n, discard })?;
            let rows: Vec<Vec<String>> = (0..t.x.len()).map(|i| vec![num(t.x[i]), num(t.y[i]), num(t.z[i])]).collect();
            write_table(out.as_deref(), &["x", "y", "z"], &rows)?;
        }
        SynthCommand::Garch { omega, alpha, beta, n, seed, out } => {
            let s = synth::gen_garch(&synth::GarchSimParams { omega, alpha, beta, n, seed })?;
            write_table(out.as_deref(), &["value"], &value_rows(&s.returns))?;
        }
        SynthCommand::Harmonic { components, noise, n, seed, out } => {
            let v = synth::gen_harmonic(&components, noise, n, seed)?;
            write_table(out.as_deref(), &["value"], &value_rows(&v))?;
        }
    }
    Ok(())
}
