use std::path::PathBuf;

use chrono::TimeDelta;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fxvol_core::marketdata::{Bucketing, PriceField};

#[derive(Debug, Parser)]
#[command(name = "fxvol", version, about = "Volatility direction forecasting: SSA, Lyapunov exponents, GARCH")]
pub struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key=value` file merged into the flags; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an OHLC or tick file into a `timestamp,price` series.
    Ingest(IngestArgs),
    /// Realized volatility per bucket.
    Vol(VolArgs),
    #[command(subcommand)]
    Ssa(SsaCommand),
    #[command(subcommand)]
    Lyapunov(LyapunovCommand),
    #[command(subcommand)]
    Garch(GarchCommand),
    /// Rolling-window backtest of one model.
    Backtest(BacktestArgs),
    /// SSA grid search over W, L and S.
    Gridsearch(GridArgs),
    /// Backtest metrics across forecast horizons.
    HorizonSweep(HorizonArgs),
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Accuracy, precision, recall and F1 from counts or a records file.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct PriceInput {
    #[arg(long)]
    pub input: PathBuf,
    /// Input is a `timestamp,price[,volume]` tick file.
    #[arg(long)]
    pub tick: bool,
    /// Resample ticks to the last price per interval (e.g. 1m).
    #[arg(long, value_parser = parse_duration)]
    pub interval: Option<TimeDelta>,
    /// OHLC column to use.
    #[arg(long, default_value = "close", value_parser = parse_field)]
    pub field: PriceField,
    #[arg(long, default_value = "")]
    pub pair: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub price: PriceInput,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VolArgs {
    #[command(flatten)]
    pub price: PriceInput,
    /// Calendar bucket (`1h`, `1d`, ...) or a plain count of returns.
    #[arg(long, value_parser = parse_bucketing)]
    pub bucket: Bucketing,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write `bucket_start,return` (normalized bucket returns).
    #[arg(long)]
    pub returns_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeriesInput {
    #[arg(long)]
    pub input: PathBuf,
    /// Column to read; defaults to sigma, return, value or x, whichever exists.
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SsaCommand {
    /// Eigenvalues (`rank,eigenvalue,share`) and component reconstructions.
    Decompose {
        #[command(flatten)]
        series: SeriesInput,
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write reconstructions `t,c0,c1,...` here.
        #[arg(long)]
        components_out: Option<PathBuf>,
        /// Number of leading components to reconstruct (default: all).
        #[arg(long)]
        components: Option<usize>,
    },
    /// Direction label for the bucket after every full window.
    Forecast {
        #[command(flatten)]
        series: SeriesInput,
        #[arg(long = "L")]
        l: usize,
        #[arg(long = "W")]
        w: usize,
        #[arg(long = "S", default_value_t = 0)]
        s: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone)]
pub struct EmbedArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Delay in samples (default: first 1/e autocorrelation crossing).
    #[arg(long)]
    pub lag: Option<usize>,
    /// Theiler window (default: lag * dim).
    #[arg(long)]
    pub theiler: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub fit_min: usize,
    /// Default: max_steps / 4.
    #[arg(long)]
    pub fit_max: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum LyapunovCommand {
    /// One-row summary `lambda1,intercept,r2,n_pairs`.
    Estimate {
        #[command(flatten)]
        series: SeriesInput,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Divergence curve `step,mean_log_distance,pairs`.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Estimates on prefixes of the series: `n,lambda1,status`.
    Sweep {
        #[command(flatten)]
        series: SeriesInput,
        #[command(flatten)]
        embed: EmbedArgs,
        /// Prefix lengths, e.g. `60:3000:10` or `500,1000,1500`.
        #[arg(long, value_parser = parse_int_list)]
        grid: IntList,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone, Copy)]
pub struct GarchOrder {
    /// GARCH lags of h.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// ARCH lags of squared residuals.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// MA order of the mean model (0 = demean only).
    #[arg(long, default_value_t = 0)]
    pub mean_q: usize,
}

#[derive(Debug, Subcommand)]
pub enum GarchCommand {
    /// Parameter JSON.
    Fit {
        #[command(flatten)]
        series: SeriesInput,
        #[command(flatten)]
        order: GarchOrder,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `step,sigma_hat` for steps 1..=horizon after the sample.
    Forecast {
        #[command(flatten)]
        series: SeriesInput,
        #[command(flatten)]
        order: GarchOrder,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ssa,
    Lyapunov,
    Garch,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Volatility CSV `bucket_start,sigma,count`.
    #[arg(long)]
    pub input: PathBuf,
    /// Bucket returns CSV `bucket_start,return` (GARCH only).
    #[arg(long)]
    pub returns: Option<PathBuf>,
    #[arg(long)]
    pub window: usize,
    /// SSA embedding window.
    #[arg(long = "L", default_value_t = 3)]
    pub l: usize,
    /// SSA component.
    #[arg(long = "S", default_value_t = 0)]
    pub s: usize,
    /// Fixed embedding dimension for the Lyapunov model.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fixed lag for the Lyapunov model (per-window default otherwise).
    #[arg(long)]
    pub lag: Option<usize>,
    #[command(flatten)]
    pub order: GarchOrder,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// Report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step CSV `step,timestamp,predicted,actual`.
    #[arg(long)]
    pub records_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// e.g. `1,1144` or `1:5000:1`.
    #[arg(long, value_parser = parse_int_list)]
    pub horizons: IntList,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "W-grid", value_parser = parse_int_list)]
    pub w_grid: Option<IntList>,
    #[arg(long = "L-grid", value_parser = parse_int_list, default_value = "3:10")]
    pub l_grid: IntList,
    #[arg(long = "S-grid", value_parser = parse_int_list, default_value = "0,1,2")]
    pub s_grid: IntList,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Lorenz trajectory `x,y,z`.
    Lorenz {
        #[arg(long, default_value_t = 10.0)]
        sigma: f64,
        #[arg(long, default_value_t = 28.0)]
        rho: f64,
        #[arg(long, default_value_t = 8.0 / 3.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 1.0)]
        z0: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        discard: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated GARCH(1,1) returns `value`.
    Garch {
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sum of sinusoids plus Gaussian noise `value`.
    Harmonic {
        /// `amplitude:period:phase`, repeatable.
        #[arg(long = "component", value_parser = parse_harmonic, required = true)]
        components: Vec<fxvol_core::synth::Harmonic>,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV with `predicted` and `actual` columns.
    #[arg(long, conflicts_with_all = ["tp", "fp", "tn", "fn_"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub tp: Option<u64>,
    #[arg(long)]
    pub fp: Option<u64>,
    #[arg(long)]
    pub tn: Option<u64>,
    #[arg(long = "fn")]
    pub fn_: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<usize>);

/// `ms`, `s`, `m`, `h` or `d` suffix, e.g. `1m`, `15s`, `1d`.
pub fn parse_duration(s: &str) -> Result<TimeDelta, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).ok_or_else(|| format!("missing unit in {s:?}"))?;
    let (num, unit) = s.split_at(split);
    let n: i64 = num.parse().map_err(|_| format!("bad duration {s:?}"))?;
    let d = match unit {
        "ms" => TimeDelta::milliseconds(n),
        "s" => TimeDelta::seconds(n),
        "m" => TimeDelta::minutes(n),
        "h" => TimeDelta::hours(n),
        "d" => TimeDelta::days(n),
        _ => return Err(format!("unknown duration unit {unit:?} (use ms, s, m, h or d)")),
    };
    if n <= 0 {
        return Err("duration must be positive".into());
    }
    Ok(d)
}

pub fn parse_bucketing(s: &str) -> Result<Bucketing, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("bucket count must be positive".into()),
        Ok(n) => Ok(Bucketing::Count(n)),
        Err(_) => parse_duration(s).map(Bucketing::Calendar),
    }
}

fn parse_field(s: &str) -> Result<PriceField, String> {
    s.parse().map_err(|e: fxvol_core::Error| e.to_string())
}

/// Comma-separated items, each an integer or an inclusive range
/// `start:end[:step]`.
pub fn parse_int_list(s: &str) -> Result<IntList, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<usize> = item
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad integer in {item:?}")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [v] => out.push(*v),
            [a, b] => out.extend(*a..=*b),
            [a, b, step] if *step > 0 => out.extend((*a..=*b).step_by(*step)),
            _ => return Err(format!("bad range {item:?}")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(IntList(out))
}

fn parse_harmonic(s: &str) -> Result<fxvol_core::synth::Harmonic, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number in {s:?}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [amplitude, period, phase] => {
            Ok(fxvol_core::synth::Harmonic { amplitude: *amplitude, period: *period, phase: *phase })
        }
        [amplitude, period] => Ok(fxvol_core::synth::Harmonic { amplitude: *amplitude, period: *period, phase: 0.0 }),
        _ => Err(format!("expected amplitude:period[:phase], got {s:?}")),
    }
}
