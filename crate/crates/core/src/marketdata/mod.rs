//! Price ingestion, tick resampling, log returns and bucketed realized
//! volatility.
//!
//! Calendar buckets are aligned to multiples of the bucket length since the
//! Unix epoch, so day buckets start at 00:00 UTC. Every consecutive pair of
//! prices yields one return, regardless of the gap between them (weekends
//! included).

mod io;

pub use io::{
    format_timestamp, parse_ohlc_csv, parse_tick_csv, parse_timestamp, read_bucket_returns_csv, read_volatility_csv,
    write_bucket_returns_csv, write_price_csv, write_volatility_csv,
};

use chrono::{DateTime, TimeDelta, Utc};
use std::str::FromStr;

use crate::numeric::compensated_sum;
use crate::{Error, Result};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceField {
    Open,
    High,
    Low,
    #[default]
    Close,
}

impl FromStr for PriceField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(PriceField::Open),
            "high" => Ok(PriceField::High),
            "low" => Ok(PriceField::Low),
            "close" => Ok(PriceField::Close),
            other => Err(Error::InvalidParameter(format!("unknown price field {other:?}"))),
        }
    }
}

/// Positive prices on strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pair_id: String,
    timestamps: Vec<Timestamp>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(pair_id: impl Into<String>, timestamps: Vec<Timestamp>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} timestamps but {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NonIncreasingTimestamp { line: i as u64 + 1 });
            }
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositivePrice { line: i as u64, price: prices[i] });
        }
        Ok(Self { pair_id: pair_id.into(), timestamps, prices })
    }

    pub fn pair_id(&self) -> &str {
        &self.pair_id
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Individual trades. Equal timestamps are allowed and kept in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    timestamps: Vec<Timestamp>,
    prices: Vec<f64>,
    volumes: Option<Vec<f64>>,
}

impl TickSeries {
    pub fn new(timestamps: Vec<Timestamp>, prices: Vec<f64>, volumes: Option<Vec<f64>>) -> Result<Self> {
        if timestamps.len() != prices.len() || volumes.as_ref().is_some_and(|v| v.len() != prices.len()) {
            return Err(Error::InvalidParameter("tick columns differ in length".into()));
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::DecreasingTimestamp { line: i as u64 + 1 });
            }
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositivePrice { line: i as u64, price: prices[i] });
        }
        if let Some(v) = &volumes {
            if let Some(i) = v.iter().position(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidParameter(format!("negative volume at tick {i}")));
            }
        }
        Ok(Self { timestamps, prices, volumes })
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn volumes(&self) -> Option<&[f64]> {
        self.volumes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Log returns; `timestamps[k]` is the time of the later price of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub timestamps: Vec<Timestamp>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// How returns are grouped before taking the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucketing {
    /// Fixed-length calendar buckets aligned to the Unix epoch.
    Calendar(TimeDelta),
    /// Consecutive runs of this many returns.
    Count(usize),
}

/// Realized volatility per bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySeries {
    bucket_starts: Vec<Timestamp>,
    sigmas: Vec<f64>,
    counts: Vec<usize>,
    /// Sum of each bucket's log returns divided by `sqrt(count)`. With iid
    /// returns inside a bucket this has standard deviation `sigma`, which puts
    /// GARCH forecasts on the same scale as the realized series.
    bucket_returns: Option<Vec<f64>>,
    /// Buckets dropped for holding fewer than two returns.
    skipped: usize,
}

impl VolatilitySeries {
    pub fn new(bucket_starts: Vec<Timestamp>, sigmas: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if bucket_starts.len() != sigmas.len() || counts.len() != sigmas.len() {
            return Err(Error::InvalidParameter("volatility columns differ in length".into()));
        }
        if let Some(i) = sigmas.iter().position(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!("sigma at bucket {i} is {}", sigmas[i])));
        }
        if let Some(i) = counts.iter().position(|c| *c < 2) {
            return Err(Error::InvalidParameter(format!("bucket {i} has count {} < 2", counts[i])));
        }
        Ok(Self { bucket_starts, sigmas, counts, bucket_returns: None, skipped: 0 })
    }

    /// Attaches per-bucket normalized returns (one per bucket).
    pub fn with_bucket_returns(mut self, returns: Vec<f64>) -> Result<Self> {
        if returns.len() != self.sigmas.len() {
            return Err(Error::InvalidParameter(format!(
                "{} bucket returns for {} buckets",
                returns.len(),
                self.sigmas.len()
            )));
        }
        crate::numeric::check_finite(&returns)?;
        self.bucket_returns = Some(returns);
        Ok(self)
    }

    pub fn bucket_starts(&self) -> &[Timestamp] {
        &self.bucket_starts
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn bucket_returns(&self) -> Option<&[f64]> {
        self.bucket_returns.as_deref()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    /// Copy with the sigma at each index replaced by `f(index, sigma)`.
    /// Used to build perturbed series in leakage checks.
    pub fn map_sigmas(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let sigmas = self.sigmas.iter().enumerate().map(|(i, s)| f(i, *s)).collect();
        let mut out = Self::new(self.bucket_starts.clone(), sigmas, self.counts.clone())?;
        out.bucket_returns = self.bucket_returns.clone();
        out.skipped = self.skipped;
        Ok(out)
    }
}

/// One price per non-empty interval: the last trade in it, stamped with the
/// interval start. Empty intervals are omitted.
pub fn resample_ticks(ticks: &TickSeries, interval: TimeDelta) -> Result<PriceSeries> {
    if ticks.is_empty() {
        return Err(Error::EmptyInput("tick series"));
    }
    let width = interval.num_milliseconds();
    if width <= 0 {
        return Err(Error::InvalidParameter("resampling interval must be positive".into()));
    }
    let mut timestamps = Vec::new();
    let mut prices: Vec<f64> = Vec::new();
    let mut current: Option<i64> = None;
    for (ts, price) in ticks.timestamps.iter().zip(&ticks.prices) {
        let key = ts.timestamp_millis().div_euclid(width);
        if current == Some(key) {
            *prices.last_mut().expect("open interval") = *price;
        } else {
            current = Some(key);
            timestamps.push(bucket_start(key, width));
            prices.push(*price);
        }
    }
    PriceSeries::new("", timestamps, prices)
}

fn bucket_start(key: i64, width_ms: i64) -> Timestamp {
    DateTime::from_timestamp_millis(key * width_ms).expect("bucket start within chrono range")
}

pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: prices.len() });
    }
    let returns = prices.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries { timestamps: prices.timestamps[1..].to_vec(), returns })
}

/// Sample standard deviation with a `T - 1` denominator.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let ss = compensated_sum(values.iter().map(|r| (r - mean) * (r - mean)));
    (ss / (n - 1.0)).sqrt()
}

pub fn realized_volatility(returns: &ReturnSeries, bucketing: Bucketing) -> Result<VolatilitySeries> {
    let groups: Vec<(Timestamp, std::ops::Range<usize>)> = match bucketing {
        Bucketing::Calendar(width) => {
            let width = width.num_milliseconds();
            if width <= 0 {
                return Err(Error::InvalidParameter("bucket length must be positive".into()));
            }
            let mut groups = Vec::new();
            let mut start = 0;
            while start < returns.len() {
                let key = returns.timestamps[start].timestamp_millis().div_euclid(width);
                let mut end = start + 1;
                while end < returns.len() && returns.timestamps[end].timestamp_millis().div_euclid(width) == key {
                    end += 1;
                }
                groups.push((bucket_start(key, width), start..end));
                start = end;
            }
            groups
        }
        Bucketing::Count(size) => {
            if size == 0 {
                return Err(Error::InvalidParameter("bucket size must be positive".into()));
            }
            (0..returns.len())
                .step_by(size)
                .map(|s| (returns.timestamps[s], s..(s + size).min(returns.len())))
                .collect()
        }
    };

    let mut starts = Vec::new();
    let mut sigmas = Vec::new();
    let mut counts = Vec::new();
    let mut aggregates = Vec::new();
    let mut skipped = 0;
    for (start, range) in groups {
        let bucket = &returns.returns[range];
        if bucket.len() < 2 {
            skipped += 1;
            continue;
        }
        starts.push(start);
        sigmas.push(sample_std(bucket));
        counts.push(bucket.len());
        aggregates.push(compensated_sum(bucket.iter().copied()) / (bucket.len() as f64).sqrt());
    }
    if sigmas.is_empty() {
        return Err(Error::NoEstimableBuckets { skipped });
    }
    let mut series = VolatilitySeries::new(starts, sigmas, counts)?.with_bucket_returns(aggregates)?;
    series.skipped = skipped;
    Ok(series)
}
