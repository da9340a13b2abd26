use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::{PriceField, PriceSeries, TickSeries, Timestamp, VolatilitySeries};
use crate::{Error, Result};

const OHLC_HEADER: &[&str] = &["timestamp", "open", "high", "low", "close"];
const VOL_HEADER: &[&str] = &["bucket_start", "sigma", "count"];
const BUCKET_RETURN_HEADER: &[&str] = &["bucket_start", "return"];

/// ISO-8601 / RFC 3339 instant, converted to UTC.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s.trim()).ok().map(|t| t.with_timezone(&Utc))
}

/// `2018-01-02T09:00:00Z`, with milliseconds only when non-zero.
pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::MalformedRow { line, reason: e.to_string() },
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    ReaderBuilder::new().has_headers(true).from_reader(source)
}

fn check_header(found: &StringRecord, accepted: &[&[&str]]) -> Result<usize> {
    let cols: Vec<&str> = found.iter().map(str::trim).collect();
    accepted
        .iter()
        .position(|h| cols == *h)
        .ok_or_else(|| Error::BadHeader { found: cols.join(","), expected: accepted[0].join(",") })
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field_f64(record: &StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::MalformedRow { line: line_of(record), reason: format!("cannot parse {name} {raw:?}") })
}

fn field_timestamp(record: &StringRecord, idx: usize) -> Result<Timestamp> {
    let raw = record.get(idx).unwrap_or("");
    parse_timestamp(raw)
        .ok_or_else(|| Error::MalformedRow { line: line_of(record), reason: format!("cannot parse timestamp {raw:?}") })
}

/// Reads `timestamp,open,high,low,close`, keeping one of the price columns.
pub fn parse_ohlc_csv<R: Read>(source: R, field: PriceField, pair_id: &str) -> Result<PriceSeries> {
    let mut rdr = reader(source);
    check_header(rdr.headers().map_err(csv_error)?, &[OHLC_HEADER])?;
    let pick = match field {
        PriceField::Open => 1,
        PriceField::High => 2,
        PriceField::Low => 3,
        PriceField::Close => 4,
    };
    let mut timestamps: Vec<Timestamp> = Vec::new();
    let mut prices = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        let ts = field_timestamp(&record, 0)?;
        let mut selected = 0.0;
        for col in 1..=4 {
            let p = field_f64(&record, col, OHLC_HEADER[col])?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::NonPositivePrice { line, price: p });
            }
            if col == pick {
                selected = p;
            }
        }
        if timestamps.last().is_some_and(|prev| ts <= *prev) {
            return Err(Error::NonIncreasingTimestamp { line });
        }
        timestamps.push(ts);
        prices.push(selected);
    }
    PriceSeries::new(pair_id, timestamps, prices)
}

/// Reads `timestamp,price[,volume]`.
pub fn parse_tick_csv<R: Read>(source: R) -> Result<TickSeries> {
    let mut rdr = reader(source);
    let has_volume =
        check_header(rdr.headers().map_err(csv_error)?, &[&["timestamp", "price"], &["timestamp", "price", "volume"]])?
            == 1;
    let mut timestamps: Vec<Timestamp> = Vec::new();
    let mut prices = Vec::new();
    let mut volumes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        let ts = field_timestamp(&record, 0)?;
        let p = field_f64(&record, 1, "price")?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::NonPositivePrice { line, price: p });
        }
        if timestamps.last().is_some_and(|prev| ts < *prev) {
            return Err(Error::DecreasingTimestamp { line });
        }
        if has_volume {
            let v = field_f64(&record, 2, "volume")?;
            if !(v >= 0.0) {
                return Err(Error::MalformedRow { line, reason: format!("negative volume {v}") });
            }
            volumes.push(v);
        }
        timestamps.push(ts);
        prices.push(p);
    }
    TickSeries::new(timestamps, prices, has_volume.then_some(volumes))
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `timestamp,price`.
pub fn write_price_csv<W: Write>(out: W, prices: &PriceSeries) -> Result<()> {
    let rows = prices.timestamps().iter().zip(prices.prices()).map(|(t, p)| vec![format_timestamp(t), p.to_string()]);
    write_rows(out, &["timestamp", "price"], rows)
}

/// Writes `bucket_start,sigma,count`.
pub fn write_volatility_csv<W: Write>(out: W, vol: &VolatilitySeries) -> Result<()> {
    let rows = (0..vol.len()).map(|i| {
        vec![format_timestamp(&vol.bucket_starts()[i]), vol.sigmas()[i].to_string(), vol.counts()[i].to_string()]
    });
    write_rows(out, VOL_HEADER, rows)
}

/// Writes `bucket_start,return` for series that carry bucket returns.
pub fn write_bucket_returns_csv<W: Write>(out: W, vol: &VolatilitySeries) -> Result<()> {
    let returns = vol.bucket_returns().ok_or_else(|| Error::InvalidParameter("series has no bucket returns".into()))?;
    let rows = vol.bucket_starts().iter().zip(returns).map(|(t, r)| vec![format_timestamp(t), r.to_string()]);
    write_rows(out, BUCKET_RETURN_HEADER, rows)
}

/// Reads `bucket_start,sigma,count`.
pub fn read_volatility_csv<R: Read>(source: R) -> Result<VolatilitySeries> {
    let mut rdr = reader(source);
    check_header(rdr.headers().map_err(csv_error)?, &[VOL_HEADER])?;
    let mut starts: Vec<Timestamp> = Vec::new();
    let mut sigmas = Vec::new();
    let mut counts = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        let ts = field_timestamp(&record, 0)?;
        if starts.last().is_some_and(|prev| ts <= *prev) {
            return Err(Error::NonIncreasingTimestamp { line });
        }
        let sigma = field_f64(&record, 1, "sigma")?;
        let raw = record.get(2).unwrap_or("");
        let count = raw
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::MalformedRow { line, reason: format!("cannot parse count {raw:?}") })?;
        if !(sigma >= 0.0 && sigma.is_finite()) || count < 2 {
            return Err(Error::MalformedRow { line, reason: "sigma must be >= 0 and count >= 2".into() });
        }
        starts.push(ts);
        sigmas.push(sigma);
        counts.push(count);
    }
    VolatilitySeries::new(starts, sigmas, counts)
}

/// Reads `bucket_start,return` and attaches it to `vol`; bucket starts must
/// match row for row.
pub fn read_bucket_returns_csv<R: Read>(source: R, vol: VolatilitySeries) -> Result<VolatilitySeries> {
    let mut rdr = reader(source);
    check_header(rdr.headers().map_err(csv_error)?, &[BUCKET_RETURN_HEADER])?;
    let mut returns = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let ts = field_timestamp(&record, 0)?;
        let i = returns.len();
        if vol.bucket_starts().get(i) != Some(&ts) {
            return Err(Error::MalformedRow {
                line: line_of(&record),
                reason: "bucket_start does not match the volatility series".into(),
            });
        }
        returns.push(field_f64(&record, 1, "return")?);
    }
    vol.with_bucket_returns(returns)
}
