//! Direction labels, confusion-matrix metrics and rolling-window
//! evaluation of volatility forecasters.
//!
//! Class I (volatility up) is the positive class. Ties always map to
//! class II.

mod forecasters;

pub use forecasters::{ConstantForecaster, FnForecaster, GarchForecaster, LyapunovForecaster, SsaForecaster};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::marketdata::{format_timestamp, Timestamp, VolatilitySeries};
use crate::ssa::SsaConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    /// Class I: volatility increases.
    #[serde(rename = "I")]
    Up,
    /// Class II: volatility decreases (or stays put).
    #[serde(rename = "II")]
    Down,
}

impl ClassLabel {
    /// Class I iff `next > prev`.
    pub fn from_change(prev: f64, next: f64) -> Self {
        if next > prev {
            ClassLabel::Up
        } else {
            ClassLabel::Down
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ClassLabel::Up => ClassLabel::Down,
            ClassLabel::Down => ClassLabel::Up,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Up => "I",
            ClassLabel::Down => "II",
        })
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" => Ok(ClassLabel::Up),
            "II" | "0" => Ok(ClassLabel::Down),
            other => Err(Error::InvalidParameter(format!("unknown class label {other:?}"))),
        }
    }
}

/// `label[i]` compares `sigmas[i + 1]` with `sigmas[i]`.
pub fn label_direction(sigmas: &[f64]) -> Result<Vec<ClassLabel>> {
    if sigmas.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sigmas.len() });
    }
    Ok(sigmas.windows(2).map(|w| ClassLabel::from_change(w[0], w[1])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs<I: IntoIterator<Item = (ClassLabel, ClassLabel)>>(pairs: I) -> Self {
        let mut c = Self::default();
        for (predicted, actual) in pairs {
            c.record(predicted, actual);
        }
        c
    }

    pub fn record(&mut self, predicted: ClassLabel, actual: ClassLabel) {
        match (predicted, actual) {
            (ClassLabel::Up, ClassLabel::Up) => self.tp += 1,
            (ClassLabel::Up, ClassLabel::Down) => self.fp += 1,
            (ClassLabel::Down, ClassLabel::Down) => self.tn += 1,
            (ClassLabel::Down, ClassLabel::Up) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy, precision, recall and F1. Empty denominators give 0.
pub fn metrics(c: &ConfusionMatrix) -> Metrics {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let accuracy = ratio(c.tp + c.tn, c.total());
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Metrics { accuracy, precision, recall, f1 }
}

/// What a forecaster sees at one backtest step: the `W` observations
/// strictly before the step, nothing later.
#[derive(Debug, Clone, Copy)]
pub struct WindowInput<'a> {
    /// Index of the first unseen bucket.
    pub step: usize,
    pub timestamps: &'a [Timestamp],
    pub sigmas: &'a [f64],
    pub returns: Option<&'a [f64]>,
}

pub trait Forecaster: Sync {
    fn id(&self) -> String;

    /// Direction of `sigma[step + horizon - 1]` relative to the last
    /// observed `sigma[step - 1]`.
    fn predict(&self, input: &WindowInput<'_>, horizon: usize) -> Result<ClassLabel>;

    /// Checks the whole-series requirements once before a backtest starts.
    fn check(&self, _series: &VolatilitySeries, _window: usize) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Start of the bucket being forecast.
    pub timestamp: Timestamp,
    pub predicted: ClassLabel,
    pub actual: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedStep {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub model: String,
    pub window: usize,
    pub horizon: usize,
    pub records: Vec<StepRecord>,
    pub skipped: Vec<SkippedStep>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

/// Runs `model` at every step `i` in `W..=N-h`, handing it `sigmas[i-W..i)`
/// and scoring it against the sign of `sigma[i+h-1] - sigma[i-1]`. Steps at
/// which the model fails are listed in `skipped` and left out of the counts.
pub fn rolling_backtest(
    series: &VolatilitySeries,
    model: &dyn Forecaster,
    window: usize,
    horizon: usize,
) -> Result<BacktestReport> {
    let n = series.len();
    if window == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("window and horizon must be >= 1".into()));
    }
    if n <= window + horizon {
        return Err(Error::InsufficientData { needed: window + horizon + 1, got: n });
    }
    model.check(series, window)?;
    let sigmas = series.sigmas();
    let outcomes: Vec<(usize, Result<ClassLabel>)> = (window..=n - horizon)
        .into_par_iter()
        .map(|i| {
            let input = WindowInput {
                step: i,
                timestamps: &series.bucket_starts()[i - window..i],
                sigmas: &sigmas[i - window..i],
                returns: series.bucket_returns().map(|r| &r[i - window..i]),
            };
            (i, model.predict(&input, horizon))
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    let mut confusion = ConfusionMatrix::default();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(predicted) => {
                let target = i + horizon - 1;
                let actual = ClassLabel::from_change(sigmas[i - 1], sigmas[target]);
                confusion.record(predicted, actual);
                records.push(StepRecord { step: i, timestamp: series.bucket_starts()[target], predicted, actual });
            }
            Err(e) => skipped.push(SkippedStep { step: i, reason: format!("{}: {e}", e.id()) }),
        }
    }
    Ok(BacktestReport { model: model.id(), window, horizon, records, skipped, metrics: metrics(&confusion), confusion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub w: usize,
    pub l: usize,
    pub s: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub n_evaluated: usize,
    /// `ok`, or the reason the cell could not be evaluated.
    pub status: String,
}

impl GridRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Ordered by (W, L, S).
    pub rows: Vec<GridRow>,
    /// Index into `rows` of the selected cell.
    pub best: Option<usize>,
}

impl GridResult {
    pub fn best_row(&self) -> Option<&GridRow> {
        self.best.map(|i| &self.rows[i])
    }
}

/// `{20, 30, ..., 100} U {150, 200, ..., 400}`.
pub fn default_w_grid() -> Vec<usize> {
    (20..=100).step_by(10).chain((150..=400).step_by(50)).collect()
}

/// Full factorial SSA backtest at horizon 1. The best cell maximizes
/// accuracy, then F1, then prefers smaller W, L and S.
pub fn ssa_grid_search(
    series: &VolatilitySeries,
    w_grid: &[usize],
    l_grid: &[usize],
    s_grid: &[usize],
) -> Result<GridResult> {
    if w_grid.is_empty() || l_grid.is_empty() || s_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be non-empty".into()));
    }
    let mut cells = Vec::new();
    for &w in w_grid {
        for &l in l_grid {
            for &s in s_grid {
                cells.push((w, l, s));
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();

    let rows: Vec<GridRow> = cells
        .par_iter()
        .map(|&(w, l, s)| {
            let outcome =
                SsaConfig::new(l, w, s).and_then(|cfg| rolling_backtest(series, &SsaForecaster::new(cfg), w, 1));
            match outcome {
                Ok(report) => GridRow {
                    w,
                    l,
                    s,
                    accuracy: report.metrics.accuracy,
                    f1: report.metrics.f1,
                    n_evaluated: report.records.len(),
                    status: "ok".into(),
                },
                Err(e) => GridRow {
                    w,
                    l,
                    s,
                    accuracy: f64::NAN,
                    f1: f64::NAN,
                    n_evaluated: 0,
                    status: format!("{}: {e}", e.id()),
                },
            }
        })
        .collect();

    let best = (0..rows.len()).filter(|&i| rows[i].is_ok() && rows[i].n_evaluated > 0).min_by(|&a, &b| {
        let (x, y) = (&rows[a], &rows[b]);
        y.accuracy.total_cmp(&x.accuracy).then(y.f1.total_cmp(&x.f1)).then((x.w, x.l, x.s).cmp(&(y.w, y.l, y.s)))
    });
    Ok(GridResult { rows, best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub horizon: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub n_evaluated: usize,
    pub status: String,
}

/// One backtest per horizon with a shared window, rows in ascending horizon
/// order.
pub fn horizon_sweep(
    series: &VolatilitySeries,
    model: &dyn Forecaster,
    window: usize,
    horizons: &[usize],
) -> Vec<HorizonRow> {
    let mut horizons = horizons.to_vec();
    horizons.sort_unstable();
    horizons.dedup();
    horizons
        .par_iter()
        .map(|&h| match rolling_backtest(series, model, window, h) {
            Ok(r) => HorizonRow {
                horizon: h,
                accuracy: r.metrics.accuracy,
                f1: r.metrics.f1,
                n_evaluated: r.records.len(),
                status: "ok".into(),
            },
            Err(e) => HorizonRow {
                horizon: h,
                accuracy: f64::NAN,
                f1: f64::NAN,
                n_evaluated: 0,
                status: format!("{}: {e}", e.id()),
            },
        })
        .collect()
}

fn write_csv<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn metric_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// `step,timestamp,predicted,actual`.
pub fn write_records_csv<W: Write>(out: W, report: &BacktestReport) -> Result<()> {
    let rows = report.records.iter().map(|r| {
        vec![r.step.to_string(), format_timestamp(&r.timestamp), r.predicted.to_string(), r.actual.to_string()]
    });
    write_csv(out, &["step", "timestamp", "predicted", "actual"], rows)
}

/// `W,L,S,accuracy,f1,n_evaluated,status`.
pub fn write_grid_csv<W: Write>(out: W, grid: &GridResult) -> Result<()> {
    let rows = grid.rows.iter().map(|r| {
        vec![
            r.w.to_string(),
            r.l.to_string(),
            r.s.to_string(),
            metric_cell(r.accuracy),
            metric_cell(r.f1),
            r.n_evaluated.to_string(),
            r.status.clone(),
        ]
    });
    write_csv(out, &["W", "L", "S", "accuracy", "f1", "n_evaluated", "status"], rows)
}

/// `horizon,accuracy,f1,n_evaluated,status`.
pub fn write_horizon_csv<W: Write>(out: W, rows: &[HorizonRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.horizon.to_string(),
            metric_cell(r.accuracy),
            metric_cell(r.f1),
            r.n_evaluated.to_string(),
            r.status.clone(),
        ]
    });
    write_csv(out, &["horizon", "accuracy", "f1", "n_evaluated", "status"], rows)
}

/// Reads `predicted,actual` columns (other columns ignored) into a confusion matrix.
pub fn read_label_pairs_csv<R: std::io::Read>(source: R) -> Result<ConfusionMatrix> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::BadHeader {
            found: headers.iter().collect::<Vec<_>>().join(","),
            expected: "...,predicted,actual".into(),
        })
    };
    let (p, a) = (col("predicted")?, col("actual")?);
    let mut c = ConfusionMatrix::default();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let label = |i: usize| record.get(i).unwrap_or("").parse::<ClassLabel>();
        c.record(label(p)?, label(a)?);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::DateTime;

    pub(crate) fn series(values: &[f64]) -> VolatilitySeries {
        let starts = (0..values.len()).map(|i| DateTime::from_timestamp(i as i64 * 60, 0).unwrap()).collect();
        VolatilitySeries::new(starts, values.to_vec(), vec![2; values.len()]).unwrap()
    }

    #[test]
    fn labels() {
        assert_eq!(label_direction(&[1.0, 2.0]).unwrap(), vec![ClassLabel::Up]);
        assert_eq!(label_direction(&[2.0, 1.0]).unwrap(), vec![ClassLabel::Down]);
        assert_eq!(label_direction(&[1.0, 1.0]).unwrap(), vec![ClassLabel::Down]);
        assert!(label_direction(&[1.0]).is_err());
    }

    #[test]
    fn label_text() {
        assert_eq!(ClassLabel::Up.to_string(), "I");
        assert_eq!("II".parse::<ClassLabel>().unwrap(), ClassLabel::Down);
        assert!("III".parse::<ClassLabel>().is_err());
    }

    #[test]
    fn perfect_classifier() {
        let m = metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 });
        assert_eq!(m, Metrics { accuracy: 1.0, precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn all_positive_on_balanced_truth() {
        let m = metrics(&ConfusionMatrix { tp: 50, fp: 50, fn_: 0, tn: 0 });
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_denominators() {
        let m = metrics(&ConfusionMatrix { tp: 0, fp: 0, tn: 3, fn_: 2 });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 0.6);
        assert_eq!(metrics(&ConfusionMatrix::default()).accuracy, 0.0);
    }

    #[test]
    fn backtest_rejects_short_series() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        let m = ConstantForecaster(ClassLabel::Up);
        assert!(matches!(rolling_backtest(&s, &m, 4, 1), Err(Error::InsufficientData { .. })));
        assert!(matches!(rolling_backtest(&s, &m, 3, 1), Err(Error::InsufficientData { .. })));
        assert!(rolling_backtest(&s, &m, 2, 1).is_ok());
    }

    #[test]
    fn backtest_steps_and_alignment() {
        let s = series(&[1.0, 2.0, 1.5, 3.0, 2.0, 2.5]);
        let r = rolling_backtest(&s, &ConstantForecaster(ClassLabel::Up), 2, 2).unwrap();
        // steps 2..=4, targets 3..=5 compared against sigma[1..=3]
        let steps: Vec<usize> = r.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![2, 3, 4]);
        let actual: Vec<ClassLabel> = r.records.iter().map(|r| r.actual).collect();
        assert_eq!(actual, vec![ClassLabel::Up, ClassLabel::Up, ClassLabel::Down]);
        assert_eq!(r.confusion.total(), 3);
    }

    #[test]
    fn failing_steps_are_skipped() {
        let s = series(&[1.0, 2.0, 1.5, 3.0, 2.0, 2.5]);
        let m = FnForecaster::new("odd-fails", |input: &WindowInput<'_>, _h| {
            if input.step % 2 == 1 {
                Err(Error::DegenerateGeometry)
            } else {
                Ok(ClassLabel::Up)
            }
        });
        let r = rolling_backtest(&s, &m, 2, 1).unwrap();
        assert_eq!(r.records.len() + r.skipped.len(), 4);
        assert_eq!(r.confusion.total() as usize, r.records.len());
        assert!(r.skipped[0].reason.starts_with("degenerate-geometry"));
    }

    #[test]
    fn grid_single_cell_and_tie_break() {
        let values: Vec<f64> = (0..80).map(|t| 1.0 + 0.3 * ((t as f64) * 0.9).sin()).collect();
        let s = series(&values);
        let g = ssa_grid_search(&s, &[20], &[3], &[0]).unwrap();
        assert_eq!(g.rows.len(), 1);
        assert_eq!(g.best, Some(0));

        let g = ssa_grid_search(&s, &[20, 30], &[3, 40], &[0]).unwrap();
        assert_eq!(g.rows.len(), 4);
        assert!(!g.rows[1].is_ok() && !g.rows[3].is_ok());
        assert!(g.best_row().unwrap().is_ok());
        assert!(ssa_grid_search(&s, &[], &[3], &[0]).is_err());
    }

    #[test]
    fn grid_csv_schema() {
        let g = GridResult {
            rows: vec![GridRow { w: 20, l: 3, s: 0, accuracy: 0.5, f1: 0.25, n_evaluated: 4, status: "ok".into() }],
            best: Some(0),
        };
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &g).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "W,L,S,accuracy,f1,n_evaluated,status\n20,3,0,0.5,0.25,4,ok\n");
    }

    #[test]
    fn label_pairs_roundtrip() {
        let src = "step,timestamp,predicted,actual\n1,x,I,I\n2,x,I,II\n3,x,II,I\n";
        let c = read_label_pairs_csv(src.as_bytes()).unwrap();
        assert_eq!(c, ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 0 });
    }
}
