use chrono::{DateTime, TimeDelta};
use fxvol_core::marketdata::{
    log_returns, parse_ohlc_csv, realized_volatility, Bucketing, PriceField, PriceSeries, ReturnSeries, Timestamp,
};
use proptest::prelude::*;

fn minute(i: usize) -> Timestamp {
    DateTime::from_timestamp(1_514_764_800 + 60 * i as i64, 0).unwrap()
}

fn returns(values: &[f64]) -> ReturnSeries {
    ReturnSeries { timestamps: (0..values.len()).map(minute).collect(), returns: values.to_vec() }
}

fn two_point_std(a: f64, b: f64) -> f64 {
    ((a - b) * (a - b) / 2.0).sqrt()
}

#[test]
fn hourly_buckets_match_hand_computation() {
    // two hours of minute returns with a constant within each half hour
    let vals: Vec<f64> = (0..120).map(|i| if i % 60 < 30 { 0.001 } else { -0.001 }).collect();
    let vol = realized_volatility(&returns(&vals), Bucketing::Calendar(TimeDelta::hours(1))).unwrap();
    assert_eq!(vol.len(), 2);
    assert_eq!(vol.counts(), &[60, 60]);
    let want = (60.0 * 0.001f64.powi(2) / 59.0).sqrt();
    for s in vol.sigmas() {
        assert!((s - want).abs() < 1e-15);
    }
    let small = realized_volatility(&returns(&[0.01, -0.01]), Bucketing::Count(2)).unwrap();
    assert!((small.sigmas()[0] - two_point_std(0.01, -0.01)).abs() < 1e-15);
}

#[test]
fn ohlc_file_to_volatility() {
    let mut text = String::from("timestamp,open,high,low,close\n");
    for i in 0..48 {
        let t = DateTime::from_timestamp(1_514_851_200 + 3600 * i, 0).unwrap();
        let close = 1.2 + 0.001 * ((i * 7) % 5) as f64;
        text.push_str(&format!("{},1.2,1.21,1.19,{close}\n", t.format("%Y-%m-%dT%H:%M:%SZ")));
    }
    let prices = parse_ohlc_csv(text.as_bytes(), PriceField::Close, "EURUSD").unwrap();
    assert_eq!(prices.len(), 48);
    let vol = realized_volatility(&log_returns(&prices).unwrap(), Bucketing::Calendar(TimeDelta::days(1))).unwrap();
    // the first return lands at 01:00 on day one, so day one holds 23 returns
    assert_eq!(vol.counts(), &[23, 24]);
}

proptest! {
    #[test]
    fn sigma_scales_with_returns(vals in prop::collection::vec(-0.05f64..0.05, 4..200), c in -20.0f64..20.0, k in 2usize..10) {
        let base = realized_volatility(&returns(&vals), Bucketing::Count(k)).unwrap();
        let scaled_vals: Vec<f64> = vals.iter().map(|v| c * v).collect();
        let scaled = realized_volatility(&returns(&scaled_vals), Bucketing::Count(k)).unwrap();
        for (a, b) in base.sigmas().iter().zip(scaled.sigmas()) {
            prop_assert!((b - c.abs() * a).abs() <= 1e-12 * (c.abs() * a).max(1e-300));
        }
        prop_assert!(base.counts().iter().all(|n| *n >= 2));
        prop_assert!(base.sigmas().iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn permutation_within_bucket_is_irrelevant(vals in prop::collection::vec(-0.05f64..0.05, 10..100), shift in 0usize..10) {
        let k = 10;
        let mut permuted = vals.clone();
        for chunk in permuted.chunks_mut(k) {
            let len = chunk.len();
            chunk.rotate_left(shift % len);
            chunk.reverse();
        }
        let a = realized_volatility(&returns(&vals), Bucketing::Count(k)).unwrap();
        let b = realized_volatility(&returns(&permuted), Bucketing::Count(k)).unwrap();
        for (x, y) in a.sigmas().iter().zip(b.sigmas()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
        }
    }

    #[test]
    fn log_returns_round_trip(steps in prop::collection::vec(-0.1f64..0.1, 1..300), p0 in 0.01f64..1000.0) {
        let mut prices = vec![p0];
        for s in &steps {
            let last = *prices.last().unwrap();
            prices.push(last * s.exp());
        }
        let series = PriceSeries::new("X", (0..prices.len()).map(minute).collect(), prices.clone()).unwrap();
        let r = log_returns(&series).unwrap();
        prop_assert_eq!(r.len(), prices.len() - 1);
        let mut level = p0;
        for (k, ret) in r.returns.iter().enumerate() {
            level *= ret.exp();
            prop_assert!((level - prices[k + 1]).abs() <= 1e-12 * prices[k + 1]);
        }
    }
}
