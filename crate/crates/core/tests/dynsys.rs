use fxvol_core::dynsys::{convergence_study, delay_embed, estimate_lambda1, EmbedConfig};
use fxvol_core::synth::{gen_harmonic, gen_lorenz, Harmonic, LorenzParams};
use fxvol_core::Error;

/// Largest Lyapunov exponent of the Lorenz flow from the tangent dynamics:
/// RK4 on the state and one tangent vector, renormalized every step.
fn benettin_lambda(dt: f64, transient: usize, steps: usize) -> f64 {
    let (sigma, rho, beta) = (10.0, 28.0, 8.0 / 3.0);
    let rhs = |s: &[f64; 6]| {
        let (x, y, z) = (s[0], s[1], s[2]);
        let (u, v, w) = (s[3], s[4], s[5]);
        [
            sigma * (y - x),
            x * (rho - z) - y,
            x * y - beta * z,
            sigma * (v - u),
            (rho - z) * u - v - x * w,
            y * u + x * v - beta * w,
        ]
    };
    let step = |s: &mut [f64; 6]| {
        let shift = |s: &[f64; 6], k: &[f64; 6], h: f64| {
            let mut o = *s;
            for i in 0..6 {
                o[i] += h * k[i];
            }
            o
        };
        let k1 = rhs(s);
        let k2 = rhs(&shift(s, &k1, dt / 2.0));
        let k3 = rhs(&shift(s, &k2, dt / 2.0));
        let k4 = rhs(&shift(s, &k3, dt));
        for i in 0..6 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };
    let mut s = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
    for _ in 0..transient {
        step(&mut s);
        let norm = (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]).sqrt();
        for v in &mut s[3..] {
            *v /= norm;
        }
    }
    let mut log_sum = 0.0;
    for _ in 0..steps {
        step(&mut s);
        let norm = (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]).sqrt();
        log_sum += norm.ln();
        for v in &mut s[3..] {
            *v /= norm;
        }
    }
    log_sum / (steps as f64 * dt)
}

/// Embedding used for the Lorenz x-axis: three coordinates ten samples apart,
/// fitted over the linear stretch of the divergence curve.
fn lorenz_config() -> EmbedConfig {
    EmbedConfig { dim: 3, lag: 10, theiler: 30, fit_range: (50, 250), max_steps: 300 }
}

#[test]
fn oracle_is_near_textbook_value() {
    let lambda = benettin_lambda(0.01, 1000, 100_000);
    assert!((lambda - 0.9).abs() < 0.05, "tangent-dynamics exponent {lambda}");
}

#[test]
fn lorenz_exponent_within_quarter_of_oracle() {
    let dt = 0.01;
    let oracle = benettin_lambda(dt, 1000, 100_000) * dt;
    let t = gen_lorenz(&LorenzParams { n: 3000, ..LorenzParams::default() }).unwrap();
    let est = estimate_lambda1(&t.x, &lorenz_config()).unwrap();
    let rel = (est.lambda1 - oracle).abs() / oracle;
    assert!(rel <= 0.25, "lambda {} vs oracle {oracle} ({rel:.3} off)", est.lambda1);
    assert!(!est.is_low_confidence());
}

/// Rosenstein written out directly, single-threaded, no shared helpers.
fn brute_force_curve(series: &[f64], c: &EmbedConfig) -> Vec<(usize, f64, usize)> {
    let span = (c.dim - 1) * c.lag;
    let m = series.len() - span;
    let point = |j: usize| -> Vec<f64> { (0..c.dim).map(|d| series[j + d * c.lag]).collect() };
    let dist = |a: usize, b: usize| {
        let (p, q) = (point(a), point(b));
        p.iter().zip(&q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let mut pairs = Vec::new();
    for i in 0..m {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..m {
            let gap = if i > j { i - j } else { j - i };
            if gap <= c.theiler {
                continue;
            }
            let d = dist(i, j);
            if d > 0.0 && d < best.0 {
                best = (d, j);
            }
        }
        if best.1 != usize::MAX {
            pairs.push((i, best.1));
        }
    }
    let mut curve = Vec::new();
    for k in 0..=c.max_steps {
        let mut total = 0.0;
        let mut count = 0;
        for &(i, j) in &pairs {
            if i + k < m && j + k < m {
                let d = dist(i + k, j + k);
                if d > 0.0 {
                    total += d.ln();
                    count += 1;
                }
            }
        }
        if count > 0 {
            curve.push((k, total / count as f64, count));
        }
    }
    curve
}

#[test]
fn divergence_curve_matches_brute_force() {
    let t = gen_lorenz(&LorenzParams { n: 400, ..LorenzParams::default() }).unwrap();
    let cfg = EmbedConfig { dim: 3, lag: 8, theiler: 24, fit_range: (0, 20), max_steps: 60 };
    let est = estimate_lambda1(&t.x, &cfg).unwrap();
    let oracle = brute_force_curve(&t.x, &cfg);
    assert_eq!(est.divergence_curve.len(), oracle.len());
    for (p, (k, mean, count)) in est.divergence_curve.iter().zip(&oracle) {
        assert_eq!(p.step, *k);
        assert_eq!(p.pairs, *count);
        assert!((p.mean_log_distance - mean).abs() < 1e-9, "step {k}");
    }
    let xs: Vec<f64> = oracle.iter().filter(|o| o.0 <= 20).map(|o| o.0 as f64).collect();
    let ys: Vec<f64> = oracle.iter().filter(|o| o.0 <= 20).map(|o| o.1).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((est.lambda1 - slope).abs() < 1e-9);
}

#[test]
fn periodic_orbit_has_zero_exponent() {
    let x = gen_harmonic(&[Harmonic { amplitude: 1.0, period: 40.0, phase: 0.0 }], 0.0, 2000, 0).unwrap();
    let est = estimate_lambda1(&x, &EmbedConfig::for_series(&x)).unwrap();
    assert!(est.lambda1.abs() <= 0.05, "lambda {}", est.lambda1);
}

#[test]
fn white_noise_saturates_and_is_flagged() {
    let x = gen_harmonic(&[], 1.0, 2000, 11).unwrap();
    let est = estimate_lambda1(&x, &EmbedConfig::for_series(&x)).unwrap();
    assert!(est.fit_r2 < 0.9, "r2 {}", est.fit_r2);
    assert!(est.is_low_confidence());
}

#[test]
fn exponent_is_affine_invariant() {
    let t = gen_lorenz(&LorenzParams { n: 1500, ..LorenzParams::default() }).unwrap();
    let cfg = lorenz_config();
    let base = estimate_lambda1(&t.x, &cfg).unwrap();
    for (a, b) in [(2.0, 0.0), (0.37, 5.0), (13.0, -100.0)] {
        let y: Vec<f64> = t.x.iter().map(|v| a * v + b).collect();
        let est = estimate_lambda1(&y, &cfg).unwrap();
        assert!((est.lambda1 - base.lambda1).abs() < 1e-9, "a={a} b={b}");
    }
}

#[test]
fn ramp_has_no_exponential_divergence() {
    let ramp: Vec<f64> = (0..3000).map(|i| 0.01 * i as f64).collect();
    // the autocorrelation of a ramp never decays, so the lag is fixed by hand
    let cfg = EmbedConfig { dim: 3, lag: 5, theiler: 15, fit_range: (0, 25), max_steps: 100 };
    let grid: Vec<usize> = (200..=3000).step_by(200).collect();
    for row in convergence_study(&ramp, &grid, &cfg) {
        let lambda = row.lambda1.unwrap();
        assert!(lambda.abs() <= 0.05, "n {}: {lambda}", row.n);
    }
}

#[test]
fn constant_series_fails_every_row() {
    let x = vec![3.0; 800];
    let cfg = EmbedConfig { dim: 3, lag: 1, theiler: 3, fit_range: (0, 25), max_steps: 100 };
    for row in convergence_study(&x, &[100, 400, 800], &cfg) {
        assert_eq!(row.lambda1, Err(Error::DegenerateGeometry));
    }
}

#[test]
fn embedding_point_count() {
    let x: Vec<f64> = (0..50).map(f64::from).collect();
    for (m, tau) in [(1, 1), (2, 1), (3, 5), (4, 16)] {
        assert_eq!(delay_embed(&x, m, tau).unwrap().len(), 50 - (m - 1) * tau);
    }
}
