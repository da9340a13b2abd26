//! Derivative-free minimization (Nelder-Mead simplex).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when the spread of objective values across the simplex is below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this distance (per coordinate) of the best.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { f_tol: 1e-8, x_tol: 1e-6, max_iter: 5000, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start`, building the first simplex with per-coordinate
/// offsets `step`. Non-finite objective values are treated as +infinity.
pub fn nelder_mead<F>(f: F, start: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best = start.to_vec();
    let mut total_iter = 0;
    let mut result = run(&eval, &best, step, opts, &mut total_iter);
    for _ in 0..opts.restarts {
        if !result.converged {
            break;
        }
        best = result.x.clone();
        let again = run(&eval, &best, step, opts, &mut total_iter);
        let improved = again.value < result.value - opts.f_tol;
        let converged = again.converged;
        if again.value <= result.value {
            result = again;
        }
        result.converged = converged;
        if !improved {
            break;
        }
    }
    result.iterations = total_iter;
    result
}

fn run<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step: &[f64],
    opts: &NelderMeadOptions,
    iterations: &mut usize,
) -> Minimum {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut local_iter = 0;
    while local_iter < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size =
            simplex[1..].iter().flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if values[0].is_finite() && spread <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        local_iter += 1;
        *iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let reflected = along(-alpha);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-gamma);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (contracted, fc) = if fr < values[n] {
                let c = along(-rho);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = along(rho);
                let fc = f(&c);
                (c, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + shrink * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b))).unwrap_or(0);
    Minimum { x: simplex[best].clone(), value: values[best], iterations: local_iter, converged }
}
