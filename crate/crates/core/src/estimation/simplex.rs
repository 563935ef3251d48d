//! Box-bounded Nelder–Mead minimizer. Trial points are projected onto the
//! box, so every evaluated point is feasible.

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexSettings {
    pub step: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fresh-simplex restarts allowed after a converged pass.
    pub max_restarts: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn initial_simplex(x0: &[f64], lower: &[f64], upper: &[f64], step: f64) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        // Step inward when the forward step would leave the box.
        if p[i] + step <= upper[i] {
            p[i] += step;
        } else {
            p[i] -= step;
        }
        project(&mut p, lower, upper);
        pts.push(p);
    }
    pts
}

/// One Nelder–Mead pass; stops when the spread of objective values across
/// the simplex drops below `tolerance` or the iteration budget runs out.
fn pass<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &SimplexSettings,
    budget: usize,
) -> SimplexOutcome {
    let n = x0.len();
    let mut pts = initial_simplex(x0, lower, upper, settings.step);
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(f, p)).collect();
    let mut iterations = 0;
    let mut converged = false;

    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < budget {
        // Stable sort keeps the ordering deterministic when values tie.
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];
        if (vals[worst] - vals[best]).abs() < settings.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&pts[worst]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, lower, upper);
            p
        };

        let xr = along(1.0);
        let fr = eval(f, &xr);
        if fr < vals[best] {
            let xe = along(2.0);
            let fe = eval(f, &xe);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        let xb = pts[best].clone();
        for &i in &order[1..] {
            for (v, b) in pts[i].iter_mut().zip(&xb) {
                *v = b + 0.5 * (*v - b);
            }
            vals[i] = eval(f, &pts[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexOutcome { x: pts[best].clone(), f: vals[best], iterations, converged }
}

/// Minimize `f` inside `[lower, upper]` starting from `x0`.
///
/// After a converged pass the search restarts from the best point with a
/// fresh simplex, and stops once a restart no longer improves by more than
/// the tolerance. The returned value is never worse than `f(x0)`.
pub(crate) fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &SimplexSettings,
) -> SimplexOutcome {
    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    let f0 = eval(&mut f, &start);
    let mut best = SimplexOutcome { x: start, f: f0, iterations: 0, converged: false };
    let mut used = 0;
    let mut restarts = 0;
    while used < settings.max_iterations {
        let out = pass(&mut f, &best.x, lower, upper, settings, settings.max_iterations - used);
        used += out.iterations;
        let improvement = best.f - out.f;
        let converged = out.converged;
        if out.f < best.f {
            best.x = out.x;
            best.f = out.f;
        }
        best.iterations = used;
        if !converged {
            best.converged = false;
            break;
        }
        best.converged = true;
        if improvement.abs() < settings.tolerance || restarts >= settings.max_restarts {
            break;
        }
        restarts += 1;
    }
    best
}
