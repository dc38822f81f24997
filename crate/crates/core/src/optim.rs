//! Box-constrained Nelder–Mead simplex search.
//!
//! Candidate points are projected onto the box before evaluation. When the
//! search converges onto a face of the box it is restarted from the
//! converged point with a fresh simplex, up to a fixed budget.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when `f_max - f_min <= ftol * (|f_min| + ftol)`.
    pub ftol: f64,
    /// and the simplex diameter is at most `xtol` in every coordinate.
    pub xtol: f64,
    /// Initial edge length relative to `max(|x_i|, 1)`.
    pub initial_step: f64,
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 20_000,
            ftol: 1e-12,
            xtol: 1e-10,
            initial_step: 0.1,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
    /// Some coordinate ended on (within `xtol` of) a bound.
    pub at_boundary: bool,
    pub restarts: usize,
}

fn project(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (v, &(lo, hi)) in x.iter_mut().zip(b) {
            *v = v.clamp(lo, hi);
        }
    }
}

fn on_boundary(x: &[f64], bounds: Option<&[(f64, f64)]>, tol: f64) -> bool {
    match bounds {
        Some(b) => x.iter().zip(b).any(|(&v, &(lo, hi))| {
            let scale = tol * (1.0 + v.abs());
            (v - lo).abs() <= scale || (hi - v).abs() <= scale
        }),
        None => false,
    }
}

/// Minimizes `f` starting from `x0`, restarting on boundary convergence.
pub fn minimize<F>(f: F, x0: &[f64], bounds: Option<&[(f64, f64)]>, opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let mut start = x0.to_vec();
    project(&mut start, bounds);
    let mut best = run_simplex(&f, &start, bounds, opts);
    let mut restarts = 0;
    while restarts < opts.max_restarts && (!best.converged || best.at_boundary) {
        restarts += 1;
        let next = run_simplex(&f, &best.x, bounds, opts);
        let improved = next.fx < best.fx - opts.ftol * (best.fx.abs() + opts.ftol);
        let evals = best.evals + next.evals;
        if next.fx <= best.fx {
            best = next;
        }
        best.evals = evals;
        if !improved && best.converged {
            break;
        }
    }
    best.restarts = restarts;
    best
}

fn run_simplex<F>(f: &F, x0: &[f64], bounds: Option<&[(f64, f64)]>, opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = opts.initial_step * x0[i].abs().max(1.0);
        p[i] += step;
        project(&mut p, bounds);
        if p[i] == x0[i] {
            // Sitting on the upper bound: step inward instead.
            p[i] -= step;
            project(&mut p, bounds);
        }
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut evals = dim + 1;
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let diameter = (0..dim)
            .map(|j| {
                let (lo, hi) = simplex
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
                hi - lo
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol * (values[0].abs() + opts.ftol) && diameter <= opts.xtol * (1.0 + max_abs(&simplex[0]))
        {
            converged = true;
            break;
        }
        if spread == 0.0 && diameter == 0.0 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for p in &simplex[..dim] {
            for j in 0..dim {
                centroid[j] += p[j] / dim as f64;
            }
        }
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..dim).map(|j| centroid[j] + t * (simplex[dim][j] - centroid[j])).collect();
            project(&mut p, bounds);
            p
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            evals += 1;
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = along(-0.5);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = eval(&c);
            (c, fc)
        };
        evals += 1;
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..=dim {
            for j in 0..dim {
                simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
            }
            values[i] = eval(&simplex[i]);
        }
        evals += dim;
    }

    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let x = simplex[best].clone();
    let at_boundary = on_boundary(&x, bounds, opts.xtol.max(1e-9));
    Minimum { x, fx: values[best], evals, converged, at_boundary, restarts: 0 }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let m = minimize(f, &[0.0, 0.0], None, &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 2.0).abs() < 1e-5);
        assert!(!m.at_boundary);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], None, &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2) + x[1].powi(2);
        let bounds = [(-1.0, 2.0), (-1.0, 1.0)];
        let m = minimize(f, &[0.0, 0.5], Some(&bounds), &NelderMeadOptions::default());
        assert!((m.x[0] - 2.0).abs() < 1e-8);
        assert!(m.at_boundary);
        assert!(m.restarts >= 1);
    }

    #[test]
    fn one_dimensional() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2);
        let m = minimize(f, &[0.0], Some(&[(-0.5, 0.5)]), &NelderMeadOptions::default());
        assert!((m.x[0] - 0.3).abs() < 1e-6);
    }
}
