//! Nelder–Mead simplex search.
//!
//! Termination tests are relative in `f` and absolute in `x`, so scaling
//! the objective by a power of two leaves the evaluation sequence unchanged.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Maximum number of objective evaluations across all restarts.
    pub budget: usize,
    /// Stop when `f_max − f_min ≤ ftol_rel · |f_min|` over the simplex.
    pub ftol_rel: f64,
    /// Stop when every vertex lies within `xtol` (max-norm) of the best one.
    pub xtol: f64,
    /// Fresh simplices built around the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            budget: 2000,
            ftol_rel: 1e-10,
            xtol: 1e-7,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

struct Counted<F> {
    f: F,
    used: usize,
    budget: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        // NaN sorts as worst
        Some(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Minimizes `f` from `x0`. The initial simplex adds `steps[k]` to
/// coordinate `k`; a zero step freezes that coordinate. `f(x0)` is the first
/// evaluation, so the result is never worse than the start.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len());
    let mut fc = Counted {
        f,
        used: 0,
        budget: opts.budget,
    };
    let mut best_x = x0.to_vec();
    let mut trace = Vec::new();
    let Some(mut best_f) = fc.eval(x0) else {
        return NelderMeadResult {
            x: best_x,
            f: f64::NAN,
            evaluations: 0,
            trace,
        };
    };
    // only coordinates with a non-zero step move
    let active: Vec<usize> = (0..x0.len()).filter(|&k| steps[k] != 0.0).collect();
    if active.is_empty() {
        return NelderMeadResult {
            x: best_x,
            f: best_f,
            evaluations: fc.used,
            trace,
        };
    }
    for _round in 0..=opts.restarts {
        let (x, fx, exhausted) = run(&mut fc, &best_x, best_f, steps, &active, opts, &mut trace);
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
        if exhausted {
            break;
        }
    }
    NelderMeadResult {
        x: best_x,
        f: best_f,
        evaluations: fc.used,
        trace,
    }
}

/// One simplex run from `x0` (already evaluated as `f0`). Returns the best
/// vertex and whether the budget ran out.
fn run<F: FnMut(&[f64]) -> f64>(
    fc: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    active: &[usize],
    opts: &NelderMeadOptions,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, bool) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = active.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for &k in active {
        let mut x = x0.to_vec();
        x[k] += steps[k];
        let Some(fx) = fc.eval(&x) else {
            return best_of(simplex, true);
        };
        simplex.push((x, fx));
    }

    loop {
        // stable sort keeps earlier vertices first among equal values
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        let x_best = &simplex[0].0;
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| active.iter().map(move |&k| (x[k] - x_best[k]).abs()))
            .fold(0.0f64, f64::max);
        if f_worst - f_best <= opts.ftol_rel * f_best.abs() || spread <= opts.xtol {
            return best_of(simplex, false);
        }

        let mut centroid = simplex[0].0.clone();
        for &k in active {
            centroid[k] = simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64;
        }
        let toward = |t: f64, from: &[f64]| -> Vec<f64> {
            let mut x = centroid.clone();
            for &k in active {
                x[k] = centroid[k] + t * (from[k] - centroid[k]);
            }
            x
        };
        let worst = simplex[n].0.clone();

        let xr = toward(-ALPHA, &worst);
        let Some(fr) = fc.eval(&xr) else {
            return best_of(simplex, true);
        };
        if fr < simplex[0].1 {
            let xe = toward(-GAMMA, &worst);
            let Some(fe) = fc.eval(&xe) else {
                simplex[n] = (xr, fr);
                return best_of(simplex, true);
            };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, outside) = if fr < simplex[n].1 {
            (toward(-RHO, &worst), true)
        } else {
            (toward(RHO, &worst), false)
        };
        let Some(fcv) = fc.eval(&xc) else {
            return best_of(simplex, true);
        };
        let accept = if outside { fcv <= fr } else { fcv < simplex[n].1 };
        if accept {
            simplex[n] = (xc, fcv);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for &k in active {
                v.0[k] = x_best[k] + SIGMA * (v.0[k] - x_best[k]);
            }
            match fc.eval(&v.0) {
                Some(fx) => v.1 = fx,
                None => {
                    // the vertex moved but was not re-evaluated; drop its value
                    v.1 = f64::INFINITY;
                    return best_of(simplex, true);
                }
            }
        }
    }
}

fn best_of(mut simplex: Vec<(Vec<f64>, f64)>, exhausted: bool) -> (Vec<f64>, f64, bool) {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    (x, f, exhausted)
}
