//! Small dense unconstrained minimizers used by the coefficient fit.
//!
//! BFGS with a backtracking Armijo line search is the workhorse; Nelder-Mead
//! serves as a derivative-free fallback when the line search stalls on a
//! non-smooth ridge (the scale-floor clamp can create one).

/// A smooth objective with an analytic gradient.
pub(crate) trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    /// Returns the value and fills `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OptimOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the gradient.
    pub grad_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point probed by the line search, with its gradient.
struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

fn probe(objective: &dyn Objective, x: &[f64], direction: &[f64], alpha: f64) -> Probe {
    let point: Vec<f64> = x
        .iter()
        .zip(direction)
        .map(|(xi, di)| xi + alpha * di)
        .collect();
    let mut grad = vec![0.0; x.len()];
    let value = objective.value_grad(&point, &mut grad);
    let slope = dot(&grad, direction);
    Probe {
        alpha,
        value,
        slope,
        x: point,
        grad,
    }
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

/// Strong-Wolfe line search (bracketing plus bisection zoom). Guarantees
/// positive curvature along the step, which keeps the BFGS update
/// well-defined.
fn line_search(
    objective: &dyn Objective,
    x: &[f64],
    direction: &[f64],
    value0: f64,
    slope0: f64,
) -> Option<Probe> {
    let armijo = |p: &Probe| p.value <= value0 + WOLFE_C1 * p.alpha * slope0;
    let curvature = |p: &Probe| p.slope.abs() <= -WOLFE_C2 * slope0;

    let zoom = |mut lo: Probe, mut hi_alpha: f64| -> Option<Probe> {
        for _ in 0..40 {
            let alpha = 0.5 * (lo.alpha + hi_alpha);
            if (hi_alpha - lo.alpha).abs() <= 1e-16 * (1.0 + lo.alpha.abs()) {
                break;
            }
            let candidate = probe(objective, x, direction, alpha);
            if !candidate.value.is_finite() || !armijo(&candidate) || candidate.value >= lo.value {
                hi_alpha = alpha;
            } else {
                if curvature(&candidate) {
                    return Some(candidate);
                }
                if candidate.slope * (hi_alpha - lo.alpha) >= 0.0 {
                    hi_alpha = lo.alpha;
                }
                lo = candidate;
            }
        }
        // the curvature condition was never met; the Armijo point still
        // makes progress
        (lo.alpha > 0.0).then_some(lo)
    };

    let mut prev: Option<Probe> = None;
    let mut alpha = 1.0;
    for iteration in 0..20 {
        let candidate = probe(objective, x, direction, alpha);
        if !candidate.value.is_finite()
            || !armijo(&candidate)
            || prev.as_ref().is_some_and(|p| candidate.value >= p.value)
        {
            // zoom between the last acceptable point (or the origin, which
            // satisfies Armijo trivially) and the rejected step
            let lo = prev.unwrap_or_else(|| Probe {
                alpha: 0.0,
                value: value0,
                slope: slope0,
                x: x.to_vec(),
                grad: vec![0.0; x.len()],
            });
            return zoom(lo, alpha).filter(|p| p.alpha > 0.0);
        }
        if curvature(&candidate) {
            return Some(candidate);
        }
        if candidate.slope >= 0.0 {
            return zoom(candidate, prev.map_or(0.0, |p| p.alpha));
        }
        alpha = (alpha * 2.0).min(1e8);
        prev = Some(candidate);
        if iteration == 19 {
            return prev;
        }
    }
    None
}

/// BFGS with an inverse-Hessian approximation stored densely.
pub(crate) fn bfgs(objective: &dyn Objective, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = objective.value_grad(&x, &mut grad);
    if !value.is_finite() {
        return OptimResult {
            x,
            value,
            iterations: 0,
            termination: Termination::LineSearchFailed,
        };
    }

    // inverse Hessian approximation, row-major identity
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }

    let mut direction = vec![0.0; n];

    for iteration in 0..opts.max_iterations {
        if grad.iter().all(|g| g.abs() <= opts.grad_tolerance) {
            return OptimResult {
                x,
                value,
                iterations: iteration,
                termination: Termination::Converged,
            };
        }

        // direction = -H g
        for i in 0..n {
            direction[i] = -dot(&h[i * n..(i + 1) * n], &grad);
        }
        let mut slope = dot(&direction, &grad);
        if slope >= 0.0 {
            // H lost positive definiteness; restart from steepest descent
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
                direction[i] = -grad[i];
            }
            slope = dot(&direction, &grad);
        }

        let Some(accepted) = line_search(objective, &x, &direction, value, slope) else {
            return OptimResult {
                x,
                value,
                iterations: iteration,
                termination: Termination::LineSearchFailed,
            };
        };

        // s = x_new - x, y = grad_new - grad
        let s: Vec<f64> = (0..n).map(|i| accepted.x[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| accepted.grad[i] - grad[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy.is_finite() {
            if iteration == 0 {
                // scale the initial inverse Hessian (Nocedal & Wright 6.20)
                let yy = dot(&y, &y);
                if yy > 0.0 {
                    let scale = sy / yy;
                    for i in 0..n {
                        h[i * n + i] = scale;
                    }
                }
            }
            // BFGS update: H <- (I - r s y')H(I - r y s') + r s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        x.copy_from_slice(&accepted.x);
        grad.copy_from_slice(&accepted.grad);
        value = accepted.value;
    }

    let termination = if grad.iter().all(|g| g.abs() <= opts.grad_tolerance) {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    OptimResult {
        x,
        value,
        iterations: opts.max_iterations,
        termination,
    }
}

/// Classic Nelder-Mead with adaptive initial simplex.
///
/// Converges when the simplex collapses in both value spread and extent.
pub(crate) fn nelder_mead(
    objective: &dyn Objective,
    x0: &[f64],
    opts: &OptimOptions,
) -> OptimResult {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if x0[i].abs() > 1e-6 {
            0.1 * x0[i].abs()
        } else {
            0.05
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| objective.value(v)).collect();

    let spread_tol = 1e-12;

    for iteration in 0..opts.max_iterations {
        // order ascending by value
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        let extent: f64 = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|v| v[i])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - simplex.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= spread_tol * (1.0 + values[best].abs()) && extent <= 1e-10 {
            return OptimResult {
                x: simplex[best].clone(),
                value: values[best],
                iterations: iteration,
                termination: Termination::Converged,
            };
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (idx, v) in simplex.iter().enumerate() {
            if idx != worst {
                for i in 0..n {
                    centroid[i] += v[i] / n as f64;
                }
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - simplex[worst][i]))
            .collect();
        let f_reflect = objective.value(&reflect);

        if f_reflect < values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                .collect();
            let f_expand = objective.value(&expand);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|i| centroid[i] + rho * (simplex[worst][i] - centroid[i]))
                .collect();
            let f_contract = objective.value(&contract);
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for (idx, v) in simplex.iter_mut().enumerate() {
                    if idx != best {
                        for i in 0..n {
                            v[i] = best_point[i] + sigma * (v[i] - best_point[i]);
                        }
                    }
                }
                for idx in 0..=n {
                    if idx != best {
                        values[idx] = objective.value(&simplex[idx]);
                    }
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    OptimResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations: opts.max_iterations,
        termination: Termination::MaxIterations,
    }
}
