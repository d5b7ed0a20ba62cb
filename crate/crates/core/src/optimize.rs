//! Small dense unconstrained minimizers used by the estimators.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when `‖∇f‖ < gradient_tolerance·(1 + |f|)`.
    pub gradient_tolerance: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Consecutive accepted steps without a decrease in `f` before giving up.
const MAX_FLAT_STEPS: usize = 5;

/// BFGS with Armijo backtracking. `initial_inverse_hessian` seeds the inverse
/// Hessian approximation and is reused whenever the update is reset.
///
/// The flag is set when the search stalled before convergence (no acceptable
/// step, or no decrease in `f` over several steps); callers decide how to polish.
pub fn bfgs<F, G>(
    f: F,
    grad: G,
    x0: DVector<f64>,
    initial_inverse_hessian: Option<DMatrix<f64>>,
    opts: BfgsOptions,
) -> (Minimum, bool)
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x0.len();
    let reset = initial_inverse_hessian.unwrap_or_else(|| DMatrix::identity(n, n));
    let mut h = reset.clone();
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut line_search_failed = false;
    let mut iterations = 0;
    let mut flat_steps = 0;

    while iterations < opts.max_iterations {
        let gnorm = g.norm();
        if gnorm < opts.gradient_tolerance * (1.0 + fx.abs()) {
            return (
                Minimum {
                    x,
                    value: fx,
                    gradient_norm: gnorm,
                    iterations,
                    converged: true,
                },
                false,
            );
        }
        iterations += 1;

        let mut direction = -(&h * &g);
        let mut slope = direction.dot(&g);
        if !(slope < 0.0) || !slope.is_finite() {
            h = reset.clone();
            direction = -(&h * &g);
            slope = direction.dot(&g);
            if !(slope < 0.0) {
                direction = -g.clone();
                slope = -g.norm_squared();
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = &x + step * &direction;
            let fc = f(&candidate);
            if fc.is_finite() && fc <= fx + ARMIJO_C1 * step * slope {
                accepted = Some((candidate, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            line_search_failed = true;
            break;
        };

        flat_steps = if f_new < fx { 0 } else { flat_steps + 1 };
        if flat_steps >= MAX_FLAT_STEPS {
            line_search_failed = true;
            break;
        }

        let g_new = grad(&x_new);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy.is_finite() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded
            h += (rho * rho * yhy + rho) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let gnorm = g.norm();
    let converged = gnorm < opts.gradient_tolerance * (1.0 + fx.abs());
    (
        Minimum {
            x,
            value: fx,
            gradient_norm: gnorm,
            iterations,
            converged,
        },
        line_search_failed,
    )
}

/// Nelder–Mead simplex search with standard coefficients.
pub fn nelder_mead<F>(
    f: F,
    x0: &DVector<f64>,
    initial_step: f64,
    max_evaluations: usize,
    tolerance: f64,
) -> (DVector<f64>, f64)
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = x0.len();
    let eval = |x: &DVector<f64>| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), eval(x0)));
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += if v[i].abs() > 1e-8 {
            initial_step * v[i].abs().max(1.0)
        } else {
            initial_step
        };
        let fv = eval(&v);
        simplex.push((v, fv));
    }
    let mut evaluations = n + 1;

    while evaluations < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= tolerance * (1.0 + best.abs()) {
            let spread = simplex
                .iter()
                .map(|(v, _)| (v - &simplex[0].0).amax())
                .fold(0.0, f64::max);
            if spread < tolerance.sqrt() {
                break;
            }
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, (v, _)| acc + v) / n as f64;
        let reflect = &centroid + (&centroid - &simplex[n].0);
        let fr = eval(&reflect);
        evaluations += 1;
        if fr < simplex[0].1 {
            let expand = &centroid + 2.0 * (&reflect - &centroid);
            let fe = eval(&expand);
            evaluations += 1;
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let (toward, ft) = if fr < simplex[n].1 {
                (&reflect, fr)
            } else {
                (&simplex[n].0.clone(), simplex[n].1)
            };
            let contract = &centroid + 0.5 * (toward - &centroid);
            let fc = eval(&contract);
            evaluations += 1;
            if fc < ft {
                simplex[n] = (contract, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    *v = &anchor + 0.5 * (&*v - &anchor);
                    *fv = eval(v);
                }
                evaluations += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
