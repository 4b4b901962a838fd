//! Pairwise coordinate ascent on the soft-margin SVM dual.
//!
//! Minimizes `0.5 a'Qa - 1'a` subject to `0 <= a_i <= C_i` and `y'a = 0`,
//! with `Q_ij = y_i y_j k(x_i, x_j)`. Each step picks the pair that violates
//! the KKT conditions most (second-order selection), solves the two-variable
//! subproblem in closed form and clips it back into the box.

use super::kernel::{Kernel, KernelCache};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Maximal allowed KKT violation (in units of `y f(x)`).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-3,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Value of the dual objective `sum a - 0.5 a'Qa` (to be maximized).
    pub objective: f64,
}

/// Solves the dual for rows `x` with labels `y` in {-1, +1} and per-example
/// box bounds `upper`.
pub fn solve(
    x: &[Vec<f64>],
    y: &[f64],
    upper: &[f64],
    kernel: Kernel,
    options: SolverOptions,
) -> DualSolution {
    let mut cache = KernelCache::new(kernel, x);
    solve_with_cache(&mut cache, x, y, upper, kernel, options)
}

pub(crate) fn solve_with_cache(
    cache: &mut KernelCache<'_>,
    x: &[Vec<f64>],
    y: &[f64],
    upper: &[f64],
    kernel: Kernel,
    options: SolverOptions,
) -> DualSolution {
    let m = y.len();
    let diag: Vec<f64> = x.iter().map(|r| kernel.eval(r, r)).collect();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];

    let in_up = |a: f64, yi: f64, c: f64| if yi > 0.0 { a < c } else { a > 0.0 };
    let in_low = |a: f64, yi: f64, c: f64| if yi > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        // first index: maximal violation
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if in_up(alpha[t], y[t], upper[t]) {
                let v = -y[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        let mut g_min = f64::INFINITY;
        for t in 0..m {
            if in_low(alpha[t], y[t], upper[t]) {
                g_min = g_min.min(-y[t] * grad[t]);
            }
        }
        if i == usize::MAX || g_max - g_min < options.tolerance {
            converged = true;
            break;
        }

        // second index: largest guaranteed decrease
        let k_i = cache.row(i);
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..m {
            if !in_low(alpha[t], y[t], upper[t]) {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let mut a = diag[i] + diag[t] - 2.0 * k_i[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best {
                    best = gain;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            converged = true;
            break;
        }
        let k_j = cache.row(j);
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (c_i, c_j) = (upper[i], upper[j]);
        let q_ij = y[i] * y[j] * k_i[j];
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > c_i - c_j {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = c_i - diff;
                }
            } else if alpha[j] > c_j {
                alpha[j] = c_j;
                alpha[i] = c_j + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_i {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = sum - c_i;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c_j {
                if alpha[j] > c_j {
                    alpha[j] = c_j;
                    alpha[i] = sum - c_j;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_i;
        let d_j = alpha[j] - old_j;
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k_i[t] * d_i + y[j] * k_j[t] * d_j);
        }
    }

    let bias = -threshold(&alpha, y, &grad, upper);
    // a'Qa = a'(G + 1)
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a - 0.5 * a * (g + 1.0))
        .sum();
    DualSolution {
        alpha,
        bias,
        iterations,
        converged,
        objective,
    }
}

/// `rho` such that `f(x) = sum a_i y_i k(x_i, x) - rho`.
fn threshold(alpha: &[f64], y: &[f64], grad: &[f64], upper: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// Dual objective for arbitrary multipliers.
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64], kernel: Kernel) -> f64 {
    let mut quad = 0.0;
    for i in 0..alpha.len() {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..alpha.len() {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}
