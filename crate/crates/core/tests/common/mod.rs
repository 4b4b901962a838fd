//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nodecount_core::svm::Kernel;
use nodecount_core::NodeCount;
use rand::Rng;

pub fn n(k: u8) -> NodeCount {
    NodeCount::new(k).unwrap()
}

/// Exhaustive active-set solution of the SVM dual
/// `max 1'a - 0.5 a'Qa  s.t.  0 <= a <= C, y'a = 0`.
///
/// Every split of the variables into {at 0, at C, free} is tried; the free
/// block is solved from its stationarity and equality conditions and the best
/// feasible point wins. Exponential in `m`; fine for `m <= 8`.
pub fn brute_force_dual(x: &[Vec<f64>], y: &[f64], c: f64, kernel: Kernel) -> (f64, Vec<f64>) {
    let m = y.len();
    let q = DMatrix::from_fn(m, m, |i, j| y[i] * y[j] * kernel.eval(&x[i], &x[j]));
    let objective = |a: &[f64]| {
        let v = DVector::from_column_slice(a);
        a.iter().sum::<f64>() - 0.5 * (v.transpose() * &q * &v)[(0, 0)]
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; m]);
    let patterns = 3usize.pow(m as u32);
    for code in 0..patterns {
        let mut state = vec![0u8; m];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            let f = free.len();
            let mut lhs = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = q[(i, j)];
                }
                lhs[(r, f)] = y[i];
                lhs[(f, r)] = y[i];
                rhs[r] = 1.0
                    - (0..m)
                        .filter(|&j| state[j] == 1)
                        .map(|j| q[(i, j)] * c)
                        .sum::<f64>();
            }
            rhs[f] = -(0..m)
                .filter(|&j| state[j] == 1)
                .map(|j| y[j] * c)
                .sum::<f64>();
            let Ok(sol) = lhs.clone().svd(true, true).solve(&rhs, 1e-12) else {
                continue;
            };
            if (&lhs * &sol - &rhs).amax() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a))
            && alpha.iter().zip(y).map(|(a, yi)| a * yi).sum::<f64>().abs() < 1e-8;
        if feasible {
            let value = objective(&alpha);
            if value > best.0 {
                best = (value, alpha);
            }
        }
    }
    best
}

/// Full-sort kNN: sort every stored row by (distance, index), vote among the
/// first k, break label ties by mean neighbor distance and then smaller N.
pub fn knn_oracle(rows: &[Vec<f64>], labels: &[NodeCount], k: usize, x: &[f64]) -> NodeCount {
    let mut all: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                i,
            )
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = [0usize; 4];
    let mut dist = [0.0f64; 4];
    for &(d2, i) in &all[..k] {
        votes[labels[i].index()] += 1;
        dist[labels[i].index()] += d2.sqrt();
    }
    let top = *votes.iter().max().unwrap();
    let winner = (0..4)
        .filter(|&c| votes[c] == top)
        .min_by(|&a, &b| {
            (dist[a] / top as f64)
                .partial_cmp(&(dist[b] / top as f64))
                .unwrap()
                .then(a.cmp(&b))
        })
        .unwrap();
    NodeCount::from_index(winner)
}

/// Probability that a random positive outranks a random negative, ties
/// counted half.
pub fn pair_counting_auc(positive: &[bool], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Random binary SVM problem with both labels present.
pub fn random_binary_problem(rng: &mut impl Rng, max_points: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = rng.random_range(2..=max_points);
    let dim = rng.random_range(1..=3);
    loop {
        let x: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
            return (x, y);
        }
    }
}

/// `y_i f(x_i)` for every training point.
pub fn margins(x: &[Vec<f64>], y: &[f64], alpha: &[f64], bias: f64, kernel: Kernel) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| {
            let f: f64 = x
                .iter()
                .zip(y)
                .zip(alpha)
                .map(|((xj, yj), aj)| aj * yj * kernel.eval(xj, xi))
                .sum::<f64>()
                + bias;
            yi * f
        })
        .collect()
}

/// Largest KKT violation of a dual solution, in units of `y f(x)`.
pub fn kkt_violation(margins: &[f64], alpha: &[f64], c: f64) -> f64 {
    let eps = 1e-9 * c.max(1.0);
    margins
        .iter()
        .zip(alpha)
        .map(|(&m, &a)| {
            if a <= eps {
                (1.0 - m).max(0.0)
            } else if a >= c - eps {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}
