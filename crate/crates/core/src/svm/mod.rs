//! Soft-margin support vector machines with one-vs-one multiclass voting.

mod kernel;
mod solver;

pub use kernel::{Kernel, FULL_GRAM_LIMIT};
pub use solver::{dual_objective, solve, DualSolution, SolverOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{NodeCount, Samples};
use crate::error::{Error, Result};

/// Kernel choice as written in configs; `gamma = None` means `1 / n_features`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Rbf {
        #[serde(default)]
        gamma: Option<f64>,
    },
}

impl KernelSpec {
    pub fn resolve(&self, dim: usize) -> Kernel {
        match *self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Rbf { gamma } => Kernel::Rbf {
                gamma: gamma.unwrap_or(1.0 / dim.max(1) as f64),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub kernel: KernelSpec,
    pub cost: f64,
    /// Reweight the cost so every class carries the same total weight.
    pub weighted: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: KernelSpec::Rbf { gamma: None },
            cost: 1.0,
            weighted: false,
            tolerance: 1e-3,
            max_iterations: 100_000,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost {} must be positive",
                self.cost
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if let KernelSpec::Rbf { gamma: Some(g) } = self.kernel {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gamma {g} must be positive"
                )));
            }
        }
        Ok(())
    }

    fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

/// Binary classifier separating `positive` (y = +1) from `negative` (y = -1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub cost: f64,
    pub positive: NodeCount,
    pub negative: NodeCount,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

impl BinarySvmModel {
    /// Trains on the rows of `train` labeled `positive` or `negative`.
    ///
    /// `class_weights` scales the cost per class: `C_i = cost * weight[class(i)]`.
    pub fn fit(
        train: &Samples,
        positive: NodeCount,
        negative: NodeCount,
        kernel: Kernel,
        cost: f64,
        class_weights: &[f64; 4],
        options: SolverOptions,
    ) -> Result<Self> {
        if !(options.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut upper = Vec::new();
        for (row, &label) in train.rows().zip(&train.labels) {
            let sign = if label == positive {
                1.0
            } else if label == negative {
                -1.0
            } else {
                continue;
            };
            x.push(row.to_vec());
            y.push(sign);
            upper.push(cost * class_weights[label.index()]);
        }
        for (class, sign) in [(positive, 1.0), (negative, -1.0)] {
            if !y.contains(&sign) {
                return Err(Error::ClassAbsent { class });
            }
        }
        let sol = solve(&x, &y, &upper, kernel, options);
        Ok(Self::from_solution(
            &x, &y, sol, kernel, cost, positive, negative,
        ))
    }

    fn from_solution(
        x: &[Vec<f64>],
        y: &[f64],
        sol: DualSolution,
        kernel: Kernel,
        cost: f64,
        positive: NodeCount,
        negative: NodeCount,
    ) -> Self {
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for ((row, &yi), &a) in x.iter().zip(y).zip(&sol.alpha) {
            if a > 0.0 {
                support_vectors.push(row.clone());
                coefficients.push(a * yi);
            }
        }
        BinarySvmModel {
            support_vectors,
            coefficients,
            bias: sol.bias,
            kernel,
            cost,
            positive,
            negative,
            converged: sol.converged,
            iterations: sol.iterations,
            objective: sol.objective,
        }
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `sum_i alpha_i y_i k(x_i, x) + b`, positive on the `positive` side.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if !self.support_vectors.is_empty() && x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.decision_value_unchecked(x))
    }

    fn decision_value_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Primal weights `w = sum_i alpha_i y_i x_i`; only meaningful for the
    /// linear kernel.
    pub fn weight_vector(&self) -> Option<Vec<f64>> {
        if self.kernel != Kernel::Linear {
            return None;
        }
        let mut w = vec![0.0; self.dim()];
        for (sv, c) in self.support_vectors.iter().zip(&self.coefficients) {
            for (wj, xj) in w.iter_mut().zip(sv) {
                *wj += c * xj;
            }
        }
        Some(w)
    }

    pub fn predict(&self, x: &[f64]) -> Result<NodeCount> {
        Ok(if self.decision_value(x)? > 0.0 {
            self.positive
        } else {
            self.negative
        })
    }
}

/// Per-class weights that give every class the same total weight
/// (`weight_k * count_k` constant), normalized so the weights average to 1
/// over the training rows.
pub fn balanced_class_weights(counts: &[usize; 4]) -> [f64; 4] {
    let present = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
    let total: usize = counts.iter().sum();
    let mut w = [1.0; 4];
    for (wk, &c) in w.iter_mut().zip(counts) {
        if c > 0 {
            *wk = total as f64 / (present * c as f64);
        }
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoSvmModel {
    pub config: SvmConfig,
    pub class_weights: [f64; 4],
    pub models: Vec<BinarySvmModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvoPrediction {
    pub class: NodeCount,
    pub votes: [u32; 4],
    /// Sum of decision values oriented towards each class.
    pub margin_sums: [f64; 4],
    /// Ranking score: votes plus a squashed margin sum in (0, 1).
    pub scores: [f64; 4],
}

/// Maps a margin sum into (0, 1), preserving order.
fn squash(m: f64) -> f64 {
    0.5 + 0.5 * m / (1.0 + m.abs())
}

/// Majority vote; ties go to the larger margin sum, then to the smaller N.
pub fn resolve_votes(votes: &[u32; 4], margin_sums: &[f64; 4]) -> NodeCount {
    let mut best = 0;
    for k in 1..4 {
        if votes[k] > votes[best] || (votes[k] == votes[best] && margin_sums[k] > margin_sums[best])
        {
            best = k;
        }
    }
    NodeCount::from_index(best)
}

impl OvoSvmModel {
    pub fn fit(train: &Samples, config: SvmConfig) -> Result<Self> {
        config.validate()?;
        let counts = train.class_counts();
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::ClassAbsent {
                class: NodeCount::from_index(k),
            });
        }
        let class_weights = if config.weighted {
            balanced_class_weights(&counts)
        } else {
            [1.0; 4]
        };
        let kernel = config.kernel.resolve(train.dim());
        let pairs: Vec<(NodeCount, NodeCount)> = NodeCount::ALL
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| NodeCount::ALL[i + 1..].iter().map(move |&b| (a, b)))
            .collect();
        let models = pairs
            .par_iter()
            .map(|&(a, b)| {
                BinarySvmModel::fit(
                    train,
                    a,
                    b,
                    kernel,
                    config.cost,
                    &class_weights,
                    config.options(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OvoSvmModel {
            config,
            class_weights,
            models,
        })
    }

    pub fn converged(&self) -> bool {
        self.models.iter().all(|m| m.converged)
    }

    pub fn predict(&self, x: &[f64]) -> Result<OvoPrediction> {
        let mut votes = [0u32; 4];
        let mut margin_sums = [0.0; 4];
        for model in &self.models {
            let dv = model.decision_value(x)?;
            let winner = if dv > 0.0 {
                model.positive
            } else {
                model.negative
            };
            votes[winner.index()] += 1;
            margin_sums[model.positive.index()] += dv;
            margin_sums[model.negative.index()] -= dv;
        }
        let class = resolve_votes(&votes, &margin_sums);
        let mut scores = [0.0; 4];
        for k in 0..4 {
            scores[k] = f64::from(votes[k]) + squash(margin_sums[k]);
        }
        Ok(OvoPrediction {
            class,
            votes,
            margin_sums,
            scores,
        })
    }
}
