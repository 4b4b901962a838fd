//! Naive Bayes node-count classifier.
//!
//! Each class gets an independent likelihood per feature (Gaussian, or
//! Poisson over ETA rounded to whole seconds) and a prior that is either
//! uniform or the class frequency in the training set. The decision is the
//! MAP class; with a uniform prior it coincides with the maximum-likelihood
//! class.
//!
//! In conditioning mode the categorical features (transmit power, distance)
//! do not get a likelihood of their own. They select a per-(class, category)
//! ETA model instead, and since their marginal does not depend on the class
//! in a balanced campaign they drop out of the argmax.

use serde::{Deserialize, Serialize};

use crate::data::{Feature, NodeCount, Samples};
use crate::error::{Error, Result};

/// Relative variance floor, in units of the feature's overall training variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;
const RATE_FLOOR: f64 = 1e-6;
/// Conditioning cells smaller than this fall back to the class-level model.
pub const MIN_CELL_SIZE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodKind {
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesConfig {
    pub likelihood: LikelihoodKind,
    pub prior: PriorKind,
    /// Condition the ETA likelihood on the categorical features instead of
    /// treating them as independent naive features.
    pub conditioning: bool,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig {
            likelihood: LikelihoodKind::Gaussian,
            prior: PriorKind::Empirical,
            conditioning: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pdf", rename_all = "snake_case")]
pub enum FeatureParams {
    Gaussian { mean: f64, variance: f64 },
    Poisson { rate: f64 },
}

impl FeatureParams {
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            FeatureParams::Gaussian { mean, variance } => gaussian_log_pdf(x, mean, variance),
            FeatureParams::Poisson { rate } => poisson_log_pmf(discretize(x), rate),
        }
    }
}

pub fn gaussian_log_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + (x - mean).powi(2) / variance)
}

/// ETA seconds to a Poisson count.
pub fn discretize(x: f64) -> u64 {
    x.round().max(0.0) as u64
}

pub fn poisson_log_pmf(k: u64, rate: f64) -> f64 {
    k as f64 * rate.ln() - rate - ln_factorial(k)
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// ETA model for one (class, category values) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedCell {
    pub categories: Vec<f64>,
    pub eta: FeatureParams,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class: NodeCount,
    pub prior: f64,
    /// One entry per input column.
    pub features: Vec<FeatureParams>,
    /// Populated only in conditioning mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<ConditionedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub columns: Vec<Feature>,
    pub config: NaiveBayesConfig,
    pub classes: Vec<ClassModel>,
}

/// Log-space posterior over the model's classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub classes: Vec<NodeCount>,
    /// `log p(x | y_k) + log p(y_k)` (unnormalized).
    pub log_joint: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Posterior {
    pub fn map_class(&self) -> NodeCount {
        self.classes[argmax_first(&self.log_joint)]
    }

    pub fn ml_class(&self) -> NodeCount {
        self.classes[argmax_first(&self.log_likelihood)]
    }

    /// Probabilities laid out by node count, zero for classes the model lacks.
    pub fn by_node_count(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (c, p) in self.classes.iter().zip(&self.probabilities) {
            out[c.index()] = *p;
        }
        out
    }
}

/// Index of the maximum; ties resolve to the lowest index.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn category_key(row: &[f64], columns: &[Feature]) -> Vec<f64> {
    columns
        .iter()
        .zip(row)
        .filter(|(f, _)| f.is_categorical())
        .map(|(_, &v)| v)
        .collect()
}

fn same_key(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
}

impl NaiveBayesModel {
    pub fn fit(train: &Samples, config: NaiveBayesConfig) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let counts = train.class_counts();
        let present: Vec<NodeCount> = NodeCount::ALL
            .into_iter()
            .filter(|c| counts[c.index()] > 0)
            .collect();
        if present.len() < 2 {
            let missing = NodeCount::ALL
                .into_iter()
                .find(|c| counts[c.index()] == 0)
                .expect("at most one class present");
            return Err(Error::ClassAbsent { class: missing });
        }
        if config.likelihood == LikelihoodKind::Gaussian {
            if let Some(&c) = present.iter().find(|c| counts[c.index()] < 2) {
                return Err(Error::TooFewExamples {
                    class: c,
                    count: counts[c.index()],
                    required: 2,
                });
            }
        }

        let dim = train.dim();
        let floors: Vec<f64> = (0..dim)
            .map(|j| {
                let col: Vec<f64> = train.rows().map(|r| r[j]).collect();
                let (_, var) = mean_var(&col);
                if var > 0.0 {
                    VARIANCE_FLOOR * var
                } else {
                    VARIANCE_FLOOR
                }
            })
            .collect();
        let conditioning = config.conditioning && train.columns.iter().any(|f| f.is_categorical());

        let total = train.len() as f64;
        let mut classes = Vec::with_capacity(present.len());
        for &class in &present {
            let rows: Vec<&[f64]> = train
                .rows()
                .zip(&train.labels)
                .filter(|(_, l)| **l == class)
                .map(|(r, _)| r)
                .collect();
            let features = (0..dim)
                .map(|j| {
                    let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    feature_params(&col, train.columns[j], config.likelihood, floors[j])
                })
                .collect();

            let mut cells: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
            if conditioning {
                let eta_col = train.columns.iter().position(|&f| f == Feature::Eta);
                if let Some(eta_col) = eta_col {
                    for r in &rows {
                        let key = category_key(r, &train.columns);
                        match cells.iter_mut().find(|(k, _)| same_key(k, &key)) {
                            Some((_, vals)) => vals.push(r[eta_col]),
                            None => cells.push((key, vec![r[eta_col]])),
                        }
                    }
                    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite categories"));
                }
            }
            let eta_floor = train
                .columns
                .iter()
                .position(|&f| f == Feature::Eta)
                .map_or(VARIANCE_FLOOR, |j| floors[j]);
            let cells = cells
                .into_iter()
                .filter(|(_, vals)| vals.len() >= MIN_CELL_SIZE)
                .map(|(categories, vals)| ConditionedCell {
                    eta: feature_params(&vals, Feature::Eta, config.likelihood, eta_floor),
                    count: vals.len(),
                    categories,
                })
                .collect();

            let prior = match config.prior {
                PriorKind::Uniform => 1.0 / present.len() as f64,
                PriorKind::Empirical => counts[class.index()] as f64 / total,
            };
            classes.push(ClassModel {
                class,
                prior,
                features,
                cells,
            });
        }

        Ok(NaiveBayesModel {
            columns: train.columns.clone(),
            config: NaiveBayesConfig {
                conditioning,
                ..config
            },
            classes,
        })
    }

    /// Single-feature Gaussian model from explicit `(class, mean, variance, prior)` rows.
    pub fn from_gaussian_params(params: &[(NodeCount, f64, f64, f64)]) -> Result<Self> {
        if params.iter().any(|p| !(p.2 > 0.0) || !(p.3 > 0.0)) {
            return Err(Error::InvalidParameter(
                "variances and priors must be positive".into(),
            ));
        }
        let total: f64 = params.iter().map(|p| p.3).sum();
        Ok(NaiveBayesModel {
            columns: vec![Feature::Eta],
            config: NaiveBayesConfig {
                likelihood: LikelihoodKind::Gaussian,
                prior: PriorKind::Empirical,
                conditioning: false,
            },
            classes: params
                .iter()
                .map(|&(class, mean, variance, prior)| ClassModel {
                    class,
                    prior: prior / total,
                    features: vec![FeatureParams::Gaussian { mean, variance }],
                    cells: Vec::new(),
                })
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn class_labels(&self) -> Vec<NodeCount> {
        self.classes.iter().map(|c| c.class).collect()
    }

    fn class_log_likelihood(&self, class: &ClassModel, x: &[f64]) -> f64 {
        if self.config.conditioning {
            let key = category_key(x, &self.columns);
            let mut total = 0.0;
            for (j, f) in self.columns.iter().enumerate() {
                if f.is_categorical() {
                    continue;
                }
                let params = if *f == Feature::Eta {
                    class
                        .cells
                        .iter()
                        .find(|c| same_key(&c.categories, &key))
                        .map_or(&class.features[j], |c| &c.eta)
                } else {
                    &class.features[j]
                };
                total += params.log_density(x[j]);
            }
            total
        } else {
            class
                .features
                .iter()
                .zip(x)
                .map(|(p, &v)| p.log_density(v))
                .sum()
        }
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Posterior> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let log_likelihood: Vec<f64> = self
            .classes
            .iter()
            .map(|c| self.class_log_likelihood(c, x))
            .collect();
        let log_joint: Vec<f64> = log_likelihood
            .iter()
            .zip(&self.classes)
            .map(|(ll, c)| ll + c.prior.ln())
            .collect();
        let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let probabilities = if max.is_finite() {
            let weights: Vec<f64> = log_joint.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            weights.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / self.classes.len() as f64; self.classes.len()]
        };
        Ok(Posterior {
            classes: self.class_labels(),
            log_joint,
            log_likelihood,
            probabilities,
        })
    }

    /// MAP class; exact ties go to the smaller node count.
    pub fn predict(&self, x: &[f64]) -> Result<NodeCount> {
        Ok(self.posterior(x)?.map_class())
    }
}

fn feature_params(
    values: &[f64],
    feature: Feature,
    kind: LikelihoodKind,
    floor: f64,
) -> FeatureParams {
    match (kind, feature) {
        (LikelihoodKind::Poisson, Feature::Eta) => {
            let mean =
                values.iter().map(|&v| discretize(v) as f64).sum::<f64>() / values.len() as f64;
            FeatureParams::Poisson {
                rate: mean.max(RATE_FLOOR),
            }
        }
        _ => {
            let (mean, var) = mean_var(values);
            FeatureParams::Gaussian {
                mean,
                variance: var.max(floor),
            }
        }
    }
}
