//! One prediction interface over the three classifier families.

use serde::{Deserialize, Serialize};

use crate::bayes::{LikelihoodKind, NaiveBayesConfig, NaiveBayesModel, PriorKind};
use crate::data::{NodeCount, Samples};
use crate::error::{Error, Result};
use crate::knn::{KnnModel, DEFAULT_K};
use crate::scaling::Scaling;
use crate::svm::{KernelSpec, OvoSvmModel, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    NaiveBayes(NaiveBayesConfig),
    Svm(SvmConfig),
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
}

fn default_k() -> usize {
    DEFAULT_K
}

impl ClassifierSpec {
    /// The four classifiers compared on the full dataset.
    pub fn standard_grid() -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::NaiveBayes(NaiveBayesConfig::default()),
            ClassifierSpec::Svm(SvmConfig {
                kernel: KernelSpec::Linear,
                ..Default::default()
            }),
            ClassifierSpec::Svm(SvmConfig::default()),
            ClassifierSpec::Knn { k: DEFAULT_K },
        ]
    }

    /// Human-readable label such as `SVM-R (no weight)`.
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::NaiveBayes(c) => {
                let prior = match c.prior {
                    PriorKind::Uniform => "uniform",
                    PriorKind::Empirical => "prior",
                };
                let pdf = match c.likelihood {
                    LikelihoodKind::Gaussian => "",
                    LikelihoodKind::Poisson => ", poisson",
                };
                format!("NB ({prior}{pdf})")
            }
            ClassifierSpec::Svm(c) => {
                let k = match c.kernel {
                    KernelSpec::Linear => "L",
                    KernelSpec::Rbf { .. } => "R",
                };
                let w = if c.weighted { "weight" } else { "no weight" };
                format!("SVM-{k} ({w})")
            }
            ClassifierSpec::Knn { k } => format!("kNN (k={k})"),
        }
    }

    /// SVM and kNN work on standardized features; Naive Bayes sees raw
    /// values (Poisson needs whole seconds).
    pub fn standardizes(&self) -> bool {
        !matches!(self, ClassifierSpec::NaiveBayes(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierSpec::Svm(c) => c.validate(),
            ClassifierSpec::Knn { k } if *k == 0 => {
                Err(Error::InvalidParameter("k must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    NaiveBayes(NaiveBayesModel),
    Svm(OvoSvmModel),
    Knn(KnnModel),
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub spec: ClassifierSpec,
    pub scaling: Option<Scaling>,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: NodeCount,
    /// Per-class ranking scores used for ROC analysis.
    pub scores: [f64; 4],
}

impl TrainedClassifier {
    pub fn fit(spec: ClassifierSpec, train: &Samples) -> Result<Self> {
        spec.validate()?;
        let (scaling, train) = if spec.standardizes() {
            let s = Scaling::fit(train)?;
            let t = s.transform(train)?;
            (Some(s), t)
        } else {
            (None, train.clone())
        };
        let model = match spec {
            ClassifierSpec::NaiveBayes(cfg) => {
                Model::NaiveBayes(NaiveBayesModel::fit(&train, cfg)?)
            }
            ClassifierSpec::Svm(cfg) => Model::Svm(OvoSvmModel::fit(&train, cfg)?),
            ClassifierSpec::Knn { k } => Model::Knn(KnnModel::fit(&train, k)?),
        };
        Ok(TrainedClassifier {
            spec,
            scaling,
            model,
        })
    }

    /// Empty unless the solver hit its iteration budget.
    pub fn warnings(&self) -> Vec<String> {
        match &self.model {
            Model::Svm(m) => m
                .models
                .iter()
                .filter(|b| !b.converged)
                .map(|b| {
                    format!(
                        "SVM {} vs {} stopped after {} iterations without converging",
                        b.positive, b.negative, b.iterations
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let scaled;
        let x = match &self.scaling {
            Some(s) => {
                if x.len() != s.features.len() {
                    return Err(Error::DimensionMismatch {
                        expected: s.features.len(),
                        found: x.len(),
                    });
                }
                scaled = s.transform_row(x);
                &scaled[..]
            }
            None => x,
        };
        Ok(match &self.model {
            Model::NaiveBayes(m) => {
                let post = m.posterior(x)?;
                Prediction {
                    class: post.map_class(),
                    scores: post.by_node_count(),
                }
            }
            Model::Svm(m) => {
                let p = m.predict(x)?;
                Prediction {
                    class: p.class,
                    scores: p.scores,
                }
            }
            Model::Knn(m) => {
                let p = m.predict(x)?;
                Prediction {
                    class: p.class,
                    scores: p.fractions,
                }
            }
        })
    }

    pub fn predict_all(&self, samples: &Samples) -> Result<Vec<Prediction>> {
        samples.rows().map(|r| self.predict(r)).collect()
    }
}
