//! Python bindings: datasets, the three classifiers, metrics, ETA error
//! weighting and the experiment runner.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use nodecount_core::eta::{
    read_grid, weighted_error, ErrorMatrix, PredictionDistribution, PRINTED_TOLERANCE,
};
use nodecount_core::metrics::{confusion, f1_per_class, roc_curve, Averaging};
use nodecount_core::{
    calibration_report, cross_validate, evaluate, make_folds, ClassifierSpec, Dataset, Error,
    ExperimentConfig, FeatureSubset, GeneratorConfig, NodeCount, Samples, TrainedClassifier,
};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into plain Python objects via JSON.
fn to_python<'py, T: serde::Serialize + ?Sized>(
    py: Python<'py>,
    value: &T,
) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn node_counts(labels: &[u8]) -> PyResult<Vec<NodeCount>> {
    labels
        .iter()
        .map(|&l| {
            NodeCount::new(l)
                .ok_or_else(|| PyValueError::new_err(format!("label {l} outside 1..=4")))
        })
        .collect()
}

fn feature_subset(name: &str) -> PyResult<FeatureSubset> {
    name.parse().map_err(PyValueError::new_err)
}

/// Rows are `[eta]`, `[eta, power]` or `[eta, power, distance]`.
fn samples(x: Vec<Vec<f64>>, labels: Vec<NodeCount>) -> PyResult<Samples> {
    let dim = x.first().map_or(1, Vec::len);
    let columns = FeatureSubset::EtaPowerDistance.features();
    if dim == 0 || dim > columns.len() {
        return Err(PyValueError::new_err(format!(
            "rows must have 1 to 3 columns, got {dim}"
        )));
    }
    Samples::new(columns[..dim].to_vec(), x, labels).map_err(to_py_err)
}

#[pyclass(name = "Dataset", module = "nodecount")]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load_csv(path: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: nodecount_core::load_csv(path).map_err(to_py_err)?,
        })
    }

    /// Synthetic campaign; `config_json` overrides the generator defaults.
    #[staticmethod]
    #[pyo3(signature = (seed = 42, repetitions = 10, config_json = None))]
    fn generate(seed: u64, repetitions: usize, config_json: Option<&str>) -> PyResult<Self> {
        let mut config = match config_json {
            Some(text) => GeneratorConfig::from_json(text).map_err(to_py_err)?,
            None => GeneratorConfig::default(),
        };
        config.seed = seed;
        config.repetitions = repetitions;
        Ok(PyDataset {
            inner: nodecount_core::generate(&config).map_err(to_py_err)?,
        })
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        nodecount_core::save_csv(&self.inner, path).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn class_counts(&self) -> [usize; 4] {
        self.inner.class_counts()
    }

    fn labels(&self) -> Vec<u8> {
        self.inner.labels().iter().map(|n| n.get()).collect()
    }

    /// Feature matrix for a subset: "eta", "eta_power", "eta_distance" or "eta_power_distance".
    #[pyo3(signature = (subset = "eta_power_distance"))]
    fn features(&self, subset: &str) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.project(feature_subset(subset)?).feature_matrix())
    }

    fn calibration<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &calibration_report(&self.inner).map_err(to_py_err)?)
    }

    /// Stratified k-fold evaluation of one classifier on one feature subset.
    #[pyo3(signature = (classifier, subset = "eta_power_distance", folds = 5, seed = 42))]
    fn cross_validate<'py>(
        &self,
        py: Python<'py>,
        classifier: &PyClassifier,
        subset: &str,
        folds: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let projected = self.inner.project(feature_subset(subset)?);
        let plan = make_folds(&projected, folds, seed).map_err(to_py_err)?;
        let cv = py
            .detach(|| cross_validate(&projected, &plan, classifier.spec))
            .map_err(to_py_err)?;
        let roc = cv.roc().map_err(to_py_err)?;
        let summary = json!({
            "f1_mean": cv.f1_mean,
            "f1_sd": cv.f1_sd,
            "macro_f1": cv.macro_f1,
            "macro_f1_sd": cv.macro_f1_sd,
            "confusion": cv.confusion.counts,
            "auc": roc.auc,
            "warnings": cv.warnings(),
        });
        to_python(py, &summary)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, class_counts={:?})",
            self.inner.len(),
            self.inner.class_counts()
        )
    }
}

#[pyclass(name = "Classifier", module = "nodecount")]
struct PyClassifier {
    spec: ClassifierSpec,
    trained: Option<TrainedClassifier>,
}

impl PyClassifier {
    fn from_json(value: serde_json::Value) -> PyResult<Self> {
        let spec: ClassifierSpec =
            serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.validate().map_err(to_py_err)?;
        Ok(PyClassifier {
            spec,
            trained: None,
        })
    }

    fn model(&self) -> PyResult<&TrainedClassifier> {
        self.trained
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("classifier is not fitted"))
    }
}

#[pymethods]
impl PyClassifier {
    /// `prior`: "empirical" or "uniform"; `likelihood`: "gaussian" or "poisson".
    #[staticmethod]
    #[pyo3(signature = (prior = "empirical", likelihood = "gaussian", conditioning = true))]
    fn naive_bayes(prior: &str, likelihood: &str, conditioning: bool) -> PyResult<Self> {
        Self::from_json(json!({
            "kind": "naive_bayes",
            "prior": prior,
            "likelihood": likelihood,
            "conditioning": conditioning,
        }))
    }

    /// `kernel`: "linear" or "rbf"; `gamma` defaults to 1 / n_features.
    #[staticmethod]
    #[pyo3(signature = (kernel = "rbf", cost = 1.0, gamma = None, weighted = false))]
    fn svm(kernel: &str, cost: f64, gamma: Option<f64>, weighted: bool) -> PyResult<Self> {
        let kernel = match kernel {
            "linear" => json!({ "kind": "linear" }),
            "rbf" => json!({ "kind": "rbf", "gamma": gamma }),
            other => return Err(PyValueError::new_err(format!("unknown kernel `{other}`"))),
        };
        Self::from_json(
            json!({ "kind": "svm", "kernel": kernel, "cost": cost, "weighted": weighted }),
        )
    }

    #[staticmethod]
    #[pyo3(signature = (k = 5))]
    fn knn(k: usize) -> PyResult<Self> {
        Self::from_json(json!({ "kind": "knn", "k": k }))
    }

    #[getter]
    fn label(&self) -> String {
        self.spec.label()
    }

    fn fit(&mut self, py: Python<'_>, x: Vec<Vec<f64>>, y: Vec<u8>) -> PyResult<()> {
        let train = samples(x, node_counts(&y)?)?;
        let spec = self.spec;
        self.trained = Some(
            py.detach(|| TrainedClassifier::fit(spec, &train))
                .map_err(to_py_err)?,
        );
        Ok(())
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<u8>> {
        let model = self.model()?;
        x.iter()
            .map(|row| model.predict(row).map(|p| p.class.get()).map_err(to_py_err))
            .collect()
    }

    /// Per-class ranking scores used for ROC analysis.
    fn predict_scores(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<[f64; 4]>> {
        let model = self.model()?;
        x.iter()
            .map(|row| model.predict(row).map(|p| p.scores).map_err(to_py_err))
            .collect()
    }

    fn warnings(&self) -> Vec<String> {
        self.trained
            .as_ref()
            .map(TrainedClassifier::warnings)
            .unwrap_or_default()
    }

    fn __repr__(&self) -> String {
        format!("Classifier({})", self.spec.label())
    }
}

/// Per-class F1 and macro F1.
#[pyfunction]
fn f1_scores(truth: Vec<u8>, predicted: Vec<u8>) -> PyResult<(Vec<f64>, f64)> {
    let cm = confusion(&node_counts(&truth)?, &node_counts(&predicted)?).map_err(to_py_err)?;
    let report = f1_per_class(&cm);
    Ok((
        report.per_class.iter().map(|c| c.f1).collect(),
        report.macro_f1,
    ))
}

/// Micro-averaged one-vs-rest ROC: `(fpr, tpr, auc)`.
#[pyfunction]
fn roc(truth: Vec<u8>, scores: Vec<[f64; 4]>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let curve = roc_curve(&node_counts(&truth)?, &scores, Averaging::Micro).map_err(to_py_err)?;
    Ok((
        curve.points.iter().map(|p| p.fpr).collect(),
        curve.points.iter().map(|p| p.tpr).collect(),
        curve.auc,
    ))
}

/// Weighted ETA error per true node count. Grids are 4x4 nested lists; the
/// bundled reference tables are used for any grid left out.
#[pyfunction]
#[pyo3(signature = (errors = None, distribution = None, errors_sd = None))]
fn delta<'py>(
    py: Python<'py>,
    errors: Option<[[f64; 4]; 4]>,
    distribution: Option<[[f64; 4]; 4]>,
    errors_sd: Option<[[f64; 4]; 4]>,
) -> PyResult<Bound<'py, PyAny>> {
    let err = match errors {
        Some(grid) => ErrorMatrix::new(grid, errors_sd).map_err(to_py_err)?,
        None => {
            let mut reference = ErrorMatrix::reference();
            if errors_sd.is_some() {
                reference.sd = errors_sd;
            }
            reference
        }
    };
    let dist = match distribution {
        Some(grid) => {
            PredictionDistribution::from_rounded(grid, PRINTED_TOLERANCE).map_err(to_py_err)?
        }
        None => PredictionDistribution::reference(),
    };
    to_python(py, &weighted_error(&err, &dist))
}

/// Parses a 4x4 grid CSV (one header row).
#[pyfunction]
fn load_grid(path: &str) -> PyResult<[[f64; 4]; 4]> {
    let file = std::fs::File::open(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
    read_grid(file).map_err(to_py_err)
}

/// Runs an experiment grid described by a JSON config and returns the report.
#[pyfunction]
#[pyo3(signature = (config_json = "{}", jobs = 1))]
fn run_experiment<'py>(
    py: Python<'py>,
    config_json: &str,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = ExperimentConfig::from_json(config_json).map_err(to_py_err)?;
    let (report, _) = py.detach(|| evaluate(&config, jobs)).map_err(to_py_err)?;
    to_python(py, &report)
}

#[pymodule]
fn nodecount(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(f1_scores, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(load_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
