//! Cross-validated evaluation and the experiment grid runner.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierSpec, TrainedClassifier};
use crate::data::{load_csv, Dataset, FeatureSubset, NodeCount};
use crate::error::{Error, Result};
use crate::eta::{empirical_distribution, PredictionDistribution};
use crate::metrics::{
    confusion, f1_per_class, fpr_at_tpr, mean_sd, roc_curve, Averaging, ConfusionMatrix, RocCurve,
};
use crate::scaling::Scaling;
use crate::split::{make_folds, subsample_folds, FoldPlan, SubsampleSpec, DEFAULT_FOLDS};
use crate::synth::{generate, GeneratorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub f1: [f64; 4],
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<FoldResult>,
    pub f1_mean: [f64; 4],
    pub f1_sd: [f64; 4],
    pub macro_f1: f64,
    pub macro_f1_sd: f64,
    /// Sum of the per-fold confusion matrices.
    pub confusion: ConfusionMatrix,
    /// Out-of-fold true labels, in dataset order.
    pub truth: Vec<NodeCount>,
    pub predicted: Vec<NodeCount>,
    pub scores: Vec<[f64; 4]>,
    /// How many times each example was evaluated (always 1).
    pub evaluations: Vec<u32>,
}

impl CvResult {
    pub fn roc(&self) -> Result<RocCurve> {
        roc_curve(&self.truth, &self.scores, Averaging::Micro)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.folds
            .iter()
            .flat_map(|f| {
                f.warnings
                    .iter()
                    .map(move |w| format!("fold {}: {w}", f.fold))
            })
            .collect()
    }
}

/// Trains on every fold but one and scores the held-out fold, for each fold.
pub fn cross_validate(
    dataset: &Dataset,
    plan: &FoldPlan,
    spec: ClassifierSpec,
) -> Result<CvResult> {
    if plan.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: plan.len(),
            right: dataset.len(),
        });
    }
    if plan.assignment.iter().any(|&f| f >= plan.fold_count) {
        return Err(Error::InvalidParameter("fold index out of range".into()));
    }
    spec.validate()?;

    struct FoldOutput {
        result: FoldResult,
        test: Vec<usize>,
        predicted: Vec<NodeCount>,
        scores: Vec<[f64; 4]>,
    }

    let outputs = (0..plan.fold_count)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutput> {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            let train = dataset.samples_at(&train_idx);
            let test = dataset.samples_at(&test_idx);
            let model = TrainedClassifier::fit(spec, &train)?;
            let preds = model.predict_all(&test)?;
            let predicted: Vec<NodeCount> = preds.iter().map(|p| p.class).collect();
            let cm = confusion(&test.labels, &predicted)?;
            let report = f1_per_class(&cm);
            Ok(FoldOutput {
                result: FoldResult {
                    fold,
                    train_size: train.len(),
                    test_size: test.len(),
                    f1: report.per_class.map(|c| c.f1),
                    macro_f1: report.macro_f1,
                    confusion: cm,
                    scaling: model.scaling.clone(),
                    warnings: model.warnings(),
                },
                test: test_idx,
                predicted,
                scores: preds.iter().map(|p| p.scores).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = dataset.len();
    let truth = dataset.labels();
    let mut predicted = truth.clone();
    let mut scores = vec![[0.0; 4]; m];
    let mut evaluations = vec![0u32; m];
    let mut pooled = ConfusionMatrix::default();
    let mut folds = Vec::with_capacity(outputs.len());
    for out in outputs {
        for ((&i, &p), s) in out.test.iter().zip(&out.predicted).zip(&out.scores) {
            predicted[i] = p;
            scores[i] = *s;
            evaluations[i] += 1;
        }
        pooled.add(&out.result.confusion);
        folds.push(out.result);
    }

    let mut f1_mean = [0.0; 4];
    let mut f1_sd = [0.0; 4];
    for k in 0..4 {
        let per_fold: Vec<f64> = folds.iter().map(|f| f.f1[k]).collect();
        (f1_mean[k], f1_sd[k]) = mean_sd(&per_fold);
    }
    let (macro_f1, macro_f1_sd) = mean_sd(&folds.iter().map(|f| f.macro_f1).collect::<Vec<_>>());

    Ok(CvResult {
        folds,
        f1_mean,
        f1_sd,
        macro_f1,
        macro_f1_sd,
        confusion: pooled,
        truth,
        predicted,
        scores,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv(PathBuf),
    Generator(GeneratorConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Generator(GeneratorConfig::default())
    }
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv(path) => load_csv(path),
            DataSource::Generator(cfg) => generate(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub features: Vec<FeatureSubset>,
    pub classifiers: Vec<ClassifierSpec>,
    /// `"full"` or a `10-20-50-100` style percentage list.
    pub subsamples: Vec<String>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::default(),
            features: FeatureSubset::ALL.to_vec(),
            classifiers: ClassifierSpec::standard_grid(),
            subsamples: vec!["full".into()],
            folds: DEFAULT_FOLDS,
            seed: 42,
        }
    }
}

pub const FULL: &str = "full";

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one classifier is required".into(),
            ));
        }
        if self.features.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one feature subset is required".into(),
            ));
        }
        if self.subsamples.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one subsample entry (\"full\" for none) is required".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter("folds must be at least 2".into()));
        }
        for c in &self.classifiers {
            c.validate()?;
        }
        for s in &self.subsamples {
            self.subsample_spec(s)?;
        }
        if let DataSource::Generator(g) = &self.data {
            g.validate()?;
        }
        Ok(())
    }

    fn subsample_spec(&self, name: &str) -> Result<Option<SubsampleSpec>> {
        if name == FULL {
            Ok(None)
        } else {
            SubsampleSpec::from_percentages(name, self.seed).map(Some)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub n: NodeCount,
    pub f1_mean: f64,
    pub f1_sd: f64,
    /// From the confusion matrix pooled over folds.
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub classifier: String,
    pub classifier_spec: ClassifierSpec,
    pub features: FeatureSubset,
    pub subsample: String,
    pub examples: usize,
    pub class_counts: [usize; 4],
    pub per_class: Vec<ClassReport>,
    pub macro_f1: f64,
    pub macro_f1_sd: f64,
    pub confusion: [[u64; 4]; 4],
    pub roc: String,
    pub auc: f64,
    pub fpr_at_tpr95: f64,
    pub pred_distribution: [[f64; 4]; 4],
    pub folds: Vec<FoldResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_echo: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

pub const REPORT_FILE: &str = "report.json";
pub const ROC_DIR: &str = "roc";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub jobs: usize,
    pub svg: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            svg: false,
        }
    }
}

struct Cell {
    classifier: ClassifierSpec,
    features: FeatureSubset,
    subsample: String,
}

struct CellOutput {
    report: CellReport,
    roc: RocCurve,
}

/// Evaluates every (subsample, feature subset, classifier) cell in memory.
pub fn evaluate(config: &ExperimentConfig, jobs: usize) -> Result<(Report, Vec<RocCurve>)> {
    config.validate()?;
    let dataset = config.data.load()?;
    evaluate_dataset(config, &dataset, jobs)
}

pub fn evaluate_dataset(
    config: &ExperimentConfig,
    dataset: &Dataset,
    jobs: usize,
) -> Result<(Report, Vec<RocCurve>)> {
    config.validate()?;
    let plan = make_folds(dataset, config.folds, config.seed)?;

    let mut cells = Vec::new();
    for subsample in &config.subsamples {
        for &features in &config.features {
            for &classifier in &config.classifiers {
                cells.push(Cell {
                    classifier,
                    features,
                    subsample: subsample.clone(),
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let outputs: Vec<CellOutput> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(idx, cell)| run_cell(config, dataset, &plan, idx, cell))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut reports = Vec::with_capacity(outputs.len());
    let mut rocs = Vec::with_capacity(outputs.len());
    for out in outputs {
        reports.push(out.report);
        rocs.push(out.roc);
    }
    Ok((
        Report {
            config_echo: config.clone(),
            cells: reports,
        },
        rocs,
    ))
}

fn run_cell(
    config: &ExperimentConfig,
    dataset: &Dataset,
    plan: &FoldPlan,
    idx: usize,
    cell: &Cell,
) -> Result<CellOutput> {
    let (data, plan) = match config.subsample_spec(&cell.subsample)? {
        None => (dataset.project(cell.features), plan.clone()),
        Some(spec) => {
            let (kept, sub_plan) = subsample_folds(dataset, plan, &spec)?;
            (dataset.select(&kept)?.project(cell.features), sub_plan)
        }
    };
    let cv = cross_validate(&data, &plan, cell.classifier)?;
    let roc = cv.roc()?;
    let pooled = f1_per_class(&cv.confusion);
    let per_class = NodeCount::ALL
        .iter()
        .map(|&n| ClassReport {
            n,
            f1_mean: cv.f1_mean[n.index()],
            f1_sd: cv.f1_sd[n.index()],
            precision: pooled.per_class[n.index()].precision,
            recall: pooled.per_class[n.index()].recall,
        })
        .collect();
    let pred_distribution = empirical_distribution(&cv.confusion)
        .unwrap_or(PredictionDistribution { p: [[0.0; 4]; 4] })
        .p;
    let report = CellReport {
        classifier: cell.classifier.label(),
        classifier_spec: cell.classifier,
        features: cell.features,
        subsample: cell.subsample.clone(),
        examples: data.len(),
        class_counts: data.class_counts(),
        per_class,
        macro_f1: cv.macro_f1,
        macro_f1_sd: cv.macro_f1_sd,
        confusion: cv.confusion.counts,
        roc: format!("{ROC_DIR}/{}.csv", cell_slug(idx, cell)),
        auc: roc.auc,
        fpr_at_tpr95: fpr_at_tpr(&roc, 0.95),
        pred_distribution,
        warnings: cv.warnings(),
        folds: cv.folds,
    };
    Ok(CellOutput { report, roc })
}

fn cell_slug(idx: usize, cell: &Cell) -> String {
    let name: String = cell
        .classifier
        .label()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_");
    format!(
        "cell{idx:02}_{name}_{}_{}",
        cell.features.name(),
        cell.subsample
    )
}

/// Runs the grid and writes `report.json` plus ROC point files under `out`.
pub fn run(config: &ExperimentConfig, out: &Path, options: RunOptions) -> Result<Report> {
    let (report, rocs) = evaluate(config, options.jobs)?;
    write_outputs(&report, &rocs, out, options.svg)?;
    Ok(report)
}

pub fn write_outputs(report: &Report, rocs: &[RocCurve], out: &Path, svg: bool) -> Result<()> {
    let roc_dir = out.join(ROC_DIR);
    std::fs::create_dir_all(&roc_dir).map_err(|e| Error::io(&roc_dir, e))?;
    for (cell, roc) in report.cells.iter().zip(rocs) {
        let path = out.join(&cell.roc);
        std::fs::write(&path, roc_csv(roc)).map_err(|e| Error::io(&path, e))?;
        if svg {
            let path = path.with_extension("svg");
            let title = format!(
                "{} / {} / {}",
                cell.classifier, cell.features, cell.subsample
            );
            std::fs::write(&path, roc_svg(roc, &title)).map_err(|e| Error::io(&path, e))?;
        }
    }
    let path = out.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr,threshold\n");
    for p in &roc.points {
        let _ = writeln!(s, "{},{},{}", p.fpr, p.tpr, p.threshold);
    }
    s
}

/// Minimal standalone SVG line chart of a ROC curve.
pub fn roc_svg(roc: &RocCurve, title: &str) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let px = |fpr: f64| PAD + fpr * SIZE;
    let py = |tpr: f64| PAD + (1.0 - tpr) * SIZE;
    let points: Vec<String> = roc
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
        .collect();
    let title = title
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;");
    let w = SIZE + 2.0 * PAD;
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">
<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#888"/>
<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#bbb" stroke-dasharray="4 4"/>
<line x1="{x0}" y1="{y95}" x2="{x1}" y2="{y95}" stroke="#bbb" stroke-dasharray="1 3"/>
<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{pts}"/>
<text x="{PAD}" y="{ty}" font-family="sans-serif" font-size="13">{title} (AUC {auc:.4})</text>
<text x="{cx}" y="{by}" font-family="sans-serif" font-size="12" text-anchor="middle">false positive rate</text>
<text x="12" y="{cy}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 12 {cy})">true positive rate</text>
</svg>
"##,
        x0 = px(0.0),
        y0 = py(0.0),
        x1 = px(1.0),
        y1 = py(1.0),
        y95 = py(0.95),
        pts = points.join(" "),
        ty = PAD - 12.0,
        auc = roc.auc,
        cx = PAD + SIZE / 2.0,
        by = w - 10.0,
        cy = PAD + SIZE / 2.0,
    )
}
