//! Confusion matrices, per-class F1 and micro-averaged ROC analysis.

use serde::{Deserialize, Serialize};

use crate::data::NodeCount;
use crate::error::{Error, Result};

/// Counts indexed `[true N][predicted N]` (zero-based).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: NodeCount, predicted: NodeCount) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: NodeCount) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn column_sum(&self, class: NodeCount) -> u64 {
        self.counts.iter().map(|r| r[class.index()]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in r.iter_mut().zip(o) {
                *c += v;
            }
        }
    }
}

pub fn confusion(truth: &[NodeCount], predicted: &[NodeCount]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub n: NodeCount,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No true instances and no predictions for this class.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub per_class: [ClassScores; 4],
    pub macro_f1: f64,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision, recall and F1 per class; zero denominators give 0.
pub fn f1_per_class(cm: &ConfusionMatrix) -> F1Report {
    let per_class = NodeCount::ALL.map(|n| {
        let tp = cm.get(n, n) as f64;
        let col = cm.column_sum(n);
        let row = cm.row_sum(n);
        let precision = if col > 0 { tp / col as f64 } else { 0.0 };
        let recall = if row > 0 { tp / row as f64 } else { 0.0 };
        ClassScores {
            n,
            precision,
            recall,
            f1: f1_score(precision, recall),
            degenerate: col == 0 && row == 0,
        }
    });
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / 4.0;
    F1Report {
        per_class,
        macro_f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold producing this point (`+inf` for the origin).
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Micro,
}

/// ROC of a binary ranking problem: thresholds sweep every distinct score
/// from high to low, tied scores move together.
pub fn roc_binary(positive: &[bool], scores: &[f64]) -> Result<RocCurve> {
    if positive.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: positive.len(),
            right: scores.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {s}")));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == threshold {
            if positive[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        let point = RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold,
        };
        let prev = points.last().expect("origin present");
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

/// Micro-averaged one-vs-rest ROC: every (example, class) pair becomes one
/// binary instance scored by that class's score.
pub fn roc_curve(
    truth: &[NodeCount],
    scores: &[[f64; 4]],
    averaging: Averaging,
) -> Result<RocCurve> {
    let Averaging::Micro = averaging;
    if truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: scores.len(),
        });
    }
    if truth.is_empty() || truth.iter().all(|&t| t == truth[0]) {
        return Err(Error::SingleClass);
    }
    let mut positive = Vec::with_capacity(truth.len() * 4);
    let mut pooled = Vec::with_capacity(truth.len() * 4);
    for (t, s) in truth.iter().zip(scores) {
        for (k, &v) in s.iter().enumerate() {
            positive.push(t.index() == k);
            pooled.push(v);
        }
    }
    roc_binary(&positive, &pooled)
}

/// Smallest false-positive rate reaching `target_tpr`, interpolating
/// linearly along the segment where the curve first crosses the target.
pub fn fpr_at_tpr(curve: &RocCurve, target_tpr: f64) -> f64 {
    let pts = &curve.points;
    for j in 0..pts.len() {
        if pts[j].tpr >= target_tpr {
            if j == 0 {
                return pts[0].fpr;
            }
            let (a, b) = (pts[j - 1], pts[j]);
            let t = (target_tpr - a.tpr) / (b.tpr - a.tpr);
            return a.fpr + t * (b.fpr - a.fpr);
        }
    }
    1.0
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}
