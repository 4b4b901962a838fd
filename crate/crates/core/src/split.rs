//! Stratified fold assignment and class-proportional subsampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, NodeCount};
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;

/// Assignment of every example to exactly one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Indices of the examples held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f == fold)
    }

    /// Indices of the examples used for training when `fold` is held out.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f != fold)
    }

    fn indices_where(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| pred(f))
            .map(|(i, _)| i)
            .collect()
    }
}

fn class_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn indices_by_class(labels: &[NodeCount]) -> [Vec<usize>; 4] {
    let mut by_class: [Vec<usize>; 4] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    by_class
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled independently and dealt round-robin into folds;
/// the starting fold rotates with the running total so that fold sizes stay
/// within one of each other as well.
pub fn make_folds(dataset: &Dataset, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold count must be at least 2, got {fold_count}"
        )));
    }
    let by_class = indices_by_class(&dataset.labels());
    let mut assignment = vec![usize::MAX; dataset.len()];
    let mut offset = 0;
    for (k, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < fold_count {
            return Err(Error::TooFewExamples {
                class: NodeCount::from_index(k),
                count: members.len(),
                required: fold_count,
            });
        }
        members.shuffle(&mut class_rng(seed, k as u64));
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = (offset + j) % fold_count;
        }
        offset = (offset + members.len()) % fold_count;
    }
    Ok(FoldPlan {
        fold_count,
        assignment,
        seed,
    })
}

/// Per-class keep fractions, e.g. `10-20-50-100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    pub proportion_per_class: BTreeMap<NodeCount, f64>,
    pub seed: u64,
}

impl SubsampleSpec {
    pub fn new(fractions: [f64; 4], seed: u64) -> Result<Self> {
        let spec = SubsampleSpec {
            proportion_per_class: NodeCount::ALL.into_iter().zip(fractions).collect(),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the `10-20-50-100` percentage notation.
    pub fn from_percentages(s: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidParameter(format!(
                "subsample `{s}` must list 4 percentages"
            )));
        }
        let mut fractions = [0.0; 4];
        for (slot, p) in fractions.iter_mut().zip(&parts) {
            let pct: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad percentage `{p}` in `{s}`")))?;
            *slot = pct / 100.0;
        }
        SubsampleSpec::new(fractions, seed)
    }

    pub fn validate(&self) -> Result<()> {
        for (n, &f) in &self.proportion_per_class {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "fraction {f} for class {n} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn fraction(&self, class: NodeCount) -> f64 {
        self.proportion_per_class
            .get(&class)
            .copied()
            .unwrap_or(1.0)
    }

    /// `10-20-50-100` style name.
    pub fn name(&self) -> String {
        NodeCount::ALL
            .iter()
            .map(|&n| format!("{}", (self.fraction(n) * 100.0).round() as i64))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Round half up; the tiny slack absorbs products like 1350 * 0.1.
pub fn kept_count(count: usize, fraction: f64) -> usize {
    ((count as f64 * fraction) + 0.5 + 1e-9).floor() as usize
}

/// Indices (ascending) kept by `spec` among `candidates`.
///
/// Every class is shuffled with a stream that depends only on the seed and
/// the class, and a prefix is kept. A smaller fraction therefore always keeps
/// a subset of what a larger fraction keeps.
pub fn subsample_indices(
    labels: &[NodeCount],
    candidates: &[usize],
    spec: &SubsampleSpec,
    stream_salt: u64,
) -> Vec<usize> {
    let mut by_class: [Vec<usize>; 4] = Default::default();
    for &i in candidates {
        by_class[labels[i].index()].push(i);
    }
    let mut kept = Vec::new();
    for (k, mut members) in by_class.into_iter().enumerate() {
        let class = NodeCount::from_index(k);
        let keep = kept_count(members.len(), spec.fraction(class)).min(members.len());
        members.shuffle(&mut class_rng(spec.seed, (stream_salt << 8) | k as u64));
        kept.extend_from_slice(&members[..keep]);
    }
    kept.sort_unstable();
    kept
}

pub fn subsample(dataset: &Dataset, spec: &SubsampleSpec) -> Result<Dataset> {
    spec.validate()?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let kept = subsample_indices(&dataset.labels(), &all, spec, 0);
    dataset.select(&kept)
}

/// Subsamples each fold separately, keeping the fold structure.
///
/// Returns the kept indices of the original dataset (ascending) and the fold
/// plan restricted to them.
pub fn subsample_folds(
    dataset: &Dataset,
    plan: &FoldPlan,
    spec: &SubsampleSpec,
) -> Result<(Vec<usize>, FoldPlan)> {
    spec.validate()?;
    let labels = dataset.labels();
    let mut kept = Vec::new();
    for fold in 0..plan.fold_count {
        let members = plan.test_indices(fold);
        kept.extend(subsample_indices(&labels, &members, spec, fold as u64 + 1));
    }
    kept.sort_unstable();
    let assignment = kept.iter().map(|&i| plan.assignment[i]).collect();
    Ok((
        kept,
        FoldPlan {
            fold_count: plan.fold_count,
            assignment,
            seed: plan.seed,
        },
    ))
}
