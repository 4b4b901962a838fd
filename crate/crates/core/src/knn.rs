//! Exact k-nearest-neighbor classifier (linear scan).

use serde::{Deserialize, Serialize};

use crate::data::{NodeCount, Samples};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: Samples,
    k: usize,
    metric: Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnPrediction {
    pub class: NodeCount,
    /// Neighbor votes divided by k.
    pub fractions: [f64; 4],
}

impl KnnModel {
    pub fn fit(train: &Samples, k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > train.len() {
            return Err(Error::InvalidK {
                k,
                stored: train.len(),
            });
        }
        Ok(KnnModel {
            train: train.clone(),
            k,
            metric: Metric::Euclidean,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn stored(&self) -> usize {
        self.train.len()
    }

    /// Indices of the k nearest stored rows, nearest first. Equal distances
    /// keep training order.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        if x.len() != self.train.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.train.dim(),
                found: x.len(),
            });
        }
        let mut dist: Vec<(usize, f64)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| (i, squared_distance(r, x)))
            .collect();
        let by_distance =
            |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance);
            dist.truncate(self.k);
        }
        dist.sort_by(by_distance);
        Ok(dist.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect())
    }

    /// Majority label among the k nearest; label ties go to the class whose
    /// tied neighbors are closer on average, then to the smaller N.
    pub fn predict(&self, x: &[f64]) -> Result<KnnPrediction> {
        let neighbors = self.neighbors(x)?;
        let mut votes = [0usize; 4];
        let mut dist_sum = [0.0; 4];
        for &(i, d) in &neighbors {
            let c = self.train.labels[i].index();
            votes[c] += 1;
            dist_sum[c] += d;
        }
        let mut best = 0;
        for c in 1..4 {
            if votes[c] > votes[best]
                || (votes[c] == votes[best]
                    && votes[c] > 0
                    && dist_sum[c] / (votes[c] as f64) < dist_sum[best] / (votes[best] as f64))
            {
                best = c;
            }
        }
        let mut fractions = [0.0; 4];
        for c in 0..4 {
            fractions[c] = votes[c] as f64 / self.k as f64;
        }
        Ok(KnnPrediction {
            class: NodeCount::from_index(best),
            fractions,
        })
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum()
}
