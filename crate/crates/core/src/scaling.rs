//! Per-feature standardization fitted on training data only.

use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 1.0 when the feature is constant.
    pub sd: f64,
    pub zero_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub features: Vec<FeatureScaling>,
}

impl Scaling {
    pub fn fit(train: &Samples) -> Result<Scaling> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let m = train.len() as f64;
        let features = (0..train.dim())
            .map(|j| {
                let mean = train.rows().map(|r| r[j]).sum::<f64>() / m;
                let ss: f64 = train.rows().map(|r| (r[j] - mean).powi(2)).sum();
                let var = if train.len() > 1 { ss / (m - 1.0) } else { 0.0 };
                let zero_variance = !(var > 0.0);
                FeatureScaling {
                    mean,
                    sd: if zero_variance { 1.0 } else { var.sqrt() },
                    zero_variance,
                }
            })
            .collect();
        Ok(Scaling { features })
    }

    pub fn transform(&self, samples: &Samples) -> Result<Samples> {
        if samples.dim() != self.features.len() {
            return Err(Error::DimensionMismatch {
                expected: self.features.len(),
                found: samples.dim(),
            });
        }
        let mut out = samples.clone();
        let d = self.features.len();
        for (i, v) in out.values.iter_mut().enumerate() {
            let f = &self.features[i % d];
            *v = (*v - f.mean) / f.sd;
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.features)
            .map(|(v, f)| (v - f.mean) / f.sd)
            .collect()
    }
}

/// Fits on `train` and applies the same transform to both sets.
pub fn standardize(train: &Samples, test: &Samples) -> Result<(Samples, Samples, Scaling)> {
    let scaling = Scaling::fit(train)?;
    Ok((scaling.transform(train)?, scaling.transform(test)?, scaling))
}
