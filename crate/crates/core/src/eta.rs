//! How node-count mistakes propagate into ETA prediction error.
//!
//! Given the mean percentage ETA error observed when the ETA predictor is fed
//! `N_pred` while `N_real` nodes are active, and the classifier's conditional
//! distribution `P[N_pred | N_real]`, the expected error for each true class is
//! `delta_n = sum_k P[k | n] * err[n][k]`.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NodeCount;
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;

/// Row sums of a conditional distribution must be within this of 1.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-6;
/// Slack accepted when reading distributions printed with 4 decimals.
pub const PRINTED_TOLERANCE: f64 = 1e-3;

pub const REFERENCE_ERRORS_CSV: &str = include_str!("../data/table_v_errors.csv");
pub const REFERENCE_ERRORS_SD_CSV: &str = include_str!("../data/table_v_sd.csv");
pub const REFERENCE_DISTRIBUTION_CSV: &str = include_str!("../data/table_vi_distribution.csv");

pub type Grid = [[f64; 4]; 4];

/// Mean percentage ETA errors indexed `[N_real][N_pred]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMatrix {
    pub err: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<Grid>,
}

impl ErrorMatrix {
    pub fn new(err: Grid, sd: Option<Grid>) -> Result<Self> {
        let all = err.iter().flatten().chain(sd.iter().flatten().flatten());
        if let Some(v) = all.into_iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "error matrix entries must be non-negative, found {v}"
            )));
        }
        Ok(ErrorMatrix { err, sd })
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.err[i][i])
    }

    /// Mean errors bundled with the crate, with standard deviations.
    pub fn reference() -> Self {
        let err = read_grid(REFERENCE_ERRORS_CSV.as_bytes()).expect("bundled table parses");
        let sd = read_grid(REFERENCE_ERRORS_SD_CSV.as_bytes()).expect("bundled table parses");
        ErrorMatrix::new(err, Some(sd)).expect("bundled table is valid")
    }
}

/// Row-stochastic `P[N_pred = k | N_real = n]`, indexed `[n][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionDistribution {
    pub p: Grid,
}

impl PredictionDistribution {
    pub fn new(p: Grid) -> Result<Self> {
        Self::check(&p, STOCHASTIC_TOLERANCE)?;
        Ok(PredictionDistribution { p })
    }

    /// Accepts rows off by rounding (up to `tolerance`) and renormalizes them.
    pub fn from_rounded(p: Grid, tolerance: f64) -> Result<Self> {
        Self::check(&p, tolerance)?;
        let p = p.map(|row| {
            let s: f64 = row.iter().sum();
            row.map(|v| v / s)
        });
        Ok(PredictionDistribution { p })
    }

    fn check(p: &Grid, tolerance: f64) -> Result<()> {
        for (row_idx, row) in p.iter().enumerate() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(format!(
                    "row {} has entries outside [0, 1]",
                    row_idx + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::NotStochastic {
                    row: row_idx + 1,
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn identity() -> Self {
        let mut p = [[0.0; 4]; 4];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        PredictionDistribution { p }
    }

    /// Distribution bundled with the crate (printed to 4 decimals).
    pub fn reference() -> Self {
        let p = read_grid(REFERENCE_DISTRIBUTION_CSV.as_bytes()).expect("bundled table parses");
        Self::from_rounded(p, PRINTED_TOLERANCE).expect("bundled table is valid")
    }
}

pub fn empirical_distribution(cm: &ConfusionMatrix) -> Result<PredictionDistribution> {
    let mut p = [[0.0; 4]; 4];
    for n in NodeCount::ALL {
        let total = cm.row_sum(n);
        if total == 0 {
            return Err(Error::EmptyRow { class: n });
        }
        for k in NodeCount::ALL {
            p[n.index()][k.index()] = cm.get(n, k) as f64 / total as f64;
        }
    }
    Ok(PredictionDistribution { p })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedError {
    pub delta: [f64; 4],
    /// First-order propagation of the per-cell standard deviations through
    /// the same weights, assuming independent cells. Derived quantity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_sd: Option<[f64; 4]>,
}

pub fn weighted_error(err: &ErrorMatrix, dist: &PredictionDistribution) -> WeightedError {
    let mut delta = [0.0; 4];
    for n in 0..4 {
        delta[n] = (0..4).map(|k| dist.p[n][k] * err.err[n][k]).sum();
    }
    let delta_sd = err.sd.map(|sd| {
        let mut out = [0.0; 4];
        for n in 0..4 {
            out[n] = (0..4)
                .map(|k| (dist.p[n][k] * sd[n][k]).powi(2))
                .sum::<f64>()
                .sqrt();
        }
        out
    });
    WeightedError { delta, delta_sd }
}

/// Reads a 4x4 numeric grid with one header row.
pub fn read_grid<R: Read>(reader: R) -> Result<Grid> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut grid = [[0.0; 4]; 4];
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if rows == 4 {
            return Err(Error::MalformedRow {
                line,
                field: "row",
                message: "more than 4 data rows".into(),
            });
        }
        if record.len() != 4 {
            return Err(Error::MalformedRow {
                line,
                field: "row",
                message: format!("expected 4 columns, found {}", record.len()),
            });
        }
        for (k, field) in record.iter().enumerate() {
            grid[rows][k] = field.parse().map_err(|e| Error::MalformedRow {
                line,
                field: "value",
                message: format!("`{field}`: {e}"),
            })?;
        }
        rows += 1;
    }
    if rows != 4 {
        return Err(Error::MalformedRow {
            line: rows as u64 + 1,
            field: "row",
            message: format!("expected 4 data rows, found {rows}"),
        });
    }
    Ok(grid)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_grid(file)
}
