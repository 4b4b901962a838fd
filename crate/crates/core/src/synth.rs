//! Synthetic stand-in for the measurement campaign.
//!
//! Flow-level model of a single-hop star: the AP splits its rate among the
//! `N` active receivers with a super-linear contention penalty, so
//!
//! ```text
//! eta = 8 * file_size / (base_rate(power, distance) / N^exponent) * exp(sigma(channel, tod) * z)
//! ```
//!
//! with `z ~ N(0, 1)`. Adjacent classes overlap in their tails, most strongly
//! around `N = 3`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    Channel, Dataset, FeatureSubset, LabeledExample, NodeCount, TimeOfDay, DISTANCES_M,
    TX_POWERS_DBM,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub file_size_mb: f64,
    /// Saturated single-receiver rate in Mbit/s, indexed `[power][distance]`
    /// following [`TX_POWERS_DBM`] and [`DISTANCES_M`].
    pub base_rate_mbps: [[f64; 3]; 5],
    /// `contention(N) = N^contention_exponent`; must be at least 1.
    pub contention_exponent: f64,
    /// Log-normal sigma, indexed `[channel][time_of_day]`.
    pub noise_sigma: [[f64; 3]; 3],
    pub repetitions: usize,
    pub seed: u64,
}

const POWER_FACTOR: [f64; 5] = [0.92, 0.95, 0.97, 0.99, 1.0];
const DISTANCE_FACTOR: [f64; 3] = [1.0, 0.97, 0.93];
const PEAK_RATE_MBPS: f64 = 80.0;

impl Default for GeneratorConfig {
    fn default() -> Self {
        let mut base_rate_mbps = [[0.0; 3]; 5];
        for (p, row) in base_rate_mbps.iter_mut().enumerate() {
            for (d, cell) in row.iter_mut().enumerate() {
                *cell = PEAK_RATE_MBPS * POWER_FACTOR[p] * DISTANCE_FACTOR[d];
            }
        }
        GeneratorConfig {
            file_size_mb: 100.0,
            base_rate_mbps,
            contention_exponent: 1.1,
            // channel 6 is the busiest
            noise_sigma: [
                [0.055, 0.065, 0.045],
                [0.075, 0.090, 0.065],
                [0.055, 0.065, 0.045],
            ],
            repetitions: 10,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.file_size_mb > 0.0 && self.file_size_mb.is_finite()) {
            return bad(format!("file size {} must be positive", self.file_size_mb));
        }
        if self
            .base_rate_mbps
            .iter()
            .flatten()
            .any(|&r| !(r > 0.0 && r.is_finite()))
        {
            return bad("every base rate must be positive".into());
        }
        if !(self.contention_exponent >= 1.0 && self.contention_exponent.is_finite()) {
            return bad(format!(
                "contention exponent {} must be >= 1",
                self.contention_exponent
            ));
        }
        if self
            .noise_sigma
            .iter()
            .flatten()
            .any(|&s| !(s >= 0.0 && s.is_finite()))
        {
            return bad("noise sigma must be >= 0".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        Ok(())
    }

    pub fn contention(&self, n: NodeCount) -> f64 {
        f64::from(n.get()).powf(self.contention_exponent)
    }

    /// Noise-free transfer time for one configuration.
    pub fn mean_free_eta(&self, power_idx: usize, distance_idx: usize, n: NodeCount) -> f64 {
        8.0 * self.file_size_mb * self.contention(n) / self.base_rate_mbps[power_idx][distance_idx]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GeneratorConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One example per (power, channel, N, distance, time of day, repetition).
pub fn generate(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut examples = Vec::with_capacity(
        TX_POWERS_DBM.len() * 3 * 4 * DISTANCES_M.len() * 3 * config.repetitions,
    );
    for (p, &power) in TX_POWERS_DBM.iter().enumerate() {
        for channel in Channel::ALL {
            for n in NodeCount::ALL {
                for (d, &distance) in DISTANCES_M.iter().enumerate() {
                    for tod in TimeOfDay::ALL {
                        let sigma = config.noise_sigma[channel.index()][tod.index()];
                        let base = config.mean_free_eta(p, d, n);
                        for _ in 0..config.repetitions {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            examples.push(LabeledExample {
                                eta_s: base * (sigma * z).exp(),
                                tx_power_dbm: power,
                                distance_m: distance,
                                channel,
                                time_of_day: tod,
                                label: n,
                            });
                        }
                    }
                }
            }
        }
    }
    Dataset::new(examples, FeatureSubset::EtaPowerDistance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub a: NodeCount,
    pub b: NodeCount,
    /// Bhattacharyya coefficient of the pooled ETA histograms.
    pub pooled: f64,
    /// Mean coefficient over (power, distance) cells containing both classes.
    pub within_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub pairs: Vec<PairOverlap>,
    /// Sum of pooled overlaps with every other class, per class. Larger means
    /// harder to separate.
    pub confusability: [f64; 4],
}

impl CalibrationReport {
    pub fn overlap(&self, a: NodeCount, b: NodeCount) -> Option<&PairOverlap> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }

    /// Class with the largest summed overlap.
    pub fn least_separable(&self) -> NodeCount {
        argmax(&self.confusability, |a, b| a > b)
    }

    pub fn most_separable(&self) -> NodeCount {
        argmax(&self.confusability, |a, b| a < b)
    }
}

fn argmax(v: &[f64; 4], better: impl Fn(f64, f64) -> bool) -> NodeCount {
    let mut best = 0;
    for k in 1..4 {
        if better(v[k], v[best]) {
            best = k;
        }
    }
    NodeCount::from_index(best)
}

/// Histogram Bhattacharyya coefficient of two samples.
///
/// Bins: `max(2, ceil(sqrt(n_a + n_b)))` equal-width bins over the pooled
/// range. Identical constant samples overlap fully.
pub fn histogram_overlap(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return 1.0;
    }
    let bins = (((a.len() + b.len()) as f64).sqrt().ceil() as usize).max(2);
    let width = (hi - lo) / bins as f64;
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &v in xs {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            h[idx] += 1.0;
        }
        let total = xs.len() as f64;
        h.iter_mut().for_each(|c| *c /= total);
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    ha.iter().zip(&hb).map(|(p, q)| (p * q).sqrt()).sum()
}

pub fn calibration_report(dataset: &Dataset) -> Result<CalibrationReport> {
    let mut pooled: [Vec<f64>; 4] = Default::default();
    // cells[power][distance][class]
    let mut cells = vec![vec![<[Vec<f64>; 4]>::default(); DISTANCES_M.len()]; TX_POWERS_DBM.len()];
    for e in dataset.examples() {
        pooled[e.label.index()].push(e.eta_s);
        let p = TX_POWERS_DBM.iter().position(|&x| x == e.tx_power_dbm);
        let d = DISTANCES_M.iter().position(|&x| x == e.distance_m);
        if let (Some(p), Some(d)) = (p, d) {
            cells[p][d][e.label.index()].push(e.eta_s);
        }
    }
    for (k, values) in pooled.iter().enumerate() {
        if values.is_empty() {
            return Err(Error::ClassAbsent {
                class: NodeCount::from_index(k),
            });
        }
    }

    let mut pairs = Vec::new();
    let mut confusability = [0.0; 4];
    for a in 0..4 {
        for b in a + 1..4 {
            let pooled_bc = histogram_overlap(&pooled[a], &pooled[b]);
            let mut sum = 0.0;
            let mut n = 0;
            for cell in cells.iter().flatten() {
                if !cell[a].is_empty() && !cell[b].is_empty() {
                    sum += histogram_overlap(&cell[a], &cell[b]);
                    n += 1;
                }
            }
            confusability[a] += pooled_bc;
            confusability[b] += pooled_bc;
            pairs.push(PairOverlap {
                a: NodeCount::from_index(a),
                b: NodeCount::from_index(b),
                pooled: pooled_bc,
                within_cell: if n > 0 { sum / n as f64 } else { 0.0 },
            });
        }
    }
    Ok(CalibrationReport {
        pairs,
        confusability,
    })
}
