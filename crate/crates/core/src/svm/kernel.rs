use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Training sets up to this many rows get a fully precomputed Gram matrix.
pub const FULL_GRAM_LIMIT: usize = 4096;
const ROW_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Rbf { .. } => "rbf",
        }
    }
}

/// Rows of the kernel matrix over a fixed training set.
pub(crate) enum KernelCache<'a> {
    Full(Vec<Arc<[f64]>>),
    Lru {
        kernel: Kernel,
        rows: &'a [Vec<f64>],
        cache: HashMap<usize, (u64, Arc<[f64]>)>,
        capacity: usize,
        tick: u64,
    },
}

impl<'a> KernelCache<'a> {
    pub fn new(kernel: Kernel, rows: &'a [Vec<f64>]) -> Self {
        Self::with_limit(kernel, rows, FULL_GRAM_LIMIT)
    }

    pub fn with_limit(kernel: Kernel, rows: &'a [Vec<f64>], full_limit: usize) -> Self {
        let m = rows.len();
        if m <= full_limit {
            let mut gram = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in i..m {
                    let k = kernel.eval(&rows[i], &rows[j]);
                    gram[i][j] = k;
                    gram[j][i] = k;
                }
            }
            KernelCache::Full(gram.into_iter().map(Arc::from).collect())
        } else {
            KernelCache::Lru {
                kernel,
                rows,
                cache: HashMap::new(),
                capacity: (ROW_CACHE_BYTES / (8 * m.max(1))).max(2),
                tick: 0,
            }
        }
    }

    #[cfg(test)]
    pub fn is_full(&self) -> bool {
        matches!(self, KernelCache::Full(_))
    }

    pub fn row(&mut self, i: usize) -> Arc<[f64]> {
        match self {
            KernelCache::Full(gram) => gram[i].clone(),
            KernelCache::Lru {
                kernel,
                rows,
                cache,
                capacity,
                tick,
            } => {
                *tick += 1;
                if let Some(entry) = cache.get_mut(&i) {
                    entry.0 = *tick;
                    return entry.1.clone();
                }
                if cache.len() >= *capacity {
                    let oldest = cache
                        .iter()
                        .min_by_key(|(_, (t, _))| *t)
                        .map(|(&k, _)| k)
                        .expect("non-empty cache");
                    cache.remove(&oldest);
                }
                let row: Arc<[f64]> = rows.iter().map(|r| kernel.eval(&rows[i], r)).collect();
                cache.insert(i, (*tick, row.clone()));
                row
            }
        }
    }
}
