//! Monte Carlo estimates with a reduction that does not depend on the
//! thread count.
//!
//! Paths are grouped into fixed blocks of [`BLOCK_PATHS`]. Each block is
//! reduced sequentially with compensated summation, and blocks are merged in
//! index order, so the reported mean and standard error are bit-identical for
//! any rayon pool size.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const BLOCK_PATHS: u64 = 4096;

/// Sample mean, standard error `std / sqrt(N)`, and path count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

impl McEstimate {
    /// `|mean - reference| <= k * std_error`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.std_error
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments {
    s1: CompensatedSum,
    s2: CompensatedSum,
    n: u64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.s1.add(x);
        self.s2.add(x * x);
        self.n += 1;
    }

    fn merge(&mut self, other: &Moments) {
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
        self.n += other.n;
    }

    pub(crate) fn estimate(&self) -> Result<McEstimate> {
        if self.n < 2 {
            return Err(Error::EmptyBatch {
                required: 2,
                got: self.n as usize,
            });
        }
        let n = self.n as f64;
        let s1 = self.s1.value();
        let mean = s1 / n;
        let ss = (self.s2.value() - s1 * mean).max(0.0);
        let var = ss / (n - 1.0);
        Ok(McEstimate {
            mean,
            std_error: (var / n).sqrt(),
            n_paths: self.n,
        })
    }
}

/// Estimates `n_out` expectations over `n_paths` paths. `sample(path_id, out)`
/// writes the `n_out` functionals of path `path_id` into `out`.
pub fn estimate<F>(n_paths: u64, n_out: usize, sample: F) -> Result<Vec<McEstimate>>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    if n_paths < 2 {
        return Err(Error::EmptyBatch {
            required: 2,
            got: n_paths as usize,
        });
    }
    let n_blocks = n_paths.div_ceil(BLOCK_PATHS);
    let blocks: Vec<Vec<Moments>> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut acc = vec![Moments::default(); n_out];
            let mut buf = vec![0.0; n_out];
            let start = blk * BLOCK_PATHS;
            let end = (start + BLOCK_PATHS).min(n_paths);
            for id in start..end {
                sample(id, &mut buf);
                for (m, &x) in acc.iter_mut().zip(&buf) {
                    m.push(x);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); n_out];
    for blk in &blocks {
        for (t, m) in total.iter_mut().zip(blk) {
            t.merge(m);
        }
    }
    total.iter().map(Moments::estimate).collect()
}

/// Mean and standard error of an in-memory sample.
pub fn summarize(values: impl IntoIterator<Item = f64>) -> Result<McEstimate> {
    let mut m = Moments::default();
    for x in values {
        m.push(x);
    }
    m.estimate()
}
