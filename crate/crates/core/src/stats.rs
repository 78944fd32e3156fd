//! Reduction helpers. All Monte Carlo estimators collect per-replicate values
//! by index and reduce them with a fixed-shape pairwise sum, which keeps
//! results bit-identical regardless of how many threads produced them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::walk::RngStream;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (tree) summation with a fixed split rule.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: u64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                estimate: f64::NAN,
                std_error: f64::NAN,
                replicates: 0,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let std_error = if n > 1 {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            estimate: mean,
            std_error,
            replicates: n as u64,
        }
    }

    pub fn from_indicators(hits: &[bool]) -> Self {
        let xs: Vec<f64> = hits.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
        Self::from_samples(&xs)
    }

    /// `|estimate - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = pairwise_sum(xs) / n as f64;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (pairwise_sum(&dev) / (n as f64 - 1.0)).sqrt()
}

/// Runs `f(r, stream.child(r))` for `r in 0..replicates` on the current rayon
/// pool and returns the results in replicate order.
pub fn run_replicates<T, F>(replicates: u64, stream: RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, RngStream) -> T + Sync + Send,
{
    (0..replicates)
        .into_par_iter()
        .map(|r| f(r, stream.child(r)))
        .collect()
}
