//! Sample summaries with standard errors.
//!
//! All reductions go through [`pairwise_sum`] so the result depends only on
//! the order of the input, never on how it was produced.

use serde::{Deserialize, Serialize};

use crate::scalar::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value − target| ≤ k · se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.se
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() as f64 - 1.0)
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    Estimate {
        value: mean(xs),
        se: (variance(xs) / n).sqrt(),
    }
}

/// Sample variance with the large-sample standard error
/// `sqrt((m₄ − s⁴)/n)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let q: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let m4 = pairwise_sum(&q) / n;
    Estimate {
        value: s2,
        se: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
    }
}

/// Mean of a statistic computed on `batches` contiguous batches, with the
/// between-batch standard error.
pub fn batch_estimate(xs: &[f64], batches: usize, stat: impl Fn(&[f64]) -> f64) -> Estimate {
    assert!(batches >= 2 && xs.len() >= batches);
    let size = xs.len() / batches;
    let values: Vec<f64> = (0..batches).map(|b| stat(&xs[b * size..(b + 1) * size])).collect();
    mean_estimate(&values)
}

/// Lag-`lag` sample autocorrelation.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let m = mean(xs);
    let num: Vec<f64> = xs.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).collect();
    let den: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        let e = mean_estimate(&xs);
        assert!((e.se - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
        assert!(e.within(2.5, 0.0));
    }

    #[test]
    fn batches() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let e = batch_estimate(&xs, 10, mean);
        assert_eq!(e.value, 4.5);
        assert_eq!(e.se, 0.0);
    }
}
