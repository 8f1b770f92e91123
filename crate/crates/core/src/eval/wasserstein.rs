//! Exact 1-Wasserstein distance between empirical measures on the line.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("empirical distribution needs at least one sample")]
    Empty,
    #[error("sample {0} is outside [0, 1]")]
    OutOfRange(f64),
}

/// Offer fractions in [0, 1], kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, DistributionError> {
        if samples.is_empty() {
            return Err(DistributionError::Empty);
        }
        if let Some(bad) = samples.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(DistributionError::OutOfRange(*bad));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// W1 via the quantile functions: the integral over q in [0, 1] of
/// |F_a^-1(q) - F_b^-1(q)|.
///
/// Both quantile functions are step functions with breakpoints at i/n and
/// j/m. Walking the merged breakpoints on the integer grid of denominator
/// n*m gives the integral exactly, whatever the two sample counts are.
pub fn wasserstein1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xs, ys) = (&a.samples, &b.samples);
    let (n, m) = (xs.len() as u64, ys.len() as u64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0u64;
    let mut total = 0.0;
    while i < xs.len() && j < ys.len() {
        let next_a = (i as u64 + 1) * m;
        let next_b = (j as u64 + 1) * n;
        let next = next_a.min(next_b);
        total += (next - pos) as f64 * (xs[i] - ys[j]).abs();
        pos = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    total / (n * m) as f64
}
