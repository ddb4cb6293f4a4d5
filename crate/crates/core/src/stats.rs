//! Streaming moments and small regression helpers.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{StateVector, C64};

/// Running mean and sum of squared deviations (Welford), mergeable across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Parallel combination of two accumulators.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / n as f64;
        Self { count: n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Component-wise Welford accumulators over complex vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorMoments {
    re: Vec<Welford>,
    im: Vec<Welford>,
}

impl VectorMoments {
    pub fn new(dim: usize) -> Self {
        Self { re: alloc::vec![Welford::default(); dim], im: alloc::vec![Welford::default(); dim] }
    }

    pub fn push(&mut self, v: &StateVector, scale: f64) {
        for (k, z) in v.amplitudes().iter().enumerate() {
            self.re[k].push(z.re * scale);
            self.im[k].push(z.im * scale);
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.re.is_empty() {
            return other.clone();
        }
        Self {
            re: self.re.iter().zip(&other.re).map(|(a, b)| a.merge(b)).collect(),
            im: self.im.iter().zip(&other.im).map(|(a, b)| a.merge(b)).collect(),
        }
    }

    pub fn count(&self) -> u64 {
        self.re.first().map_or(0, |w| w.count)
    }

    pub fn mean(&self) -> StateVector {
        StateVector::from_amplitudes(self.re.iter().zip(&self.im).map(|(r, i)| C64::new(r.mean, i.mean)).collect())
    }

    /// Standard error of each component, as `(Re, Im)` pairs.
    pub fn std_errors(&self) -> Vec<(f64, f64)> {
        self.re.iter().zip(&self.im).map(|(r, i)| (r.std_error(), i.std_error())).collect()
    }

    /// Euclidean norm of the per-component standard errors.
    pub fn std_error_norm(&self) -> f64 {
        self.std_errors().iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt()
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_slope(&lx, &ly)
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
