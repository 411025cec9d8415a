//! Node-degree distributions over a finite support `[k_min, k_max]`.
//!
//! Construction normalizes by direct summation over the support. Sampling
//! goes through a precomputed cumulative table so that a given rng stream
//! always yields the same degree sequence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};

/// Probability mass over integer degrees `k_min..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    k_min: usize,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

/// Serializable description of a distribution, as accepted from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    PowerLaw {
        gamma: f64,
        #[serde(default = "default_k_min")]
        k_min: usize,
        k_max: usize,
    },
    Weights {
        #[serde(default = "default_k_min")]
        k_min: usize,
        weights: Vec<f64>,
    },
}

fn default_k_min() -> usize {
    1
}

impl DistributionSpec {
    pub fn build(&self) -> Result<DegreeDistribution> {
        match self {
            DistributionSpec::PowerLaw { gamma, k_min, k_max } => {
                DegreeDistribution::truncated_power_law(*gamma, *k_min, *k_max)
            }
            DistributionSpec::Weights { k_min, weights } => {
                DegreeDistribution::from_weights(*k_min, weights)
            }
        }
    }
}

impl DegreeDistribution {
    /// `P(k) ∝ k^-gamma` on `k_min..=k_max`.
    pub fn truncated_power_law(gamma: f64, k_min: usize, k_max: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(EpiError::domain("gamma", format!("gamma must be > 0, got {gamma}")));
        }
        if k_min < 1 {
            return Err(EpiError::domain("k_min", "k_min must be >= 1"));
        }
        if k_max < k_min {
            return Err(EpiError::domain(
                "k_max",
                format!("k_max ({k_max}) must be >= k_min ({k_min})"),
            ));
        }
        let weights: Vec<f64> = (k_min..=k_max).map(|k| (k as f64).powf(-gamma)).collect();
        Self::from_weights(k_min, &weights)
    }

    /// Normalizes arbitrary nonnegative weights; `weights[i]` is the weight of degree `k_min + i`.
    pub fn from_weights(k_min: usize, weights: &[f64]) -> Result<Self> {
        if k_min < 1 {
            return Err(EpiError::domain("k_min", "k_min must be >= 1"));
        }
        if weights.is_empty() {
            return Err(EpiError::domain("weights", "at least one weight is required"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(EpiError::domain(
                "weights",
                format!("weights must be finite and nonnegative, got {w}"),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(EpiError::domain("weights", "weights must not all be zero"));
        }
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        // Guard the last bucket against accumulated rounding.
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(DegreeDistribution { k_min, pmf, cdf })
    }

    /// Point mass at a single degree.
    pub fn single(k: usize) -> Result<Self> {
        Self::from_weights(k, &[1.0])
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> usize {
        self.k_min + self.pmf.len() - 1
    }

    /// Number of degree classes in the support.
    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Probability of degree `k`; zero outside the support.
    pub fn prob(&self, k: usize) -> f64 {
        if k < self.k_min || k > self.k_max() {
            0.0
        } else {
            self.pmf[k - self.k_min]
        }
    }

    /// Iterator over `(k, P(k))`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().enumerate().map(move |(i, p)| (self.k_min + i, *p))
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max()
    }

    /// `⟨k⟩ = Σ k P(k)`.
    pub fn mean_degree(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean_degree();
        self.iter()
            .map(|(k, p)| {
                let d = k as f64 - mean;
                d * d * p
            })
            .sum()
    }

    pub fn sample_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|c| *c <= u);
        self.k_min + idx.min(self.pmf.len() - 1)
    }
}
