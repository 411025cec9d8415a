//! First-order Sobol indices per output time point.
//!
//! Uses the paired-matrix sampling scheme: two independent base matrices
//! `A` and `B` plus, for each parameter `j`, the hybrid `A_B^j` (columns of
//! `A` with column `j` taken from `B`). That costs `n_base (d + 2)` model
//! evaluations. The estimator is
//! `S_j = mean(f(B) (f(A_B^j) - f(A))) / Var(Y)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};

pub const MIN_BASE_SAMPLES: usize = 64;

/// Uniform sampling interval of one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterRange {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl ParameterRange {
    pub fn new(name: impl Into<String>, low: f64, high: f64) -> Self {
        ParameterRange {
            name: name.into(),
            low,
            high,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolResult {
    pub names: Vec<String>,
    /// `indices[t][j]`; `None` where the output variance vanishes.
    pub indices: Vec<Vec<Option<f64>>>,
    /// One standard error of each estimate.
    pub noise: Vec<Vec<f64>>,
    pub n_base: usize,
    pub evaluations: usize,
}

impl SobolResult {
    pub fn index(&self, t: usize, name: &str) -> Option<f64> {
        let j = self.names.iter().position(|n| n == name)?;
        self.indices[t][j]
    }

    pub fn outputs(&self) -> usize {
        self.indices.len()
    }
}

/// Estimates first-order indices of every output component of `model`.
///
/// `model` maps one parameter vector to an output series of fixed length.
/// Evaluations may run concurrently; results are assembled in sample order.
pub fn sobol_first_order<F>(
    model: F,
    ranges: &[ParameterRange],
    n_base: usize,
    seed: u64,
) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if ranges.is_empty() {
        return Err(EpiError::domain("parameters", "at least one parameter range is required"));
    }
    if n_base < MIN_BASE_SAMPLES {
        return Err(EpiError::domain(
            "n_base",
            format!("n_base must be >= {MIN_BASE_SAMPLES}, got {n_base}"),
        ));
    }
    for r in ranges {
        if !(r.low.is_finite() && r.high.is_finite() && r.high > r.low) {
            return Err(EpiError::domain(
                format!("parameters.{}", r.name),
                format!("invalid range [{}, {}]", r.low, r.high),
            ));
        }
    }
    let dims = ranges.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..n_base)
            .map(|_| {
                ranges
                    .iter()
                    .map(|r| r.low + (r.high - r.low) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    };
    let a = draw();
    let b = draw();

    // Sample order: all of A, all of B, then A_B^j for j = 0..dims.
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n_base * (dims + 2));
    points.extend(a.iter().cloned());
    points.extend(b.iter().cloned());
    for j in 0..dims {
        for i in 0..n_base {
            let mut x = a[i].clone();
            x[j] = b[i][j];
            points.push(x);
        }
    }
    let outputs: Vec<Vec<f64>> = points.par_iter().map(|x| model(x)).collect::<Result<_>>()?;
    let len = outputs[0].len();
    if outputs.iter().any(|o| o.len() != len) {
        return Err(EpiError::Shape("model outputs differ in length across samples".into()));
    }

    let fa = &outputs[..n_base];
    let fb = &outputs[n_base..2 * n_base];
    let mut indices = Vec::with_capacity(len);
    let mut noise = Vec::with_capacity(len);
    for t in 0..len {
        let ys: Vec<f64> = fa.iter().chain(fb).map(|o| o[t]).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64;
        let degenerate = !(var > 1e-24 * mean * mean) || var == 0.0;
        let mut row = Vec::with_capacity(dims);
        let mut err = Vec::with_capacity(dims);
        for j in 0..dims {
            if degenerate {
                row.push(None);
                err.push(f64::NAN);
                continue;
            }
            let fab = &outputs[(2 + j) * n_base..(3 + j) * n_base];
            let terms: Vec<f64> = (0..n_base).map(|i| fb[i][t] * (fab[i][t] - fa[i][t])).collect();
            let m = terms.iter().sum::<f64>() / n_base as f64;
            let v = terms.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n_base - 1) as f64;
            row.push(Some(m / var));
            err.push((v / n_base as f64).sqrt() / var);
        }
        indices.push(row);
        noise.push(err);
    }
    Ok(SobolResult {
        names: ranges.iter().map(|r| r.name.clone()).collect(),
        indices,
        noise,
        n_base,
        evaluations: points.len(),
    })
}
