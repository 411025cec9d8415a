//! Least-squares parameter identification with a bounded Nelder–Mead simplex.

use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub initial: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once every vertex lies within `x_tol · (high - low)` of the best one.
    pub x_tol: f64,
    /// Initial simplex edge as a fraction of each parameter range.
    pub initial_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            x_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `Σ (model(x)_i - observed_i)²` over the box given by `free`.
///
/// Points proposed outside the box are clipped onto it. Failed or
/// non-finite model evaluations count as infinite residual.
pub fn fit_parameters<F>(model: F, observed: &[f64], free: &[FreeParameter], options: &FitOptions) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if observed.is_empty() {
        return Err(EpiError::domain("observed", "observed series is empty"));
    }
    if free.is_empty() {
        return Err(EpiError::domain("free", "no free parameters"));
    }
    for p in free {
        if !(p.low.is_finite() && p.high.is_finite() && p.high > p.low) {
            return Err(EpiError::domain(
                format!("free.{}", p.name),
                format!("bounds must be finite with low < high, got [{}, {}]", p.low, p.high),
            ));
        }
        if !(p.low..=p.high).contains(&p.initial) {
            return Err(EpiError::domain(
                format!("free.{}", p.name),
                format!("initial guess {} outside [{}, {}]", p.initial, p.low, p.high),
            ));
        }
    }
    let dims = free.len();
    let clip = |x: &mut Vec<f64>| {
        for (v, p) in x.iter_mut().zip(free) {
            *v = v.clamp(p.low, p.high);
        }
    };
    let objective = |x: &[f64]| -> f64 {
        match model(x) {
            Ok(out) if out.len() == observed.len() => {
                let rss: f64 = out.iter().zip(observed).map(|(m, o)| (m - o).powi(2)).sum();
                if rss.is_finite() {
                    rss
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    };

    let x0: Vec<f64> = free.iter().map(|p| p.initial).collect();
    let f0 = objective(&x0);
    let names = free.iter().map(|p| p.name.clone()).collect();
    if f0 == 0.0 {
        return Ok(FitResult {
            names,
            values: x0,
            residual: 0.0,
            initial_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for (j, p) in free.iter().enumerate() {
        let mut x = x0.clone();
        let step = options.initial_step * (p.high - p.low);
        // Step towards the interior if the guess sits on the upper bound.
        x[j] = if x[j] + step <= p.high { x[j] + step } else { x[j] - step };
        clip(&mut x);
        let f = objective(&x);
        simplex.push((x, f));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0.clone();
        let spread = simplex.iter().skip(1).all(|(x, _)| {
            x.iter()
                .zip(&best)
                .zip(free)
                .all(|((a, b), p)| (a - b).abs() <= options.x_tol * (p.high - p.low))
        });
        if spread || simplex[0].1 == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dims)
            .map(|j| simplex[..dims].iter().map(|(x, _)| x[j]).sum::<f64>() / dims as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let worst = &simplex[dims].0;
            let mut x: Vec<f64> = centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect();
            clip(&mut x);
            x
        };
        let xr = along(alpha);
        let fr = objective(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = objective(&xe);
            simplex[dims] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dims - 1].1 {
            simplex[dims] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dims].1 {
                let x = along(rho);
                let f = objective(&x);
                (x, f)
            } else {
                let x = along(-rho);
                let f = objective(&x);
                (x, f)
            };
            if fc < simplex[dims].1.min(fr) {
                simplex[dims] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, x)| b + sigma * (x - b)).collect();
                    clip(&mut x);
                    let f = objective(&x);
                    *v = (x, f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (values, residual) = simplex.swap_remove(0);
    // The starting point stays in the simplex unless replaced by a better one.
    debug_assert!(residual <= f0);
    Ok(FitResult {
        names,
        values,
        residual,
        initial_residual: f0,
        iterations,
        converged,
    })
}
