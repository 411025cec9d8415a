//! Fixed-step explicit integration (forward Euler and classical RK4).

use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};

use super::models::NetworkModel;
use super::state::{StratifiedState, Trajectory};

/// Admissible excursion outside `[0, 1]` before integration is declared unstable.
pub const STABILITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

/// An autonomous-within-regime system `y' = f_regime(y)`.
///
/// Regimes change at `breakpoints()`, which the integrator never steps across.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn rhs(&self, regime: usize, y: &[f64], dy: &mut [f64]);
    /// Components subject to the `[0, 1]` stability check.
    fn checked(&self) -> std::ops::Range<usize> {
        0..self.dim()
    }
}

impl OdeSystem for NetworkModel {
    fn dim(&self) -> usize {
        self.layout().dim()
    }

    fn breakpoints(&self) -> Vec<f64> {
        NetworkModel::breakpoints(self)
    }

    fn rhs(&self, regime: usize, y: &[f64], dy: &mut [f64]) {
        NetworkModel::rhs(self, regime, y, dy)
    }

    fn checked(&self) -> std::ops::Range<usize> {
        0..self.layout().cumulative()
    }
}

/// Raw integration output.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `f(y_n)` in the regime that starts at `times[n]`.
    pub derivatives: Vec<Vec<f64>>,
}

/// Step grid `t0, t0+dt, ...` with every interior breakpoint and `t1` inserted.
pub fn time_grid(t0: f64, t1: f64, dt: f64, breakpoints: &[f64]) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(EpiError::domain("dt", format!("dt must be positive, got {dt}")));
    }
    if !(t1 > t0) {
        return Err(EpiError::domain(
            "t_span",
            format!("t_span end ({t1}) must exceed start ({t0})"),
        ));
    }
    let eps = 1e-9 * dt;
    let mut grid = Vec::new();
    let mut n = 0u64;
    loop {
        let t = t0 + n as f64 * dt;
        if t >= t1 - eps {
            break;
        }
        grid.push(t);
        n += 1;
    }
    grid.push(t1);
    grid.extend(breakpoints.iter().copied().filter(|b| *b > t0 + eps && *b < t1 - eps));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup_by(|a, b| (*a - *b).abs() <= eps);
    Ok(grid)
}

/// Integrates `system` from `y0` over `grid`, one step per grid interval.
pub fn solve<S: OdeSystem>(system: &S, y0: &[f64], grid: &[f64], method: Method) -> Result<Solution> {
    let dim = system.dim();
    if y0.len() != dim {
        return Err(EpiError::Shape(format!(
            "initial vector has length {}, system dimension is {dim}",
            y0.len()
        )));
    }
    let breaks = system.breakpoints();
    let regime = |t: f64| breaks.iter().filter(|b| **b <= t).count();
    let checked = system.checked();

    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let mut derivatives = Vec::with_capacity(grid.len());

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for (n, &t) in grid.iter().enumerate() {
        let reg = regime(t);
        system.rhs(reg, &y, &mut k1);
        times.push(t);
        states.push(y.clone());
        derivatives.push(k1.clone());
        let Some(&t_next) = grid.get(n + 1) else {
            break;
        };
        let h = t_next - t;
        match method {
            Method::Euler => {
                for i in 0..dim {
                    y[i] += h * k1[i];
                }
            }
            Method::Rk4 => {
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * h * k1[i];
                }
                system.rhs(reg, &tmp, &mut k2);
                for i in 0..dim {
                    tmp[i] = y[i] + 0.5 * h * k2[i];
                }
                system.rhs(reg, &tmp, &mut k3);
                for i in 0..dim {
                    tmp[i] = y[i] + h * k3[i];
                }
                system.rhs(reg, &tmp, &mut k4);
                for i in 0..dim {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        if let Some((i, v)) = y[checked.clone()]
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -STABILITY_SLACK || **v > 1.0 + STABILITY_SLACK)
        {
            return Err(EpiError::Unstable {
                t: t_next,
                detail: format!("state component {} = {v:e} left [0, 1]", checked.start + i),
            });
        }
    }
    Ok(Solution {
        times,
        states,
        derivatives,
    })
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub method: Method,
}

impl IntegrationSpec {
    pub fn new(t0: f64, t1: f64, dt: f64, method: Method) -> Self {
        IntegrationSpec { t0, t1, dt, method }
    }
}

/// Integrates a network model from `initial` and collects aggregates.
pub fn integrate(
    model: &NetworkModel,
    initial: &StratifiedState,
    spec: &IntegrationSpec,
) -> Result<Trajectory> {
    let layout = model.layout();
    let mut y0 = initial.to_flat(&layout)?;
    y0[layout.cumulative()] = 0.0;
    let grid = time_grid(spec.t0, spec.t1, spec.dt, &model.breakpoints())?;
    let sol = solve(model, &y0, &grid, spec.method)?;

    let cum = layout.cumulative();
    let mut susceptible = Vec::with_capacity(sol.times.len());
    let mut prevalence = Vec::with_capacity(sol.times.len());
    let mut removed = Vec::with_capacity(sol.times.len());
    let mut incidence = Vec::with_capacity(sol.times.len());
    let groups = layout.groups as f64;
    for (n, y) in sol.states.iter().enumerate() {
        let mut s = 0.0;
        let mut i = 0.0;
        let mut r = 0.0;
        for g in 0..layout.groups {
            s += y[layout.s(g)].iter().sum::<f64>();
            for c in 0..layout.infected {
                i += y[layout.infected(g, c)].iter().sum::<f64>();
            }
            r += y[layout.removed(g)].iter().sum::<f64>();
        }
        susceptible.push(s / groups);
        prevalence.push(i / groups);
        removed.push(r / groups);
        incidence.push(if n == 0 {
            0.0
        } else {
            (y[cum] - sol.states[n - 1][cum]) / (sol.times[n] - sol.times[n - 1])
        });
    }
    Ok(Trajectory {
        layout,
        times: sol.times,
        states: sol.states,
        derivatives: sol.derivatives,
        susceptible,
        prevalence,
        removed,
        incidence,
    })
}

/// Integrates from the model's own initial condition.
pub fn integrate_model(model: &NetworkModel, spec: &IntegrationSpec) -> Result<Trajectory> {
    integrate(model, &model.initial_state(), spec)
}
