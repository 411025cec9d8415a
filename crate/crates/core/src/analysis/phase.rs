use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};
use crate::ode::Trajectory;

/// Which compartment is plotted against its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseVariant {
    /// `(ρ_m, dρ_n/dt)`, summed over infected compartments.
    #[default]
    Infected,
    /// `(s_m + r_m, d(s_n + r_n)/dt)`.
    Healthy,
}

/// Phase-plane points for degree `m` on the x-axis and the derivative of
/// degree `n` on the y-axis, in population `group`.
///
/// Derivatives come from the right-hand side recorded at each state.
pub fn phase_series(
    traj: &Trajectory,
    group: usize,
    m: usize,
    n: usize,
    variant: PhaseVariant,
) -> Result<Vec<(f64, f64)>> {
    let layout = traj.layout;
    if traj.derivatives.len() != traj.states.len() {
        return Err(EpiError::Shape(
            "trajectory carries no recorded derivatives (phase series need an ODE solution)".into(),
        ));
    }
    if group >= layout.groups {
        return Err(EpiError::domain("group", format!("group {group} does not exist")));
    }
    let class = |k: usize, what: &str| {
        layout.class_of(k).ok_or_else(|| {
            EpiError::domain(
                what,
                format!(
                    "degree {k} outside support [{}, {}]",
                    layout.k_min,
                    layout.k_min + layout.classes - 1
                ),
            )
        })
    };
    let (cm, cn) = (class(m, "m")?, class(n, "n")?);
    let value = |y: &[f64], c: usize| -> f64 {
        match variant {
            PhaseVariant::Infected => (0..layout.infected).map(|i| y[layout.infected(group, i).start + c]).sum(),
            PhaseVariant::Healthy => y[layout.s(group).start + c] + y[layout.removed(group).start + c],
        }
    };
    Ok(traj
        .states
        .iter()
        .zip(&traj.derivatives)
        .map(|(y, dy)| (value(y, cm), value(dy, cn)))
        .collect())
}

/// Signed area enclosed by the closed polygon through `points` (shoelace).
pub fn enclosed_area(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..points.len() {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % points.len()];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

/// Number of sign changes of the derivative coordinate.
pub fn derivative_sign_changes(points: &[(f64, f64)]) -> usize {
    points
        .iter()
        .map(|p| p.1)
        .filter(|v| *v != 0.0)
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count()
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (intercept, slope, r2)
}
