use serde::{Deserialize, Serialize};

use crate::abm::EnsembleSummary;
use crate::error::{EpiError, Result};
use crate::ode::Trajectory;

/// Half-width floor for the band, so zero-variance points tolerate
/// floating-point summation noise.
pub const BAND_FLOOR: f64 = 1e-12;

/// Agreement between an ODE prevalence curve and an ABM ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub band_sigmas: f64,
    pub points: usize,
    pub inside: usize,
    /// Fraction of time points with the ODE inside `mean ± band_sigmas·SE`.
    pub coverage: f64,
    pub ode_peak: f64,
    pub ode_peak_time: f64,
    pub abm_peak: f64,
    pub abm_peak_time: f64,
    /// `|ode_peak - abm_peak| / abm_peak`.
    pub peak_relative_deviation: f64,
    /// `ode_peak_time - abm_peak_time`.
    pub peak_time_offset: f64,
    pub replicas: usize,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, x)| if *x > b.1 { (i, *x) } else { b })
        .0
}

pub fn compare_ode_abm(ode: &Trajectory, ens: &EnsembleSummary, band_sigmas: f64) -> Result<CoverageReport> {
    if !(band_sigmas > 0.0) {
        return Err(EpiError::domain("band_sigmas", "band_sigmas must be positive"));
    }
    let aligned = ode.times.len() == ens.times.len()
        && ode.times.iter().zip(&ens.times).all(|(a, b)| (a - b).abs() <= 1e-9);
    if !aligned {
        return Err(EpiError::Shape(format!(
            "time grids differ: ODE has {} points, ensemble has {} (run the ODE with euler dt = 1)",
            ode.times.len(),
            ens.times.len()
        )));
    }
    let mean = &ens.prevalence.mean;
    let se = &ens.prevalence.se;
    let inside = ode
        .prevalence
        .iter()
        .zip(mean.iter().zip(se))
        .filter(|(o, (m, s))| (*o - *m).abs() <= (band_sigmas * *s).max(BAND_FLOOR))
        .count();
    let (io, ia) = (argmax(&ode.prevalence), argmax(mean));
    let (ode_peak, abm_peak) = (ode.prevalence[io], mean[ia]);
    Ok(CoverageReport {
        band_sigmas,
        points: ode.times.len(),
        inside,
        coverage: inside as f64 / ode.times.len() as f64,
        ode_peak,
        ode_peak_time: ode.times[io],
        abm_peak,
        abm_peak_time: ens.times[ia],
        peak_relative_deviation: (ode_peak - abm_peak).abs() / abm_peak,
        peak_time_offset: ode.times[io] - ens.times[ia],
        replicas: ens.replicas,
    })
}
