//! Sensitivity analysis, phase portraits, model comparison and fitting.

mod compare;
mod fit;
mod phase;
mod sobol;

pub use compare::{compare_ode_abm, CoverageReport, BAND_FLOOR};
pub use fit::{fit_parameters, FitOptions, FitResult, FreeParameter};
pub use phase::{derivative_sign_changes, enclosed_area, linear_fit, phase_series, PhaseVariant};
pub use sobol::{sobol_first_order, ParameterRange, SobolResult, MIN_BASE_SAMPLES};
