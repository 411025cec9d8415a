//! Degree-stratified ODE models and their fixed-step integration.

mod integrate;
mod models;
mod params;
mod state;

pub use integrate::{
    integrate, integrate_model, solve, time_grid, IntegrationSpec, Method, OdeSystem, Solution,
    STABILITY_SLACK,
};
pub use models::{classic_sir_rhs, current_link_probability, LinkProbe, ModelKind, NetworkModel};
pub use params::{
    Denominator, EpidemicParams, ModelOptions, Progression, SplitRule, TreatmentEpoch,
    TreatmentSchedule, DEFAULT_MALE_SUSCEPTIBILITY, DEFAULT_TREATMENT_EFFICACY,
};
pub use state::{GroupState, Layout, StratifiedState, Trajectory};
