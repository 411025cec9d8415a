//! JSON run configuration: parsing, validation and model construction.

use std::path::{Path, PathBuf};

use netepi::abm::{Rewire, SimulationSpec};
use netepi::analysis::{FitOptions, FreeParameter, ParameterRange, PhaseVariant, MIN_BASE_SAMPLES};
use netepi::ode::{
    Denominator, EpidemicParams, IntegrationSpec, Method, ModelKind, ModelOptions, NetworkModel, Progression,
    SplitRule, TreatmentEpoch, TreatmentSchedule,
};
use netepi::{DegreeDistribution, DistributionSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Parameters that sensitivity analysis and fitting may vary.
pub const TUNABLE: &[&str] = &[
    "lambda",
    "lambda2",
    "mu",
    "rho0",
    "d",
    "treatment_efficacy",
    "male_susceptibility",
    "gamma",
];

fn default_dt() -> f64 {
    0.1
}
fn default_efficacy() -> f64 {
    netepi::ode::DEFAULT_TREATMENT_EFFICACY
}
fn default_male() -> f64 {
    netepi::ode::DEFAULT_MALE_SUSCEPTIBILITY
}
fn default_share() -> f64 {
    0.5
}
fn default_replicas() -> usize {
    100
}
fn default_band() -> f64 {
    3.0
}
fn default_n_base() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelKind,
    pub lambda: f64,
    pub mu: f64,
    pub rho0: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default = "default_efficacy")]
    pub treatment_efficacy: f64,
    #[serde(default = "default_male")]
    pub male_susceptibility: f64,
    pub t_span: [f64; 2],
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    #[serde(default)]
    pub distributions: Option<Vec<DistributionSpec>>,
    #[serde(default)]
    pub options: OptionsConfig,
    #[serde(default)]
    pub treatment: Vec<TreatmentEpoch>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub abm: Option<AbmConfig>,
    #[serde(default)]
    pub sensitivity: Option<SensitivityConfig>,
    #[serde(default)]
    pub phase: Option<PhaseConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(default)]
    pub denominator: Denominator,
    #[serde(default)]
    pub split: SplitRule,
    #[serde(default = "default_share")]
    pub initial_type1_share: f64,
    #[serde(default)]
    pub rho0_second: Option<f64>,
    #[serde(default)]
    pub progression: Option<Progression>,
    #[serde(default)]
    pub approx_threshold: Option<u64>,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig {
            denominator: Denominator::default(),
            split: SplitRule::default(),
            initial_type1_share: default_share(),
            rho0_second: None,
            progression: None,
            approx_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Adds one infected-fraction column per degree to trajectory.csv.
    #[serde(default)]
    pub per_degree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbmConfig {
    pub n: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub rewire: Rewire,
    #[serde(default = "default_band")]
    pub band_sigmas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolOutput {
    #[default]
    Incidence,
    Prevalence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub parameters: Vec<ParameterRange>,
    #[serde(default = "default_n_base")]
    pub n_base: usize,
    #[serde(default)]
    pub output: SobolOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub variant: PhaseVariant,
    #[serde(default)]
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub free: Vec<FreeParameter>,
    pub observed: Observed,
    #[serde(default)]
    pub options: FitOptions,
}

/// Observed incidence, inline or as a CSV file with columns `t,incidence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observed {
    Inline { times: Vec<f64>, incidence: Vec<f64> },
    Csv { csv: PathBuf },
}

/// Parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = parse_str(&text)?;
    // Relative observation files resolve against the config's directory.
    if let Some(Observed::Csv { csv }) = cfg.fit.as_mut().map(|f| &mut f.observed) {
        if csv.is_relative() {
            if let Some(dir) = path.parent() {
                *csv = dir.join(&*csv);
            }
        }
    }
    Ok(cfg)
}

pub fn parse_str(text: &str) -> Result<Config, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes with every default made explicit; parsing it back yields an identical spec.
pub fn to_canonical_json(cfg: &Config) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}

fn field(name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {reason}"))
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate()?;
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(field("rho0", format!("rho0 out of (0,1): {}", self.rho0)));
        }
        for (name, v) in [
            ("treatment_efficacy", self.treatment_efficacy),
            ("male_susceptibility", self.male_susceptibility),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(field(name, format!("{name} out of [0,1]: {v}")));
            }
        }
        let [t0, t1] = self.t_span;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(field("t_span", format!("need t_span[0] < t_span[1], got [{t0}, {t1}]")));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(field("dt", format!("dt must be positive, got {}", self.dt)));
        }
        if self.distribution.is_some() && self.distributions.is_some() {
            return Err(field("distributions", "give either distribution or distributions, not both"));
        }
        if self.model != ModelKind::Classic && self.distribution.is_none() && self.distributions.is_none() {
            return Err(field("distribution", format!("model {} requires a degree distribution", self.model.name())));
        }
        if let Some(list) = &self.distributions {
            if list.len() != self.model.groups() {
                return Err(field(
                    "distributions",
                    format!("model {} takes {} distribution(s), got {}", self.model.name(), self.model.groups(), list.len()),
                ));
            }
        }
        self.distribution_list()?;
        TreatmentSchedule::new(self.treatment.clone()).map_err(|e| field("treatment", e))?;
        self.model_options().validate()?;

        if let Some(abm) = &self.abm {
            if abm.n < 2 {
                return Err(field("abm.n", format!("n must be at least 2, got {}", abm.n)));
            }
            if abm.replicas < 2 {
                return Err(field("abm.replicas", format!("need at least 2 replicas, got {}", abm.replicas)));
            }
            if !(abm.band_sigmas > 0.0) {
                return Err(field("abm.band_sigmas", "band_sigmas must be positive"));
            }
        }
        if let Some(s) = &self.sensitivity {
            if s.parameters.is_empty() {
                return Err(field("sensitivity.parameters", "at least one parameter range is required"));
            }
            for (i, r) in s.parameters.iter().enumerate() {
                self.check_tunable(&r.name, &format!("sensitivity.parameters[{i}].name"))?;
                if !(r.low.is_finite() && r.high.is_finite() && r.high > r.low) {
                    return Err(field(
                        &format!("sensitivity.parameters[{i}]"),
                        format!("need low < high, got [{}, {}]", r.low, r.high),
                    ));
                }
            }
            if s.n_base < MIN_BASE_SAMPLES {
                return Err(field("sensitivity.n_base", format!("n_base must be >= {MIN_BASE_SAMPLES}, got {}", s.n_base)));
            }
        }
        if let Some(f) = &self.fit {
            if f.free.is_empty() {
                return Err(field("fit.free", "at least one free parameter is required"));
            }
            for (i, p) in f.free.iter().enumerate() {
                self.check_tunable(&p.name, &format!("fit.free[{i}].name"))?;
                if !(p.low.is_finite() && p.high.is_finite() && p.high > p.low) {
                    return Err(field(&format!("fit.free[{i}]"), format!("bounds must be finite with low < high, got [{}, {}]", p.low, p.high)));
                }
                if !(p.low..=p.high).contains(&p.initial) {
                    return Err(field(&format!("fit.free[{i}].initial"), format!("initial guess {} outside [{}, {}]", p.initial, p.low, p.high)));
                }
            }
            if let Observed::Inline { times, incidence } = &f.observed {
                if times.is_empty() {
                    return Err(field("fit.observed.times", "observed series is empty"));
                }
                if times.len() != incidence.len() {
                    return Err(field(
                        "fit.observed.incidence",
                        format!("{} values for {} times", incidence.len(), times.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_tunable(&self, name: &str, path: &str) -> Result<(), CliError> {
        if !TUNABLE.contains(&name) {
            return Err(field(path, format!("unknown parameter {name:?}; expected one of {}", TUNABLE.join(", "))));
        }
        if name == "gamma" {
            let specs = self.distribution.iter().chain(self.distributions.iter().flatten());
            let mut any = false;
            for s in specs {
                any = true;
                if !matches!(s, DistributionSpec::PowerLaw { .. }) {
                    return Err(field(path, "gamma can only vary with power_law distributions"));
                }
            }
            if !any {
                return Err(field(path, "gamma requires a power_law distribution"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> EpidemicParams {
        EpidemicParams {
            lambda: self.lambda,
            mu: self.mu,
            rho0: self.rho0,
            d: self.d,
            lambda2: self.lambda2,
            treatment_efficacy: self.treatment_efficacy,
            male_susceptibility: self.male_susceptibility,
        }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            denominator: self.options.denominator,
            split: self.options.split,
            initial_type1_share: self.options.initial_type1_share,
            rho0_second: self.options.rho0_second,
            treatment: TreatmentSchedule::new(self.treatment.clone()).unwrap_or_default(),
            progression: self.options.progression.clone(),
            approx_threshold: self.options.approx_threshold,
        }
    }

    pub fn distribution_list(&self) -> Result<Vec<DegreeDistribution>, CliError> {
        if let Some(d) = &self.distribution {
            return Ok(vec![d.build().map_err(|e| field("distribution", e))?]);
        }
        match &self.distributions {
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, d)| d.build().map_err(|e| field(&format!("distributions[{i}]"), e)))
                .collect(),
            None => Ok(Vec::new()),
        }
    }

    pub fn build_model(&self) -> Result<NetworkModel, CliError> {
        Ok(NetworkModel::new(self.model, self.params(), self.model_options(), &self.distribution_list()?)?)
    }

    pub fn integration(&self) -> IntegrationSpec {
        IntegrationSpec::new(self.t_span[0], self.t_span[1], self.dt, self.method)
    }

    /// Agent-based counterpart: one step per unit time over `t_span`.
    pub fn simulation_spec(&self) -> Result<(SimulationSpec, usize), CliError> {
        let abm = self.abm.as_ref().ok_or_else(|| field("abm", "this command needs an abm section"))?;
        if self.model != ModelKind::Stratified {
            return Err(field(
                "model",
                format!("agent-based runs support the stratified model, got {}", self.model.name()),
            ));
        }
        if self.t_span[0] != 0.0 {
            return Err(field("t_span", "agent-based runs start at t = 0"));
        }
        let steps = self.t_span[1].round();
        if (steps - self.t_span[1]).abs() > 1e-9 {
            return Err(field("t_span", "agent-based runs need an integer end time (one step per unit)"));
        }
        let dist = self.distribution_list()?.remove(0);
        let mut spec = SimulationSpec::new(dist, abm.n, self.params(), steps as usize);
        spec.rewire = abm.rewire;
        spec.treatment = self.model_options().treatment;
        spec.validate()?;
        Ok((spec, abm.replicas))
    }

    /// Copy with one tunable parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Config, CliError> {
        let mut c = self.clone();
        match name {
            "lambda" => c.lambda = value,
            "lambda2" => c.lambda2 = Some(value),
            "mu" => c.mu = value,
            "rho0" => c.rho0 = value,
            "d" => c.d = value,
            "treatment_efficacy" => c.treatment_efficacy = value,
            "male_susceptibility" => c.male_susceptibility = value,
            "gamma" => {
                let set = |s: &mut DistributionSpec| {
                    if let DistributionSpec::PowerLaw { gamma, .. } = s {
                        *gamma = value;
                    }
                };
                c.distribution.iter_mut().for_each(set);
                c.distributions.iter_mut().flatten().for_each(set);
            }
            other => return Err(field("parameter", format!("unknown parameter {other:?}"))),
        }
        Ok(c)
    }
}
