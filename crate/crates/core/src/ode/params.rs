use serde::{Deserialize, Serialize};

use crate::error::{check_probability, EpiError, Result};

/// Transmission, removal and demographic rates (all per unit time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Per-contact transmission probability. In the HIV models this is `i`;
    /// in the bipartite model it is the side-1 → side-2 rate.
    pub lambda: f64,
    pub mu: f64,
    /// Initial infected fraction.
    pub rho0: f64,
    /// Demographic replenishment rate; 0 disables.
    pub d: f64,
    /// Second-group transmission. Type-2 rate in the two-type model,
    /// side-2 → side-1 rate in the bipartite model. Defaults to `lambda`.
    pub lambda2: Option<f64>,
    /// Multiplier on the transmission rate of treated infectors.
    pub treatment_efficacy: f64,
    /// Multiplier on transmission towards men in the heterosexual model.
    pub male_susceptibility: f64,
}

pub const DEFAULT_TREATMENT_EFFICACY: f64 = 0.4;
pub const DEFAULT_MALE_SUSCEPTIBILITY: f64 = 0.5;

impl EpidemicParams {
    pub fn new(lambda: f64, mu: f64, rho0: f64) -> Self {
        EpidemicParams {
            lambda,
            mu,
            rho0,
            d: 0.0,
            lambda2: None,
            treatment_efficacy: DEFAULT_TREATMENT_EFFICACY,
            male_susceptibility: DEFAULT_MALE_SUSCEPTIBILITY,
        }
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = Some(lambda2);
        self
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2.unwrap_or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("lambda", self.lambda)?;
        check_probability("mu", self.mu)?;
        check_probability("d", self.d)?;
        if let Some(l2) = self.lambda2 {
            check_probability("lambda2", l2)?;
        }
        check_probability("treatment_efficacy", self.treatment_efficacy)?;
        check_probability("male_susceptibility", self.male_susceptibility)?;
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(EpiError::domain(
                "rho0",
                format!("rho0 out of (0,1): {}", self.rho0),
            ));
        }
        Ok(())
    }
}

/// Normalizer used in `p = ⟨k_inf⟩ / D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Stubs of non-removed nodes: `D = Σ k (s_k + ρ_k)`.
    #[default]
    Active,
    /// Static mean degree of the distribution.
    Fixed,
}

/// How new infections in the two-type model are assigned to the infected types.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum SplitRule {
    /// Share of type 1 is `h1 / (h1 + h2)` from the two marginal hazards.
    #[default]
    Proportional,
    /// A constant share `type1` goes to type 1.
    Fixed { type1: f64 },
}

/// One treatment regime starting at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentEpoch {
    pub time: f64,
    /// Fraction of infected individuals that are treated from `time` onward.
    pub coverage: f64,
}

/// Piecewise-constant treatment coverage; zero before the first epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreatmentSchedule {
    epochs: Vec<TreatmentEpoch>,
}

impl TreatmentSchedule {
    pub fn new(epochs: Vec<TreatmentEpoch>) -> Result<Self> {
        for (i, e) in epochs.iter().enumerate() {
            if !e.time.is_finite() {
                return Err(EpiError::domain(
                    format!("treatment[{i}].time"),
                    "epoch time must be finite",
                ));
            }
            check_probability(&format!("treatment[{i}].coverage"), e.coverage)?;
        }
        if epochs.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(EpiError::domain(
                "treatment",
                "treatment epochs must be strictly increasing in time",
            ));
        }
        Ok(TreatmentSchedule { epochs })
    }

    pub fn none() -> Self {
        TreatmentSchedule::default()
    }

    pub fn epochs(&self) -> &[TreatmentEpoch] {
        &self.epochs
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.time).collect()
    }

    /// Coverage in regime `r`, i.e. after the first `r` epochs have started.
    pub fn coverage_in_regime(&self, regime: usize) -> f64 {
        if regime == 0 {
            0.0
        } else {
            self.epochs[regime.min(self.epochs.len()) - 1].coverage
        }
    }

    pub fn coverage_at(&self, t: f64) -> f64 {
        let regime = self.epochs.iter().take_while(|e| e.time <= t).count();
        self.coverage_in_regime(regime)
    }
}

/// Disease progression as a chain of infected stages.
///
/// Stage `j` is left at `rates[j]` per unit time, into stage `j + 1`; the
/// last stage exits into the removed compartment. A single stage with
/// rate `μ` is plain SIR removal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Progression {
    pub rates: Vec<f64>,
}

impl Progression {
    pub fn single(mu: f64) -> Self {
        Progression { rates: vec![mu] }
    }

    pub fn stages(&self) -> usize {
        self.rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(EpiError::domain("progression.rates", "at least one stage is required"));
        }
        for (i, r) in self.rates.iter().enumerate() {
            check_probability(&format!("progression.rates[{i}]"), *r)?;
        }
        Ok(())
    }
}

/// Structural options that are not rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub denominator: Denominator,
    pub split: SplitRule,
    /// Share of initially infected assigned to type 1 in the two-type model.
    pub initial_type1_share: f64,
    /// Initial infected fraction of the second population; defaults to `rho0`.
    pub rho0_second: Option<f64>,
    pub treatment: TreatmentSchedule,
    /// Stage chain for the HIV models; defaults to a single stage at `μ`.
    pub progression: Option<Progression>,
    /// Degrees above this use the normal approximation of the link-count law.
    pub approx_threshold: Option<u64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            denominator: Denominator::Active,
            split: SplitRule::Proportional,
            initial_type1_share: 0.5,
            rho0_second: None,
            treatment: TreatmentSchedule::none(),
            progression: None,
            approx_threshold: None,
        }
    }
}

impl ModelOptions {
    pub fn validate(&self) -> Result<()> {
        check_probability("initial_type1_share", self.initial_type1_share)?;
        if let SplitRule::Fixed { type1 } = self.split {
            check_probability("split.type1", type1)?;
        }
        if let Some(r) = self.rho0_second {
            if !(0.0..1.0).contains(&r) {
                return Err(EpiError::domain("rho0_second", format!("rho0_second out of [0,1): {r}")));
            }
        }
        if let Some(p) = &self.progression {
            p.validate()?;
        }
        Ok(())
    }
}
