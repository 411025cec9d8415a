//! Right-hand sides of the network ODE models.
//!
//! Every model works on per-degree fractions. Link probabilities are
//! recomputed from the current state on every evaluation (full rewiring),
//! and the per-class infection hazard averages the infection function over
//! the binomial or multinomial law of infected neighbours.

use serde::{Deserialize, Serialize};

use crate::degree_dist::DegreeDistribution;
use crate::error::{EpiError, Result};
use crate::mixing::{self, LinkProbabilities, MultinomialTable};

use super::params::{Denominator, EpidemicParams, ModelOptions, Progression, SplitRule};
use super::state::{GroupState, Layout, StratifiedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Classic,
    Stratified,
    TwoType,
    Bipartite,
    HivMsm,
    HivHetero,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Classic => "classic",
            ModelKind::Stratified => "stratified",
            ModelKind::TwoType => "two_type",
            ModelKind::Bipartite => "bipartite",
            ModelKind::HivMsm => "hiv_msm",
            ModelKind::HivHetero => "hiv_hetero",
        }
    }

    pub fn groups(&self) -> usize {
        match self {
            ModelKind::Bipartite | ModelKind::HivHetero => 2,
            _ => 1,
        }
    }

    fn uses_table(&self) -> bool {
        matches!(self, ModelKind::TwoType | ModelKind::HivMsm | ModelKind::HivHetero)
    }

    fn is_hiv(&self) -> bool {
        matches!(self, ModelKind::HivMsm | ModelKind::HivHetero)
    }
}

/// Classic homogeneous SIR: `(ds, dρ, dr)`.
pub fn classic_sir_rhs(s: f64, rho: f64, r: f64, params: &EpidemicParams) -> (f64, f64, f64) {
    let _ = r;
    let infection = params.lambda * rho * s;
    (-infection, -params.mu * rho + infection, params.mu * rho)
}

/// Link probabilities seen by a random half-edge, plus an extinction flag
/// raised when no active stubs remain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbe {
    pub probs: LinkProbabilities,
    pub extinct: bool,
}

/// `p = Σ_k k ρ_k / D` for one population, with each infected compartment
/// treated as its own infected type (at most two).
pub fn current_link_probability(
    group: &GroupState,
    dist: &DegreeDistribution,
    mode: Denominator,
) -> Result<LinkProbe> {
    if group.s.len() != dist.len() {
        return Err(EpiError::Shape(format!(
            "state has {} degree classes, distribution has {}",
            group.s.len(),
            dist.len()
        )));
    }
    if group.infected.len() > 2 {
        return Err(EpiError::Shape("at most two infected types are supported".into()));
    }
    let k_min = dist.k_min();
    let weighted = |v: &[f64]| -> f64 {
        v.iter().enumerate().map(|(i, x)| (k_min + i) as f64 * x).sum()
    };
    let num: Vec<f64> = group.infected.iter().map(|c| weighted(c)).collect();
    let denom = match mode {
        Denominator::Active => weighted(&group.s) + num.iter().sum::<f64>(),
        Denominator::Fixed => dist.mean_degree(),
    };
    if !(denom > 0.0) {
        return Ok(LinkProbe {
            probs: LinkProbabilities::new(0.0, 0.0)?,
            extinct: true,
        });
    }
    let p = |i: usize| num.get(i).map_or(0.0, |n| (n / denom).clamp(0.0, 1.0));
    let (p1, p2) = (p(0), p(1));
    let p2 = p2.min(1.0 - p1);
    Ok(LinkProbe {
        probs: LinkProbabilities::new(p1, p2)?,
        extinct: false,
    })
}

/// A configured ODE model: rates, structure and degree distributions.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    kind: ModelKind,
    params: EpidemicParams,
    options: ModelOptions,
    dists: Vec<DegreeDistribution>,
    layout: Layout,
    progression: Progression,
    table: Option<MultinomialTable>,
    initial: Vec<f64>,
    mean_degree: Vec<f64>,
    ratios: mixing::RatioTable,
}

impl NetworkModel {
    /// `dists` holds one distribution, or one per population for the
    /// two-population models (a single one is then shared). The classic
    /// model ignores it.
    pub fn new(
        kind: ModelKind,
        params: EpidemicParams,
        options: ModelOptions,
        dists: &[DegreeDistribution],
    ) -> Result<Self> {
        params.validate()?;
        options.validate()?;
        let groups = kind.groups();
        let dists: Vec<DegreeDistribution> = match kind {
            ModelKind::Classic => vec![DegreeDistribution::single(1)?],
            _ => match dists.len() {
                0 => return Err(EpiError::domain("distribution", "a degree distribution is required")),
                1 => vec![dists[0].clone(); groups],
                n if n == groups => align_supports(dists)?,
                n => {
                    return Err(EpiError::Shape(format!(
                        "model {} takes {groups} distribution(s), got {n}",
                        kind.name()
                    )))
                }
            },
        };
        let progression = if kind.is_hiv() {
            options
                .progression
                .clone()
                .unwrap_or_else(|| Progression::single(params.mu))
        } else {
            Progression::single(params.mu)
        };
        let infected = match kind {
            ModelKind::TwoType => 2,
            ModelKind::HivMsm | ModelKind::HivHetero => progression.stages(),
            _ => 1,
        };
        let layout = Layout {
            k_min: dists[0].k_min(),
            classes: dists[0].len(),
            groups,
            infected,
        };
        let table = if kind.uses_table() {
            Some(MultinomialTable::new(dists[0].k_max())?)
        } else {
            None
        };
        let mean_degree = dists.iter().map(|d| d.mean_degree()).collect();
        let mut model = NetworkModel {
            kind,
            params,
            options,
            dists,
            layout,
            progression,
            table,
            initial: Vec::new(),
            mean_degree,
            ratios: mixing::RatioTable::new(layout.k_min + layout.classes - 1),
        };
        model.initial = model.build_initial();
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &EpidemicParams {
        &self.params
    }

    pub fn options(&self) -> &ModelOptions {
        &self.options
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn distributions(&self) -> &[DegreeDistribution] {
        &self.dists
    }

    /// Degree-uniform random seeding: `ρ_k(0) = ρ0 P(k)`, `s_k(0) = (1 - ρ0) P(k)`.
    fn build_initial(&self) -> Vec<f64> {
        let l = self.layout;
        let mut y = vec![0.0; l.dim()];
        for g in 0..l.groups {
            let rho0 = if g == 0 {
                self.params.rho0
            } else {
                self.options.rho0_second.unwrap_or(self.params.rho0)
            };
            let pmf = self.dists[g].pmf();
            for (i, p) in pmf.iter().enumerate() {
                y[l.s(g).start + i] = (1.0 - rho0) * p;
                let infected = rho0 * p;
                if self.kind == ModelKind::TwoType {
                    let share = self.options.initial_type1_share;
                    y[l.infected(g, 0).start + i] = share * infected;
                    y[l.infected(g, 1).start + i] = (1.0 - share) * infected;
                } else {
                    y[l.infected(g, 0).start + i] = infected;
                }
            }
        }
        y
    }

    pub fn initial_flat(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_state(&self) -> StratifiedState {
        StratifiedState::from_flat(&self.layout, &self.initial)
    }

    /// Times at which parameters change discontinuously.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.kind.is_hiv() {
            self.options.treatment.breakpoints()
        } else {
            Vec::new()
        }
    }

    /// Regime index in effect at `t` (right-continuous).
    pub fn regime_at(&self, t: f64) -> usize {
        self.breakpoints().iter().filter(|b| **b <= t).count()
    }

    /// Derivative of a structured state at time `t`.
    pub fn derivative(&self, t: f64, state: &StratifiedState) -> Result<StratifiedState> {
        let y = state.to_flat(&self.layout)?;
        let mut dy = vec![0.0; y.len()];
        self.rhs(self.regime_at(t), &y, &mut dy);
        Ok(StratifiedState::from_flat(&self.layout, &dy))
    }

    /// New-infection rate (population-averaged) at a flat state.
    pub fn inflow(&self, regime: usize, y: &[f64]) -> f64 {
        let mut dy = vec![0.0; y.len()];
        self.rhs(regime, y, &mut dy);
        dy[self.layout.cumulative()]
    }

    /// Flat right-hand side. The last slot receives the new-infection rate.
    pub fn rhs(&self, regime: usize, y: &[f64], dy: &mut [f64]) {
        dy.iter_mut().for_each(|v| *v = 0.0);
        match self.kind {
            ModelKind::Classic => self.rhs_classic(y, dy),
            ModelKind::Stratified => self.rhs_single_type(y, dy),
            ModelKind::TwoType => self.rhs_two_type(y, dy),
            ModelKind::Bipartite => self.rhs_bipartite(y, dy),
            ModelKind::HivMsm | ModelKind::HivHetero => self.rhs_hiv(regime, y, dy),
        }
    }

    fn degree(&self, class: usize) -> f64 {
        (self.layout.k_min + class) as f64
    }

    fn weighted(&self, v: &[f64]) -> f64 {
        v.iter().enumerate().map(|(i, x)| self.degree(i) * x).sum()
    }

    /// `Σ k · (all infected compartments)` for group `g`.
    fn infected_stubs(&self, y: &[f64], g: usize) -> f64 {
        (0..self.layout.infected)
            .map(|c| self.weighted(&y[self.layout.infected(g, c)]))
            .sum()
    }

    fn denominator(&self, y: &[f64], g: usize) -> f64 {
        match self.options.denominator {
            Denominator::Active => self.weighted(&y[self.layout.s(g)]) + self.infected_stubs(y, g),
            Denominator::Fixed => self.mean_degree[g],
        }
    }

    fn ratio(num: f64, denom: f64) -> f64 {
        if denom > 0.0 {
            (num / denom).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// Per-class single-type hazards `Σ_l f(l,λ) L(k,l,p)`.
    fn single_hazards(&self, p: f64, lambda: f64) -> Vec<f64> {
        let l = self.layout;
        let k_max = l.k_min + l.classes - 1;
        let mut row = vec![0.0; k_max + 1];
        let escape: Vec<f64> = (0..=k_max)
            .scan(1.0, |acc, _| {
                let v = *acc;
                *acc *= 1.0 - lambda;
                Some(v)
            })
            .collect();
        (0..l.classes)
            .map(|i| {
                let k = l.degree(i);
                match self.options.approx_threshold {
                    Some(th) if (k as u64) > th && p > 0.0 && p < 1.0 => {
                        for (j, v) in row.iter_mut().enumerate().take(k + 1) {
                            *v = mixing::normal_approx_pmf(k as u64, j as u64, p).unwrap_or(0.0);
                        }
                    }
                    _ => self.ratios.fill(k, p, &mut row),
                }
                (1..=k).map(|j| (1.0 - escape[j]) * row[j]).sum()
            })
            .collect()
    }

    fn rhs_classic(&self, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let (is, ii, ir) = (l.s(0).start, l.infected(0, 0).start, l.removed(0).start);
        let (ds, drho, dr) = classic_sir_rhs(y[is], y[ii], y[ir], &self.params);
        dy[is] = ds + self.params.d * (self.initial[is] - y[is]);
        dy[ii] = drho;
        dy[ir] = dr;
        dy[l.cumulative()] = -ds;
    }

    /// Susceptible outflow and demographic replenishment shared by all models.
    fn apply_susceptible(&self, y: &[f64], dy: &mut [f64], g: usize, inflow: &[f64]) {
        let s = self.layout.s(g);
        for (i, idx) in s.enumerate() {
            dy[idx] = -inflow[i] + self.params.d * (self.initial[idx] - y[idx]);
        }
    }

    fn rhs_single_type(&self, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let p = Self::ratio(self.infected_stubs(y, 0), self.denominator(y, 0));
        let hazards = self.single_hazards(p, self.params.lambda);
        let inflow: Vec<f64> = y[l.s(0)].iter().zip(&hazards).map(|(s, h)| s * h).collect();
        self.apply_susceptible(y, dy, 0, &inflow);
        self.sir_outflow(y, dy, 0, 0, &inflow);
        dy[l.cumulative()] = inflow.iter().sum();
    }

    /// `dρ = -μρ + inflow`, `dr = μρ` for compartment `c` of group `g`.
    fn sir_outflow(&self, y: &[f64], dy: &mut [f64], g: usize, c: usize, inflow: &[f64]) {
        let l = self.layout;
        let mu = self.params.mu;
        let (inf, rem) = (l.infected(g, c), l.removed(g));
        for i in 0..l.classes {
            let rho = y[inf.start + i];
            dy[inf.start + i] += -mu * rho + inflow[i];
            dy[rem.start + i] += mu * rho;
        }
    }

    fn rhs_two_type(&self, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let table = self.table.as_ref().expect("two-type model builds a table");
        let denom = self.denominator(y, 0);
        let p1 = Self::ratio(self.weighted(&y[l.infected(0, 0)]), denom);
        let p2 = Self::ratio(self.weighted(&y[l.infected(0, 1)]), denom).min(1.0 - p1);
        let probs = LinkProbabilities::new(p1, p2).expect("clamped link probabilities");
        let (l1, l2) = (self.params.lambda, self.params.lambda2());
        let ev = table.evaluator(probs, l1, l2);
        let mut in1 = vec![0.0; l.classes];
        let mut in2 = vec![0.0; l.classes];
        let mut total = vec![0.0; l.classes];
        for i in 0..l.classes {
            let k = l.degree(i);
            let inflow = y[l.s(0).start + i] * ev.hazard(k);
            let share = match self.options.split {
                SplitRule::Fixed { type1 } => type1,
                SplitRule::Proportional => {
                    let (h1, h2) = (ev.marginal1(k), ev.marginal2(k));
                    if h1 + h2 > 0.0 {
                        h1 / (h1 + h2)
                    } else {
                        0.5
                    }
                }
            };
            total[i] = inflow;
            in1[i] = share * inflow;
            in2[i] = (1.0 - share) * inflow;
        }
        self.apply_susceptible(y, dy, 0, &total);
        self.sir_outflow(y, dy, 0, 0, &in1);
        self.sir_outflow(y, dy, 0, 1, &in2);
        dy[l.cumulative()] = total.iter().sum();
    }

    fn rhs_bipartite(&self, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let mut cum = 0.0;
        for g in 0..2 {
            let other = 1 - g;
            // Side 1 (g = 0) is infected by side 2 at λ_{2→1}, and vice versa.
            let lambda = if g == 0 { self.params.lambda2() } else { self.params.lambda };
            let p = Self::ratio(self.infected_stubs(y, other), self.denominator(y, other));
            let hazards = self.single_hazards(p, lambda);
            let inflow: Vec<f64> = y[l.s(g)].iter().zip(&hazards).map(|(s, h)| s * h).collect();
            self.apply_susceptible(y, dy, g, &inflow);
            self.sir_outflow(y, dy, g, 0, &inflow);
            cum += inflow.iter().sum::<f64>();
        }
        dy[l.cumulative()] = cum / 2.0;
    }

    fn rhs_hiv(&self, regime: usize, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let table = self.table.as_ref().expect("HIV models build a table");
        let coverage = self.options.treatment.coverage_in_regime(regime);
        let efficacy = self.params.treatment_efficacy;
        let mut cum = 0.0;
        for g in 0..l.groups {
            // MSM infects within its own group; heterosexual infection crosses sides.
            let source = if self.kind == ModelKind::HivHetero { 1 - g } else { g };
            let lambda = if self.kind == ModelKind::HivHetero && g == 0 {
                self.params.male_susceptibility * self.params.lambda
            } else {
                self.params.lambda
            };
            let denom = self.denominator(y, source);
            let stubs = self.infected_stubs(y, source);
            let p1 = Self::ratio((1.0 - coverage) * stubs, denom);
            let p2 = Self::ratio(coverage * stubs, denom).min(1.0 - p1);
            let probs = LinkProbabilities::new(p1, p2).expect("clamped link probabilities");
            let ev = table.evaluator(probs, lambda, efficacy * lambda);
            let inflow: Vec<f64> = (0..l.classes)
                .map(|i| y[l.s(g).start + i] * ev.hazard(l.degree(i)))
                .collect();
            self.apply_susceptible(y, dy, g, &inflow);
            self.stage_flows(y, dy, g, &inflow);
            cum += inflow.iter().sum::<f64>();
        }
        dy[l.cumulative()] = cum / l.groups as f64;
    }

    /// Infected stages: inflow into stage 0, progression along the chain,
    /// demographic outflow `d·I` and final-stage exit, both into removed.
    fn stage_flows(&self, y: &[f64], dy: &mut [f64], g: usize, inflow: &[f64]) {
        let l = self.layout;
        let d = self.params.d;
        let rates = &self.progression.rates;
        let rem = l.removed(g).start;
        for (c, rate) in rates.iter().enumerate() {
            let inf = l.infected(g, c).start;
            for i in 0..l.classes {
                let v = y[inf + i];
                if c == 0 {
                    dy[inf + i] += inflow[i];
                }
                dy[inf + i] -= (rate + d) * v;
                dy[rem + i] += d * v;
                if c + 1 < rates.len() {
                    dy[l.infected(g, c + 1).start + i] += rate * v;
                } else {
                    dy[rem + i] += rate * v;
                }
            }
        }
    }
}

/// Re-expresses distributions over the union of their supports.
fn align_supports(dists: &[DegreeDistribution]) -> Result<Vec<DegreeDistribution>> {
    let k_min = dists.iter().map(|d| d.k_min()).min().unwrap_or(1);
    let k_max = dists.iter().map(|d| d.k_max()).max().unwrap_or(1);
    dists
        .iter()
        .map(|d| {
            let w: Vec<f64> = (k_min..=k_max).map(|k| d.prob(k)).collect();
            DegreeDistribution::from_weights(k_min, &w)
        })
        .collect()
}
