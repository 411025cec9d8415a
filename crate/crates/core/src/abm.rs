//! Agent-based Monte-Carlo simulation on configuration-model networks.
//!
//! Each step: susceptibles are infected against the start-of-step state,
//! infected nodes are removed with probability `μ`, removed nodes leave the
//! network, removed nodes may be re-added as susceptibles at rate `d`, and
//! (with full rewiring) a fresh random network is drawn over the surviving
//! nodes. Node degrees are drawn once and kept across rewirings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree_dist::DegreeDistribution;
use crate::error::{EpiError, Result};
use crate::ode::{EpidemicParams, Layout, TreatmentSchedule, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Susceptible,
    Infected,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rewire {
    #[default]
    Full,
    None,
}

/// A network snapshot: per-node target degrees, realized adjacency, node states.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub degrees: Vec<usize>,
    offsets: Vec<usize>,
    lengths: Vec<usize>,
    neighbors: Vec<u32>,
    pub node_state: Vec<NodeState>,
}

impl NetworkRealization {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v] + self.lengths[v]]
    }

    pub fn realized_degree(&self, v: usize) -> usize {
        self.lengths[v]
    }

    pub fn edge_count(&self) -> usize {
        self.lengths.iter().sum::<usize>() / 2
    }

    /// Re-pairs the stubs of every node for which `active` holds.
    fn rewire<R: Rng + ?Sized>(&mut self, active: impl Fn(usize) -> bool, rng: &mut R, stubs: &mut Vec<u32>) {
        stubs.clear();
        for (v, &k) in self.degrees.iter().enumerate() {
            self.lengths[v] = 0;
            if active(v) {
                stubs.extend(std::iter::repeat_n(v as u32, k));
            }
        }
        stubs.shuffle(rng);
        // An odd stub count leaves the last stub unpaired.
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0] as usize, pair[1] as usize);
            if a == b {
                continue;
            }
            self.neighbors[self.offsets[a] + self.lengths[a]] = b as u32;
            self.lengths[a] += 1;
            self.neighbors[self.offsets[b] + self.lengths[b]] = a as u32;
            self.lengths[b] += 1;
        }
        // Erase multi-edges.
        for v in 0..self.degrees.len() {
            let len = self.lengths[v];
            if len < 2 {
                continue;
            }
            let slice = &mut self.neighbors[self.offsets[v]..self.offsets[v] + len];
            slice.sort_unstable();
            let mut w = 1;
            for r in 1..len {
                if slice[r] != slice[w - 1] {
                    slice[w] = slice[r];
                    w += 1;
                }
            }
            self.lengths[v] = w;
        }
    }
}

/// Configuration-model network on `n` nodes with degrees drawn from `dist`.
///
/// Self-loops and multi-edges are discarded, so realized degrees can fall
/// short of the targets. All nodes start susceptible.
pub fn generate_network<R: Rng + ?Sized>(
    dist: &DegreeDistribution,
    n: usize,
    rng: &mut R,
) -> Result<NetworkRealization> {
    if n < 2 {
        return Err(EpiError::domain("n", format!("network needs at least 2 nodes, got {n}")));
    }
    let degrees: Vec<usize> = (0..n).map(|_| dist.sample_degree(rng)).collect();
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for k in &degrees {
        offsets.push(acc);
        acc += k;
    }
    let mut net = NetworkRealization {
        degrees,
        offsets,
        lengths: vec![0; n],
        neighbors: vec![0; acc],
        node_state: vec![NodeState::Susceptible; n],
    };
    let mut stubs = Vec::with_capacity(acc);
    net.rewire(|_| true, rng, &mut stubs);
    Ok(net)
}

/// Everything needed to run one simulated epidemic.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub dist: DegreeDistribution,
    pub n: usize,
    pub params: EpidemicParams,
    pub steps: usize,
    pub rewire: Rewire,
    /// Fraction of infected nodes treated at each step (step index is time).
    pub treatment: TreatmentSchedule,
}

impl SimulationSpec {
    pub fn new(dist: DegreeDistribution, n: usize, params: EpidemicParams, steps: usize) -> Self {
        SimulationSpec {
            dist,
            n,
            params,
            steps,
            rewire: Rewire::Full,
            treatment: TreatmentSchedule::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n < 2 {
            return Err(EpiError::domain("abm.n", "n must be at least 2"));
        }
        if self.steps < 1 {
            return Err(EpiError::domain("abm.steps", "steps must be at least 1"));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout {
            k_min: self.dist.k_min(),
            classes: self.dist.len(),
            groups: 1,
            infected: 1,
        }
    }
}

/// One simulated epidemic with per-step fractions.
///
/// The returned trajectory's `states` hold per-degree fractions of the whole
/// population; `derivatives` is empty.
pub fn simulate_epidemic<R: Rng + ?Sized>(spec: &SimulationSpec, rng: &mut R) -> Result<Trajectory> {
    spec.validate()?;
    let n = spec.n;
    let layout = spec.layout();
    let mut net = generate_network(&spec.dist, n, rng)?;

    let seeds = ((spec.params.rho0 * n as f64).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.partial_shuffle(rng, seeds);
    for &v in &order[..seeds] {
        net.node_state[v] = NodeState::Infected;
    }

    let mut scratch = StepScratch::new(n);
    let mut traj = Trajectory {
        layout,
        times: Vec::with_capacity(spec.steps + 1),
        states: Vec::with_capacity(spec.steps + 1),
        derivatives: Vec::new(),
        susceptible: Vec::with_capacity(spec.steps + 1),
        prevalence: Vec::with_capacity(spec.steps + 1),
        removed: Vec::with_capacity(spec.steps + 1),
        incidence: Vec::with_capacity(spec.steps + 1),
    };
    record(&mut traj, &net, &layout, 0.0, 0);
    for step in 0..spec.steps {
        let new_infections = advance(&mut net, spec, step, rng, &mut scratch);
        record(&mut traj, &net, &layout, (step + 1) as f64, new_infections);
    }
    Ok(traj)
}

struct StepScratch {
    stubs: Vec<u32>,
    treated: Vec<bool>,
    newly: Vec<usize>,
}

impl StepScratch {
    fn new(n: usize) -> Self {
        StepScratch {
            stubs: Vec::new(),
            treated: vec![false; n],
            newly: Vec::new(),
        }
    }
}

/// One synchronous step; returns the number of new infections.
fn advance<R: Rng + ?Sized>(
    net: &mut NetworkRealization,
    spec: &SimulationSpec,
    step: usize,
    rng: &mut R,
    scratch: &mut StepScratch,
) -> usize {
    let n = net.n();
    let lambda = spec.params.lambda;
    let treated_lambda = lambda * spec.params.treatment_efficacy;
    let coverage = spec.treatment.coverage_at(step as f64);
    let treated = &mut scratch.treated;
    if coverage > 0.0 {
        for v in 0..n {
            treated[v] = net.node_state[v] == NodeState::Infected && rng.random::<f64>() < coverage;
        }
    } else {
        treated.iter_mut().for_each(|t| *t = false);
    }

    // (a) infection against the start-of-step state
    let newly = &mut scratch.newly;
    newly.clear();
    for v in 0..n {
        if net.node_state[v] != NodeState::Susceptible {
            continue;
        }
        let mut escape = 1.0;
        for &u in net.neighbors(v) {
            let u = u as usize;
            if net.node_state[u] == NodeState::Infected {
                escape *= 1.0 - if treated[u] { treated_lambda } else { lambda };
            }
        }
        if escape < 1.0 && rng.random::<f64>() >= escape {
            newly.push(v);
        }
    }
    // (b) removal of nodes infected at the start of the step
    for v in 0..n {
        if net.node_state[v] == NodeState::Infected && rng.random::<f64>() < spec.params.mu {
            net.node_state[v] = NodeState::Removed;
        }
    }
    for &v in newly.iter() {
        net.node_state[v] = NodeState::Infected;
    }
    // (d) demographic re-addition
    if spec.params.d > 0.0 {
        for v in 0..n {
            if net.node_state[v] == NodeState::Removed && rng.random::<f64>() < spec.params.d {
                net.node_state[v] = NodeState::Susceptible;
            }
        }
    }
    // (c, e) removed nodes drop out; survivors are rewired
    if spec.rewire == Rewire::Full {
        let states = std::mem::take(&mut net.node_state);
        net.rewire(|v| states[v] != NodeState::Removed, rng, &mut scratch.stubs);
        net.node_state = states;
    }
    newly.len()
}

fn record(traj: &mut Trajectory, net: &NetworkRealization, layout: &Layout, t: f64, new_infections: usize) {
    let n = net.n() as f64;
    let mut y = vec![0.0; layout.dim()];
    let (s_off, i_off, r_off) = (layout.s(0).start, layout.infected(0, 0).start, layout.removed(0).start);
    let mut counts = [0usize; 3];
    for (v, st) in net.node_state.iter().enumerate() {
        let class = net.degrees[v] - layout.k_min;
        let (slot, c) = match st {
            NodeState::Susceptible => (s_off, 0),
            NodeState::Infected => (i_off, 1),
            NodeState::Removed => (r_off, 2),
        };
        y[slot + class] += 1.0 / n;
        counts[c] += 1;
    }
    traj.times.push(t);
    traj.states.push(y);
    traj.susceptible.push(counts[0] as f64 / n);
    traj.prevalence.push(counts[1] as f64 / n);
    traj.removed.push(counts[2] as f64 / n);
    traj.incidence.push(new_infections as f64 / n);
}

/// Seed of replica `r`, mixed from the base seed (SplitMix64 finalizer).
pub fn replica_seed(base_seed: u64, replica: u64) -> u64 {
    let mut z = base_seed ^ replica.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-time mean / variance / standard error of one observable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub se: Vec<f64>,
}

impl SeriesStats {
    fn from_columns(series: &[&[f64]]) -> Self {
        let r = series.len() as f64;
        let len = series[0].len();
        let mut out = SeriesStats::default();
        for t in 0..len {
            let mean = series.iter().map(|s| s[t]).sum::<f64>() / r;
            let var = series.iter().map(|s| (s[t] - mean).powi(2)).sum::<f64>() / (r - 1.0);
            out.mean.push(mean);
            out.variance.push(var);
            out.se.push((var / r).sqrt());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub prevalence: SeriesStats,
    pub incidence: SeriesStats,
    pub susceptible: SeriesStats,
    pub replicas: usize,
}

/// Runs `replicas` independent simulations seeded from `base_seed`.
pub fn run_ensemble(spec: &SimulationSpec, replicas: usize, base_seed: u64) -> Result<EnsembleSummary> {
    let seeds: Vec<u64> = (0..replicas as u64).map(|r| replica_seed(base_seed, r)).collect();
    run_ensemble_with_seeds(spec, &seeds)
}

/// Ensemble over explicit per-replica seeds, summarized in seed order.
pub fn run_ensemble_with_seeds(spec: &SimulationSpec, seeds: &[u64]) -> Result<EnsembleSummary> {
    if seeds.len() < 2 {
        return Err(EpiError::domain("replicas", "an ensemble needs at least 2 replicas"));
    }
    let runs: Vec<Trajectory> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_epidemic(spec, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&runs))
}

/// Summary statistics over already simulated runs (time grids must agree).
pub fn summarize(runs: &[Trajectory]) -> EnsembleSummary {
    let col = |f: fn(&Trajectory) -> &[f64]| SeriesStats::from_columns(&runs.iter().map(f).collect::<Vec<_>>());
    EnsembleSummary {
        times: runs[0].times.clone(),
        prevalence: col(|t| &t.prevalence),
        incidence: col(|t| &t.incidence),
        susceptible: col(|t| &t.susceptible),
        replicas: runs.len(),
    }
}
