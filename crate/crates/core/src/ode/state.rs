use crate::error::{EpiError, Result};

/// Shape of the flat state vector.
///
/// Per group: `s` (one entry per degree class), then each infected
/// compartment, then per-degree removed. A single trailing slot carries
/// cumulative incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub k_min: usize,
    pub classes: usize,
    pub groups: usize,
    pub infected: usize,
}

impl Layout {
    pub fn group_len(&self) -> usize {
        self.classes * (self.infected + 2)
    }

    /// Length of the flat vector, including the cumulative-incidence slot.
    pub fn dim(&self) -> usize {
        self.groups * self.group_len() + 1
    }

    pub fn s(&self, g: usize) -> std::ops::Range<usize> {
        let base = g * self.group_len();
        base..base + self.classes
    }

    pub fn infected(&self, g: usize, c: usize) -> std::ops::Range<usize> {
        let base = g * self.group_len() + (1 + c) * self.classes;
        base..base + self.classes
    }

    pub fn removed(&self, g: usize) -> std::ops::Range<usize> {
        let base = g * self.group_len() + (1 + self.infected) * self.classes;
        base..base + self.classes
    }

    pub fn cumulative(&self) -> usize {
        self.groups * self.group_len()
    }

    pub fn degree(&self, class: usize) -> usize {
        self.k_min + class
    }

    pub fn class_of(&self, k: usize) -> Option<usize> {
        (k >= self.k_min && k < self.k_min + self.classes).then(|| k - self.k_min)
    }
}

/// One population's compartments, indexed by degree class.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupState {
    pub s: Vec<f64>,
    /// `infected[c][class]`: infected type or disease stage `c`.
    pub infected: Vec<Vec<f64>>,
    /// Per-degree removed fraction.
    pub removed: Vec<f64>,
}

impl GroupState {
    /// Total infected in each degree class across compartments.
    pub fn infected_by_class(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.s.len()];
        for comp in &self.infected {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += v;
            }
        }
        out
    }

    pub fn total_s(&self) -> f64 {
        self.s.iter().sum()
    }

    pub fn total_infected(&self) -> f64 {
        self.infected.iter().flatten().sum()
    }

    pub fn total_removed(&self) -> f64 {
        self.removed.iter().sum()
    }
}

/// Per-degree susceptible/infected/removed fractions of every population.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedState {
    pub k_min: usize,
    pub groups: Vec<GroupState>,
}

impl StratifiedState {
    pub fn from_flat(layout: &Layout, y: &[f64]) -> Self {
        let groups = (0..layout.groups)
            .map(|g| GroupState {
                s: y[layout.s(g)].to_vec(),
                infected: (0..layout.infected)
                    .map(|c| y[layout.infected(g, c)].to_vec())
                    .collect(),
                removed: y[layout.removed(g)].to_vec(),
            })
            .collect();
        StratifiedState {
            k_min: layout.k_min,
            groups,
        }
    }

    pub fn to_flat(&self, layout: &Layout) -> Result<Vec<f64>> {
        self.check_layout(layout)?;
        let mut y = vec![0.0; layout.dim()];
        for (g, grp) in self.groups.iter().enumerate() {
            y[layout.s(g)].copy_from_slice(&grp.s);
            for (c, comp) in grp.infected.iter().enumerate() {
                y[layout.infected(g, c)].copy_from_slice(comp);
            }
            y[layout.removed(g)].copy_from_slice(&grp.removed);
        }
        Ok(y)
    }

    pub fn check_layout(&self, layout: &Layout) -> Result<()> {
        if self.k_min != layout.k_min || self.groups.len() != layout.groups {
            return Err(EpiError::Shape(format!(
                "state has k_min {} and {} groups; model expects k_min {} and {} groups",
                self.k_min,
                self.groups.len(),
                layout.k_min,
                layout.groups
            )));
        }
        for (g, grp) in self.groups.iter().enumerate() {
            let ok = grp.s.len() == layout.classes
                && grp.removed.len() == layout.classes
                && grp.infected.len() == layout.infected
                && grp.infected.iter().all(|c| c.len() == layout.classes);
            if !ok {
                return Err(EpiError::Shape(format!(
                    "group {g} does not match the model's degree support ({} classes, {} infected compartments)",
                    layout.classes, layout.infected
                )));
            }
        }
        Ok(())
    }

    /// Population-averaged totals `(s, infected, removed)`.
    pub fn totals(&self) -> (f64, f64, f64) {
        let n = self.groups.len() as f64;
        let mut acc = (0.0, 0.0, 0.0);
        for g in &self.groups {
            acc.0 += g.total_s();
            acc.1 += g.total_infected();
            acc.2 += g.total_removed();
        }
        (acc.0 / n, acc.1 / n, acc.2 / n)
    }

    /// Copy with small negative integration artefacts clamped to zero.
    pub fn clamped(&self) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            g.s.iter_mut()
                .chain(g.infected.iter_mut().flatten())
                .chain(g.removed.iter_mut())
                .for_each(|v| *v = v.max(0.0));
        }
        out
    }
}

/// Time series of states and aggregate observables.
///
/// Aggregates are averaged over populations so `s + i + r = 1` without
/// demography. `incidence[n]` is the new-infection rate over the step
/// ending at `times[n]`; `incidence[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub layout: Layout,
    pub times: Vec<f64>,
    /// Flat state vectors (see [`Layout`]), aligned with `times`.
    pub states: Vec<Vec<f64>>,
    /// Right-hand side evaluated at each recorded state; empty for simulations.
    pub derivatives: Vec<Vec<f64>>,
    pub susceptible: Vec<f64>,
    pub prevalence: Vec<f64>,
    pub removed: Vec<f64>,
    pub incidence: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> StratifiedState {
        StratifiedState::from_flat(&self.layout, &self.states[i])
    }

    /// Index and value of the prevalence maximum.
    pub fn peak_prevalence(&self) -> (usize, f64) {
        self.prevalence
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    /// `1 - s` at the final time.
    pub fn final_size(&self) -> f64 {
        self.susceptible.last().map_or(0.0, |s| 1.0 - s)
    }

    /// Sum of infected compartments for degree `k` in group `g` over time.
    pub fn infected_series(&self, g: usize, k: usize) -> Option<Vec<f64>> {
        let class = self.layout.class_of(k)?;
        Some(
            self.states
                .iter()
                .map(|y| {
                    (0..self.layout.infected)
                        .map(|c| y[self.layout.infected(g, c).start + class])
                        .sum()
                })
                .collect(),
        )
    }
}
