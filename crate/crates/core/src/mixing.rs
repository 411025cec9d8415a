//! Link-count distributions and infection functions.
//!
//! A susceptible node of degree `k` under full rewiring sees each of its `k`
//! half-edges land on an infected node independently with probability `p`.
//! The number of infected neighbours is therefore binomial (one infected
//! type) or multinomial (two infected types), and the per-step infection
//! hazard is the expectation of an infection function `f` over that count.

use statrs::function::factorial::ln_factorial;

use crate::error::{check_probability, EpiError, Result};

/// Above this `N` factorials are evaluated in log space.
pub const LOG_SPACE_THRESHOLD: u64 = 30;

/// Default `N` above which [`link_count_pmf`] switches to the normal approximation.
pub const DEFAULT_APPROX_THRESHOLD: u64 = 100;

/// Largest degree for which [`MultinomialTable`] stores coefficients.
pub const MAX_TABLE_DEGREE: usize = 300;

const PROB_SLACK: f64 = 1e-12;

/// Probabilities that a random half-edge points at an infected node of type 1 or type 2.
///
/// The remainder `p3 = 1 - p1 - p2` covers every other endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbabilities {
    p1: f64,
    p2: f64,
}

impl LinkProbabilities {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(p1 >= 0.0) || !(p2 >= 0.0) {
            return Err(EpiError::domain(
                "link probabilities",
                format!("p1 and p2 must be nonnegative, got ({p1}, {p2})"),
            ));
        }
        if p1 + p2 > 1.0 + PROB_SLACK {
            return Err(EpiError::domain(
                "link probabilities",
                format!("p1 + p2 must not exceed 1, got {}", p1 + p2),
            ));
        }
        Ok(LinkProbabilities {
            p1: p1.min(1.0),
            p2: p2.min(1.0 - p1.min(1.0)),
        })
    }

    pub fn single(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p3(&self) -> f64 {
        (1.0 - self.p1 - self.p2).max(0.0)
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn choose_direct(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// `C(n,k) p^k (1-p)^(n-k)`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(EpiError::domain("k", format!("k = {k} out of [0, {n}]")));
    }
    check_probability("p", p)?;
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    if n <= LOG_SPACE_THRESHOLD {
        Ok(choose_direct(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
    } else {
        let ln = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
        Ok(ln.exp())
    }
}

/// Whole binomial row `[L(n,0,p), ..., L(n,n,p)]`.
///
/// Anchored at the mode in log space and filled outward by the ratio
/// recurrence, so large `n` neither overflows nor loses the bulk of the mass.
pub fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    binomial_row_into(n, p, &mut row);
    row
}

pub(crate) fn binomial_row_into(n: usize, p: f64, row: &mut [f64]) {
    fill_row(n, p, row, |j| (n - j) as f64 / (j + 1) as f64, |j| j as f64 / (n - j + 1) as f64);
}

fn fill_row(n: usize, p: f64, row: &mut [f64], up_factor: impl Fn(usize) -> f64, down_factor: impl Fn(usize) -> f64) {
    debug_assert!(row.len() > n);
    row[..=n].iter_mut().for_each(|x| *x = 0.0);
    if p <= 0.0 {
        row[0] = 1.0;
        return;
    }
    if p >= 1.0 {
        row[n] = 1.0;
        return;
    }
    let q = 1.0 - p;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    row[mode] = binomial_pmf(n as u64, mode as u64, p).unwrap_or(0.0);
    let up = p / q;
    for j in mode..n {
        row[j + 1] = row[j] * up_factor(j) * up;
    }
    let down = q / p;
    for j in (1..=mode).rev() {
        row[j - 1] = row[j] * down_factor(j) * down;
    }
}

/// Precomputed recurrence factors `(n-j)/(j+1)` and `j/(n-j+1)` for every
/// `n <= k_max`, so repeated rows avoid divisions.
#[derive(Debug, Clone)]
pub(crate) struct RatioTable {
    up: Vec<Vec<f64>>,
    down: Vec<Vec<f64>>,
}

impl RatioTable {
    pub(crate) fn new(k_max: usize) -> Self {
        let up = (0..=k_max)
            .map(|n| (0..n).map(|j| (n - j) as f64 / (j + 1) as f64).collect())
            .collect();
        let down = (0..=k_max)
            .map(|n| (0..=n).map(|j| j as f64 / (n - j + 1) as f64).collect())
            .collect();
        RatioTable { up, down }
    }

    pub(crate) fn fill(&self, n: usize, p: f64, row: &mut [f64]) {
        let (up, down) = (&self.up[n], &self.down[n]);
        fill_row(n, p, row, |j| up[j], |j| down[j]);
    }
}

/// De Moivre–Laplace: Gaussian density with mean `np` and variance `np(1-p)`
/// evaluated at `k` (midpoint of the unit bin around `k`).
pub fn normal_approx_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(EpiError::domain("N", "normal approximation needs N >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(EpiError::domain(
            "p",
            format!("normal approximation needs 0 < p < 1, got {p}"),
        ));
    }
    let mean = n as f64 * p;
    let var = mean * (1.0 - p);
    let z = k as f64 - mean;
    Ok((-z * z / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
}

/// Exact binomial for `n <= threshold`, normal approximation above it.
///
/// The approximation is only used when `0 < p < 1`; degenerate `p` always
/// falls back to the exact mass.
pub fn link_count_pmf(n: u64, k: u64, p: f64, threshold: u64) -> Result<f64> {
    if k > n {
        return Err(EpiError::domain("k", format!("k = {k} out of [0, {n}]")));
    }
    check_probability("p", p)?;
    if n <= threshold || p == 0.0 || p == 1.0 {
        binomial_pmf(n, k, p)
    } else {
        normal_approx_pmf(n, k, p)
    }
}

/// `k!/(k1! k2! k3!) p1^k1 p2^k2 p3^k3` with `k3 = k - k1 - k2`.
pub fn multinomial_pmf(k: u64, k1: u64, k2: u64, probs: LinkProbabilities) -> Result<f64> {
    if k1 + k2 > k {
        return Err(EpiError::domain(
            "k1 + k2",
            format!("k1 + k2 = {} exceeds k = {k}", k1 + k2),
        ));
    }
    let k3 = k - k1 - k2;
    let (p1, p2, p3) = (probs.p1(), probs.p2(), probs.p3());
    // 0^0 = 1; a zero probability with a positive count kills the term.
    if (p1 == 0.0 && k1 > 0) || (p2 == 0.0 && k2 > 0) || (p3 == 0.0 && k3 > 0) {
        return Ok(0.0);
    }
    if k <= LOG_SPACE_THRESHOLD {
        let coef = choose_direct(k, k1) * choose_direct(k - k1, k2);
        Ok(coef * p1.powi(k1 as i32) * p2.powi(k2 as i32) * p3.powi(k3 as i32))
    } else {
        let term = |n: u64, p: f64| if n == 0 { 0.0 } else { n as f64 * p.ln() };
        let ln = ln_factorial(k) - ln_factorial(k1) - ln_factorial(k2) - ln_factorial(k3)
            + term(k1, p1)
            + term(k2, p2)
            + term(k3, p3);
        Ok(ln.exp())
    }
}

/// `f(l, λ) = 1 - (1-λ)^l`: chance that at least one of `l` infected contacts transmits.
pub fn infection_prob_single(l: u64, lambda: f64) -> f64 {
    1.0 - (1.0 - lambda).powi(l as i32)
}

/// `f(k1, k2, λ1, λ2) = 1 - (1-λ1)^k1 (1-λ2)^k2`.
pub fn infection_prob_two(k1: u64, k2: u64, lambda1: f64, lambda2: f64) -> f64 {
    1.0 - (1.0 - lambda1).powi(k1 as i32) * (1.0 - lambda2).powi(k2 as i32)
}

/// `Σ_{l=1}^{k} f(l) L(k, l, p)` for an arbitrary infection function `f`.
pub fn hazard_with<F: Fn(u64) -> f64>(k: usize, p: f64, f: F) -> f64 {
    let row = binomial_row(k, p);
    row.iter()
        .enumerate()
        .skip(1)
        .map(|(l, w)| f(l as u64) * w)
        .sum()
}

/// Per-step infection probability of a degree-`k` susceptible with one infected type.
pub fn infection_hazard(k: usize, p: f64, lambda: f64) -> f64 {
    hazard_with(k, p, |l| infection_prob_single(l, lambda))
}

/// Two-type hazard by direct enumeration of the multinomial.
///
/// Includes the single-group terms `(k1 >= 1, k2 = 0)` and `(k1 = 0, k2 >= 1)`.
pub fn infection_hazard_two(
    k: usize,
    probs: LinkProbabilities,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let k = k as u64;
    let mut acc = 0.0;
    for k1 in 0..=k {
        for k2 in 0..=(k - k1) {
            if k1 + k2 == 0 {
                continue;
            }
            let l = multinomial_pmf(k, k1, k2, probs).unwrap_or(0.0);
            acc += infection_prob_two(k1, k2, lambda1, lambda2) * l;
        }
    }
    acc
}

/// Cached multinomial coefficients `k!/(k1! k2! k3!)` for all `k <= k_max`.
///
/// Built once and shared read-only; evaluation then only needs power tables
/// of `p1, p2, p3`, which are computed once per link-probability triple.
#[derive(Debug, Clone)]
pub struct MultinomialTable {
    k_max: usize,
    offsets: Vec<usize>,
    coef: Vec<f64>,
}

impl MultinomialTable {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max > MAX_TABLE_DEGREE {
            return Err(EpiError::domain(
                "k_max",
                format!("multinomial tables support k_max <= {MAX_TABLE_DEGREE}, got {k_max}"),
            ));
        }
        let mut offsets = Vec::with_capacity(k_max + 2);
        let mut coef = Vec::new();
        for k in 0..=k_max {
            offsets.push(coef.len());
            for k1 in 0..=k {
                for k2 in 0..=(k - k1) {
                    let (k, k1, k2) = (k as u64, k1 as u64, k2 as u64);
                    let c = if k <= LOG_SPACE_THRESHOLD {
                        choose_direct(k, k1) * choose_direct(k - k1, k2)
                    } else {
                        (ln_factorial(k)
                            - ln_factorial(k1)
                            - ln_factorial(k2)
                            - ln_factorial(k - k1 - k2))
                        .exp()
                    };
                    coef.push(c);
                }
            }
        }
        offsets.push(coef.len());
        Ok(MultinomialTable { k_max, offsets, coef })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Coefficient row for degree `k`, laid out by `k1` then `k2`.
    fn row(&self, k: usize) -> &[f64] {
        &self.coef[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn coefficient(&self, k: usize, k1: usize, k2: usize) -> f64 {
        assert!(k1 + k2 <= k && k <= self.k_max);
        // Entries before k1 form rows of length k+1, k, ..., k-k1+2.
        let before: usize = (0..k1).map(|j| k - j + 1).sum();
        self.row(k)[before + k2]
    }

    /// Prepares power tables for one evaluation point.
    pub fn evaluator(
        &self,
        probs: LinkProbabilities,
        lambda1: f64,
        lambda2: f64,
    ) -> TwoTypeHazard<'_> {
        let n = self.k_max + 1;
        let powers = |x: f64| {
            let mut v = Vec::with_capacity(n);
            let mut acc = 1.0;
            for _ in 0..n {
                v.push(acc);
                acc *= x;
            }
            v
        };
        TwoTypeHazard {
            table: self,
            p1: powers(probs.p1()),
            p2: powers(probs.p2()),
            p3: powers(probs.p3()),
            escape1: powers(1.0 - lambda1),
            escape2: powers(1.0 - lambda2),
        }
    }
}

/// Two-type hazard evaluator bound to one `(p1, p2, λ1, λ2)`.
pub struct TwoTypeHazard<'a> {
    table: &'a MultinomialTable,
    p1: Vec<f64>,
    p2: Vec<f64>,
    p3: Vec<f64>,
    escape1: Vec<f64>,
    escape2: Vec<f64>,
}

impl TwoTypeHazard<'_> {
    /// `Σ_{1 <= k1+k2 <= k} f(k1,k2,λ1,λ2) L(k,k1,k2,p1,p2)` from cached coefficients.
    pub fn hazard(&self, k: usize) -> f64 {
        let row = self.table.row(k);
        let mut idx = 0;
        let mut acc = 0.0;
        for k1 in 0..=k {
            let a = self.p1[k1];
            let e1 = self.escape1[k1];
            for k2 in 0..=(k - k1) {
                if k1 + k2 > 0 && a != 0.0 {
                    let l = row[idx] * a * self.p2[k2] * self.p3[k - k1 - k2];
                    acc += (1.0 - e1 * self.escape2[k2]) * l;
                }
                idx += 1;
            }
        }
        acc
    }

    /// Hazard contributed by type-1 contacts alone, `Σ_l f(l,λ1) L(k,l,p1)`.
    pub fn marginal1(&self, k: usize) -> f64 {
        hazard_with(k, self.p1[1], |l| 1.0 - self.escape1[l as usize])
    }

    /// Hazard contributed by type-2 contacts alone.
    pub fn marginal2(&self, k: usize) -> f64 {
        hazard_with(k, self.p2[1], |l| 1.0 - self.escape2[l as usize])
    }
}
