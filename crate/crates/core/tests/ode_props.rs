use netepi::analysis::{phase_series, PhaseVariant};
use netepi::ode::{
    integrate, integrate_model, Denominator, EpidemicParams, IntegrationSpec, Method, ModelKind, ModelOptions,
    NetworkModel, Progression, SplitRule, StratifiedState, Trajectory, TreatmentEpoch, TreatmentSchedule,
};
use netepi::DegreeDistribution;
use proptest::prelude::*;

const ALL: [ModelKind; 6] = [
    ModelKind::Classic,
    ModelKind::Stratified,
    ModelKind::TwoType,
    ModelKind::Bipartite,
    ModelKind::HivMsm,
    ModelKind::HivHetero,
];

fn power_law(gamma: f64, k_max: usize) -> DegreeDistribution {
    DegreeDistribution::truncated_power_law(gamma, 1, k_max).unwrap()
}

fn rk4(t1: f64, dt: f64) -> IntegrationSpec {
    IntegrationSpec::new(0.0, t1, dt, Method::Rk4)
}

fn hiv_options() -> ModelOptions {
    ModelOptions {
        treatment: TreatmentSchedule::new(vec![
            TreatmentEpoch { time: 10.0, coverage: 0.3 },
            TreatmentEpoch { time: 25.0, coverage: 0.7 },
        ])
        .unwrap(),
        progression: Some(Progression { rates: vec![0.3, 0.1, 0.2] }),
        ..Default::default()
    }
}

fn model(kind: ModelKind, params: EpidemicParams) -> NetworkModel {
    let options = match kind {
        ModelKind::HivMsm | ModelKind::HivHetero => hiv_options(),
        _ => ModelOptions::default(),
    };
    let dists = match kind {
        ModelKind::Bipartite | ModelKind::HivHetero => vec![power_law(2.5, 25), power_law(2.8, 25)],
        _ => vec![power_law(2.5, 25)],
    };
    NetworkModel::new(kind, params.with_lambda2(0.07), options, &dists).unwrap()
}

/// Totals per group at every recorded point.
fn group_totals(traj: &Trajectory) -> Vec<Vec<f64>> {
    (0..traj.len())
        .map(|n| traj.state(n).groups.iter().map(|g| g.total_s() + g.total_infected() + g.total_removed()).collect())
        .collect()
}

#[test]
fn conservation_all_models() {
    for kind in ALL {
        let traj = integrate_model(&model(kind, EpidemicParams::new(0.2, 0.05, 0.02)), &rk4(50.0, 0.1)).unwrap();
        for totals in group_totals(&traj) {
            for t in totals {
                assert!((t - 1.0).abs() <= 1e-8, "{}: total {t}", kind.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_monotonicity(kind_ix in 0usize..6, lambda in 0.0f64..=1.0, mu in 0.0f64..=1.0, rho0 in 0.001f64..0.5) {
        let kind = ALL[kind_ix];
        let traj = integrate_model(&model(kind, EpidemicParams::new(lambda, mu, rho0)), &rk4(30.0, 0.1)).unwrap();
        for totals in group_totals(&traj) {
            for t in totals {
                prop_assert!((t - 1.0).abs() <= 1e-8);
            }
        }
        for n in 1..traj.len() {
            let (a, b) = (traj.state(n - 1), traj.state(n));
            for (ga, gb) in a.groups.iter().zip(&b.groups) {
                for (sa, sb) in ga.s.iter().zip(&gb.s) {
                    prop_assert!(sb <= sa);
                }
                prop_assert!(gb.total_removed() >= ga.total_removed() - 1e-15);
            }
        }
    }
}

/// Independent RK4 of `s' = -λsρ, ρ' = λsρ - μρ, r' = μρ`.
fn classic_oracle(lambda: f64, mu: f64, rho0: f64, t1: f64, dt: f64) -> Vec<[f64; 3]> {
    let f = |y: [f64; 3]| {
        let inf = lambda * y[0] * y[1];
        [-inf, inf - mu * y[1], mu * y[1]]
    };
    let mut y = [1.0 - rho0, rho0, 0.0];
    let steps = (t1 / dt).round() as usize;
    let mut out = vec![y];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(std::array::from_fn(|i| y[i] + 0.5 * dt * k1[i]));
        let k3 = f(std::array::from_fn(|i| y[i] + 0.5 * dt * k2[i]));
        let k4 = f(std::array::from_fn(|i| y[i] + dt * k3[i]));
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        out.push(y);
    }
    out
}

#[test]
fn single_class_reduces_to_classic_sir() {
    let options = ModelOptions { denominator: Denominator::Fixed, ..Default::default() };
    for (lambda, mu, rho0) in [(0.3, 0.1, 0.01), (0.9, 0.2, 0.001), (0.05, 0.5, 0.3)] {
        let params = EpidemicParams::new(lambda, mu, rho0);
        let strat = NetworkModel::new(
            ModelKind::Stratified,
            params.clone(),
            options.clone(),
            &[DegreeDistribution::single(1).unwrap()],
        )
        .unwrap();
        let classic = NetworkModel::new(ModelKind::Classic, params, ModelOptions::default(), &[]).unwrap();
        let a = integrate_model(&strat, &rk4(200.0, 0.1)).unwrap();
        let b = integrate_model(&classic, &rk4(200.0, 0.1)).unwrap();
        let oracle = classic_oracle(lambda, mu, rho0, 200.0, 0.1);
        assert_eq!(a.len(), oracle.len());
        for n in 0..a.len() {
            let (sa, sb) = (&a.states[n], &b.states[n]);
            for i in 0..3 {
                assert!((sa[i] - sb[i]).abs() <= 1e-10);
                assert!((sa[i] - oracle[n][i]).abs() <= 1e-10, "t={} component {i}", a.times[n]);
            }
        }
    }
}

#[test]
fn two_type_with_equal_rates_collapses() {
    let dist = power_law(2.5, 30);
    let params = EpidemicParams::new(0.12, 0.05, 0.02);
    let single = NetworkModel::new(ModelKind::Stratified, params.clone(), ModelOptions::default(), &[dist.clone()]).unwrap();
    for split in [SplitRule::Proportional, SplitRule::Fixed { type1: 0.3 }] {
        let options = ModelOptions { split, initial_type1_share: 0.4, ..Default::default() };
        let two = NetworkModel::new(ModelKind::TwoType, params.clone().with_lambda2(0.12), options, &[dist.clone()]).unwrap();
        let a = integrate_model(&single, &rk4(100.0, 0.1)).unwrap();
        let b = integrate_model(&two, &rk4(100.0, 0.1)).unwrap();
        for n in 0..a.len() {
            assert!((a.prevalence[n] - b.prevalence[n]).abs() <= 1e-8);
            assert!((a.susceptible[n] - b.susceptible[n]).abs() <= 1e-8);
        }
    }
}

#[test]
fn symmetric_bipartite_sides_agree() {
    let dist = power_law(2.5, 30);
    let m = NetworkModel::new(
        ModelKind::Bipartite,
        EpidemicParams::new(0.1, 0.05, 0.01).with_lambda2(0.1),
        ModelOptions::default(),
        &[dist.clone(), dist],
    )
    .unwrap();
    let traj = integrate_model(&m, &rk4(200.0, 0.1)).unwrap();
    let l = traj.layout;
    for y in &traj.states {
        let (a, b) = (&y[l.s(0).start..l.removed(0).end], &y[l.s(1).start..l.removed(1).end]);
        for (x, z) in a.iter().zip(b) {
            assert!((x - z).abs() <= 1e-10);
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let m = NetworkModel::new(
        ModelKind::Stratified,
        EpidemicParams::new(0.1, 0.05, 0.01),
        ModelOptions::default(),
        &[power_law(2.5, 30)],
    )
    .unwrap();
    let at_end = |dt: f64| integrate_model(&m, &rk4(40.0, dt)).unwrap().states.last().unwrap().clone();
    let reference = at_end(0.5 / 8.0);
    let err = |dt: f64| {
        at_end(dt).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = err(1.0) / err(0.5);
    assert!((12.0..20.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn step_halving_changes_little() {
    let m = NetworkModel::new(
        ModelKind::Stratified,
        EpidemicParams::new(0.05, 0.05, 0.01),
        ModelOptions::default(),
        &[power_law(3.0, 60)],
    )
    .unwrap();
    let a = integrate_model(&m, &rk4(200.0, 0.1)).unwrap();
    let b = integrate_model(&m, &rk4(200.0, 0.05)).unwrap();
    for (n, t) in a.times.iter().enumerate() {
        let j = b.times.iter().position(|u| (u - t).abs() < 1e-9).unwrap();
        assert!((a.prevalence[n] - b.prevalence[j]).abs() <= 1e-6);
    }
}

#[test]
fn no_transmission_keeps_susceptibles_fixed() {
    for kind in ALL {
        let traj = integrate_model(&model(kind, EpidemicParams::new(0.0, 0.1, 0.05)), &rk4(60.0, 0.1)).unwrap();
        // Only the (λ2) side of two-population models may still transmit.
        if matches!(kind, ModelKind::TwoType | ModelKind::Bipartite) {
            continue;
        }
        let s0 = traj.state(0);
        for n in 0..traj.len() {
            for (g0, g) in s0.groups.iter().zip(&traj.state(n).groups) {
                for (a, b) in g0.s.iter().zip(&g.s) {
                    assert!((a - b).abs() <= 1e-12, "{}", kind.name());
                }
            }
        }
    }
}

#[test]
fn subcritical_classic_prevalence_decreases() {
    let m = NetworkModel::new(ModelKind::Classic, EpidemicParams::new(0.05, 0.2, 0.1), ModelOptions::default(), &[])
        .unwrap();
    let traj = integrate_model(&m, &rk4(100.0, 0.1)).unwrap();
    assert!(traj.prevalence.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn phase_series_starts_at_initial_rhs() {
    let dist = power_law(3.0, 60);
    let m = NetworkModel::new(
        ModelKind::Stratified,
        EpidemicParams::new(0.05, 0.05, 0.01),
        ModelOptions::default(),
        &[dist.clone()],
    )
    .unwrap();
    let traj = integrate_model(&m, &rk4(50.0, 0.1)).unwrap();
    let d0 = m.derivative(0.0, &m.initial_state()).unwrap();
    for k in [1, 10, 30, 60] {
        let pts = phase_series(&traj, 0, k, k, PhaseVariant::Infected).unwrap();
        assert_eq!(pts[0].0, 0.01 * dist.prob(k));
        assert_eq!(pts[0].1, d0.groups[0].infected[0][k - 1]);
    }
    assert!(phase_series(&traj, 0, 61, 1, PhaseVariant::Infected).is_err());
    assert!(phase_series(&traj, 0, 0, 1, PhaseVariant::Healthy).is_err());
}

#[test]
fn decay_only_phase_derivatives_nonpositive() {
    let m = NetworkModel::new(
        ModelKind::Stratified,
        EpidemicParams::new(0.0, 0.05, 0.01),
        ModelOptions::default(),
        &[power_law(3.0, 60)],
    )
    .unwrap();
    let traj = integrate_model(&m, &rk4(100.0, 0.1)).unwrap();
    for k in [1, 5, 60] {
        assert!(phase_series(&traj, 0, k, k, PhaseVariant::Infected).unwrap().iter().all(|p| p.1 <= 0.0));
    }
}

#[test]
fn integrate_from_custom_state() {
    let m = NetworkModel::new(
        ModelKind::Stratified,
        EpidemicParams::new(0.1, 0.05, 0.01),
        ModelOptions::default(),
        &[power_law(2.5, 10)],
    )
    .unwrap();
    let mut init: StratifiedState = m.initial_state();
    init.groups[0].infected[0].iter_mut().for_each(|x| *x = 0.0);
    let dist = power_law(2.5, 10);
    for (i, s) in init.groups[0].s.iter_mut().enumerate() {
        *s = dist.pmf()[i];
    }
    let traj = integrate(&m, &init, &rk4(10.0, 0.1)).unwrap();
    assert!(traj.prevalence.iter().all(|p| *p == 0.0));
}
