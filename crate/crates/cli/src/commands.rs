use std::path::Path;

use netepi::abm::run_ensemble;
use netepi::analysis::{compare_ode_abm, fit_parameters, phase_series, sobol_first_order};
use netepi::ode::{integrate_model, IntegrationSpec, Method, Trajectory};
use netepi::EpiError;

use crate::config::{parse_config, to_canonical_json, Config, Observed, SobolOutput};
use crate::error::CliError;
use crate::output::{self, Artifact};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RunOde,
    RunAbm,
    Compare,
    Sensitivity,
    Phase,
    Fit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RunOde => "run-ode",
            Command::RunAbm => "run-abm",
            Command::Compare => "compare",
            Command::Sensitivity => "sensitivity",
            Command::Phase => "phase",
            Command::Fit => "fit",
        }
    }
}

/// Rendered outputs plus the one-line run summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

fn summary(peak: f64, peak_time: f64, final_size: f64) -> String {
    // Grid times carry accumulated rounding (0.1 * 534 = 53.400000000000006).
    let t = (peak_time * 1e9).round() / 1e9;
    format!("peak prevalence {peak:.6} at t = {t}; final size {final_size:.6}")
}

fn ode_summary(traj: &Trajectory) -> String {
    let (i, peak) = traj.peak_prevalence();
    summary(peak, traj.times[i], traj.final_size())
}

fn solve(cfg: &Config) -> Result<Trajectory, CliError> {
    Ok(integrate_model(&cfg.build_model()?, &cfg.integration())?)
}

/// Config errors raised inside an analysis callback travel as engine errors.
fn to_engine(e: CliError) -> EpiError {
    match e {
        CliError::Numerical(m) => EpiError::Unstable { t: f64::NAN, detail: m },
        CliError::Config(m) | CliError::Io(m) => EpiError::domain("parameters", m),
    }
}

fn with_values(cfg: &Config, names: &[String], values: &[f64]) -> Result<Config, CliError> {
    let mut c = cfg.clone();
    for (n, v) in names.iter().zip(values) {
        c = c.with_parameter(n, *v)?;
    }
    Ok(c)
}

/// Grid indices of the observed times.
fn observation_indices(grid: &[f64], times: &[f64], dt: f64) -> Result<Vec<usize>, CliError> {
    times
        .iter()
        .map(|t| {
            grid.iter().position(|g| (g - t).abs() <= 1e-6 * dt).ok_or_else(|| {
                CliError::Config(format!("fit.observed.times: t = {t} is not an output time of the integration grid"))
            })
        })
        .collect()
}

fn read_observed(obs: &Observed) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    match obs {
        Observed::Inline { times, incidence } => Ok((times.clone(), incidence.clone())),
        Observed::Csv { csv } => {
            let mut rdr = csv::Reader::from_path(csv)
                .map_err(|e| CliError::Io(format!("fit.observed.csv: cannot read {}: {e}", csv.display())))?;
            let headers = rdr.headers()?.clone();
            let col = |name: &str| {
                headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
                    CliError::Config(format!("fit.observed.csv: {} has no {name:?} column", csv.display()))
                })
            };
            let (ct, ci) = (col("t")?, col("incidence")?);
            let (mut times, mut inc) = (Vec::new(), Vec::new());
            for (line, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let parse = |i: usize| -> Result<f64, CliError> {
                    rec.get(i).and_then(|v| v.trim().parse().ok()).ok_or_else(|| {
                        CliError::Config(format!("fit.observed.csv: row {} is not numeric", line + 2))
                    })
                };
                times.push(parse(ct)?);
                inc.push(parse(ci)?);
            }
            if times.is_empty() {
                return Err(CliError::Config("fit.observed.csv: observed series is empty".into()));
            }
            Ok((times, inc))
        }
    }
}

/// Runs one command and renders its outputs in memory.
pub fn execute(cfg: &Config, command: Command, plot: bool) -> Result<Outcome, CliError> {
    let mut artifacts = vec![Artifact::new("spec.json", to_canonical_json(cfg).into_bytes())];
    let line = match command {
        Command::RunOde => {
            let traj = solve(cfg)?;
            artifacts.push(Artifact::new("trajectory.csv", output::trajectory_csv(&traj, cfg.output.per_degree)?));
            ode_summary(&traj)
        }
        Command::RunAbm => {
            let (spec, replicas) = cfg.simulation_spec()?;
            let ens = run_ensemble(&spec, replicas, cfg.seed)?;
            artifacts.push(Artifact::new("ensemble.csv", output::ensemble_csv(&ens)?));
            let (i, peak) = ens
                .prevalence
                .mean
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
            let last = ens.susceptible.mean.last().copied().unwrap_or(1.0);
            summary(peak, ens.times[i], 1.0 - last)
        }
        Command::Compare => {
            let (spec, replicas) = cfg.simulation_spec()?;
            let band = cfg.abm.as_ref().map_or(3.0, |a| a.band_sigmas);
            let ens = run_ensemble(&spec, replicas, cfg.seed)?;
            // The ODE is stepped on the same unit grid as the simulation.
            let ode_spec = IntegrationSpec::new(0.0, spec.steps as f64, 1.0, Method::Euler);
            let traj = integrate_model(&cfg.build_model()?, &ode_spec)?;
            let report = compare_ode_abm(&traj, &ens, band)?;
            artifacts.push(Artifact::new("ensemble.csv", output::ensemble_csv(&ens)?));
            artifacts.push(Artifact::new("trajectory.csv", output::trajectory_csv(&traj, cfg.output.per_degree)?));
            artifacts.push(Artifact::new("coverage.json", output::coverage_json(&report)));
            format!("{}; coverage {:.4} at {band} SE", ode_summary(&traj), report.coverage)
        }
        Command::Sensitivity => {
            let sens = cfg
                .sensitivity
                .as_ref()
                .ok_or_else(|| CliError::Config("sensitivity: this command needs a sensitivity section".into()))?;
            let names: Vec<String> = sens.parameters.iter().map(|r| r.name.clone()).collect();
            let base = solve(cfg)?;
            let runner = |x: &[f64]| -> netepi::Result<Vec<f64>> {
                let c = with_values(cfg, &names, x).map_err(to_engine)?;
                let traj = solve(&c).map_err(to_engine)?;
                Ok(match sens.output {
                    SobolOutput::Incidence => traj.incidence,
                    SobolOutput::Prevalence => traj.prevalence,
                })
            };
            let res = sobol_first_order(runner, &sens.parameters, sens.n_base, cfg.seed)?;
            artifacts.push(Artifact::new("sobol.csv", output::sobol_csv(&base.times, &res)?));
            artifacts.push(Artifact::new("sobol_noise.csv", output::sobol_noise_csv(&base.times, &res)?));
            format!("{}; {} model evaluations", ode_summary(&base), res.evaluations)
        }
        Command::Phase => {
            let ph = cfg
                .phase
                .as_ref()
                .ok_or_else(|| CliError::Config("phase: this command needs a phase section".into()))?;
            let traj = solve(cfg)?;
            let points = phase_series(&traj, ph.group, ph.m, ph.n, ph.variant)
                .map_err(|e| CliError::Config(format!("phase.{e}")))?;
            artifacts.push(Artifact::new("phase.csv", output::phase_csv(&points, ph.variant)?));
            ode_summary(&traj)
        }
        Command::Fit => {
            let fit = cfg
                .fit
                .as_ref()
                .ok_or_else(|| CliError::Config("fit: this command needs a fit section".into()))?;
            let (times, observed) = read_observed(&fit.observed)?;
            let grid = solve(cfg)?.times;
            let idx = observation_indices(&grid, &times, cfg.dt)?;
            let names: Vec<String> = fit.free.iter().map(|p| p.name.clone()).collect();
            let model = |x: &[f64]| -> netepi::Result<Vec<f64>> {
                let c = with_values(cfg, &names, x).map_err(to_engine)?;
                let traj = solve(&c).map_err(to_engine)?;
                Ok(idx.iter().map(|&i| traj.incidence[i]).collect())
            };
            let res = fit_parameters(model, &observed, &fit.free, &fit.options)?;
            let fitted = solve(&with_values(cfg, &names, &res.values)?)?;
            artifacts.push(Artifact::new("fit.json", output::fit_json(&res)));
            artifacts.push(Artifact::new("trajectory.csv", output::trajectory_csv(&fitted, cfg.output.per_degree)?));
            let values: Vec<String> = names.iter().zip(&res.values).map(|(n, v)| format!("{n} = {v}")).collect();
            format!(
                "{}; fitted {} (rss {:e}, {} iterations{})",
                ode_summary(&fitted),
                values.join(", "),
                res.residual,
                res.iterations,
                if res.converged { "" } else { ", not converged" }
            )
        }
    };
    if plot {
        let name = format!("plot_{}.py", command.name().replace('-', "_"));
        artifacts.push(Artifact::new(name, output::plot_script(command.name()).into_bytes()));
    }
    Ok(Outcome { artifacts, summary: line })
}

/// Parses the config, applies the seed override, executes and writes outputs.
pub fn run(command: Command, config: &Path, seed: Option<u64>, out: &Path, plot: bool) -> Result<String, CliError> {
    let mut cfg = parse_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = execute(&cfg, command, plot)?;
    output::write_all(out, &outcome.artifacts)?;
    Ok(outcome.summary)
}
