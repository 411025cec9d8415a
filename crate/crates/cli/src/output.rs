//! CSV/JSON rendering and all-or-nothing writing of run artifacts.

use std::path::{Path, PathBuf};

use netepi::abm::EnsembleSummary;
use netepi::analysis::{CoverageReport, FitResult, PhaseVariant, SobolResult};
use netepi::ode::Trajectory;
use serde::Serialize;

use crate::error::CliError;

/// One output file, rendered in memory before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn table(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn trajectory_csv(traj: &Trajectory, per_degree: bool) -> Result<Vec<u8>, CliError> {
    let layout = traj.layout;
    let mut header: Vec<String> = ["t", "s_total", "i_total", "r", "incidence"].map(String::from).to_vec();
    let mut cols = Vec::new();
    if per_degree {
        for g in 0..layout.groups {
            for c in 0..layout.classes {
                let k = layout.degree(c);
                header.push(if layout.groups == 1 { format!("i_k{k}") } else { format!("i_g{g}_k{k}") });
                cols.push((g, c));
            }
        }
    }
    let rows = (0..traj.len()).map(|n| {
        let mut row = vec![
            num(traj.times[n]),
            num(traj.susceptible[n]),
            num(traj.prevalence[n]),
            num(traj.removed[n]),
            num(traj.incidence[n]),
        ];
        let y = &traj.states[n];
        for &(g, c) in &cols {
            let v: f64 = (0..layout.infected).map(|i| y[layout.infected(g, i).start + c]).sum();
            row.push(num(v));
        }
        row
    });
    table(&header, rows)
}

pub fn ensemble_csv(ens: &EnsembleSummary) -> Result<Vec<u8>, CliError> {
    let header = ["t", "mean_prev", "se_prev", "mean_inc", "se_inc", "replicas"].map(String::from);
    let rows = (0..ens.times.len()).map(|n| {
        vec![
            num(ens.times[n]),
            num(ens.prevalence.mean[n]),
            num(ens.prevalence.se[n]),
            num(ens.incidence.mean[n]),
            num(ens.incidence.se[n]),
            ens.replicas.to_string(),
        ]
    });
    table(&header, rows)
}

/// `t` followed by one `S_<name>` column; undefined indices are written as `nan`.
pub fn sobol_csv(times: &[f64], res: &SobolResult) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["t".to_string()];
    header.extend(res.names.iter().map(|n| format!("S_{n}")));
    let rows = times.iter().zip(&res.indices).map(|(t, row)| {
        let mut r = vec![num(*t)];
        r.extend(row.iter().map(|s| s.map_or("nan".into(), num)));
        r
    });
    table(&header, rows)
}

pub fn sobol_noise_csv(times: &[f64], res: &SobolResult) -> Result<Vec<u8>, CliError> {
    let mut header = vec!["t".to_string()];
    header.extend(res.names.iter().map(|n| format!("se_{n}")));
    let rows = times.iter().zip(&res.noise).map(|(t, row)| {
        let mut r = vec![num(*t)];
        r.extend(row.iter().map(|s| num(*s)));
        r
    });
    table(&header, rows)
}

pub fn phase_csv(points: &[(f64, f64)], variant: PhaseVariant) -> Result<Vec<u8>, CliError> {
    let header = match variant {
        PhaseVariant::Infected => ["rho_m", "drho_n_dt"],
        PhaseVariant::Healthy => ["healthy_m", "dhealthy_n_dt"],
    }
    .map(String::from);
    table(&header, points.iter().map(|(x, y)| vec![num(*x), num(*y)]))
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("report serializes");
    s.push(b'\n');
    s
}

pub fn fit_json(res: &FitResult) -> Vec<u8> {
    json(res)
}

pub fn coverage_json(rep: &CoverageReport) -> Vec<u8> {
    json(rep)
}

/// Self-contained matplotlib script plotting the CSVs written by `command`.
pub fn plot_script(command: &str) -> String {
    let body = match command {
        "run-ode" => {
            "d = pd.read_csv('trajectory.csv')\n\
             for c in ['s_total', 'i_total', 'r']:\n    plt.plot(d['t'], d[c], label=c)\n\
             plt.xlabel('t'); plt.ylabel('fraction'); plt.legend()\n"
        }
        "run-abm" => {
            "d = pd.read_csv('ensemble.csv')\n\
             plt.plot(d['t'], d['mean_prev'], label='mean prevalence')\n\
             plt.fill_between(d['t'], d['mean_prev'] - 3 * d['se_prev'], d['mean_prev'] + 3 * d['se_prev'], alpha=0.3)\n\
             plt.xlabel('t'); plt.ylabel('prevalence'); plt.legend()\n"
        }
        "compare" => {
            "e = pd.read_csv('ensemble.csv')\no = pd.read_csv('trajectory.csv')\n\
             plt.fill_between(e['t'], e['mean_prev'] - 3 * e['se_prev'], e['mean_prev'] + 3 * e['se_prev'], alpha=0.3, label='ABM mean +/- 3 SE')\n\
             plt.plot(o['t'], o['i_total'], 'k', label='ODE')\n\
             plt.xlabel('t'); plt.ylabel('prevalence'); plt.legend()\n"
        }
        "sensitivity" => {
            "d = pd.read_csv('sobol.csv')\n\
             for c in d.columns[1:]:\n    plt.plot(d['t'], d[c], label=c)\n\
             plt.xlabel('t'); plt.ylabel('first-order index'); plt.legend()\n"
        }
        "phase" => {
            "d = pd.read_csv('phase.csv')\n\
             plt.plot(d.iloc[:, 0], d.iloc[:, 1])\n\
             plt.xlabel(d.columns[0]); plt.ylabel(d.columns[1])\n"
        }
        _ => {
            "import json\nr = json.load(open('fit.json'))\n\
             d = pd.read_csv('trajectory.csv')\n\
             plt.plot(d['t'], d['incidence'], label='fitted incidence')\n\
             plt.title(', '.join(f'{n}={v:.4g}' for n, v in zip(r['names'], r['values'])))\n\
             plt.xlabel('t'); plt.ylabel('incidence'); plt.legend()\n"
        }
    };
    format!(
        "# Plots the outputs of `netepi {command}`. Run from the output directory.\n\
         import matplotlib.pyplot as plt\nimport pandas as pd\n\n{body}\
         plt.tight_layout()\nplt.savefig('{}.png', dpi=150)\n",
        command.replace('-', "_")
    )
}

/// Writes every artifact into `dir`; on failure removes whatever was written.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = std::fs::write(&path, &a.bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(CliError::Io(format!("cannot write {}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}
