use noma_meta::model::{decoding_factor, effective_margins, EffectiveAlloc};
use noma_meta::moments::{meta_distribution, moment_given_m};
use noma_meta::simulator::{empirical_md, empirical_moment, simulate, SimOutput};
use noma_meta::Error;
use serde::{Deserialize, Serialize};

use crate::config::{Command, Point, RunConfig};
use crate::error::CliResult;
use crate::output::{num, opt, Table};

pub const MOMENTS_HEADER: [&str; 8] = [
    "sweep_value",
    "i",
    "b",
    "moment",
    "method",
    "simulated",
    "std_err",
    "feasible",
];
pub const METADIST_HEADER: [&str; 9] = [
    "sweep_value",
    "alpha",
    "i",
    "ccdf_analytic",
    "ccdf_empirical",
    "std_err",
    "shape_a",
    "shape_b",
    "feasible",
];
pub const SIMULATE_HEADER: [&str; 4] = ["sweep_value", "realization", "i", "ccp"];

/// Everything a run produced besides the table itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rows: usize,
    pub infeasible_rows: usize,
    pub discarded_network_draws: u64,
}

pub struct RunOutput {
    pub table: Table,
    pub summary: RunSummary,
    pub notes: Vec<String>,
}

/// `Some(M_i)`, or `None` when rank `i` can never decode.
fn factor(point: &Point, i: usize) -> CliResult<Option<f64>> {
    match decoding_factor(&point.params, &point.alloc, i) {
        Ok(m) => Ok(Some(m)),
        Err(Error::InfeasibleAllocation { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Simulation with rank-local decoding factors. An infeasible rank gets an
/// infinite factor, which makes its CCP exactly zero in every snapshot.
fn run_simulation(cfg: &RunConfig, point: &Point) -> CliResult<SimOutput> {
    let n = point.params.n_users();
    let m_factors = (1..=n)
        .map(|i| factor(point, i).map(|m| m.unwrap_or(f64::INFINITY)))
        .collect::<CliResult<Vec<_>>>()?;
    let eff = EffectiveAlloc {
        tilde_p: effective_margins(point.params.beta_sic(), &point.alloc),
        m_factors,
    };
    Ok(simulate(
        &point.params,
        cfg.scheme,
        &eff,
        &cfg.sim_config(),
    )?)
}

pub fn run(cfg: &RunConfig) -> CliResult<RunOutput> {
    let points = cfg.points()?;
    let mut out = match cfg.command {
        Command::Moments => moments(cfg, &points)?,
        Command::Metadist => metadist(cfg, &points)?,
        Command::Simulate => simulate_raw(cfg, &points)?,
    };
    out.summary.rows = out.table.len();
    Ok(out)
}

fn moments(cfg: &RunConfig, points: &[Point]) -> CliResult<RunOutput> {
    let mut table = Table::new(&MOMENTS_HEADER);
    let mut summary = RunSummary::default();
    for point in points {
        let sim = if cfg.mode.simulated() {
            Some(run_simulation(cfg, point)?)
        } else {
            None
        };
        if let Some(s) = &sim {
            summary.discarded_network_draws += s.resamples;
        }
        for &i in &cfg.ranks {
            let m = factor(point, i)?;
            for &b in &cfg.b_values {
                let est = sim
                    .as_ref()
                    .map(|s| empirical_moment(s.rank(i), b))
                    .transpose()?;
                let (value, method) = match cfg.mode.analytic() {
                    Some(method) => {
                        let v = match m {
                            Some(m) => moment_given_m(&point.params, cfg.scheme, method, m, i, b)?,
                            None => 0.0,
                        };
                        (v, method.label(cfg.scheme))
                    }
                    None => (est.map_or(f64::NAN, |e| e.value), "monte-carlo"),
                };
                if m.is_none() {
                    summary.infeasible_rows += 1;
                }
                table.push(vec![
                    opt(point.sweep_value),
                    i.to_string(),
                    num(b),
                    num(value),
                    method.to_string(),
                    opt(est.map(|e| e.value)),
                    opt(est.map(|e| e.std_err)),
                    m.is_some().to_string(),
                ]);
            }
        }
    }
    Ok(RunOutput {
        table,
        summary,
        notes: Vec::new(),
    })
}

fn metadist(cfg: &RunConfig, points: &[Point]) -> CliResult<RunOutput> {
    let mut table = Table::new(&METADIST_HEADER);
    let mut summary = RunSummary::default();
    for point in points {
        let sim = if cfg.mode.simulated() {
            Some(run_simulation(cfg, point)?)
        } else {
            None
        };
        if let Some(s) = &sim {
            summary.discarded_network_draws += s.resamples;
        }
        for &i in &cfg.ranks {
            let feasible = factor(point, i)?.is_some();
            let md = cfg
                .mode
                .analytic()
                .map(|method| meta_distribution(&point.params, &point.alloc, cfg.scheme, method, i))
                .transpose()?;
            let empirical = sim
                .as_ref()
                .map(|s| empirical_md(s.rank(i), &cfg.alphas))
                .transpose()?;
            let shapes = md.and_then(|d| d.shapes());
            for (k, &alpha) in cfg.alphas.iter().enumerate() {
                let e = empirical.as_ref().map(|v| v[k]);
                if !feasible {
                    summary.infeasible_rows += 1;
                }
                table.push(vec![
                    opt(point.sweep_value),
                    num(alpha),
                    i.to_string(),
                    opt(md.map(|d| d.ccdf(alpha))),
                    opt(e.map(|e| e.value)),
                    opt(e.map(|e| e.std_err)),
                    opt(shapes.map(|s| s.0)),
                    opt(shapes.map(|s| s.1)),
                    feasible.to_string(),
                ]);
            }
        }
    }
    Ok(RunOutput {
        table,
        summary,
        notes: Vec::new(),
    })
}

fn simulate_raw(cfg: &RunConfig, points: &[Point]) -> CliResult<RunOutput> {
    let mut table = Table::new(&SIMULATE_HEADER);
    let mut summary = RunSummary::default();
    let mut notes = Vec::new();
    for point in points {
        let sim = run_simulation(cfg, point)?;
        summary.discarded_network_draws += sim.resamples;
        for &i in &cfg.ranks {
            if factor(point, i)?.is_none() {
                summary.infeasible_rows += sim.rank(i).len();
            }
            let mean = empirical_moment(sim.rank(i), 1.0)?;
            let tag = point
                .sweep_value
                .map(|v| format!(" at {v}"))
                .unwrap_or_default();
            notes.push(format!(
                "UE{i}{tag}: mean CCP {:.6} (se {:.2e})",
                mean.value, mean.std_err
            ));
        }
        for k in 0..cfg.realizations {
            for &i in &cfg.ranks {
                table.push(vec![
                    opt(point.sweep_value),
                    k.to_string(),
                    i.to_string(),
                    num(sim.rank(i)[k]),
                ]);
            }
        }
    }
    Ok(RunOutput {
        table,
        summary,
        notes,
    })
}
