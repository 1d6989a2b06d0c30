//! Curve bundles for the four standard evaluation setups.

use std::path::{Path, PathBuf};

use noma_meta::model::{db_to_linear, effective_alloc, linear_to_db};
use noma_meta::moments::{meta_distribution, moment_pair};
use noma_meta::ra::{solve_tmr, RaProblem};
use noma_meta::simulator::{empirical_md, simulate, SimConfig};
use noma_meta::{Allocation, Error, MomentMethod, NetworkParams, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_json, Table};

const LAMBDA: f64 = 10.0;
const ETA: f64 = 4.0;
const N_USERS: usize = 2;
const BETAS: [f64; 3] = [0.0, 0.1, 0.2];
const SPLITS: [f64; 2] = [0.5, 0.1];
// (scheme, minimum rate of UE₂ in nats) for the allocation curves.
const TMR_CASES: [(Scheme, f64); 3] = [
    (Scheme::CNoma, 0.1),
    (Scheme::CNoma, 0.4),
    (Scheme::ENoma, 0.1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    fn name(&self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceConfig {
    pub figure: Figure,
    pub simulate: bool,
    pub realizations: usize,
    pub seed: u64,
    pub window_radius: f64,
    pub thetas_db: Vec<f64>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub file: String,
    pub scheme: Option<Scheme>,
    pub ue: usize,
    pub method: Option<MomentMethod>,
    pub p1: Option<f64>,
    pub thresholds: Option<Vec<f64>>,
    pub beta_sic: f64,
    pub tmr: Option<f64>,
    pub rows: usize,
    pub infeasible_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub tool: String,
    pub version: String,
    pub lambda: f64,
    pub eta: f64,
    pub n_users: usize,
    pub config: ReproduceConfig,
    pub curves: Vec<Curve>,
}

pub fn manifest_file(dir: &Path, figure: Figure) -> PathBuf {
    dir.join(format!("{}_manifest.json", figure.name()))
}

fn params(beta: f64) -> NetworkParams {
    NetworkParams::new(LAMBDA, ETA, beta, N_USERS).expect("fixed parameters are valid")
}

fn shared_threshold(theta_db: f64) -> Allocation {
    let t = db_to_linear(theta_db);
    Allocation::new(vec![1.0 / 3.0, 2.0 / 3.0], vec![t, t]).expect("fixed allocation is valid")
}

struct Bundle<'a> {
    dir: &'a Path,
    figure: Figure,
    curves: Vec<Curve>,
}

impl Bundle<'_> {
    fn add(
        &mut self,
        stem: String,
        table: &Table,
        infeasible_rows: usize,
        mut curve: Curve,
    ) -> CliResult<()> {
        let file = format!("{}_{stem}.csv", self.figure.name());
        table.write(&self.dir.join(&file))?;
        curve.file = file;
        curve.rows = table.len();
        curve.infeasible_rows = infeasible_rows;
        self.curves.push(curve);
        Ok(())
    }
}

/// Writes every curve of `cfg.figure` into `dir` with a bundle manifest.
pub fn reproduce(cfg: &ReproduceConfig, dir: &Path) -> CliResult<BundleManifest> {
    if cfg.thetas_db.is_empty() {
        return Err(CliError::Usage("empty threshold grid".into()));
    }
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(CliError::Usage(
            "alpha grid must be non-empty and inside [0, 1]".into(),
        ));
    }
    std::fs::create_dir_all(dir)?;
    let mut bundle = Bundle {
        dir,
        figure: cfg.figure,
        curves: Vec::new(),
    };
    match cfg.figure {
        Figure::Fig1 => meta_distributions(cfg, &mut bundle)?,
        Figure::Fig2 => moment_curves(
            cfg,
            &mut bundle,
            &[Scheme::CNoma],
            &[MomentMethod::Exact, MomentMethod::Approx],
            &[0.0],
        )?,
        Figure::Fig3 => moment_curves(
            cfg,
            &mut bundle,
            &Scheme::ALL,
            &[MomentMethod::Exact],
            &BETAS,
        )?,
        Figure::Fig4 => allocation_curves(cfg, &mut bundle)?,
    }
    let manifest = BundleManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        lambda: LAMBDA,
        eta: ETA,
        n_users: N_USERS,
        config: cfg.clone(),
        curves: bundle.curves,
    };
    write_json(&manifest_file(dir, cfg.figure), &manifest)?;
    Ok(manifest)
}

fn meta_distributions(cfg: &ReproduceConfig, bundle: &mut Bundle) -> CliResult<()> {
    let p = params(0.0);
    let sim = SimConfig {
        window_radius: cfg.window_radius,
        n_realizations: cfg.realizations,
        rng_seed: cfg.seed,
        ..SimConfig::default()
    };
    if cfg.simulate {
        sim.validate().map_err(CliError::from_setup)?;
    }
    for scheme in Scheme::ALL {
        for p1 in SPLITS {
            let alloc = Allocation::new(vec![p1, 1.0 - p1], vec![1.0, 0.5])?;
            let samples = if cfg.simulate {
                Some(simulate(&p, scheme, &effective_alloc(&p, &alloc)?, &sim)?)
            } else {
                None
            };
            for i in 1..=N_USERS {
                let md = meta_distribution(&p, &alloc, scheme, MomentMethod::Exact, i)?;
                let emp = samples
                    .as_ref()
                    .map(|s| empirical_md(s.rank(i), &cfg.alphas))
                    .transpose()?;
                let shapes = md.shapes();
                let mut t = Table::new(&[
                    "alpha",
                    "ccdf_analytic",
                    "ccdf_empirical",
                    "std_err",
                    "shape_a",
                    "shape_b",
                ]);
                for (k, &a) in cfg.alphas.iter().enumerate() {
                    let e = emp.as_ref().map(|v| v[k]);
                    t.push(vec![
                        num(a),
                        num(md.ccdf(a)),
                        opt(e.map(|e| e.value)),
                        opt(e.map(|e| e.std_err)),
                        opt(shapes.map(|s| s.0)),
                        opt(shapes.map(|s| s.1)),
                    ]);
                }
                let curve = Curve {
                    scheme: Some(scheme),
                    ue: i,
                    method: Some(MomentMethod::Exact),
                    p1: Some(p1),
                    thresholds: Some(alloc.thresholds().to_vec()),
                    ..Curve::default()
                };
                bundle.add(format!("{scheme}_p1-{p1}_ue{i}"), &t, 0, curve)?;
            }
        }
    }
    Ok(())
}

fn moment_curves(
    cfg: &ReproduceConfig,
    bundle: &mut Bundle,
    schemes: &[Scheme],
    methods: &[MomentMethod],
    betas: &[f64],
) -> CliResult<()> {
    for &scheme in schemes {
        for &method in methods {
            for &beta in betas {
                let p = params(beta);
                for i in 1..=N_USERS {
                    let mut t = Table::new(&["theta_db", "scp", "variance", "feasible"]);
                    let mut infeasible = 0;
                    for &db in &cfg.thetas_db {
                        let alloc = shared_threshold(db);
                        let feasible = noma_meta::model::decoding_factor(&p, &alloc, i).is_ok();
                        let (m1, m2) = moment_pair(&p, &alloc, scheme, method, i)?;
                        infeasible += usize::from(!feasible);
                        t.push(vec![
                            num(db),
                            num(m1),
                            num(m2 - m1 * m1),
                            feasible.to_string(),
                        ]);
                    }
                    let curve = Curve {
                        scheme: Some(scheme),
                        ue: i,
                        method: Some(method),
                        p1: Some(1.0 / 3.0),
                        beta_sic: beta,
                        ..Curve::default()
                    };
                    let stem = if methods.len() > 1 {
                        format!("{}_ue{i}", method.label(scheme))
                    } else {
                        format!("{scheme}_beta-{beta}_ue{i}")
                    };
                    bundle.add(stem, &t, infeasible, curve)?;
                }
            }
        }
    }
    Ok(())
}

fn allocation_curves(cfg: &ReproduceConfig, bundle: &mut Bundle) -> CliResult<()> {
    let p = params(0.0);
    for (scheme, tmr) in TMR_CASES {
        let mut tables: Vec<Table> = (0..N_USERS)
            .map(|_| {
                Table::new(&[
                    "theta1_db",
                    "p2",
                    "theta2_db",
                    "scp",
                    "variance",
                    "rate",
                    "feasible",
                ])
            })
            .collect();
        let mut infeasible = 0;
        for &db in &cfg.thetas_db {
            let theta_1 = db_to_linear(db);
            let problem = RaProblem::new(p, scheme, theta_1, tmr).map_err(CliError::from_setup)?;
            match solve_tmr(&problem) {
                Ok(sol) => {
                    let alloc = sol.allocation(theta_1)?;
                    let rates = [sol.rate_1, sol.rate_2];
                    for (i, t) in tables.iter_mut().enumerate() {
                        let (m1, m2) = moment_pair(&p, &alloc, scheme, MomentMethod::Exact, i + 1)?;
                        t.push(vec![
                            num(db),
                            num(sol.p2),
                            num(linear_to_db(sol.theta_2)),
                            num(m1),
                            num(m2 - m1 * m1),
                            num(rates[i]),
                            "true".into(),
                        ]);
                    }
                }
                Err(Error::InfeasibleTmr { .. }) => {
                    infeasible += 1;
                    for t in &mut tables {
                        t.push(vec![
                            num(db),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            "false".into(),
                        ]);
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
        for (i, t) in tables.iter().enumerate() {
            let curve = Curve {
                scheme: Some(scheme),
                ue: i + 1,
                method: Some(MomentMethod::Exact),
                tmr: Some(tmr),
                ..Curve::default()
            };
            bundle.add(
                format!("{scheme}_tmr-{tmr}_ue{}", i + 1),
                t,
                infeasible,
                curve,
            )?;
        }
    }
    Ok(())
}
