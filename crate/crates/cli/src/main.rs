// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noma_meta::simulator::SimConfig;
use noma_meta::Scheme;
use serde::{Deserialize, Serialize};

use crate::commands::{run, RunSummary};
use crate::config::{parse_grid, parse_list, Command, Mode, RunConfig, Sweep, ThresholdUnit};
use crate::error::{CliError, CliResult};
use crate::output::{manifest_path, write_json};
use crate::reproduce::{reproduce, Figure, ReproduceConfig};

#[derive(Parser)]
#[command(
    name = "noma-meta",
    version,
    about = "Meta distribution of the CCP for downlink NOMA"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// b-th moments of the CCP per rank.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Moment orders.
        #[arg(long, default_value = "1,2")]
        b_values: String,
    },
    /// Beta-matched meta distribution on an α grid.
    Metadist {
        #[command(flatten)]
        common: Common,
        /// Comma list or start:stop:steps.
        #[arg(long, default_value = "0:1:21")]
        alphas: String,
    },
    /// Raw per-realization CCP samples.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Curve bundle for one of the standard setups.
    Reproduce {
        figure: Figure,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Add Monte Carlo estimates (fig1 only).
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = SimConfig::default().n_realizations)]
        realizations: usize,
        #[arg(long, default_value_t = SimConfig::default().rng_seed)]
        seed: u64,
        #[arg(long, default_value_t = SimConfig::default().window_radius)]
        window_radius: f64,
        /// Threshold grid in dB (fig2..fig4).
        #[arg(long, default_value = "-10:15:26", allow_hyphen_values = true)]
        thetas_db: String,
        /// α grid (fig1).
        #[arg(long, default_value = "0:1:101")]
        alphas: String,
    },
    /// Replays the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "e-noma")]
    scheme: Scheme,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 4.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    beta_sic: f64,
    #[arg(long, default_value_t = 2)]
    n_users: usize,
    /// Power split, strongest UE first; defaults to 0.5,0.5 for two users.
    #[arg(long)]
    powers: Option<String>,
    /// SIR thresholds in dB.
    #[arg(long, conflicts_with = "thetas_linear", allow_hyphen_values = true)]
    thetas_db: Option<String>,
    /// SIR thresholds, linear; defaults to 1,0.5 for two users.
    #[arg(long)]
    thetas_linear: Option<String>,
    /// var=start:stop:steps with var one of theta-db, theta<k>-db, p1, beta-sic, lambda, eta.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long, value_enum, default_value = "analytic-exact")]
    mode: Mode,
    /// Ranks to report; all by default.
    #[arg(long)]
    ranks: Option<String>,
    #[arg(long, default_value_t = SimConfig::default().n_realizations)]
    realizations: usize,
    #[arg(long, default_value_t = SimConfig::default().rng_seed)]
    seed: u64,
    /// Simulation window radius in units of 1/sqrt(lambda).
    #[arg(long, default_value_t = SimConfig::default().window_radius)]
    window_radius: f64,
    /// Output CSV; the manifest goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

/// Sidecar of a single-table run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    csv: String,
    summary: RunSummary,
    config: RunConfig,
}

impl Common {
    fn into_config(
        self,
        command: Command,
        b_values: Vec<f64>,
        alphas: Vec<f64>,
    ) -> CliResult<(RunConfig, PathBuf)> {
        let n = self.n_users;
        let two = |v: [f64; 2]| {
            if n == 2 {
                Ok(v.to_vec())
            } else {
                Err(CliError::Usage(format!(
                    "N = {n} needs explicit --powers and thresholds"
                )))
            }
        };
        let powers = match &self.powers {
            Some(s) => parse_list(s)?,
            None => two([0.5, 0.5])?,
        };
        let (threshold_unit, thresholds) = match (&self.thetas_db, &self.thetas_linear) {
            (Some(s), _) => (ThresholdUnit::Db, parse_list(s)?),
            (None, Some(s)) => (ThresholdUnit::Linear, parse_list(s)?),
            (None, None) => (ThresholdUnit::Linear, two([1.0, 0.5])?),
        };
        let ranks = match &self.ranks {
            Some(s) => parse_list(s)?
                .into_iter()
                .map(|x| {
                    if x.fract() == 0.0 && x >= 1.0 {
                        Ok(x as usize)
                    } else {
                        Err(CliError::Usage(format!("bad rank {x}")))
                    }
                })
                .collect::<CliResult<_>>()?,
            None => (1..=n).collect(),
        };
        let cfg = RunConfig {
            command,
            scheme: self.scheme,
            lambda: self.lambda,
            eta: self.eta,
            beta_sic: self.beta_sic,
            n_users: n,
            powers,
            threshold_unit,
            thresholds,
            mode: if command == Command::Simulate {
                Mode::Simulate
            } else {
                self.mode
            },
            sweep: self.sweep.as_deref().map(Sweep::parse).transpose()?,
            ranks,
            b_values,
            alphas,
            realizations: self.realizations,
            seed: self.seed,
            window_radius: self.window_radius,
        };
        Ok((cfg, self.out))
    }
}

fn execute(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let result = run(cfg)?;
    result.table.write(out)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        csv: out
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        summary: result.summary.clone(),
        config: cfg.clone(),
    };
    let mpath = manifest_path(out);
    write_json(&mpath, &manifest)?;
    for note in &result.notes {
        println!("{note}");
    }
    println!(
        "wrote {} rows to {} (manifest {})",
        result.summary.rows,
        out.display(),
        mpath.display()
    );
    if result.summary.infeasible_rows > 0 {
        return Err(CliError::Infeasible(format!(
            "{} of {} rows have an allocation that never decodes; they are flagged feasible=false",
            result.summary.infeasible_rows, result.summary.rows
        )));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Cmd::Moments { common, b_values } => {
            let (cfg, out) =
                common.into_config(Command::Moments, parse_list(&b_values)?, Vec::new())?;
            execute(&cfg, &out)
        }
        Cmd::Metadist { common, alphas } => {
            let (cfg, out) =
                common.into_config(Command::Metadist, Vec::new(), parse_grid(&alphas)?)?;
            execute(&cfg, &out)
        }
        Cmd::Simulate { common } => {
            let (cfg, out) = common.into_config(Command::Simulate, Vec::new(), Vec::new())?;
            execute(&cfg, &out)
        }
        Cmd::Reproduce {
            figure,
            out,
            simulate,
            realizations,
            seed,
            window_radius,
            thetas_db,
            alphas,
        } => {
            let cfg = ReproduceConfig {
                figure,
                simulate,
                realizations,
                seed,
                window_radius,
                thetas_db: parse_grid(&thetas_db)?,
                alphas: parse_grid(&alphas)?,
            };
            let manifest = reproduce(&cfg, &out)?;
            println!(
                "wrote {} curves to {}",
                manifest.curves.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Rerun { manifest, out } => {
            let text = std::fs::read_to_string(&manifest)?;
            let recorded: Manifest = serde_json::from_str(&text)?;
            execute(&recorded.config, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
