use noma_meta::model::db_to_linear;
use noma_meta::simulator::SimConfig;
use noma_meta::{Allocation, MomentMethod, NetworkParams, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AnalyticExact,
    AnalyticApprox,
    Simulate,
    Both,
}

impl Mode {
    pub fn analytic(&self) -> Option<MomentMethod> {
        match self {
            Mode::AnalyticExact | Mode::Both => Some(MomentMethod::Exact),
            Mode::AnalyticApprox => Some(MomentMethod::Approx),
            Mode::Simulate => None,
        }
    }

    pub fn simulated(&self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdUnit {
    Db,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Moments,
    Metadist,
    Simulate,
}

/// Swept quantity. `ThetaKDb(k)` moves UE_k's threshold only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVar {
    ThetaDb,
    ThetaKDb(usize),
    P1,
    BetaSic,
    Lambda,
    Eta,
}

impl SweepVar {
    pub fn parse(s: &str) -> CliResult<Self> {
        let v = match s {
            "theta-db" => SweepVar::ThetaDb,
            "p1" => SweepVar::P1,
            "beta-sic" => SweepVar::BetaSic,
            "lambda" => SweepVar::Lambda,
            "eta" => SweepVar::Eta,
            other => {
                let k = other
                    .strip_prefix("theta")
                    .and_then(|r| r.strip_suffix("-db"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown sweep variable '{other}' (theta-db, theta<k>-db, p1, beta-sic, lambda, eta)"
                        ))
                    })?;
                SweepVar::ThetaKDb(k)
            }
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    /// Parses `var=start:stop:steps`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let bad = || {
            CliError::Usage(format!(
                "sweep must look like var=start:stop:steps, got '{s}'"
            ))
        };
        let (var, range) = s.split_once('=').ok_or_else(bad)?;
        SweepVar::parse(var.trim())?;
        let (start, stop, steps) = parse_range(range).map_err(|_| bad())?;
        Ok(Sweep {
            variable: var.trim().to_string(),
            start,
            stop,
            steps,
        })
    }

    pub fn var(&self) -> CliResult<SweepVar> {
        SweepVar::parse(&self.variable)
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.steps)
    }
}

pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (steps - 1) as f64;
            (0..steps).map(|k| start + k as f64 * h).collect()
        }
    }
}

fn parse_range(s: &str) -> CliResult<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(CliError::Usage(format!(
            "expected start:stop:steps, got '{s}'"
        )));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number '{x}'")))
    };
    let steps = n
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::Usage(format!("bad step count '{n}'")))?;
    Ok((num(a)?, num(b)?, steps))
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number '{x}' in '{s}'")))
        })
        .collect()
}

/// Either a comma list or `start:stop:steps`.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    if s.contains(':') {
        let (a, b, n) = parse_range(s)?;
        Ok(linspace(a, b, n))
    } else {
        parse_list(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub scheme: Scheme,
    pub lambda: f64,
    pub eta: f64,
    pub beta_sic: f64,
    pub n_users: usize,
    pub powers: Vec<f64>,
    pub threshold_unit: ThresholdUnit,
    pub thresholds: Vec<f64>,
    pub mode: Mode,
    pub sweep: Option<Sweep>,
    pub ranks: Vec<usize>,
    pub b_values: Vec<f64>,
    pub alphas: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub window_radius: f64,
}

/// One point of a sweep, ready to evaluate.
#[derive(Debug, Clone)]
pub struct Point {
    pub sweep_value: Option<f64>,
    pub params: NetworkParams,
    pub alloc: Allocation,
}

impl RunConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            window_radius: self.window_radius,
            n_realizations: self.realizations,
            rng_seed: self.seed,
            ..SimConfig::default()
        }
    }

    fn linear_thresholds(&self) -> Vec<f64> {
        match self.threshold_unit {
            ThresholdUnit::Linear => self.thresholds.clone(),
            ThresholdUnit::Db => self.thresholds.iter().map(|&d| db_to_linear(d)).collect(),
        }
    }

    fn point(&self, sweep: Option<(SweepVar, f64)>) -> CliResult<Point> {
        let (mut lambda, mut eta, mut beta) = (self.lambda, self.eta, self.beta_sic);
        let mut powers = self.powers.clone();
        let mut thresholds = self.linear_thresholds();
        let n = self.n_users;
        if let Some((var, v)) = sweep {
            match var {
                SweepVar::ThetaDb => thresholds.iter_mut().for_each(|t| *t = db_to_linear(v)),
                SweepVar::ThetaKDb(k) => {
                    if k > n {
                        return Err(CliError::Usage(format!(
                            "theta{k}-db sweep needs at least {k} users"
                        )));
                    }
                    thresholds[k - 1] = db_to_linear(v);
                }
                SweepVar::P1 => {
                    if n < 2 || !(v > 0.0 && v < 1.0) {
                        return Err(CliError::Usage(format!(
                            "p1 sweep needs N >= 2 and values in (0, 1), got {v}"
                        )));
                    }
                    let rest: f64 = powers[1..].iter().sum();
                    if !(rest > 0.0) {
                        return Err(CliError::Usage(
                            "p1 sweep needs positive remaining powers".into(),
                        ));
                    }
                    let scale = (1.0 - v) / rest;
                    powers[1..].iter_mut().for_each(|p| *p *= scale);
                    powers[0] = v;
                }
                SweepVar::BetaSic => beta = v,
                SweepVar::Lambda => lambda = v,
                SweepVar::Eta => eta = v,
            }
        }
        let params = NetworkParams::new(lambda, eta, beta, n).map_err(CliError::from_setup)?;
        let alloc = Allocation::new(powers, thresholds).map_err(CliError::from_setup)?;
        Ok(Point {
            sweep_value: sweep.map(|(_, v)| v),
            params,
            alloc,
        })
    }

    /// Validates the whole configuration and expands the sweep.
    pub fn points(&self) -> CliResult<Vec<Point>> {
        if self.powers.len() != self.n_users || self.thresholds.len() != self.n_users {
            return Err(CliError::Usage(format!(
                "--powers and thresholds need {} entries each",
                self.n_users
            )));
        }
        if let Some(&i) = self.ranks.iter().find(|&&i| i == 0 || i > self.n_users) {
            return Err(CliError::Usage(format!(
                "rank {i} outside 1..={}",
                self.n_users
            )));
        }
        if self.ranks.is_empty() {
            return Err(CliError::Usage("no ranks selected".into()));
        }
        match self.command {
            Command::Moments => {
                if self.b_values.is_empty() {
                    return Err(CliError::Usage("empty moment order list".into()));
                }
                if let Some(b) = self.b_values.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
                    return Err(CliError::Usage(format!(
                        "moment order must be positive, got {b}"
                    )));
                }
            }
            Command::Metadist => {
                if self.alphas.is_empty() {
                    return Err(CliError::Usage("empty alpha grid".into()));
                }
                if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return Err(CliError::Usage(format!("alpha {a} outside [0, 1]")));
                }
            }
            Command::Simulate => {}
        }
        if self.mode.simulated() || self.command == Command::Simulate {
            self.sim_config().validate().map_err(CliError::from_setup)?;
        }
        match &self.sweep {
            None => Ok(vec![self.point(None)?]),
            Some(sw) => {
                let var = sw.var()?;
                if sw.steps == 0 {
                    return Err(CliError::Usage("sweep needs at least one step".into()));
                }
                sw.values()
                    .into_iter()
                    .map(|v| self.point(Some((var, v))))
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use noma_meta::model::linear_to_db;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("theta-db=-10:15:26").unwrap();
        let v = s.values();
        assert_eq!(v.len(), 26);
        assert_eq!(v[0], -10.0);
        assert_eq!(v[25], 15.0);
        assert!(Sweep::parse("theta2-db=0:1:3").is_ok());
        assert!(Sweep::parse("theta0-db=0:1:3").is_err());
        assert!(Sweep::parse("gamma=0:1:3").is_err());
        assert!(Sweep::parse("p1=0:1").is_err());
    }

    #[test]
    fn grids_and_lists() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn db_round_trip() {
        for k in -300..=300 {
            let db = k as f64 / 10.0;
            assert!((linear_to_db(db_to_linear(db)) - db).abs() <= 1e-12);
            let lin = db_to_linear(db);
            assert!((db_to_linear(linear_to_db(lin)) - lin).abs() <= 1e-12 * lin);
        }
    }
}
