//! Monte Carlo oracle: Poisson network snapshots, UE placement for both
//! schemes and the per-snapshot CCP.
//!
//! Each realization draws from its own ChaCha8 stream keyed by
//! `(rng_seed, realization_index)`, so results are independent of how the
//! realizations are spread over threads.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{effective_margins, Allocation, EffectiveAlloc, NetworkParams, Scheme};
use crate::sum::{compensated_sum, CompensatedSum};

const MIN_WINDOW_FACTOR: f64 = 6.0;
// Sectors used to bound the tagged Voronoi cell for rejection sampling.
const CELL_SECTORS: usize = 8;
const MAX_REJECTIONS_PER_UE: usize = 100_000;
const MAX_NETWORK_DRAWS: u32 = 1_000;

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Radius of the observation disk in units of `1/√λ`.
    pub window_radius: f64,
    pub n_realizations: usize,
    pub rng_seed: u64,
    /// Fading draws per snapshot for [`validate_joint_event`]; zero disables it.
    pub fading_samples_per_realization: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            window_radius: 12.0,
            n_realizations: 50_000,
            rng_seed: 0x5eed_0fc0_ffee,
            fading_samples_per_realization: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_radius >= MIN_WINDOW_FACTOR && self.window_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window radius must be at least {MIN_WINDOW_FACTOR}/sqrt(lambda), got {}",
                self.window_radius
            )));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter(
                "n_realizations must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Window radius in distance units.
    pub fn window(&self, params: &NetworkParams) -> f64 {
        self.window_radius / params.lambda().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    fn polar(center: &Point, r: f64, angle: f64) -> Point {
        Point::new(center.x + r * angle.cos(), center.y + r * angle.sin())
    }
}

/// One network snapshot around the tagged BS.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub tagged_bs: Point,
    pub interferers: Vec<Point>,
    /// Distance from the tagged BS to its nearest neighbouring BS.
    pub rho: f64,
    /// Draws discarded because the window held fewer than two BSs.
    pub resamples: u32,
}

/// A network snapshot with its N users and their CCPs.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub tagged_bs: Point,
    pub interferers: Vec<Point>,
    pub rho: f64,
    /// Users sorted by link distance (rank 1 first).
    pub ue_positions: Vec<Point>,
    pub ordered_distances: Vec<f64>,
    pub ccp: Vec<f64>,
}

/// Random stream of realization `index`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform_in_disk<R: Rng + ?Sized>(center: &Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let angle = 2.0 * PI * rng.random::<f64>();
    Point::polar(center, r, angle)
}

/// Draws a PPP in the window and tags the BS closest to the window centre.
pub fn gen_network_with<R: Rng + ?Sized>(
    params: &NetworkParams,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<Network> {
    sim.validate()?;
    let w = sim.window(params);
    let poisson = Poisson::new(params.lambda() * PI * w * w)
        .map_err(|e| Error::InvalidParameter(format!("poisson mean: {e}")))?;
    let origin = Point::default();
    let mut resamples = 0;
    loop {
        let count = poisson.sample(rng) as usize;
        if count >= 2 {
            let mut points: Vec<Point> = (0..count)
                .map(|_| uniform_in_disk(&origin, w, rng))
                .collect();
            let tagged_idx = points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.dist2(&origin).total_cmp(&b.1.dist2(&origin)))
                .map(|(k, _)| k)
                .expect("at least two points");
            let tagged_bs = points.swap_remove(tagged_idx);
            let rho = points
                .iter()
                .map(|p| p.dist2(&tagged_bs))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            return Ok(Network {
                tagged_bs,
                interferers: points,
                rho,
                resamples,
            });
        }
        resamples += 1;
        if resamples >= MAX_NETWORK_DRAWS {
            return Err(Error::NumericFailure(
                "window keeps holding fewer than two BSs; enlarge it".into(),
            ));
        }
    }
}

/// Network snapshot of realization `index`.
pub fn gen_network(params: &NetworkParams, sim: &SimConfig, index: u64) -> Result<Network> {
    gen_network_with(params, sim, &mut realization_rng(sim.rng_seed, index))
}

/// Radius of a disk around the tagged BS that contains its whole Voronoi
/// cell: a BS at distance `s` in a 45° sector confines the cell in that
/// sector to within `s/√2`.
fn cell_bounding_radius(net: &Network) -> Option<f64> {
    let c = net.tagged_bs;
    let mut nearest = [f64::INFINITY; CELL_SECTORS];
    for p in &net.interferers {
        let angle = (p.y - c.y).atan2(p.x - c.x) + PI;
        let k = ((angle / (2.0 * PI) * CELL_SECTORS as f64) as usize).min(CELL_SECTORS - 1);
        nearest[k] = nearest[k].min(p.dist(&c));
    }
    let worst = nearest.iter().copied().fold(0.0, f64::max);
    worst.is_finite().then_some(worst * FRAC_1_SQRT_2)
}

/// `n` users uniform over the tagged Voronoi cell, by rejection from a disk
/// that bounds the cell: a candidate is kept iff the tagged BS is its
/// nearest BS.
pub fn place_ues_enoma<R: Rng + ?Sized>(
    net: &Network,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let radius = cell_bounding_radius(net)
        .ok_or_else(|| Error::NumericFailure("tagged cell is not bounded by the window".into()))?;
    let c = net.tagged_bs;
    // A candidate lies within `radius` of the tagged BS, so BSs farther than
    // 2·radius can never be closer to it.
    let reach = 4.0 * radius * radius;
    let near: Vec<Point> = net
        .interferers
        .iter()
        .copied()
        .filter(|p| p.dist2(&c) <= reach)
        .collect();
    let mut ues = Vec::with_capacity(n);
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS_PER_UE {
            let u = uniform_in_disk(&c, radius, rng);
            let d = u.dist2(&c);
            if near.iter().all(|p| p.dist2(&u) >= d) {
                accepted = Some(u);
                break;
            }
        }
        ues.push(accepted.ok_or_else(|| {
            Error::NumericFailure("rejection sampling in the tagged cell failed".into())
        })?);
    }
    Ok(ues)
}

/// `n` users uniform over the in-disk of radius ρ/2.
pub fn place_ues_cnoma<R: Rng + ?Sized>(net: &Network, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| uniform_in_disk(&net.tagged_bs, 0.5 * net.rho, rng))
        .collect()
}

/// Sorts users by link distance; equal distances keep sampling order.
pub fn order_ues(tagged_bs: &Point, ues: Vec<Point>) -> (Vec<Point>, Vec<f64>) {
    let mut keyed: Vec<(f64, Point)> = ues.into_iter().map(|u| (u.dist(tagged_bs), u)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(d, u)| (u, d)).unzip()
}

/// CCP of a user at `ue` with link distance `link_distance` under Rayleigh
/// fading: `Π_x 1/(1 + R^η M ‖x − u‖^{−η})` over all interferers.
pub fn ccp_given_network(
    interferers: &[Point],
    ue: &Point,
    link_distance: f64,
    m_factor: f64,
    eta: f64,
) -> f64 {
    let half_eta = 0.5 * eta;
    let r2 = link_distance * link_distance;
    let log_ccp = compensated_sum(
        interferers
            .iter()
            .map(|x| (m_factor * (r2 / x.dist2(ue)).powf(half_eta)).ln_1p()),
    );
    (-log_ccp).exp()
}

fn realization_with<R: Rng + ?Sized>(
    params: &NetworkParams,
    sim: &SimConfig,
    scheme: Scheme,
    eff: &EffectiveAlloc,
    rng: &mut R,
) -> Result<(Realization, u32)> {
    let n = params.n_users();
    let mut cell_resamples = 0;
    loop {
        let net = gen_network_with(params, sim, rng)?;
        let ues = match scheme {
            Scheme::ENoma => match place_ues_enoma(&net, n, rng) {
                Ok(u) => u,
                Err(_) if cell_resamples < MAX_NETWORK_DRAWS => {
                    cell_resamples += 1;
                    continue;
                }
                Err(e) => return Err(e),
            },
            Scheme::CNoma => place_ues_cnoma(&net, n, rng),
        };
        let (ue_positions, ordered_distances) = order_ues(&net.tagged_bs, ues);
        let ccp = ue_positions
            .iter()
            .zip(&ordered_distances)
            .zip(&eff.m_factors)
            .map(|((u, &r), &m)| ccp_given_network(&net.interferers, u, r, m, params.eta()))
            .collect();
        let realization = Realization {
            tagged_bs: net.tagged_bs,
            interferers: net.interferers,
            rho: net.rho,
            ue_positions,
            ordered_distances,
            ccp,
        };
        return Ok((realization, cell_resamples + net.resamples));
    }
}

/// Realization `index` for the given scheme and allocation.
pub fn sample_realization(
    params: &NetworkParams,
    sim: &SimConfig,
    scheme: Scheme,
    eff: &EffectiveAlloc,
    index: u64,
) -> Result<Realization> {
    let mut rng = realization_rng(sim.rng_seed, index);
    realization_with(params, sim, scheme, eff, &mut rng).map(|(r, _)| r)
}

/// Per-rank CCP samples from a full simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// `ccp[i][k]`: CCP of rank `i+1` in realization `k`.
    pub ccp: Vec<Vec<f64>>,
    /// Discarded draws (windows with < 2 BSs or unbounded cells).
    pub resamples: u64,
}

impl SimOutput {
    pub fn rank(&self, i: usize) -> &[f64] {
        &self.ccp[i - 1]
    }
}

/// Runs `sim.n_realizations` independent snapshots in parallel.
pub fn simulate(
    params: &NetworkParams,
    scheme: Scheme,
    eff: &EffectiveAlloc,
    sim: &SimConfig,
) -> Result<SimOutput> {
    sim.validate()?;
    if eff.m_factors.len() != params.n_users() {
        return Err(Error::InvalidParameter(
            "effective allocation does not match N".into(),
        ));
    }
    let per_run: Vec<(Vec<f64>, u32)> = (0..sim.n_realizations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = realization_rng(sim.rng_seed, k);
            realization_with(params, sim, scheme, eff, &mut rng).map(|(r, s)| (r.ccp, s))
        })
        .collect::<Result<_>>()?;
    let n = params.n_users();
    let mut ccp = vec![Vec::with_capacity(per_run.len()); n];
    let mut resamples = 0u64;
    for (row, s) in per_run {
        for (slot, v) in ccp.iter_mut().zip(row) {
            slot.push(v);
        }
        resamples += u64::from(s);
    }
    Ok(SimOutput { ccp, resamples })
}

/// Fading-level check of the joint SIC decoding event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointEventCheck {
    /// Fraction of fading draws in which every message `j ≥ i` decodes.
    pub empirical: f64,
    /// Product-form CCP, or 0 when some effective margin is not positive.
    pub reduced: f64,
    /// Binomial standard error at the reduced value.
    pub std_err: f64,
}

/// Samples `h_i, g_y ~ Exp(1)` and evaluates every decoding step
/// `SIR_j^i > θ_j`, `j = i..N`, with the full intracell terms.
pub fn validate_joint_event<R: Rng + ?Sized>(
    realization: &Realization,
    alloc: &Allocation,
    params: &NetworkParams,
    i: usize,
    n_fading: usize,
    rng: &mut R,
) -> Result<JointEventCheck> {
    params.check_rank(i)?;
    if alloc.len() != params.n_users() || realization.ue_positions.len() != params.n_users() {
        return Err(Error::InvalidParameter(
            "allocation does not match N".into(),
        ));
    }
    if n_fading == 0 {
        return Err(domain("need at least one fading sample"));
    }
    let eta = params.eta();
    let beta = params.beta_sic();
    let p = alloc.powers();
    let theta = alloc.thresholds();
    let n = p.len();
    let ue = realization.ue_positions[i - 1];
    let r = realization.ordered_distances[i - 1];
    let path_gain: Vec<f64> = realization
        .interferers
        .iter()
        .map(|x| x.dist2(&ue).powf(-0.5 * eta))
        .collect();
    let link_gain = r.powf(-eta);
    let mut hits = 0usize;
    for _ in 0..n_fading {
        let h: f64 = rng.sample(Exp1);
        let interference: f64 = path_gain
            .iter()
            .map(|g| g * rng.sample::<f64, _>(Exp1))
            .sum();
        let signal = h * link_gain;
        let covered = (i - 1..n).all(|j| {
            let stronger: f64 = p[..j].iter().sum();
            let weaker: f64 = p[j + 1..].iter().sum();
            let sir = signal * p[j] / (signal * (stronger + beta * weaker) + interference);
            sir > theta[j]
        });
        if covered {
            hits += 1;
        }
    }
    let margins = effective_margins(beta, alloc);
    let reduced = if margins.iter().all(|m| *m > 0.0) {
        let m_i = (i - 1..n)
            .map(|j| theta[j] / margins[j])
            .fold(0.0, f64::max);
        ccp_given_network(&realization.interferers, &ue, r, m_i, eta)
    } else {
        0.0
    };
    let nf = n_fading as f64;
    Ok(JointEventCheck {
        empirical: hits as f64 / nf,
        reduced,
        std_err: (reduced * (1.0 - reduced) / nf).sqrt(),
    })
}

/// Sample estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Sample mean of `ccp^b`.
pub fn empirical_moment(samples: &[f64], b: f64) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().map(|x| x.powf(b))) / n;
    let mut ss = CompensatedSum::new();
    for x in samples {
        let d = x.powf(b) - mean;
        ss.add(d * d);
    }
    let var = if samples.len() > 1 {
        ss.value() / (n - 1.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        std_err: (var / n).sqrt(),
    })
}

/// Empirical meta distribution `P(CCP > α)` on a grid.
pub fn empirical_md(samples: &[f64], alpha_grid: &[f64]) -> Result<Vec<Estimate>> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    let n = samples.len() as f64;
    Ok(alpha_grid
        .iter()
        .map(|&a| {
            let p = samples.iter().filter(|&&x| x > a).count() as f64 / n;
            Estimate {
                value: p,
                std_err: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect())
}

/// Kolmogorov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max((f - (k + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
