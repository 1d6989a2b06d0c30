//! Per-user rates and a two-user power/threshold search under a minimum
//! rate constraint on the weak user.
//!
//! Rates are SCP × `ln(1 + θ)`, i.e. in nats. A minimum-rate target must use
//! the same base; equality-to-target checks do not depend on the base.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{decoding_factor, Allocation, NetworkParams, Scheme};
use crate::moments::{moment_given_m, MomentMethod};

const P2_GRID: usize = 512;
const GOLDEN_ITERS: usize = 60;
const ROOT_ITERS: usize = 200;
const PEAK_TOL: f64 = 1e-8;
const RATE_TOL: f64 = 1e-10;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Rate of rank `i`: SCP × `ln(1 + θ_i)`; zero when UE_i cannot decode.
pub fn ue_rate(
    params: &NetworkParams,
    alloc: &Allocation,
    scheme: Scheme,
    method: MomentMethod,
    i: usize,
) -> Result<f64> {
    let m = match decoding_factor(params, alloc, i) {
        Ok(m) => m,
        Err(Error::InfeasibleAllocation { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let scp = moment_given_m(params, scheme, method, m, i, 1.0)?;
    Ok(scp * alloc.thresholds()[i - 1].ln_1p())
}

/// Maximize the total rate over `(P₂, θ₂)` for fixed θ₁, subject to UE₂'s
/// rate equal to `tmr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaProblem {
    pub params: NetworkParams,
    pub scheme: Scheme,
    pub method: MomentMethod,
    /// Linear SIR threshold of UE₁.
    pub theta_1: f64,
    /// Minimum rate of UE₂, in nats.
    pub tmr: f64,
}

impl RaProblem {
    pub fn new(params: NetworkParams, scheme: Scheme, theta_1: f64, tmr: f64) -> Result<Self> {
        let p = Self {
            params,
            scheme,
            method: MomentMethod::Exact,
            theta_1,
            tmr,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.n_users() != 2 {
            return Err(Error::InvalidParameter(
                "the rate-constrained search handles N = 2 only".into(),
            ));
        }
        if !(self.theta_1 > 0.0 && self.theta_1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta_1 must be > 0, got {}",
                self.theta_1
            )));
        }
        if !(self.tmr > 0.0 && self.tmr.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tmr must be > 0, got {}",
                self.tmr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmrSolution {
    pub p2: f64,
    /// Linear SIR threshold of UE₂.
    pub theta_2: f64,
    pub rate_1: f64,
    pub rate_2: f64,
    pub total_rate: f64,
}

impl TmrSolution {
    pub fn allocation(&self, theta_1: f64) -> Result<Allocation> {
        Allocation::new(vec![1.0 - self.p2, self.p2], vec![theta_1, self.theta_2])
    }
}

struct Search<'a> {
    problem: &'a RaProblem,
}

impl Search<'_> {
    // UE₂'s SCP depends on (P₂, θ₂) only through M₂ = θ₂/(P₂ − θ₂P₁).
    fn rate_2(&self, p2: f64, theta_2: f64) -> Result<f64> {
        let p1 = 1.0 - p2;
        let margin = p2 - theta_2 * p1;
        if !(margin > 0.0) || theta_2 <= 0.0 {
            return Ok(0.0);
        }
        let pr = self.problem;
        let scp = moment_given_m(&pr.params, pr.scheme, pr.method, theta_2 / margin, 2, 1.0)?;
        Ok(scp * theta_2.ln_1p())
    }

    fn rate_1(&self, p2: f64, theta_2: f64) -> Result<f64> {
        let pr = self.problem;
        let alloc = Allocation::new(vec![1.0 - p2, p2], vec![pr.theta_1, theta_2])?;
        ue_rate(&pr.params, &alloc, pr.scheme, pr.method, 1)
    }

    /// Smallest θ₂ meeting the rate target at this power split, if any.
    fn theta_2_for(&self, p2: f64) -> Result<Option<f64>> {
        let tmr = self.problem.tmr;
        let theta_max = p2 / (1.0 - p2);
        let (mut a, mut b) = (0.0, theta_max);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.rate_2(p2, c)?;
        let mut fd = self.rate_2(p2, d)?;
        for _ in 0..GOLDEN_ITERS {
            if fc.max(fd) >= tmr || b - a <= PEAK_TOL * theta_max {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.rate_2(p2, c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.rate_2(p2, d)?;
            }
        }
        let (peak, fpeak) = if fc >= fd { (c, fc) } else { (d, fd) };
        if fpeak < tmr {
            return Ok(None);
        }
        // The rate rises from zero up to the peak; Illinois regula falsi on
        // that bracket.
        let (mut lo, mut hi) = (0.0, peak);
        let (mut glo, mut ghi) = (-tmr, fpeak - tmr);
        let mut side = 0i8;
        for _ in 0..ROOT_ITERS {
            if ghi.abs() <= RATE_TOL * tmr || hi - lo <= 1e-15 * hi {
                break;
            }
            let mut x = hi - ghi * (hi - lo) / (ghi - glo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let g = self.rate_2(p2, x)? - tmr;
            if g < 0.0 {
                lo = x;
                glo = g;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                ghi = g;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(Some(hi))
    }

    fn evaluate(&self, p2: f64) -> Result<Option<TmrSolution>> {
        let Some(theta_2) = self.theta_2_for(p2)? else {
            return Ok(None);
        };
        let rate_1 = self.rate_1(p2, theta_2)?;
        let rate_2 = self.rate_2(p2, theta_2)?;
        Ok(Some(TmrSolution {
            p2,
            theta_2,
            rate_1,
            rate_2,
            total_rate: rate_1 + rate_2,
        }))
    }
}

/// The candidate at power split `p2`: the smallest θ₂ meeting the target
/// and the resulting rates, or `None` when no θ₂ reaches the target.
pub fn candidate(problem: &RaProblem, p2: f64) -> Result<Option<TmrSolution>> {
    problem.validate()?;
    if !(p2 > 0.0 && p2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "P2 must lie in (0,1), got {p2}"
        )));
    }
    Search { problem }.evaluate(p2)
}

/// The P₂ grid searched by [`solve_tmr`].
pub fn p2_grid() -> Vec<f64> {
    (1..=P2_GRID)
        .map(|k| k as f64 / (P2_GRID + 1) as f64)
        .collect()
}

fn total(s: &Option<TmrSolution>) -> f64 {
    s.map_or(f64::NEG_INFINITY, |s| s.total_rate)
}

/// Grid search over P₂ with golden-section refinement around the best
/// grid point. For each P₂, θ₂ is the smallest threshold whose UE₂ rate
/// equals the target.
pub fn solve_tmr(problem: &RaProblem) -> Result<TmrSolution> {
    problem.validate()?;
    let search = Search { problem };
    let grid = p2_grid();
    // The best UE₂ rate at fixed θ₂ grows with P₂ (M₂ shrinks), so the
    // feasible grid points form a suffix; locate its start by bisection.
    let (mut lo, mut hi) = (0usize, grid.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if search.theta_2_for(grid[mid])?.is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let candidates: Vec<Option<TmrSolution>> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &p2)| {
            if k < lo {
                Ok(None)
            } else {
                search.evaluate(p2)
            }
        })
        .collect::<Result<_>>()?;
    let (best_idx, best) = candidates
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.map(|c| (k, c)))
        .max_by(|a, b| a.1.total_rate.total_cmp(&b.1.total_rate))
        .ok_or(Error::InfeasibleTmr { tmr: problem.tmr })?;

    let mut a = if best_idx == 0 {
        grid[0] * 0.5
    } else {
        grid[best_idx - 1]
    };
    let mut b = grid
        .get(best_idx + 1)
        .copied()
        .unwrap_or(0.5 * (1.0 + grid[best_idx]));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut sc = search.evaluate(c)?;
    let mut sd = search.evaluate(d)?;
    let mut refined = best;
    for _ in 0..GOLDEN_ITERS {
        for s in [sc, sd].into_iter().flatten() {
            if s.total_rate > refined.total_rate {
                refined = s;
            }
        }
        if b - a < 1e-9 {
            break;
        }
        if total(&sc) > total(&sd) {
            b = d;
            d = c;
            sd = sc;
            c = b - INV_PHI * (b - a);
            sc = search.evaluate(c)?;
        } else {
            a = c;
            c = d;
            sc = sd;
            d = a + INV_PHI * (b - a);
            sd = search.evaluate(d)?;
        }
    }
    Ok(refined)
}
