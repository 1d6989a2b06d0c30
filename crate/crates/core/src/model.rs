//! Network and allocation parameters, the effective-margin algebra of the
//! SIC decoding chain, and the link-distance densities of both UE
//! placement schemes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::binomial;

// Tolerance on the power budget Σ P_i = 1.
const POWER_BUDGET_TOL: f64 = 1e-9;

/// Parameters of the Poisson cellular network.
///
/// `delta = 2/eta` is derived and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    lambda: f64,
    eta: f64,
    beta_sic: f64,
    n_users: usize,
}

impl NetworkParams {
    pub fn new(lambda: f64, eta: f64, beta_sic: f64, n_users: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if !(eta > 2.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be > 2, got {eta}"
            )));
        }
        if !(0.0..=1.0).contains(&beta_sic) {
            return Err(Error::InvalidParameter(format!(
                "beta_sic must lie in [0,1], got {beta_sic}"
            )));
        }
        if n_users == 0 {
            return Err(Error::InvalidParameter("n_users must be >= 1".into()));
        }
        Ok(Self {
            lambda,
            eta,
            beta_sic,
            n_users,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        2.0 / self.eta
    }

    pub fn beta_sic(&self) -> f64 {
        self.beta_sic
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn with_beta_sic(self, beta_sic: f64) -> Result<Self> {
        Self::new(self.lambda, self.eta, beta_sic, self.n_users)
    }

    pub fn with_n_users(self, n_users: usize) -> Result<Self> {
        Self::new(self.lambda, self.eta, self.beta_sic, n_users)
    }

    pub(crate) fn check_rank(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n_users {
            return Err(domain(format!("rank {i} outside 1..={}", self.n_users)));
        }
        Ok(())
    }
}

impl Default for NetworkParams {
    /// λ = 10, η = 4, perfect SIC, two users.
    fn default() -> Self {
        Self {
            lambda: 10.0,
            eta: 4.0,
            beta_sic: 0.0,
            n_users: 2,
        }
    }
}

/// Power shares and linear SIR thresholds, indexed by rank (UE₁ strongest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    powers: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Allocation {
    pub fn new(powers: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if powers.is_empty() || powers.len() != thresholds.len() {
            return Err(Error::InvalidParameter(format!(
                "need one power and one threshold per UE, got {} and {}",
                powers.len(),
                thresholds.len()
            )));
        }
        if let Some(p) = powers.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "powers must be > 0, got {p}"
            )));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must be > 0, got {t}"
            )));
        }
        let total: f64 = powers.iter().sum();
        if (total - 1.0).abs() > POWER_BUDGET_TOL {
            return Err(Error::InvalidParameter(format!(
                "powers must sum to 1, got {total}"
            )));
        }
        Ok(Self { powers, thresholds })
    }

    /// Thresholds given in dB.
    pub fn from_db(powers: Vec<f64>, thresholds_db: &[f64]) -> Result<Self> {
        Self::new(
            powers,
            thresholds_db.iter().map(|&t| db_to_linear(t)).collect(),
        )
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// Effective margins `P̃_j` and decoding factors `M_i = max_{j≥i} θ_j / P̃_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAlloc {
    pub tilde_p: Vec<f64>,
    pub m_factors: Vec<f64>,
}

impl EffectiveAlloc {
    /// `M_i` for rank `i` (1-based).
    pub fn m_factor(&self, i: usize) -> f64 {
        self.m_factors[i - 1]
    }
}

/// Raw margins `P̃_j = P_j − θ_j(Σ_{m<j} P_m + β Σ_{k>j} P_k)`, without the
/// feasibility check.
pub fn effective_margins(beta_sic: f64, alloc: &Allocation) -> Vec<f64> {
    let p = alloc.powers();
    let mut stronger = 0.0;
    p.iter()
        .zip(alloc.thresholds())
        .enumerate()
        .map(|(j, (&pj, &tj))| {
            let weaker: f64 = p[j + 1..].iter().sum();
            let margin = pj - tj * (stronger + beta_sic * weaker);
            stronger += pj;
            margin
        })
        .collect()
}

/// Effective margins and decoding factors.
///
/// A non-positive margin means the joint SIC event has probability zero;
/// it is reported as [`Error::InfeasibleAllocation`].
pub fn effective_alloc(params: &NetworkParams, alloc: &Allocation) -> Result<EffectiveAlloc> {
    if alloc.len() != params.n_users() {
        return Err(Error::InvalidParameter(format!(
            "allocation has {} UEs, network has N = {}",
            alloc.len(),
            params.n_users()
        )));
    }
    let tilde_p = effective_margins(params.beta_sic(), alloc);
    if let Some((j, &margin)) = tilde_p.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
        return Err(Error::InfeasibleAllocation {
            rank: j + 1,
            margin,
        });
    }
    let ratios: Vec<f64> = alloc
        .thresholds()
        .iter()
        .zip(&tilde_p)
        .map(|(t, p)| t / p)
        .collect();
    let mut m_factors = vec![0.0; ratios.len()];
    let mut running = 0.0f64;
    for (slot, r) in m_factors.iter_mut().zip(&ratios).rev() {
        running = running.max(*r);
        *slot = running;
    }
    Ok(EffectiveAlloc { tilde_p, m_factors })
}

/// Decoding factor `M_i` of rank `i` alone.
///
/// Only the margins of messages `j ≥ i` enter UE_i's decoding chain, so a
/// non-positive margin of a stronger UE does not make rank `i` infeasible.
pub fn decoding_factor(params: &NetworkParams, alloc: &Allocation, i: usize) -> Result<f64> {
    if alloc.len() != params.n_users() {
        return Err(Error::InvalidParameter(format!(
            "allocation has {} UEs, network has N = {}",
            alloc.len(),
            params.n_users()
        )));
    }
    params.check_rank(i)?;
    let margins = effective_margins(params.beta_sic(), alloc);
    let mut m = 0.0f64;
    for (j, (&margin, &theta)) in margins
        .iter()
        .zip(alloc.thresholds())
        .enumerate()
        .skip(i - 1)
    {
        if !(margin > 0.0) {
            return Err(Error::InfeasibleAllocation {
                rank: j + 1,
                margin,
            });
        }
        m = m.max(theta / margin);
    }
    Ok(m)
}

/// UE placement scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// UEs uniform over the whole Voronoi cell.
    #[serde(rename = "e-noma")]
    ENoma,
    /// UEs uniform over the in-disk of radius ρ/2.
    #[serde(rename = "c-noma")]
    CNoma,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::ENoma, Scheme::CNoma];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ENoma => "e-noma",
            Scheme::CNoma => "c-noma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "e-noma" | "enoma" | "e" => Ok(Scheme::ENoma),
            "c-noma" | "cnoma" | "c" => Ok(Scheme::CNoma),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// A link-distance law given by its pdf and cdf.
pub trait DistanceLaw {
    fn pdf(&self, r: f64) -> f64;
    fn cdf(&self, r: f64) -> f64;
}

/// `f(r) = 2πλ r e^{−πλr²}`: the contact distance of a PPP, and also the
/// nearest-neighbour distance between BSs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rayleigh {
    pub lambda: f64,
}

impl DistanceLaw for Rayleigh {
    fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        2.0 * PI * self.lambda * r * (-PI * self.lambda * r * r).exp()
    }

    fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        -(-PI * self.lambda * r * r).exp_m1()
    }
}

impl Rayleigh {
    /// Inverse cdf.
    pub fn quantile(&self, p: f64) -> f64 {
        (-(-p).ln_1p() / (PI * self.lambda)).sqrt()
    }
}

/// Uniform point in a disk of radius ρ/2: `f(r) = 8r/ρ²` on `[0, ρ/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InDisk {
    pub rho: f64,
}

impl DistanceLaw for InDisk {
    fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 || r > 0.5 * self.rho {
            return 0.0;
        }
        8.0 * r / (self.rho * self.rho)
    }

    fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else if r >= 0.5 * self.rho {
            1.0
        } else {
            4.0 * r * r / (self.rho * self.rho)
        }
    }
}

fn check_order_args(i: usize, n: usize, r: f64) -> Result<()> {
    if n == 0 || i == 0 || i > n {
        return Err(domain(format!("order statistic rank {i} outside 1..={n}")));
    }
    if !(r >= 0.0) {
        return Err(domain(format!("distance must be >= 0, got {r}")));
    }
    Ok(())
}

fn base_coefficient(n: usize, j: usize) -> f64 {
    binomial((n - 1) as u64, (j - 1) as u64).expect("j <= n") * n as f64
}

/// Weight of the larger-index component `m ≥ i` when the density of the
/// i-th order statistic is expanded in powers of the cdf:
/// `(−1)^{m−i} C(m−1, i−1)`.
pub fn weak_coefficient(i: usize, m: usize) -> f64 {
    debug_assert!(m >= i && i >= 1);
    let c = binomial((m - 1) as u64, (i - 1) as u64).expect("i <= m");
    if (m - i).is_multiple_of(2) {
        c
    } else {
        -c
    }
}

/// Weight of the smaller-index component `m ≤ i` when the density of the
/// i-th order statistic is expanded in powers of the survival function:
/// `(−1)^{i−m} C(N−m, i−m) = (−1)^{i−m} (N−m)! / ((N−i)! (i−m)!)`.
pub fn strong_coefficient(n: usize, i: usize, m: usize) -> f64 {
    debug_assert!(m >= 1 && m <= i && i <= n);
    let c = binomial((n - m) as u64, (i - m) as u64).expect("m <= i");
    if (i - m).is_multiple_of(2) {
        c
    } else {
        -c
    }
}

/// `f_{R_i}(r) = C(N−1, i−1) N f(r) F(r)^{i−1} (1 − F(r))^{N−i}`.
pub fn ordered_pdf<L: DistanceLaw + ?Sized>(i: usize, n: usize, base: &L, r: f64) -> Result<f64> {
    check_order_args(i, n, r)?;
    let f = base.pdf(r);
    let cdf = base.cdf(r);
    Ok(base_coefficient(n, i) * f * cdf.powi((i - 1) as i32) * (1.0 - cdf).powi((n - i) as i32))
}

/// The same density as [`ordered_pdf`], written as an alternating sum of
/// `f_{R̂_j} = C(N−1, j−1) N f F^{j−1}` over `j = i..N`.
pub fn ordered_pdf_weak_expansion<L: DistanceLaw + ?Sized>(
    i: usize,
    n: usize,
    base: &L,
    r: f64,
) -> Result<f64> {
    check_order_args(i, n, r)?;
    let f = base.pdf(r);
    let cdf = base.cdf(r);
    Ok(crate::sum::compensated_sum((i..=n).map(|m| {
        weak_coefficient(i, m) * base_coefficient(n, m) * f * cdf.powi((m - 1) as i32)
    })))
}

/// The same density as [`ordered_pdf`], written as an alternating sum of
/// `f_{R̃_j} = C(N−1, j−1) N f (1−F)^{N−j}` over `j = 1..i`.
pub fn ordered_pdf_strong_expansion<L: DistanceLaw + ?Sized>(
    i: usize,
    n: usize,
    base: &L,
    r: f64,
) -> Result<f64> {
    check_order_args(i, n, r)?;
    let f = base.pdf(r);
    let sf = 1.0 - base.cdf(r);
    Ok(crate::sum::compensated_sum((1..=i).map(|m| {
        strong_coefficient(n, i, m) * base_coefficient(n, m) * f * sf.powi((n - m) as i32)
    })))
}

/// Unordered E-NOMA link-distance density `2πλ r e^{−πλr²}`.
pub fn unordered_pdf_enoma(params: &NetworkParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain(format!("distance must be >= 0, got {r}")));
    }
    Ok(Rayleigh {
        lambda: params.lambda(),
    }
    .pdf(r))
}

/// Density of the distance from a BS to its nearest neighbouring BS.
pub fn nn_distance_pdf(params: &NetworkParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("distance must be >= 0, got {x}")));
    }
    Ok(Rayleigh {
        lambda: params.lambda(),
    }
    .pdf(x))
}

pub fn nn_distance_cdf(params: &NetworkParams, x: f64) -> f64 {
    Rayleigh {
        lambda: params.lambda(),
    }
    .cdf(x)
}

/// Distance below which a fraction `p` of the nearest-neighbour mass lies.
pub fn nn_distance_quantile(params: &NetworkParams, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(domain(format!("quantile level must lie in [0,1), got {p}")));
    }
    Ok(Rayleigh {
        lambda: params.lambda(),
    }
    .quantile(p))
}

/// C-NOMA ordered link-distance density conditioned on ρ:
/// `C(N−1,i−1)·8rN/ρ²·(4r²/ρ²)^{i−1}·(1 − 4r²/ρ²)^{N−i}` on `[0, ρ/2]`.
pub fn ordered_pdf_cnoma(i: usize, n: usize, rho: f64, r: f64) -> Result<f64> {
    check_order_args(i, n, r)?;
    if !(rho > 0.0) {
        return Err(domain(format!("rho must be > 0, got {rho}")));
    }
    if r > 0.5 * rho {
        return Ok(0.0);
    }
    let s = 4.0 * r * r / (rho * rho);
    Ok(
        binomial((n - 1) as u64, (i - 1) as u64)? * 8.0 * r * n as f64 / (rho * rho)
            * s.powi((i - 1) as i32)
            * (1.0 - s).powi((n - i) as i32),
    )
}
