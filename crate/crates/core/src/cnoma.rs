//! CCP moments for C-NOMA, where the N users are uniform over the in-disk
//! of radius ρ/2 around their BS and ρ is the nearest-neighbour BS distance.
//!
//! Two routes are provided. The reference route keeps a guard zone of
//! radius `ρ − R_i` around the user plus the neighbouring BS at distance
//! (approximately) ρ and integrates over `(ρ, R_i)`. The simplified route
//! shrinks the guard zone to `R_i` and drops the neighbour, which leaves a
//! single integral over ρ per component.

use std::f64::consts::PI;

use crate::enoma::rdp_exponent;
use crate::error::{domain, Error, Result};
use crate::model::{
    decoding_factor, nn_distance_pdf, nn_distance_quantile, ordered_pdf_cnoma, weak_coefficient,
    Allocation, NetworkParams,
};
use crate::quad::{integrate_fallible, QuadConfig};
use crate::specfun::{binomial, hyp2f1_cov, lower_inc_gamma_scaled, Tolerance};
use crate::sum::CompensatedSum;

/// Quadrature settings for the C-NOMA integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// The ρ integral is truncated at this quantile of the nearest-neighbour law.
    pub rho_cutoff_quantile: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            rho_cutoff_quantile: 1.0 - 1e-10,
            max_subdivisions: 500,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be > 0".into(),
            ));
        }
        if !(self.rho_cutoff_quantile > 0.0 && self.rho_cutoff_quantile < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho cutoff quantile must lie in (0,1), got {}",
                self.rho_cutoff_quantile
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn outer(&self) -> QuadConfig {
        QuadConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    /// Nested integrals run ten times tighter than the outer one.
    pub fn inner(&self) -> QuadConfig {
        QuadConfig {
            rel_tol: self.rel_tol / 10.0,
            abs_tol: self.abs_tol / 10.0,
            max_subdivisions: self.max_subdivisions,
        }
    }

    fn rho_max(&self, params: &NetworkParams) -> Result<f64> {
        nn_distance_quantile(params, self.rho_cutoff_quantile)
    }
}

fn check_order(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain(format!("moment order must be > 0, got {b}")));
    }
    Ok(())
}

/// `2πλ ∫_{ρ−r}^∞ (1 − (1 + M r^η / a^η)^{−b}) a da`, the log-Laplace
/// exponent of the interference from a PPP outside a disk of radius `ρ − r`
/// around a user at link distance `r`.
///
/// Closed form: `πλ (ρ−r)² (₂F₁(b, −δ; 1−δ; −M r^η (ρ−r)^{−η}) − 1)`.
pub fn guard_zone_exponent(
    params: &NetworkParams,
    m_factor: f64,
    b: f64,
    rho: f64,
    r: f64,
    tol: &Tolerance,
) -> Result<f64> {
    if !(rho > 0.0 && r >= 0.0 && r < rho) {
        return Err(domain(format!(
            "guard zone needs 0 <= r < rho, got r={r}, rho={rho}"
        )));
    }
    let guard = rho - r;
    let x = m_factor * (r / guard).powf(params.eta());
    let f = hyp2f1_cov(b, params.delta(), x, tol)?;
    Ok(PI * params.lambda() * guard * guard * (f - 1.0))
}

/// Reference C-NOMA moment: double integral over the neighbour distance ρ
/// and the ordered link distance `R_i ∈ [0, ρ/2]`.
pub fn moment_cnoma_exact(
    params: &NetworkParams,
    alloc: &Allocation,
    i: usize,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let m = decoding_factor(params, alloc, i)?;
    moment_cnoma_exact_given_m(params, m, i, b, quad)
}

pub fn moment_cnoma_exact_given_m(
    params: &NetworkParams,
    m_factor: f64,
    i: usize,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    params.check_rank(i)?;
    check_order(b)?;
    quad.validate()?;
    let n = params.n_users();
    let eta = params.eta();
    let tol = Tolerance::default();
    let inner_cfg = quad.inner();
    let given_rho = |rho: f64| -> Result<f64> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        integrate_fallible(
            |r| {
                let density = ordered_pdf_cnoma(i, n, rho, r)?;
                if density == 0.0 {
                    return Ok(0.0);
                }
                let field = guard_zone_exponent(params, m_factor, b, rho, r, &tol)?;
                let neighbour = (1.0 + m_factor * (r / rho).powf(eta)).powf(-b);
                Ok(density * (-field).exp() * neighbour)
            },
            0.0,
            0.5 * rho,
            &inner_cfg,
        )
    };
    let rho_max = quad.rho_max(params)?;
    integrate_fallible(
        |rho| Ok(nn_distance_pdf(params, rho)? * given_rho(rho)?),
        0.0,
        rho_max,
        &quad.outer(),
    )
}

/// Simplified C-NOMA moment: alternating sum of one ρ integral per
/// component rank `j = i..N`.
pub fn moment_cnoma_approx(
    params: &NetworkParams,
    alloc: &Allocation,
    i: usize,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let m = decoding_factor(params, alloc, i)?;
    moment_cnoma_approx_given_m(params, m, i, b, quad)
}

pub fn moment_cnoma_approx_given_m(
    params: &NetworkParams,
    m_factor: f64,
    i: usize,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    params.check_rank(i)?;
    check_order(b)?;
    quad.validate()?;
    let n = params.n_users();
    let hyp = hyp2f1_cov(b, params.delta(), m_factor, &Tolerance::default())?;
    // Independent of ρ, so hoisted out of every integrand.
    let rate = PI * params.lambda() * (hyp - 1.0) / 4.0;
    let rho_max = quad.rho_max(params)?;
    let mut sum = CompensatedSum::new();
    for m in i..=n {
        let c = binomial((n - 1) as u64, (m - 1) as u64)? * n as f64;
        let term = integrate_fallible(
            |rho| {
                Ok(nn_distance_pdf(params, rho)?
                    * c
                    * lower_inc_gamma_scaled(m as u32, rate * rho * rho)?)
            },
            0.0,
            rho_max,
            &quad.outer(),
        )?;
        sum.add(weak_coefficient(i, m) * term);
    }
    Ok(sum.value())
}

/// Simplified-route moment conditioned on ρ (the ρ-integrand of
/// [`moment_cnoma_approx`] without the nearest-neighbour density).
pub fn approx_moment_given_rho(
    params: &NetworkParams,
    m_factor: f64,
    i: usize,
    b: f64,
    rho: f64,
) -> Result<f64> {
    params.check_rank(i)?;
    check_order(b)?;
    let n = params.n_users();
    let hyp = hyp2f1_cov(b, params.delta(), m_factor, &Tolerance::default())?;
    let x = PI * params.lambda() * rho * rho * (hyp - 1.0) / 4.0;
    weak_sum(n, i, x)
}

fn weak_sum(n: usize, i: usize, x: f64) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    for m in i..=n {
        let c = binomial((n - 1) as u64, (m - 1) as u64)? * n as f64;
        sum.add(weak_coefficient(i, m) * c * lower_inc_gamma_scaled(m as u32, x)?);
    }
    Ok(sum.value())
}

/// PGFL of the ordered relative distance process of rank `i` conditioned
/// on ρ, with the guard zone reduced to the link distance and the
/// neighbouring BS dropped.
pub fn pgfl_cnoma_given_rho<F: Fn(f64) -> f64>(
    i: usize,
    params: &NetworkParams,
    rho: f64,
    f: F,
    quad: &QuadConfig,
) -> Result<f64> {
    params.check_rank(i)?;
    if !(rho > 0.0) {
        return Err(domain(format!("rho must be > 0, got {rho}")));
    }
    let exponent = rdp_exponent(&f, quad)?;
    let x = PI * params.lambda() * rho * rho * exponent / 2.0;
    weak_sum(params.n_users(), i, x)
}
