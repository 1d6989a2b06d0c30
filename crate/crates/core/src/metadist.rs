//! Beta moment-matched meta distribution of the CCP.
//!
//! With `β = (m1 − m2)(1 − m1)/(m2 − m1²)` the matched law is
//! `Beta(β m1/(1 − m1), β)`, whose mean is `m1` and second moment `m2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::reg_inc_beta;

// Below this variance the matched shapes blow up; a point mass is used.
const DEGENERATE_VARIANCE: f64 = 1e-14;
// Slack on the moment-ordering checks, absorbing floating-point noise.
const MOMENT_SLACK: f64 = 1e-12;
const QUANTILE_TOL: f64 = 1e-10;
const QUANTILE_MAX_STEPS: usize = 1100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMd {
    pub m1: f64,
    pub m2: f64,
    pub shape_a: f64,
    pub shape_b: f64,
}

/// Meta distribution: a matched beta law, or a point mass when the CCP is
/// (numerically) deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MetaDistribution {
    Beta(BetaMd),
    PointMass(f64),
}

/// Matches a beta distribution to the first two CCP moments.
pub fn build_md(m1: f64, m2: f64) -> Result<MetaDistribution> {
    let invalid = || Error::InvalidMoments { m1, m2 };
    if !(m1.is_finite() && m2.is_finite()) {
        return Err(invalid());
    }
    if !(-MOMENT_SLACK..=1.0 + MOMENT_SLACK).contains(&m1) {
        return Err(invalid());
    }
    if m2 > m1 + MOMENT_SLACK || m2 < m1 * m1 - MOMENT_SLACK {
        return Err(invalid());
    }
    let var = m2 - m1 * m1;
    if var < DEGENERATE_VARIANCE || m1 >= 1.0 || m1 <= 0.0 {
        return Ok(MetaDistribution::PointMass(m1.clamp(0.0, 1.0)));
    }
    let beta = (m1 - m2) * (1.0 - m1) / var;
    if !(beta > 0.0) {
        // m2 = m1: all mass on {0, 1}, no beta law fits.
        return Err(invalid());
    }
    Ok(MetaDistribution::Beta(BetaMd {
        m1,
        m2,
        shape_a: beta * m1 / (1.0 - m1),
        shape_b: beta,
    }))
}

impl MetaDistribution {
    /// `P(CCP > α)`.
    pub fn ccdf(&self, alpha: f64) -> f64 {
        match self {
            MetaDistribution::Beta(md) => md.ccdf(alpha),
            MetaDistribution::PointMass(p) => {
                if *p > alpha {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            MetaDistribution::Beta(md) => md.m1,
            MetaDistribution::PointMass(p) => *p,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            MetaDistribution::Beta(md) => md.m2 - md.m1 * md.m1,
            MetaDistribution::PointMass(_) => 0.0,
        }
    }

    /// Reliability `α` such that a fraction `p` of links has CCP above it.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        match self {
            MetaDistribution::Beta(md) => md.quantile(p),
            MetaDistribution::PointMass(x) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Domain(format!(
                        "fraction must lie in [0,1], got {p}"
                    )));
                }
                Ok(*x)
            }
        }
    }

    pub fn shapes(&self) -> Option<(f64, f64)> {
        match self {
            MetaDistribution::Beta(md) => Some((md.shape_a, md.shape_b)),
            MetaDistribution::PointMass(_) => None,
        }
    }
}

impl BetaMd {
    pub fn ccdf(&self, alpha: f64) -> f64 {
        let alpha = alpha.clamp(0.0, 1.0);
        // Arguments are validated at construction, so the only failure mode
        // is continued-fraction non-convergence, which cannot occur for
        // finite positive shapes within the default term cap.
        1.0 - reg_inc_beta(alpha, self.shape_a, self.shape_b)
            .expect("incomplete beta with validated shapes")
    }

    /// Mean of the matched law, `a/(a+b)`.
    pub fn fitted_mean(&self) -> f64 {
        self.shape_a / (self.shape_a + self.shape_b)
    }

    /// Second moment of the matched law, `a(a+1)/((a+b)(a+b+1))`.
    pub fn fitted_second_moment(&self) -> f64 {
        let s = self.shape_a + self.shape_b;
        self.shape_a * (self.shape_a + 1.0) / (s * (s + 1.0))
    }

    /// Inverse of [`BetaMd::ccdf`] by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "fraction must lie in [0,1], got {p}"
            )));
        }
        // Relative stopping rule: with a tiny first shape the quantile can sit
        // many decades below one.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..QUANTILE_MAX_STEPS {
            if hi - lo <= QUANTILE_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.ccdf(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `σ² = m2 − m1²`.
pub fn variance(m1: f64, m2: f64) -> Result<f64> {
    let v = m2 - m1 * m1;
    if v < -MOMENT_SLACK {
        return Err(Error::InvalidMoments { m1, m2 });
    }
    Ok(v.max(0.0))
}

/// Spatially averaged coverage probability: the first CCP moment.
pub fn scp(m1: f64) -> f64 {
    m1
}
