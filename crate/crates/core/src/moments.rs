//! Scheme dispatch for the analytic moments.

use serde::{Deserialize, Serialize};

use crate::cnoma::{moment_cnoma_approx_given_m, moment_cnoma_exact_given_m, QuadratureConfig};
use crate::enoma::moment_enoma_given_m;
use crate::error::{Error, Result};
use crate::metadist::{build_md, MetaDistribution};
use crate::model::{decoding_factor, Allocation, NetworkParams, Scheme};
use crate::specfun::Tolerance;

/// Which analytic route to use. E-NOMA has a single closed form, used for
/// both variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MomentMethod {
    /// Guard zone `ρ − R_i` plus the neighbouring BS (C-NOMA).
    #[default]
    #[serde(rename = "exact")]
    Exact,
    /// Guard zone `R_i`, neighbouring BS dropped (C-NOMA).
    #[serde(rename = "approx")]
    Approx,
}

impl MomentMethod {
    pub fn label(&self, scheme: Scheme) -> &'static str {
        match (scheme, self) {
            (Scheme::ENoma, _) => "closed-form",
            (Scheme::CNoma, MomentMethod::Exact) => "exact",
            (Scheme::CNoma, MomentMethod::Approx) => "approx",
        }
    }
}

/// `b`-th moment of the CCP of rank `i`, given the decoding factor `M_i`.
pub fn moment_given_m(
    params: &NetworkParams,
    scheme: Scheme,
    method: MomentMethod,
    m_factor: f64,
    i: usize,
    b: f64,
) -> Result<f64> {
    match (scheme, method) {
        (Scheme::ENoma, _) => moment_enoma_given_m(params, m_factor, i, b, &Tolerance::default()),
        (Scheme::CNoma, MomentMethod::Exact) => {
            moment_cnoma_exact_given_m(params, m_factor, i, b, &QuadratureConfig::default())
        }
        (Scheme::CNoma, MomentMethod::Approx) => {
            moment_cnoma_approx_given_m(params, m_factor, i, b, &QuadratureConfig::default())
        }
    }
}

/// `b`-th moment of the CCP of rank `i`.
pub fn moment(
    params: &NetworkParams,
    alloc: &Allocation,
    scheme: Scheme,
    method: MomentMethod,
    i: usize,
    b: f64,
) -> Result<f64> {
    let m = decoding_factor(params, alloc, i)?;
    moment_given_m(params, scheme, method, m, i, b)
}

/// First and second moments, `(0, 0)` when rank `i` cannot decode.
pub fn moment_pair(
    params: &NetworkParams,
    alloc: &Allocation,
    scheme: Scheme,
    method: MomentMethod,
    i: usize,
) -> Result<(f64, f64)> {
    match decoding_factor(params, alloc, i) {
        Ok(m) => Ok((
            moment_given_m(params, scheme, method, m, i, 1.0)?,
            moment_given_m(params, scheme, method, m, i, 2.0)?,
        )),
        Err(Error::InfeasibleAllocation { .. }) => Ok((0.0, 0.0)),
        Err(e) => Err(e),
    }
}

/// Beta-matched meta distribution of rank `i`. An infeasible allocation
/// yields the point mass at zero.
pub fn meta_distribution(
    params: &NetworkParams,
    alloc: &Allocation,
    scheme: Scheme,
    method: MomentMethod,
    i: usize,
) -> Result<MetaDistribution> {
    let (m1, m2) = moment_pair(params, alloc, scheme, method, i)?;
    build_md(m1, m2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_maps_to_point_mass_at_zero() {
        let p = NetworkParams::default();
        let a = Allocation::new(vec![0.1, 0.9], vec![1.0, 10.0]).unwrap();
        let md = meta_distribution(&p, &a, Scheme::CNoma, MomentMethod::Exact, 1).unwrap();
        assert_eq!(md, MetaDistribution::PointMass(0.0));
        assert_eq!(md.ccdf(0.3), 0.0);
    }

    #[test]
    fn enoma_ignores_method() {
        let p = NetworkParams::default();
        let a = Allocation::new(vec![0.5, 0.5], vec![1.0, 0.5]).unwrap();
        let x = moment(&p, &a, Scheme::ENoma, MomentMethod::Exact, 2, 1.0).unwrap();
        let y = moment(&p, &a, Scheme::ENoma, MomentMethod::Approx, 2, 1.0).unwrap();
        assert_eq!(x, y);
    }
}
