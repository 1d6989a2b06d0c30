//! Closed-form CCP moments for E-NOMA, where the N users are uniform over
//! the whole Voronoi cell and the unordered link distance is Rayleigh.
//!
//! The moment of rank i is an alternating combination of the terms
//! `M̃_{j,b} = C(N−1, j−1)·N / (N − j + ₂F₁(b, −δ; 1−δ; −M_i))`, j ≤ i,
//! weighted by [`strong_coefficient`].

use crate::error::{domain, numeric, Result};
use crate::model::{decoding_factor, strong_coefficient, Allocation, NetworkParams};
use crate::quad::{integrate, QuadConfig};
use crate::specfun::{binomial, hyp2f1_cov, Tolerance};
use crate::sum::CompensatedSum;

fn check_order(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(domain(format!("moment order must be > 0, got {b}")));
    }
    Ok(())
}

/// Component term `M̃_{j,b}` evaluated with the decoding factor of rank `i`.
pub fn mtilde_enoma(
    j: usize,
    i: usize,
    params: &NetworkParams,
    m_factor: f64,
    b: f64,
    tol: &Tolerance,
) -> Result<f64> {
    params.check_rank(i)?;
    if j == 0 || j > i {
        return Err(domain(format!("component index {j} outside 1..={i}")));
    }
    check_order(b)?;
    let n = params.n_users();
    let f = hyp2f1_cov(b, params.delta(), m_factor, tol)?;
    Ok(mtilde_from_hyp(n, j, f))
}

fn mtilde_from_hyp(n: usize, j: usize, hyp: f64) -> f64 {
    let c = binomial((n - 1) as u64, (j - 1) as u64).expect("j <= n");
    c * n as f64 / ((n - j) as f64 + hyp)
}

/// `b`-th moment of the CCP of rank `i` given its decoding factor `M_i`.
pub fn moment_enoma_given_m(
    params: &NetworkParams,
    m_factor: f64,
    i: usize,
    b: f64,
    tol: &Tolerance,
) -> Result<f64> {
    params.check_rank(i)?;
    check_order(b)?;
    let n = params.n_users();
    let f = hyp2f1_cov(b, params.delta(), m_factor, tol)?;
    let mut sum = CompensatedSum::new();
    for m in 1..=i {
        sum.add(strong_coefficient(n, i, m) * mtilde_from_hyp(n, m, f));
    }
    Ok(sum.value())
}

/// `b`-th moment of the CCP of rank `i` under E-NOMA.
pub fn moment_enoma(params: &NetworkParams, alloc: &Allocation, i: usize, b: f64) -> Result<f64> {
    let m = decoding_factor(params, alloc, i)?;
    moment_enoma_given_m(params, m, i, b, &Tolerance::default())
}

/// `∫₁^∞ (1 − f(1/y)) y dy`, computed as `∫₀¹ (1 − f(u)) u^{−3} du`.
///
/// Finite only when `1 − f(u)` vanishes faster than `u²` at the origin.
pub(crate) fn rdp_exponent<F: Fn(f64) -> f64>(f: &F, quad: &QuadConfig) -> Result<f64> {
    let v = integrate(|u: f64| (1.0 - f(u)) / (u * u * u), 0.0, 1.0, quad)
        .map_err(|e| numeric(format!("PGFL exponent integral failed: {e}")))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(numeric(format!("PGFL exponent integral is {v}")));
    }
    Ok(v)
}

/// PGFL of the ordered relative distance process of rank `i` under E-NOMA,
/// for a function `f` on `(0, 1]` with values in `[0, 1]`.
///
/// `f(y)` must approach 1 fast enough as `y → 0` for the exponent integral
/// to converge; otherwise a numeric failure is returned.
pub fn pgfl_enoma<F: Fn(f64) -> f64>(
    i: usize,
    params: &NetworkParams,
    f: F,
    quad: &QuadConfig,
) -> Result<f64> {
    params.check_rank(i)?;
    let n = params.n_users();
    let exponent = rdp_exponent(&f, quad)?;
    let mut sum = CompensatedSum::new();
    for m in 1..=i {
        let c = binomial((n - 1) as u64, (m - 1) as u64)?;
        let g = c * n as f64 / ((n - m + 1) as f64 + 2.0 * exponent);
        sum.add(strong_coefficient(n, i, m) * g);
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn single_user_closed_form() {
        let p = NetworkParams::new(10.0, 4.0, 0.0, 1).unwrap();
        let v = mtilde_enoma(1, 1, &p, 1.0, 1.0, &tol()).unwrap();
        assert_relative_eq!(v, 1.0 / (1.0 + FRAC_PI_4), max_relative = 1e-12);
        let a = Allocation::new(vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(
            moment_enoma(&p, &a, 1, 1.0).unwrap(),
            v,
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_factor_limit() {
        let p = NetworkParams::new(10.0, 4.0, 0.0, 4).unwrap();
        for j in 1..=3 {
            let v = mtilde_enoma(j, 3, &p, 0.0, 2.0, &tol()).unwrap();
            let c = binomial(3, (j - 1) as u64).unwrap();
            assert_relative_eq!(v, c * 4.0 / (5 - j) as f64, max_relative = 1e-14);
        }
        for i in 1..=4 {
            let m = moment_enoma_given_m(&p, 0.0, i, 1.0, &tol()).unwrap();
            assert_relative_eq!(m, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn two_user_component() {
        let p = NetworkParams::default();
        let v = mtilde_enoma(1, 2, &p, 2.0, 1.0, &tol()).unwrap();
        let s: f64 = 2f64.sqrt();
        assert_relative_eq!(v, 2.0 / (2.0 + s * s.atan()), max_relative = 1e-12);
        assert!(mtilde_enoma(3, 2, &p, 2.0, 1.0, &tol()).is_err());
    }

    #[test]
    fn first_rank_is_single_term() {
        let p = NetworkParams::new(10.0, 3.0, 0.0, 3).unwrap();
        let direct = mtilde_enoma(1, 1, &p, 0.7, 1.5, &tol()).unwrap();
        let m = moment_enoma_given_m(&p, 0.7, 1, 1.5, &tol()).unwrap();
        assert_eq!(direct, m);
    }

    #[test]
    fn vanishing_threshold_gives_full_coverage() {
        let p = NetworkParams::default();
        let a = Allocation::new(vec![0.5, 0.5], vec![1e-12, 1e-12]).unwrap();
        for i in 1..=2 {
            assert_relative_eq!(moment_enoma(&p, &a, i, 1.0).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn infeasible_allocation_propagates() {
        let p = NetworkParams::default();
        let a = Allocation::new(vec![0.1, 0.9], vec![1.0, 10.0]).unwrap();
        assert!(matches!(
            moment_enoma(&p, &a, 1, 1.0),
            Err(crate::Error::InfeasibleAllocation { .. })
        ));
    }

    #[test]
    fn pgfl_of_one_is_one() {
        for n in 1..=4 {
            let p = NetworkParams::new(10.0, 4.0, 0.0, n).unwrap();
            for i in 1..=n {
                let g = pgfl_enoma(i, &p, |_| 1.0, &QuadConfig::default()).unwrap();
                assert_relative_eq!(g, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn pgfl_of_zero_is_an_error() {
        let p = NetworkParams::default();
        let cfg = QuadConfig {
            max_subdivisions: 200,
            ..QuadConfig::default()
        };
        assert!(pgfl_enoma(1, &p, |_| 0.0, &cfg).is_err());
    }

    #[test]
    fn pgfl_kernel_reproduces_moment() {
        let p = NetworkParams::default();
        let m = 2.0;
        let eta = p.eta();
        let g = pgfl_enoma(
            1,
            &p,
            |y: f64| 1.0 / (1.0 + m * y.powf(eta)),
            &QuadConfig::default(),
        )
        .unwrap();
        let closed = moment_enoma_given_m(&p, m, 1, 1.0, &tol()).unwrap();
        assert_relative_eq!(g, closed, max_relative = 1e-8);
    }
}
