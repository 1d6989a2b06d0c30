//! Special functions used by the moment formulas.
//!
//! Everything here is a pure function of its arguments.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, numeric, Result};

/// Accuracy target for series and continued-fraction evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel_err: f64,
    pub max_terms: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_err: 1e-13,
            max_terms: 10_000,
        }
    }
}

impl Tolerance {
    pub fn new(rel_err: f64, max_terms: usize) -> Result<Self> {
        if !(rel_err > 0.0) || max_terms == 0 {
            return Err(domain(format!(
                "tolerance needs rel_err > 0 and max_terms >= 1, got {rel_err}, {max_terms}"
            )));
        }
        Ok(Self { rel_err, max_terms })
    }
}

// Below this argument the Pfaff-transformed series (ratio x/(1+x) <= 2/3)
// is used, above it the inverse-argument expansion (ratio 1/x < 1/2).
const HYP2F1_SWITCH: f64 = 2.0;

/// `₂F₁(b, −δ; 1−δ; −x)` for `b > 0`, `δ ∈ (0, 1)` and `x ≥ 0`.
///
/// Equivalently `1 + 2∫₁^∞ (1 − (1 + x·y^{−2/δ})^{−b}) y dy`, the
/// interference factor of a Poisson field seen beyond a unit guard radius.
pub fn hyp2f1_cov(b: f64, delta: f64, x: f64, tol: &Tolerance) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(domain(format!("hyp2f1_cov needs b > 0, got {b}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!(
            "hyp2f1_cov needs delta in (0,1), got {delta}"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(format!("hyp2f1_cov needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x <= HYP2F1_SWITCH {
        pfaff_series(b, delta, x, tol)
    } else {
        inverse_argument_series(b, delta, x, tol)
    }
}

// ₂F₁(−δ, b; 1−δ; −x) = (1+x)^δ ₂F₁(−δ, 1−δ−b; 1−δ; x/(1+x)).
fn pfaff_series(b: f64, delta: f64, x: f64, tol: &Tolerance) -> Result<f64> {
    let w = x / (1.0 + x);
    let ca = -delta;
    let cb = 1.0 - delta - b;
    let cc = 1.0 - delta;
    let tail_factor = 1.0 / (1.0 - w);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..tol.max_terms {
        let nf = n as f64;
        term *= (ca + nf) * (cb + nf) / ((cc + nf) * (nf + 1.0)) * w;
        sum += term;
        if term == 0.0 {
            return Ok((1.0 + x).powf(delta) * sum);
        }
        // Once n exceeds |cb| the coefficient ratio is below one, so the
        // geometric bound on the tail applies.
        if nf + 1.0 > cb.abs() && term.abs() * tail_factor <= tol.rel_err * sum.abs() {
            return Ok((1.0 + x).powf(delta) * sum);
        }
    }
    Err(numeric(format!(
        "hyp2f1_cov series did not converge in {} terms (b={b}, delta={delta}, x={x})",
        tol.max_terms
    )))
}

// F = x^δ Γ(1−δ)Γ(b+δ)/Γ(b) + δ Σ_k (−1)^k (b)_k/k! · x^{−b−k}/(b+δ+k),
// from splitting the guard-zone integral at t = x.
fn inverse_argument_series(b: f64, delta: f64, x: f64, tol: &Tolerance) -> Result<f64> {
    let lead = (delta * x.ln() + ln_gamma(1.0 - delta) + ln_gamma(b + delta) - ln_gamma(b)).exp();
    let inv = 1.0 / x;
    // coefficient (−1)^k (b)_k / k! times x^{−b−k}
    let mut coef = x.powf(-b);
    let mut series = coef / (b + delta);
    for k in 1..tol.max_terms {
        let kf = k as f64;
        coef *= -(b + kf - 1.0) / kf * inv;
        let term = coef / (b + delta + kf);
        series += term;
        // Alternating with decreasing magnitude once k > b·inv/(1−inv).
        if kf > b && term.abs() * delta <= tol.rel_err * lead {
            return Ok(lead + delta * series);
        }
    }
    Err(numeric(format!(
        "hyp2f1_cov inverse series did not converge in {} terms (b={b}, delta={delta}, x={x})",
        tol.max_terms
    )))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Upper incomplete gamma `Γ(j, x)` for integer `j ≥ 1`, by the finite sum
/// `(j−1)! e^{−x} Σ_{k<j} x^k / k!`.
pub fn upper_inc_gamma(j: u32, x: f64) -> Result<f64> {
    check_gamma_args(j, x)?;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..j {
        term *= x / f64::from(k);
        sum += term;
    }
    Ok(factorial(j - 1) * (-x).exp() * sum)
}

/// Lower incomplete gamma `γ(j, x) = Γ(j) − Γ(j, x)` for integer `j ≥ 1`.
pub fn lower_inc_gamma(j: u32, x: f64) -> Result<f64> {
    Ok(lower_inc_gamma_scaled(j, x)? * x.powi(j as i32))
}

/// `γ(j, x) / x^j`, finite at `x = 0` where it equals `1/j`.
///
/// Small arguments use `e^{−x} Σ_{k≥0} (j−1)! x^k / (j+k)!`, which avoids the
/// cancellation in `Γ(j) − Γ(j, x)`.
pub fn lower_inc_gamma_scaled(j: u32, x: f64) -> Result<f64> {
    check_gamma_args(j, x)?;
    let jf = f64::from(j);
    if x < jf + 1.0 {
        let mut term = 1.0 / jf;
        let mut sum = term;
        let mut k = 1.0;
        while term > f64::EPSILON * 0.25 * sum {
            term *= x / (jf + k);
            sum += term;
            k += 1.0;
        }
        Ok((-x).exp() * sum)
    } else {
        let full = factorial(j - 1);
        Ok((full - upper_inc_gamma(j, x)?) / x.powi(j as i32))
    }
}

fn check_gamma_args(j: u32, x: f64) -> Result<()> {
    if j == 0 {
        return Err(domain("incomplete gamma needs integer order j >= 1"));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(())
}

/// Regularized incomplete beta `I_α(a, b)`.
pub fn reg_inc_beta(alpha: f64, a: f64, b: f64) -> Result<f64> {
    reg_inc_beta_with(alpha, a, b, &Tolerance::default())
}

pub fn reg_inc_beta_with(alpha: f64, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(domain(format!(
            "incomplete beta needs a, b > 0, got {a}, {b}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!(
            "incomplete beta needs alpha in [0,1], got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let ln_front =
        a * alpha.ln() + b * (1.0 - alpha).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    // The continued fraction converges fast on the side of the mode closer
    // to zero; the other side uses the reflection I_α(a,b) = 1 − I_{1−α}(b,a).
    if alpha < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(alpha, a, b, tol)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - alpha, b, a, tol)? / b)
    }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(x: f64, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let eps = tol.rel_err.min(1e-15);
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=tol.max_terms {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= eps {
            return Ok(h);
        }
    }
    Err(numeric(format!(
        "incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})"
    )))
}

// C(n, k) is exact in u64 for n <= 20 with the running product below.
const EXACT_BINOMIAL_MAX_N: u64 = 20;

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(domain(format!(
            "binomial coefficient needs k <= n, got n={n}, k={k}"
        )));
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        return Ok((exact_binomial(n, k) as f64).ln());
    }
    Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
}

fn exact_binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    // c stays an integer: after step i it equals C(n−k+i, i).
    (1..=k).fold(1u64, |c, i| c * (n - k + i) / i)
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> Result<f64> {
    if n <= EXACT_BINOMIAL_MAX_N && k <= n {
        return Ok(exact_binomial(n, k) as f64);
    }
    log_binomial(n, k).map(f64::exp)
}
