//! Starting-population sizes from the one-sided Chebyshev bound and
//! variance inputs for it.

use crate::error::{param_err, Result};
use crate::model::IntDistribution;

fn tail_bound(sigma2: f64, d: f64, k: u64) -> f64 {
    let den = d * d * k as f64 + sigma2;
    if den == 0.0 {
        0.0
    } else {
        sigma2 / den
    }
}

/// Smallest k ≥ 0 with σ²/(D²k + σ²) ≤ ε, so that k independent copies
/// reach D·k particles at a site with probability at least 1 − ε.
pub fn chebyshev_k(sigma2: f64, d: f64, eps: f64) -> Result<u64> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(param_err("sigma2", "must be finite and nonnegative"));
    }
    if !(d >= 1.0 && d.is_finite()) {
        return Err(param_err("D", "must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param_err("eps", "must lie in (0, 1)"));
    }
    if sigma2 == 0.0 {
        return Ok(0);
    }
    let est = (sigma2 * (1.0 - eps) / (eps * d * d)).ceil();
    if est >= u64::MAX as f64 {
        return Err(param_err("eps", "k does not fit in 64 bits"));
    }
    // the closed form may be off by one after rounding
    let mut k = est as u64;
    while k > 0 && tail_bound(sigma2, d, k - 1) <= eps {
        k -= 1;
    }
    while tail_bound(sigma2, d, k) > eps {
        k += 1;
    }
    Ok(k)
}

fn check_law(rho: &IntDistribution, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(param_err("n", "must be at least 1"));
    }
    let (mean, var) = (rho.mean(), rho.variance());
    if !var.is_finite() || !mean.is_finite() {
        return Err(param_err("rho", "infinite variance"));
    }
    Ok((mean, var))
}

/// E(ρ)^(n−1)·var(ρ).
///
/// This is the quantity offered as a bound on the variance of a single
/// particle's descendants at a site after n generations. It is exact for
/// n = 1 but is smaller than the variance of a Galton-Watson generation n ≥ 2
/// whenever var(ρ) > 0; see [`gw_variance`] and [`second_moment_bound`].
pub fn variance_bound(rho: &IntDistribution, n: u64) -> Result<f64> {
    let (mean, var) = check_law(rho, n)?;
    Ok(mean.powi((n - 1) as i32) * var)
}

/// Var Z_n of a Galton-Watson process with offspring law ρ and Z_0 = 1:
/// var(ρ)·m^(n−1)·(m^n − 1)/(m − 1), or n·var(ρ) when m = 1.
pub fn gw_variance(rho: &IntDistribution, n: u64) -> Result<f64> {
    let (m, var) = check_law(rho, n)?;
    let n = n as i32;
    if (m - 1.0).abs() < 1e-12 {
        return Ok(n as f64 * var);
    }
    Ok(var * m.powi(n - 1) * (m.powi(n) - 1.0) / (m - 1.0))
}

/// E[Z_n²] for the Galton-Watson process with law ρ. When ρ dominates every
/// offspring total of a BRW, the count at any site after n generations is
/// dominated by Z_n, so its variance is at most this value.
pub fn second_moment_bound(rho: &IntDistribution, n: u64) -> Result<f64> {
    let m = rho.mean();
    Ok(gw_variance(rho, n)? + m.powi(2 * n as i32))
}
