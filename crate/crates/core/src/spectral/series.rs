//! First-return series Φ(x,x|λ) and Green series Γ(x,x|λ).

use crate::error::{BrwError, Result};
use crate::spectral::matrix::MomentMatrix;

const OVERFLOW_GUARD: f64 = 1e300;

/// Terms φ^(n)_xx λ^n for n = 1..=n_max, from taboo powers of M: after
/// every step the mass sitting at x is recorded and removed.
pub fn first_return_terms(m: &MomentMatrix, x: usize, lambda: f64, n_max: usize) -> Result<Vec<f64>> {
    m.check_index(x)?;
    check_lambda(lambda)?;
    let n = m.dim();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    v[x] = 1.0;
    let mut terms = Vec::with_capacity(n_max);
    let mut partial = 0.0;
    for step in 1..=n_max {
        m.left_mul(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        v.iter_mut().for_each(|e| *e *= lambda);
        let t = v[x];
        v[x] = 0.0;
        partial += t;
        terms.push(t);
        if !partial.is_finite() || partial > OVERFLOW_GUARD || v.iter().any(|e| !e.is_finite() || *e > OVERFLOW_GUARD) {
            return Err(BrwError::Divergent { lambda, partial, terms: step });
        }
        if v.iter().all(|&e| e == 0.0) {
            break;
        }
    }
    Ok(terms)
}

/// Φ(x,x|λ) = Σ_{n=1}^{n_max} φ^(n)_xx λ^n (φ^(0) = 0).
pub fn first_return_series(m: &MomentMatrix, x: usize, lambda: f64, n_max: usize) -> Result<f64> {
    Ok(first_return_terms(m, x, lambda, n_max)?.iter().sum())
}

/// Γ(x,x|λ) = Σ_{n≥0} m^(n)_xx λ^n, truncated at `n_max` terms or when the
/// remaining mass is negligible. Requires Φ(x,x|λ) < 1.
pub fn green_series(m: &MomentMatrix, x: usize, lambda: f64, n_max: usize) -> Result<f64> {
    let phi = first_return_series(m, x, lambda, n_max)?;
    if phi >= 1.0 {
        return Err(BrwError::Divergent { lambda, partial: phi, terms: n_max });
    }
    let n = m.dim();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    v[x] = 1.0;
    let mut sum = 1.0;
    for step in 1..=n_max {
        m.left_mul(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        v.iter_mut().for_each(|e| *e *= lambda);
        sum += v[x];
        let mass: f64 = v.iter().sum();
        if !sum.is_finite() || sum > OVERFLOW_GUARD || mass > OVERFLOW_GUARD {
            return Err(BrwError::Divergent { lambda, partial: sum, terms: step });
        }
        if mass <= 1e-18 * sum {
            break;
        }
    }
    Ok(sum)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(BrwError::InvalidParam { name: "lambda".into(), reason: format!("{lambda} is not a nonnegative number") });
    }
    Ok(())
}
