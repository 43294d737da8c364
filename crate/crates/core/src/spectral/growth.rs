//! Exponential growth rates of m^(n)_{x0 x0} and Σ_y m^(n)_{x0 y}.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{param_err, BrwError, Result};
use crate::model::BrwModel;
use crate::spectral::matrix::{moment_matrix, MomentMatrix};

/// Finite evidence for an asymptotic growth rate.
///
/// `sequence` holds the n-th roots along the subsequence actually used;
/// `ratios` holds the lag ratios (a_n / a_{n-d})^{1/d} that converge much
/// faster and provide `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    pub value: f64,
    pub sequence: Vec<(usize, f64)>,
    pub ratios: Vec<(usize, f64)>,
    pub subsequence_rule: String,
    /// Lag of the ratio estimator (the class period for local rates).
    pub lag: usize,
    pub converged: bool,
    pub tolerance: f64,
    /// For truncated models: largest n for which the terms coincide with
    /// those of the untruncated model, when it limited the computation.
    pub exact_horizon: Option<usize>,
}

impl GrowthEstimate {
    fn zero(rule: &str) -> Self {
        Self {
            value: 0.0,
            sequence: Vec::new(),
            ratios: Vec::new(),
            subsequence_rule: rule.to_string(),
            lag: 1,
            converged: true,
            tolerance: 0.0,
            exact_horizon: None,
        }
    }

    /// CSV rows `n,term,ratio,on_subsequence`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,term,ratio,on_subsequence\n");
        for &(n, t) in &self.sequence {
            let r = self.ratios.iter().find(|e| e.0 == n).map(|e| e.1);
            let r = r.map_or(String::new(), |r| format!("{r}"));
            writeln!(out, "{n},{t},{r},1").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowthOptions {
    pub n_max: usize,
    /// Relative tolerance between the last three ratio terms.
    pub rel_tol: f64,
    /// Stop once consecutive ratio terms agree to this relative precision.
    pub early_stop: f64,
    /// Limit global sums to the horizon where a truncation is exact.
    pub respect_truncation: bool,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self { n_max: 2000, rel_tol: 1e-3, early_stop: 1e-13, respect_truncation: true }
    }
}

impl GrowthOptions {
    pub fn with_n_max(n_max: usize) -> Self {
        Self { n_max, ..Self::default() }
    }
}

/// limsup_n (m^(n)_{x0 x0})^{1/n}, along n ≡ 0 mod period(x0).
pub fn local_growth_rate(m: &MomentMatrix, x0: usize, n_max: usize) -> Result<GrowthEstimate> {
    local_growth_rate_with(m, x0, &GrowthOptions::with_n_max(n_max))
}

pub fn local_growth_rate_with(m: &MomentMatrix, x0: usize, opts: &GrowthOptions) -> Result<GrowthEstimate> {
    m.check_index(x0)?;
    let Some(d) = m.period(x0) else {
        return Ok(GrowthEstimate::zero("x0 lies on no cycle: m^(n)_{x0x0} = 0 for n > 0"));
    };
    if opts.n_max < 2 * d {
        return Err(param_err("n_max", format!("must be at least twice the period {d}")));
    }
    let n = m.dim();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    v[x0] = 1.0;
    let mut log_scale = 0.0;
    let mut est = GrowthEstimate {
        value: 0.0,
        sequence: Vec::new(),
        ratios: Vec::new(),
        subsequence_rule: format!("n = 0 mod {d}"),
        lag: d,
        converged: false,
        tolerance: opts.rel_tol,
        exact_horizon: None,
    };
    let mut prev: Option<(usize, f64)> = None;
    for step in 1..=opts.n_max {
        m.left_mul(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        let s = v.iter().fold(0.0f64, |a, &b| a.max(b));
        if s == 0.0 {
            est.value = 0.0;
            est.converged = true;
            return Ok(est);
        }
        log_scale += s.ln();
        v.iter_mut().for_each(|e| *e /= s);
        if step % d != 0 || v[x0] == 0.0 {
            continue;
        }
        let log_m = log_scale + v[x0].ln();
        est.sequence.push((step, (log_m / step as f64).exp()));
        if let Some((p_step, p_log)) = prev {
            est.ratios.push((step, ((log_m - p_log) / (step - p_step) as f64).exp()));
            if settled(&est.ratios, opts.early_stop) {
                break;
            }
        }
        prev = Some((step, log_m));
    }
    finish(&mut est);
    Ok(est)
}

/// liminf_n (Σ_y m^(n)_{x0 y})^{1/n}.
///
/// When the matrix has deficit rows (a truncation), terms are only computed
/// up to the distance from x0 to the nearest such row, where they still equal
/// those of the untruncated model.
pub fn global_growth_rate(m: &MomentMatrix, x0: usize, n_max: usize) -> Result<GrowthEstimate> {
    global_growth_rate_with(m, x0, &GrowthOptions::with_n_max(n_max))
}

pub fn global_growth_rate_with(m: &MomentMatrix, x0: usize, opts: &GrowthOptions) -> Result<GrowthEstimate> {
    m.check_index(x0)?;
    if opts.n_max < 2 {
        return Err(param_err("n_max", "must be at least 2"));
    }
    let mut horizon = opts.n_max;
    let mut exact_horizon = None;
    if opts.respect_truncation && m.has_deficit() {
        if let Some(h) = m.distance_to_deficit(x0) {
            if h < horizon {
                horizon = h.max(1);
                exact_horizon = Some(h);
            }
        }
    }
    let lag = m
        .reachable(x0)
        .iter()
        .filter_map(|&x| m.period(x))
        .fold(1usize, |acc, d| if acc >= 64 { acc } else { lcm(acc, d) })
        .min(64);
    let lag = lag.min(horizon.max(1));
    let n = m.dim();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    v[x0] = 1.0;
    let mut log_scale = 0.0;
    let mut logs: Vec<f64> = vec![0.0];
    let mut est = GrowthEstimate {
        value: 0.0,
        sequence: Vec::new(),
        ratios: Vec::new(),
        subsequence_rule: "all n".into(),
        lag,
        converged: false,
        tolerance: opts.rel_tol,
        exact_horizon,
    };
    for step in 1..=horizon {
        m.left_mul(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        let total: f64 = v.iter().sum();
        if total == 0.0 {
            est.value = 0.0;
            est.converged = true;
            return Ok(est);
        }
        log_scale += total.ln();
        v.iter_mut().for_each(|e| *e /= total);
        logs.push(log_scale);
        est.sequence.push((step, (log_scale / step as f64).exp()));
        if step >= lag {
            est.ratios.push((step, ((log_scale - logs[step - lag]) / lag as f64).exp()));
            if settled(&est.ratios, opts.early_stop) {
                break;
            }
        }
    }
    finish(&mut est);
    Ok(est)
}

fn settled(ratios: &[(usize, f64)], tol: f64) -> bool {
    if ratios.len() < 4 {
        return false;
    }
    let tail = &ratios[ratios.len() - 4..];
    let last = tail[3].1;
    tail.iter().all(|&(_, r)| (r - last).abs() <= tol * last.abs().max(1e-300))
}

fn finish(est: &mut GrowthEstimate) {
    match (est.ratios.last(), est.sequence.last()) {
        (Some(&(_, r)), _) => est.value = r,
        (None, Some(&(_, t))) => est.value = t,
        (None, None) => est.value = 0.0,
    }
    let k = est.ratios.len();
    est.converged = if k >= 3 {
        let last = est.ratios[k - 1].1;
        est.ratios[k - 3..].iter().all(|&(_, r)| (r - last).abs() <= est.tolerance * last.max(1e-300))
    } else {
        // a single exact term (e.g. a constant sequence) carries no spread
        est.sequence.len() >= 2
            && est.sequence.windows(2).all(|w| (w[0].1 - w[1].1).abs() <= est.tolerance * w[1].1.max(1e-300))
    };
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// Local growth rate at `x0` of the restriction of `model` to each set of
/// the exhaustion (ids). Sets that miss `x0` report zero; the last set must
/// contain it.
pub fn seneta_sequence(model: &BrwModel, exhaustion: &[Vec<u64>], x0: u64, n_max: usize) -> Result<Vec<GrowthEstimate>> {
    let Some(last) = exhaustion.last() else {
        return Ok(Vec::new());
    };
    if !last.contains(&x0) {
        return Err(BrwError::UnknownVertex(x0));
    }
    let full = moment_matrix(model);
    let x0_index = model.index_of(x0)?;
    exhaustion
        .par_iter()
        .map(|set| {
            if !set.contains(&x0) {
                return Ok(GrowthEstimate::zero("x0 outside this subset"));
            }
            let mut keep: Vec<usize> = set.iter().map(|&id| model.index_of(id)).collect::<Result<_>>()?;
            keep.sort_unstable();
            keep.dedup();
            let sub = full.submatrix(&keep)?;
            let pos = keep.binary_search(&x0_index).expect("x0 kept");
            local_growth_rate(&sub, pos, n_max)
        })
        .collect()
}
