//! Critical parameters λ_w ≤ λ_s of a family of continuous-time counterparts.

use rayon::prelude::*;

use crate::error::{param_err, BrwError, Result};
use crate::genfun::classify::{classify_survival, ClassifyOptions, SurvivalReport, Verdict};
use crate::model::scenario::counterpart_model;
use crate::model::{BrwModel, ModelMeta, Projection};

/// Edge rates k_xy over the represented vertices, plus the total rate of
/// edges leaving them.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub outside: Vec<f64>,
}

impl RateMatrix {
    pub fn new(rows: Vec<Vec<(usize, f64)>>, outside: Vec<f64>) -> Result<Self> {
        if rows.len() != outside.len() {
            return Err(param_err("outside", format!("{} rows but {} outside rates", rows.len(), outside.len())));
        }
        Ok(Self { rows, outside })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_row_total(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.outside)
            .map(|(r, o)| r.iter().map(|e| e.1).sum::<f64>() + o)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Explicit grid; when empty, `points` geometrically spaced values in
    /// [lo, hi].
    pub grid: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub width: f64,
    pub classify: ClassifyOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { grid: Vec::new(), lo: 0.05, hi: 2.0, points: 17, width: 1e-4, classify: ClassifyOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub local_growth: f64,
    pub local: Verdict,
    pub global: Verdict,
    pub q_bar: Option<f64>,
    pub q_converged: bool,
}

/// Bracket [lo, hi] around a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub lo: f64,
    pub hi: f64,
}

impl Threshold {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub lambda_s: Threshold,
    pub lambda_w: Threshold,
    /// Grid evaluations in increasing λ.
    pub table: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV rows `lambda,local_growth,local,global,q_bar`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,local_growth,local,global,q_bar\n");
        for r in &self.table {
            let q = r.q_bar.map_or(String::new(), |q| q.to_string());
            out.push_str(&format!("{},{},{},{},{q}\n", r.lambda, r.local_growth, r.local, r.global));
        }
        out
    }
}

fn model_at(rates: &RateMatrix, lambda: f64, origin: u64, projection: Option<&Projection>) -> Result<BrwModel> {
    let meta = ModelMeta { origin, ..ModelMeta::default() };
    let model = counterpart_model(lambda, &rates.rows, &rates.outside, meta)?;
    match projection {
        Some(p) => model.with_projection(p.clone()),
        None => Ok(model),
    }
}

fn evaluate(rates: &RateMatrix, lambda: f64, x0: usize, projection: Option<&Projection>, opts: &ClassifyOptions) -> Result<SurvivalReport> {
    let model = model_at(rates, lambda, x0 as u64, projection)?;
    classify_survival(&model, x0, opts)
}

fn local_survives(r: &SurvivalReport) -> bool {
    r.local_growth.value > 1.0
}

fn global_survives(r: &SurvivalReport) -> bool {
    match r.global {
        Verdict::Survives => true,
        Verdict::Dies | Verdict::DiesOnEveryTruncation => false,
        // inside the tolerance band: fall back to the raw numbers
        Verdict::Inconclusive => match &r.global_growth {
            Some(g) if r.global_method.contains("growth rate") => g.value > 1.0,
            _ => r.q_bar.is_some_and(|q| q < 1.0),
        },
    }
}

/// Builds counterpart models over a λ grid, reports q̄_λ(x0) (checked to be
/// nonincreasing), and bisects the local (λ_s) and global (λ_w) survival
/// thresholds down to `opts.width`.
pub fn lambda_sweep(rates: &RateMatrix, x0: usize, projection: Option<&Projection>, opts: &SweepOptions) -> Result<SweepResult> {
    if x0 >= rates.len() {
        return Err(BrwError::IndexOutOfRange { index: x0, len: rates.len() });
    }
    let grid = if opts.grid.is_empty() {
        if !(opts.lo > 0.0 && opts.hi > opts.lo && opts.points >= 2) {
            return Err(param_err("grid", "need 0 < lo < hi and at least two points"));
        }
        let ratio = (opts.hi / opts.lo).powf(1.0 / (opts.points - 1) as f64);
        (0..opts.points).map(|i| opts.lo * ratio.powi(i as i32)).collect()
    } else {
        let mut g = opts.grid.clone();
        g.sort_by(f64::total_cmp);
        g
    };
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(param_err("grid", "values must be positive"));
    }
    let reports: Vec<SurvivalReport> =
        grid.par_iter().map(|&l| evaluate(rates, l, x0, projection, &opts.classify)).collect::<Result<_>>()?;

    let table: Vec<SweepRow> = grid
        .iter()
        .zip(&reports)
        .map(|(&lambda, r)| SweepRow {
            lambda,
            local_growth: r.local_growth.value,
            local: r.local,
            global: r.global,
            q_bar: r.q_bar,
            q_converged: r.extinction.as_ref().is_some_and(|e| e.converged),
        })
        .collect();
    let converged: Vec<&SweepRow> = table.iter().filter(|r| r.q_converged && r.q_bar.is_some()).collect();
    for w in converged.windows(2) {
        let (a, b) = (w[0].q_bar.unwrap(), w[1].q_bar.unwrap());
        assert!(b <= a + 1e-9, "q_bar increased from {a} at λ={} to {b} at λ={}", w[0].lambda, w[1].lambda);
    }

    let lambda_s = bisect(&grid, &reports, "local survival", local_survives, |l| {
        evaluate(rates, l, x0, projection, &opts.classify).map(|r| local_survives(&r))
    }, opts.width)?;
    let lambda_w = bisect(&grid, &reports, "global survival", global_survives, |l| {
        evaluate(rates, l, x0, projection, &opts.classify).map(|r| global_survives(&r))
    }, opts.width)?;
    Ok(SweepResult { lambda_s, lambda_w, table })
}

fn bisect(
    grid: &[f64],
    reports: &[SurvivalReport],
    what: &str,
    on_grid: fn(&SurvivalReport) -> bool,
    at: impl Fn(f64) -> Result<bool>,
    width: f64,
) -> Result<Threshold> {
    let first = reports.iter().position(on_grid);
    let (mut lo, mut hi) = match first {
        Some(0) => return Err(BrwError::Bracket { what: format!("{what} already holds at the smallest λ {}", grid[0]) }),
        None => return Err(BrwError::Bracket { what: format!("{what} never holds up to λ {}", grid[grid.len() - 1]) }),
        Some(i) => (grid[i - 1], grid[i]),
    };
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold { lo, hi })
}
