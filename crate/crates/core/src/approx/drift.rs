//! Large-deviation exponent of a drifted walk on ℤ and the integer
//! selection (d1, d2, d3, N) used to build a supercritical block.

use std::fmt::Write as _;

use crate::error::{param_err, BrwError, Result};

/// Mean offspring ρ̄ and the step law {+1: p, −1: q, 0: 1−p−q}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub rho_bar: f64,
    pub p: f64,
    pub q: f64,
}

impl DriftParams {
    pub fn new(rho_bar: f64, p: f64, q: f64) -> Result<Self> {
        if !(rho_bar > 0.0 && rho_bar.is_finite()) {
            return Err(param_err("rho_bar", "must be positive and finite"));
        }
        if !(p >= 0.0 && q >= 0.0) {
            return Err(param_err("p", "step probabilities must be nonnegative"));
        }
        if p + q > 1.0 + 1e-12 {
            return Err(param_err("p", format!("p + q = {} exceeds 1", p + q)));
        }
        Ok(Self { rho_bar, p, q })
    }

    pub fn stay(&self) -> f64 {
        (1.0 - self.p - self.q).max(0.0)
    }
}

/// t·ln(s) with 0·ln(anything) = 0.
fn xlog(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * s.ln()
    }
}

/// ln Q(α, β); −∞ when a positive exponent meets a zero base.
pub fn ln_q_value(d: &DriftParams, alpha: f64, beta: f64) -> Result<f64> {
    let a = beta;
    let b = beta - alpha;
    let c = 1.0 - 2.0 * beta + alpha;
    if !(alpha.is_finite() && beta.is_finite()) || a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(param_err(
            "alpha",
            format!("(α, β) = ({alpha}, {beta}) needs 0 ≤ β, α ≤ β and 2β ≤ 1 + α"),
        ));
    }
    let num = xlog(a, d.p) + xlog(b, d.q) + xlog(c, d.stay());
    let den = xlog(a, a) + xlog(b, b) + xlog(c, c);
    Ok(d.rho_bar.ln() + num - den)
}

/// Q_ρ̄(α, β) = ρ̄ p^β q^(β−α) r^(1−2β+α) / (β^β (β−α)^(β−α) (1−2β+α)^(1−2β+α))
/// with r = 1−p−q, evaluated in log space. Q(p−q, p) = ρ̄.
pub fn q_value(d: &DriftParams, alpha: f64, beta: f64) -> Result<f64> {
    Ok(ln_q_value(d, alpha, beta)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Rectangle {
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.alpha1, self.beta1),
            (self.alpha1, self.beta2),
            (self.alpha2, self.beta1),
            (self.alpha2, self.beta2),
        ]
    }
}

/// Integers with α1·N ≤ d1 < d2 ≤ α2·N and β1·N ≤ d3 ≤ β2·N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSelection {
    pub d1: i64,
    pub d2: i64,
    pub d3: i64,
    pub n: u64,
    /// Q(d1/N, d3/N) and Q(d2/N, d3/N).
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

#[derive(Debug, Clone)]
pub struct SupercriticalRegion {
    pub params: DriftParams,
    pub resolution: usize,
    /// Admissible grid points: α = −1 + 2i/res, β = j/res.
    pub points: Vec<RegionPoint>,
    pub rectangle: Option<Rectangle>,
    pub selection: Option<DriftSelection>,
}

impl SupercriticalRegion {
    pub fn inside_count(&self) -> usize {
        self.points.iter().filter(|p| p.q > 1.0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.inside_count() == 0
    }

    /// Whether the grid point nearest to (α, β) lies in {Q > 1}.
    pub fn contains(&self, alpha: f64, beta: f64) -> bool {
        let res = self.resolution as f64;
        let i = ((alpha + 1.0) * res / 2.0).round();
        let j = (beta * res).round();
        let (a, b) = (-1.0 + 2.0 * i / res, j / res);
        self.points
            .iter()
            .any(|p| (p.alpha - a).abs() < 1e-12 && (p.beta - b).abs() < 1e-12 && p.q > 1.0)
    }

    /// `alpha,beta,Q,inside` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,Q,inside\n");
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.alpha, p.beta, p.q, (p.q > 1.0) as u8).unwrap();
        }
        out
    }

    pub fn selection_csv(&self) -> String {
        let mut out = String::from("alpha1,alpha2,beta1,beta2,d1,d2,d3,N,Q1,Q2\n");
        if let (Some(r), Some(s)) = (self.rectangle, self.selection) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.alpha1, r.alpha2, r.beta1, r.beta2, s.d1, s.d2, s.d3, s.n, s.q1, s.q2
            )
            .unwrap();
        }
        out
    }
}

const MAX_N: u64 = 10_000_000;

/// Samples {Q > 1} on a grid and, when ρ̄ > 1, places a rectangle
/// α1 < α2 ≤ β1 < β2 around (p−q, p) inside it together with the smallest N
/// admitting the integer selection. The rectangle half-width is halved
/// until every corner has Q > 1 (ln Q is concave, so corners suffice); it
/// may not shrink below 1/(4·resolution).
pub fn supercritical_region(d: &DriftParams, resolution: usize) -> Result<SupercriticalRegion> {
    if resolution < 2 {
        return Err(param_err("resolution", "must be at least 2"));
    }
    let res = resolution as f64;
    let mut points = Vec::new();
    for i in 0..=resolution {
        let alpha = -1.0 + 2.0 * i as f64 / res;
        for j in 0..=resolution {
            let beta = j as f64 / res;
            if let Ok(q) = q_value(d, alpha, beta) {
                points.push(RegionPoint { alpha, beta, q });
            }
        }
    }
    let mut region = SupercriticalRegion { params: *d, resolution, points, rectangle: None, selection: None };
    if d.rho_bar <= 1.0 {
        return Ok(region);
    }
    let rect = rectangle(d, resolution)?;
    let sel = select_integers(d, &rect).ok_or_else(|| {
        BrwError::NoRectangle(format!(
            "no N ≤ {MAX_N} fits three distinct integers in the rectangle; refine the resolution"
        ))
    })?;
    let n = sel.n as f64;
    assert!(
        rect.alpha1 * n <= sel.d1 as f64
            && sel.d1 < sel.d2
            && sel.d2 as f64 <= rect.alpha2 * n
            && rect.beta1 * n <= sel.d3 as f64
            && sel.d3 as f64 <= rect.beta2 * n
            && sel.q1 > 1.0
            && sel.q2 > 1.0,
        "integer selection violates its defining inequalities"
    );
    region.rectangle = Some(rect);
    region.selection = Some(sel);
    Ok(region)
}

fn rectangle(d: &DriftParams, resolution: usize) -> Result<Rectangle> {
    let (a0, b0) = (d.p - d.q, d.p);
    // α2 ≤ β1 needs h ≤ q/2; β2 < (1+α1)/2 needs h < (1−p−q)/3; β1 > 0 needs h < p
    let mut h = (0.45 * d.q).min(0.3 * d.stay()).min(0.9 * d.p);
    if h <= 0.0 {
        return Err(BrwError::NoRectangle(
            "p, q and 1−p−q must all be positive to place a rectangle around (p−q, p)".into(),
        ));
    }
    let h_min = 0.25 / resolution as f64;
    while h >= h_min {
        let rect = Rectangle { alpha1: a0 - h, alpha2: a0 + h, beta1: b0 - h, beta2: b0 + h };
        let ok = rect.corners().iter().all(|&(a, b)| q_value(d, a, b).is_ok_and(|q| q > 1.0));
        if ok {
            return Ok(rect);
        }
        h /= 2.0;
    }
    Err(BrwError::NoRectangle(format!(
        "corners of every rectangle with half-width ≥ {h_min} leave {{Q > 1}}; increase the resolution"
    )))
}

fn select_integers(d: &DriftParams, r: &Rectangle) -> Option<DriftSelection> {
    for n in 1..=MAX_N {
        let nf = n as f64;
        let d1 = (r.alpha1 * nf).ceil() as i64;
        let d2 = d1 + 1;
        if d2 as f64 > (r.alpha2 * nf).floor() {
            continue;
        }
        let d3 = (r.beta1 * nf).ceil() as i64;
        if d3 as f64 > (r.beta2 * nf).floor() || d3 == d1 || d3 == d2 {
            continue;
        }
        let q1 = q_value(d, d1 as f64 / nf, d3 as f64 / nf).ok()?;
        let q2 = q_value(d, d2 as f64 / nf, d3 as f64 / nf).ok()?;
        if q1 > 1.0 && q2 > 1.0 {
            return Some(DriftSelection { d1, d2, d3, n, q1, q2 });
        }
    }
    None
}
