//! Local, global and strong-local survival verdicts with their evidence.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::error::Result;
use crate::genfun::extinction::{iterate_extinction, ExtinctionResult, Target};
use crate::model::{AssumptionReport, BrwModel};
use crate::spectral::{global_growth_rate, local_growth_rate, moment_matrix, GrowthEstimate};

pub const MEAN_CONDITION_FLAG: &str = "mean condition holds, extinction a.s. on all truncations";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Survives,
    Dies,
    /// Extinction is certain on every truncation that was tried; this is
    /// evidence for, not proof of, extinction on the full space.
    DiesOnEveryTruncation,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Survives => "survives",
            Verdict::Dies => "dies",
            Verdict::DiesOnEveryTruncation => "dies on every tested truncation",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongLocal {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for StrongLocal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrongLocal::Yes => "yes",
            StrongLocal::No => "no",
            StrongLocal::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongLocalResult {
    pub y: usize,
    pub verdict: StrongLocal,
    pub q_bar_x0: f64,
    pub q_x0_y: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Band around 1 in which growth-based verdicts are inconclusive.
    pub growth_margin: f64,
    /// q̄(x0) < 1 − q_gap counts as survival.
    pub q_gap: f64,
    pub n_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Vertices y (indices) for the strong-local comparison.
    pub strong_local: Vec<usize>,
    pub strong_local_tol: f64,
    /// Try nested balls around x0 when deciding global survival on a
    /// truncation.
    pub ladder: bool,
    /// Use the registered projection, if any.
    pub use_projection: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            growth_margin: 1e-3,
            q_gap: 1e-6,
            n_max: 2000,
            tol: 1e-12,
            max_iter: 200_000,
            strong_local: Vec::new(),
            strong_local_tol: 1e-6,
            ladder: true,
            use_projection: true,
        }
    }
}

/// Global extinction probability on one rung of the truncation ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung {
    pub radius: usize,
    pub vertices: usize,
    pub q_bar_x0: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SurvivalReport {
    pub x0: u64,
    pub local: Verdict,
    pub local_growth: GrowthEstimate,
    pub global: Verdict,
    /// How the global verdict was reached.
    pub global_method: String,
    pub global_growth: Option<GrowthEstimate>,
    /// q̄(x0), when a fixed point was computed.
    pub q_bar: Option<f64>,
    pub extinction: Option<ExtinctionResult>,
    pub ladder: Vec<LadderRung>,
    pub strong_local: Vec<StrongLocalResult>,
    pub assumption: AssumptionReport,
    pub flags: Vec<String>,
}

impl SurvivalReport {
    /// `key: value` record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "x0: {}", self.x0).unwrap();
        writeln!(out, "local: {}", self.local).unwrap();
        writeln!(out, "local_growth: {}", self.local_growth.value).unwrap();
        writeln!(out, "local_growth_rule: {}", self.local_growth.subsequence_rule).unwrap();
        writeln!(out, "local_growth_converged: {}", self.local_growth.converged).unwrap();
        writeln!(out, "global: {}", self.global).unwrap();
        writeln!(out, "global_method: {}", self.global_method).unwrap();
        if let Some(g) = &self.global_growth {
            writeln!(out, "global_growth: {}", g.value).unwrap();
            if let Some(h) = g.exact_horizon {
                writeln!(out, "global_growth_exact_horizon: {h}").unwrap();
            }
        }
        if let Some(q) = self.q_bar {
            writeln!(out, "q_bar: {q}").unwrap();
        }
        if let Some(e) = &self.extinction {
            writeln!(out, "extinction_iterations: {}", e.iterations).unwrap();
            writeln!(out, "extinction_residual: {}", e.residual).unwrap();
            writeln!(out, "extinction_converged: {}", e.converged).unwrap();
        }
        for r in &self.ladder {
            writeln!(out, "ladder: radius={} vertices={} q_bar={} converged={}", r.radius, r.vertices, r.q_bar_x0, r.converged)
                .unwrap();
        }
        for s in &self.strong_local {
            writeln!(out, "strong_local: y={} verdict={} q_bar={} q_xy={}", s.y, s.verdict, s.q_bar_x0, s.q_x0_y).unwrap();
        }
        for c in &self.assumption.classes {
            if !c.passes {
                writeln!(out, "assumption_fails: class of size {} containing {}", c.members.len(), c.members[0]).unwrap();
            }
        }
        for f in &self.flags {
            writeln!(out, "flag: {f}").unwrap();
        }
        out
    }

    /// Evidence table: growth terms then extinction steps.
    pub fn evidence_csv(&self) -> String {
        let mut out = String::from("series,n,value,ratio\n");
        let mut push = |name: &str, g: &GrowthEstimate| {
            for &(n, t) in &g.sequence {
                let r = g.ratios.iter().find(|e| e.0 == n).map_or(String::new(), |e| e.1.to_string());
                writeln!(out, "{name},{n},{t},{r}").unwrap();
            }
        };
        push("local_growth", &self.local_growth);
        if let Some(g) = &self.global_growth {
            push("global_growth", g);
        }
        if let Some(e) = &self.extinction {
            for (i, s) in e.steps.iter().enumerate() {
                writeln!(out, "extinction_step,{},{s},", i + 1).unwrap();
            }
        }
        out
    }
}

fn growth_verdict(g: &GrowthEstimate, margin: f64) -> Verdict {
    let above = |r: f64| r > 1.0 + margin;
    let below = |r: f64| r < 1.0 - margin;
    if g.converged || g.ratios.is_empty() {
        if above(g.value) {
            return Verdict::Survives;
        }
        if below(g.value) {
            return Verdict::Dies;
        }
        return Verdict::Inconclusive;
    }
    // not converged: accept only if the last few ratios agree on the side
    let tail = &g.ratios[g.ratios.len().saturating_sub(3)..];
    if tail.iter().all(|e| above(e.1)) {
        Verdict::Survives
    } else if tail.iter().all(|e| below(e.1)) {
        Verdict::Dies
    } else {
        Verdict::Inconclusive
    }
}

fn q_verdict(e: &ExtinctionResult, x0: usize, gap: f64) -> Verdict {
    // iterates from 0 increase to q̄: a high iterate settles extinction even
    // before convergence, a low one only once converged
    if e.q[x0] >= 1.0 - gap {
        Verdict::Dies
    } else if e.converged {
        Verdict::Survives
    } else {
        Verdict::Inconclusive
    }
}

struct GlobalPart {
    verdict: Verdict,
    method: String,
    growth: Option<GrowthEstimate>,
    q_bar: Option<f64>,
    extinction: Option<ExtinctionResult>,
    ladder: Vec<LadderRung>,
    flags: Vec<String>,
}

/// Survival verdicts from `x0` (vertex index).
///
/// Local: local growth rate against 1. Global: through the registered
/// projection when it yields a consistent finite model; otherwise on closed
/// finite models by the global growth rate (irreducible) or by q̄; on
/// truncations by q̄ over nested balls around x0, where survival on any ball
/// is conclusive and extinction on all of them is reported as such.
pub fn classify_survival(model: &BrwModel, x0: usize, opts: &ClassifyOptions) -> Result<SurvivalReport> {
    let m = moment_matrix(model);
    let local_growth = local_growth_rate(&m, x0, opts.n_max)?;
    let mut local = growth_verdict(&local_growth, opts.growth_margin);
    let mut flags = Vec::new();
    if !model.is_closed() {
        flags.push("local growth computed on a truncation; it increases with the window".to_string());
    }

    let mut part = None;
    if opts.use_projection {
        if let Some(p) = model.projection() {
            match model.project_interior(p) {
                Ok(projected) => {
                    let y0 = p.image(x0);
                    let mut g = decide_global(&projected, y0, opts)?;
                    g.method = format!("projection onto a {}-vertex model: {}", projected.len(), g.method);
                    part = Some(g);
                }
                Err(e) => flags.push(format!("projection not used: {e}")),
            }
        }
    }
    let mut part = match part {
        Some(p) => p,
        None => decide_global(model, x0, opts)?,
    };
    flags.append(&mut part.flags);

    let assumption = model.check_assumption_nonsingular();
    if let Some(c) = assumption.class_containing(model.id(x0)) {
        if !c.passes {
            flags.push("every vertex of the class of x0 has exactly one child in the class: growth criteria do not apply".into());
            if local == Verdict::Survives {
                local = Verdict::Inconclusive;
            }
        }
    }

    let mut global = part.verdict;
    if local == Verdict::Survives && global != Verdict::Survives {
        flags.push(format!("global verdict raised from `{global}`: local survival implies global survival"));
        global = Verdict::Survives;
    }

    let strong_local = opts
        .strong_local
        .iter()
        .map(|&y| strong_local_compare(model, x0, y, opts.strong_local_tol))
        .collect::<Result<Vec<_>>>()?;

    Ok(SurvivalReport {
        x0: model.id(x0),
        local,
        local_growth,
        global,
        global_method: part.method,
        global_growth: part.growth,
        q_bar: part.q_bar,
        extinction: part.extinction,
        ladder: part.ladder,
        strong_local,
        assumption,
        flags,
    })
}

fn decide_global(model: &BrwModel, x0: usize, opts: &ClassifyOptions) -> Result<GlobalPart> {
    let m = moment_matrix(model);
    if model.is_closed() {
        let ext = iterate_extinction(model, &Target::Global, opts.tol, opts.max_iter)?;
        if model.class_structure().is_irreducible() {
            let growth = global_growth_rate(&m, x0, opts.n_max)?;
            let verdict = growth_verdict(&growth, opts.growth_margin);
            return Ok(GlobalPart {
                verdict,
                method: "global growth rate of a finite irreducible model".into(),
                growth: Some(growth),
                q_bar: Some(ext.q[x0]),
                extinction: Some(ext),
                ladder: Vec::new(),
                flags: Vec::new(),
            });
        }
        return Ok(GlobalPart {
            verdict: q_verdict(&ext, x0, opts.q_gap),
            method: "least fixed point of G on a finite model".into(),
            growth: Some(global_growth_rate(&m, x0, opts.n_max)?),
            q_bar: Some(ext.q[x0]),
            extinction: Some(ext),
            ladder: Vec::new(),
            flags: Vec::new(),
        });
    }

    let growth = global_growth_rate(&m, x0, opts.n_max)?;
    let balls = if opts.ladder { nested_balls(&m, x0) } else { Vec::new() };
    let id_x0 = model.id(x0);
    let mut ladder: Vec<LadderRung> = balls
        .par_iter()
        .map(|(radius, members)| {
            let ids: Vec<u64> = members.iter().map(|&v| model.id(v)).collect();
            let sub = model.restrict(&ids)?;
            let ext = iterate_extinction(&sub, &Target::Global, opts.tol, opts.max_iter)?;
            Ok(LadderRung { radius: *radius, vertices: sub.len(), q_bar_x0: ext.q[sub.index_of(id_x0)?], converged: ext.converged })
        })
        .collect::<Result<_>>()?;
    let ext = iterate_extinction(model, &Target::Global, opts.tol, opts.max_iter)?;
    ladder.push(LadderRung { radius: usize::MAX, vertices: model.len(), q_bar_x0: ext.q[x0], converged: ext.converged });

    let mut flags = Vec::new();
    let survives_on = ladder.iter().find(|r| r.converged && r.q_bar_x0 < 1.0 - opts.q_gap);
    let verdict = if let Some(r) = survives_on {
        let what = if r.radius == usize::MAX { "the whole truncation".to_string() } else { format!("the ball of radius {}", r.radius) };
        return Ok(GlobalPart {
            verdict: Verdict::Survives,
            method: format!("survival on {what}, which the untruncated process dominates"),
            growth: Some(growth),
            q_bar: Some(ext.q[x0]),
            extinction: Some(ext),
            ladder,
            flags,
        });
    } else if ladder.iter().all(|r| r.q_bar_x0 >= 1.0 - opts.q_gap) {
        if growth_verdict(&growth, opts.growth_margin) == Verdict::Survives {
            flags.push(MEAN_CONDITION_FLAG.to_string());
        }
        Verdict::DiesOnEveryTruncation
    } else {
        Verdict::Inconclusive
    };
    Ok(GlobalPart {
        verdict,
        method: "least fixed point of G over nested truncations".into(),
        growth: Some(growth),
        q_bar: Some(ext.q[x0]),
        extinction: Some(ext),
        ladder,
        flags,
    })
}

/// Balls {x : d(x0, x) ≤ r} in the directed graph of M for r = 1, 2, 4, …
/// strictly smaller than the set reachable from x0.
fn nested_balls(m: &crate::spectral::MomentMatrix, x0: usize) -> Vec<(usize, Vec<usize>)> {
    let dist = m.distances_from(x0);
    let max = dist.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
    let mut out = Vec::new();
    let mut r = 1;
    while r < max {
        out.push((r, (0..m.dim()).filter(|&v| dist[v] <= r).collect()));
        r *= 2;
    }
    out
}

/// Compares q(x0, y) with q̄(x0): strong local survival at y holds when they
/// agree within `tol` and q̄(x0) < 1 − tol.
pub fn strong_local_compare(model: &BrwModel, x0: usize, y: usize, tol: f64) -> Result<StrongLocalResult> {
    let inner_tol = (tol * 1e-3).clamp(1e-13, 1e-9);
    let max_iter = 1_000_000;
    let global = iterate_extinction(model, &Target::Global, inner_tol, max_iter)?;
    let local = iterate_extinction(model, &Target::Set(vec![y]), inner_tol, max_iter)?;
    let q_bar_x0 = global.q[x0];
    let q_x0_y = local.q[x0];
    let converged = global.converged && local.converged;
    let verdict = if (q_x0_y - q_bar_x0).abs() <= tol && q_bar_x0 < 1.0 - tol {
        StrongLocal::Yes
    } else if converged {
        StrongLocal::No
    } else {
        StrongLocal::Inconclusive
    };
    Ok(StrongLocalResult { y, verdict, q_bar_x0, q_x0_y, converged })
}
