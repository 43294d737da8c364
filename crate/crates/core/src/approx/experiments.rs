//! Spatial exhaustions, truncation sweeps and the combined report.

use std::fmt::Write as _;

use crate::approx::chebyshev::{chebyshev_k, second_moment_bound, variance_bound};
use crate::approx::drift::{supercritical_region, DriftParams};
use crate::error::{param_err, Result};
use crate::genfun::Verdict;
use crate::model::serialize::model_hash;
use crate::model::{build_scenario, BrwModel, Params};
use crate::simulate::{estimate_survival, PopulationState, Simulator, SurvivalEstimate};
use crate::spectral::{local_growth_rate, moment_matrix, seneta_sequence};

/// Default overflow bound for sweep replicas. Capped runs stay far below
/// it; uncapped supercritical runs hit it early and count as surviving.
pub const SWEEP_HARD_CAP: u64 = 1_000_000;

/// Monte Carlo settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub horizon: u64,
    pub replicas: u64,
    pub seed: u64,
    pub hard_cap: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { horizon: 100, replicas: 1000, seed: 1, hard_cap: SWEEP_HARD_CAP }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialOptions {
    pub n_max: usize,
    /// Growth within 1 ± margin is inconclusive.
    pub margin: f64,
    pub mc: Option<McOptions>,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        Self { n_max: 2000, margin: 1e-3, mc: None }
    }
}

#[derive(Debug, Clone)]
pub struct SpatialRow {
    pub index: usize,
    pub size: usize,
    pub local_growth: f64,
    pub converged: bool,
    pub verdict: Verdict,
    /// Frequency of replicas that visit x0 near the horizon, with CI.
    pub mc: Option<(f64, (f64, f64))>,
}

#[derive(Debug, Clone)]
pub struct SpatialReport {
    pub x0: u64,
    pub full_growth: f64,
    pub full_verdict: Verdict,
    pub rows: Vec<SpatialRow>,
    /// First subset whose restriction has local growth above 1, reported
    /// when the full model survives locally.
    pub first_crossing: Option<usize>,
}

impl SpatialReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,size,local_growth,converged,verdict,mc_frequency,mc_ci_low,mc_ci_high\n");
        for r in &self.rows {
            let mc = r.mc.map_or(",,".to_string(), |(f, (lo, hi))| format!("{f},{lo},{hi}"));
            writeln!(out, "{},{},{},{},{},{mc}", r.index, r.size, r.local_growth, r.converged, r.verdict).unwrap();
        }
        out
    }
}

fn growth_verdict(g: f64, margin: f64) -> Verdict {
    if g > 1.0 + margin {
        Verdict::Survives
    } else if g < 1.0 - margin {
        Verdict::Dies
    } else {
        Verdict::Inconclusive
    }
}

/// Balls of radius 0, 1, … around `x0` (an id) in the graph of M, up to the
/// set of vertices reachable from it.
pub fn ball_exhaustion(model: &BrwModel, x0: u64) -> Result<Vec<Vec<u64>>> {
    let m = moment_matrix(model);
    let dist = m.distances_from(model.index_of(x0)?);
    let max = dist.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
    Ok((0..=max)
        .map(|r| (0..model.len()).filter(|&v| dist[v] <= r).map(|v| model.id(v)).collect())
        .collect())
}

/// Local growth (and optionally local survival frequency) of the
/// restriction of `model` to each set of an increasing exhaustion.
pub fn spatial_experiment(model: &BrwModel, exhaustion: &[Vec<u64>], x0: u64, opts: &SpatialOptions) -> Result<SpatialReport> {
    let x0_index = model.index_of(x0)?;
    let full = local_growth_rate(&moment_matrix(model), x0_index, opts.n_max)?;
    let full_verdict = growth_verdict(full.value, opts.margin);
    let growth = seneta_sequence(model, exhaustion, x0, opts.n_max)?;
    let mut rows = Vec::with_capacity(exhaustion.len());
    for (i, (set, est)) in exhaustion.iter().zip(growth).enumerate() {
        let mc = match (&opts.mc, set.contains(&x0)) {
            (Some(mc), true) => {
                let sub = model.restrict(set)?;
                let sim = Simulator::new(&sub)?.with_hard_cap(mc.hard_cap);
                let start = sub.index_of(x0)?;
                let eta0 = PopulationState::delta(sub.len(), start, 1)?;
                let est = estimate_survival(&sim, &eta0, mc.horizon, mc.replicas, Some(start), None, mc.seed)?;
                est.target_frequency()
            }
            _ => None,
        };
        rows.push(SpatialRow {
            index: i,
            size: set.len(),
            local_growth: est.value,
            converged: est.converged,
            verdict: growth_verdict(est.value, opts.margin),
            mc,
        });
    }
    let first_crossing = (full_verdict == Verdict::Survives)
        .then(|| rows.iter().position(|r| r.local_growth > 1.0))
        .flatten();
    Ok(SpatialReport { x0, full_growth: full.value, full_verdict, rows, first_crossing })
}

#[derive(Debug, Clone)]
pub struct TruncationRow {
    /// `None` is the untruncated process.
    pub cap: Option<u64>,
    pub estimate: SurvivalEstimate,
}

#[derive(Debug, Clone)]
pub struct TruncationSweep {
    pub horizon: u64,
    pub replicas: u64,
    pub seed: u64,
    pub rows: Vec<TruncationRow>,
    /// Every replica alive (or alive at the target) under a smaller cap is
    /// also alive under every larger cap. Holds by construction of the
    /// shared random streams.
    pub dominated: bool,
}

impl TruncationSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,horizon,replicas,frequency,ci_low,ci_high,target_frequency,target_ci_low,target_ci_high,overflows\n",
        );
        for r in &self.rows {
            let e = &r.estimate;
            let cap = r.cap.map_or("inf".to_string(), |m| m.to_string());
            let t = e.target_frequency().map_or(",,".to_string(), |(f, (lo, hi))| format!("{f},{lo},{hi}"));
            writeln!(
                out,
                "{cap},{},{},{},{},{},{t},{}",
                e.horizon, e.replicas, e.frequency, e.ci.0, e.ci.1, e.overflows
            )
            .unwrap();
        }
        out
    }

    pub fn row(&self, cap: Option<u64>) -> Option<&TruncationRow> {
        self.rows.iter().find(|r| r.cap == cap)
    }
}

/// Survival frequency of BRW_m for each cap plus the untruncated baseline,
/// all replicas sharing their random streams across caps.
#[allow(clippy::too_many_arguments)]
pub fn truncation_sweep(
    model: &BrwModel,
    caps: &[u64],
    eta0: &PopulationState,
    horizon: u64,
    replicas: u64,
    target: Option<usize>,
    seed: u64,
    hard_cap: u64,
) -> Result<TruncationSweep> {
    if caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(param_err("caps", "must be strictly increasing"));
    }
    if caps.first() == Some(&0) {
        return Err(param_err("caps", "caps must be at least 1"));
    }
    let sim = Simulator::new(model)?.with_hard_cap(hard_cap);
    let mut rows = Vec::with_capacity(caps.len() + 1);
    for cap in caps.iter().copied().map(Some).chain([None]) {
        let estimate = estimate_survival(&sim, eta0, horizon, replicas, target, cap, seed)?;
        rows.push(TruncationRow { cap, estimate });
    }
    let dominated = rows.windows(2).all(|w| {
        w[0].estimate.outcomes.iter().zip(&w[1].estimate.outcomes).all(|(lo, hi)| {
            (!lo.alive || hi.alive) && (!lo.alive_at_target(horizon) || hi.alive_at_target(horizon))
        })
    });
    Ok(TruncationSweep { horizon, replicas, seed, rows, dominated })
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub spatial: bool,
    pub spatial_mc: bool,
    pub caps: Vec<u64>,
    pub mc: McOptions,
    pub n_max: usize,
    /// Grid resolution of the Q region.
    pub resolution: usize,
    /// Chebyshev inputs: target multiple D, failure probability ε, and the
    /// generation n at which variances are taken.
    pub cheb_d: f64,
    pub cheb_eps: f64,
    pub cheb_n: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            spatial: true,
            spatial_mc: false,
            caps: vec![1, 2, 4, 8],
            mc: McOptions::default(),
            n_max: 2000,
            resolution: 100,
            cheb_d: 2.0,
            cheb_eps: 0.05,
            cheb_n: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxReport {
    pub scenario: String,
    pub params: Params,
    pub model_hash: String,
    pub seed: u64,
    /// (name, CSV body) in emission order.
    pub sections: Vec<(String, String)>,
    pub summary: String,
}

impl ApproxReport {
    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections.iter().find(|s| s.0 == name).map(|s| s.1.as_str())
    }

    /// All sections in one text document, each preceded by `## name`.
    pub fn bundle(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut out = format!(
            "# scenario={} params=\"{}\" seed={} model_hash={}\n",
            self.scenario,
            params.join(" "),
            self.seed,
            self.model_hash
        );
        for (name, body) in &self.sections {
            writeln!(out, "## {name}").unwrap();
            out.push_str(body);
        }
        out
    }
}

/// Builds the scenario and runs the applicable approximation studies.
pub fn approximation_report(scenario: &str, params: &Params, opts: &ReportOptions) -> Result<ApproxReport> {
    let model = build_scenario(scenario, params)?;
    let x0 = model.meta().origin;
    let x0_index = model.index_of(x0)?;
    let mut sections = Vec::new();
    let mut summary = format!("scenario {scenario} with {} vertices\n", model.len());

    if opts.spatial && model.len() > 1 {
        let exhaustion = ball_exhaustion(&model, x0)?;
        let sopts = SpatialOptions { n_max: opts.n_max, mc: opts.spatial_mc.then_some(opts.mc), ..Default::default() };
        let rep = spatial_experiment(&model, &exhaustion, x0, &sopts)?;
        writeln!(summary, "spatial: full local growth {} ({})", rep.full_growth, rep.full_verdict).unwrap();
        if let Some(i) = rep.first_crossing {
            writeln!(summary, "spatial: restricted growth first exceeds 1 on ball {i}").unwrap();
        }
        sections.push(("spatial".to_string(), rep.to_csv()));
    } else {
        writeln!(summary, "spatial: skipped (single vertex)").unwrap();
    }

    if !opts.caps.is_empty() {
        let eta0 = PopulationState::delta(model.len(), x0_index, 1)?;
        let mc = &opts.mc;
        let sweep = truncation_sweep(&model, &opts.caps, &eta0, mc.horizon, mc.replicas, Some(x0_index), mc.seed, mc.hard_cap)?;
        for r in &sweep.rows {
            let cap = r.cap.map_or("inf".to_string(), |m| m.to_string());
            writeln!(summary, "sweep: m={cap} survival frequency {}", r.estimate.frequency).unwrap();
        }
        sections.push(("sweep".to_string(), sweep.to_csv()));
    }

    if scenario == "zdrift" {
        let get = |k: &str| params.get(k).map_or(Ok(0.25), |v| v.parse::<f64>().map_err(|_| param_err(k, "not a number")));
        let rho_bar = model.law(x0_index).children().mean();
        let d = DriftParams::new(rho_bar, get("p")?, get("q")?)?;
        let region = supercritical_region(&d, opts.resolution)?;
        writeln!(summary, "drift: {} of {} grid points have Q > 1", region.inside_count(), region.points.len()).unwrap();
        if let Some(s) = region.selection {
            writeln!(summary, "drift: d1={} d2={} d3={} N={}", s.d1, s.d2, s.d3, s.n).unwrap();
        }
        sections.push(("q_region".to_string(), region.to_csv()));
        sections.push(("q_selection".to_string(), region.selection_csv()));
    }

    let rho = model.dominating_law();
    let stated = variance_bound(&rho, opts.cheb_n)?;
    let sound = second_moment_bound(&rho, opts.cheb_n)?;
    let k_stated = chebyshev_k(stated, opts.cheb_d, opts.cheb_eps)?;
    let k_sound = chebyshev_k(sound, opts.cheb_d, opts.cheb_eps)?;
    writeln!(summary, "chebyshev: k = {k_sound} from the second-moment bound ({k_stated} from E^(n-1) var)").unwrap();
    sections.push((
        "chebyshev".to_string(),
        format!(
            "n,D,eps,variance_bound,k_variance_bound,second_moment_bound,k_second_moment_bound\n{},{},{},{stated},{k_stated},{sound},{k_sound}\n",
            opts.cheb_n, opts.cheb_d, opts.cheb_eps
        ),
    ));

    Ok(ApproxReport {
        scenario: scenario.to_string(),
        params: params.clone(),
        model_hash: model_hash(&model),
        seed: opts.mc.seed,
        sections,
        summary,
    })
}
