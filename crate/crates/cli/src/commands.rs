//! Command execution and file emission.

use std::fmt::Write as _;
use std::path::Path;

use brwlab::approx::{
    approximation_report, ball_exhaustion, oriented_percolation, spatial_experiment, truncation_sweep, BaseGraph,
    McOptions, PercolationConfig, ReportOptions, SpatialOptions, PERCOLATION_HEADER, SWEEP_HARD_CAP,
};
use brwlab::genfun::{classify_survival, iterate_extinction, lambda_sweep, ClassifyOptions, RateMatrix, SweepOptions, Target};
use brwlab::model::scenario::{radial_tree_rates, TreeBall};
use brwlab::model::serialize::{content_hash, model_hash};
use brwlab::model::{build_scenario, list_scenarios, BrwModel, Projection};
use brwlab::simulate::{DEFAULT_HARD_CAP, PopulationState};
use brwlab::spectral::{first_return_terms, global_growth_rate, green_series, local_growth_rate, moment_matrix};
use brwlab::BrwError;

use crate::config::{Command, RunConfig, SweepMode};

/// What a run produced.
pub struct Outcome {
    pub digest: String,
    /// (file name, CSV or text body without the hash header).
    pub files: Vec<(String, String)>,
    pub hash: String,
    /// An overflow that the exit status must report.
    pub overflow: bool,
}

pub enum RunError {
    Config(String),
    Scenario(BrwError),
    Io(std::io::Error),
}

impl From<BrwError> for RunError {
    fn from(e: BrwError) -> Self {
        RunError::Scenario(e)
    }
}

/// Fixed-point numbers with trailing zeros removed: 0.500000 → 0.5.
pub fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn scenario_model(cfg: &RunConfig) -> Result<(BrwModel, usize), RunError> {
    let name = cfg.scenario.as_deref().expect("validated");
    let model = build_scenario(name, &cfg.params)?;
    let x0 = model.index_of(cfg.x0.unwrap_or(model.meta().origin))?;
    Ok((model, x0))
}

fn indices(model: &BrwModel, ids: &[u64]) -> Result<Vec<usize>, RunError> {
    Ok(ids.iter().map(|&id| model.index_of(id)).collect::<brwlab::Result<_>>()?)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    match cfg.command {
        Command::Classify => classify(cfg),
        Command::Extinction => extinction(cfg),
        Command::Spectral => spectral(cfg),
        Command::Spatial => spatial(cfg),
        Command::Sweep => match cfg.mode {
            SweepMode::Truncation => sweep_truncation(cfg),
            SweepMode::Lambda => sweep_lambda(cfg),
            SweepMode::Report => sweep_report(cfg),
        },
        Command::Percolate => percolate(cfg),
    }
}

fn classify(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (model, x0) = scenario_model(cfg)?;
    let opts = ClassifyOptions {
        n_max: cfg.n_max,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        strong_local: indices(&model, &cfg.strong_local)?,
        ..ClassifyOptions::default()
    };
    let r = classify_survival(&model, x0, &opts)?;
    let mut digest = format!("local={}, global={}", r.local, r.global);
    if let Some(q) = r.q_bar {
        write!(digest, ", q̄={}", short(q)).unwrap();
    }
    for f in &r.flags {
        write!(digest, "\nflag: {f}").unwrap();
    }
    Ok(Outcome {
        digest,
        files: vec![("classify.txt".into(), r.to_text()), ("classify_evidence.csv".into(), r.evidence_csv())],
        hash: model_hash(&model),
        overflow: false,
    })
}

fn extinction(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (model, x0) = scenario_model(cfg)?;
    let target = match &cfg.target {
        None => Target::Global,
        Some(ids) => Target::Set(indices(&model, ids)?),
    };
    let r = iterate_extinction(&model, &target, cfg.tol, cfg.max_iter)?;
    let what = if cfg.target.is_none() { "q̄" } else { "q" };
    let digest = format!(
        "{what}(x0)={}, converged={}, iterations={}, residual={:e}",
        short(r.q[x0]),
        r.converged,
        r.iterations,
        r.residual
    );
    Ok(Outcome {
        digest,
        files: vec![("extinction.csv".into(), r.to_csv())],
        hash: model_hash(&model),
        overflow: false,
    })
}

fn spectral(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (model, x0) = scenario_model(cfg)?;
    let m = moment_matrix(&model);
    let local = local_growth_rate(&m, x0, cfg.n_max)?;
    let global = global_growth_rate(&m, x0, cfg.n_max)?;
    let mut digest = format!(
        "local growth={} ({}), global growth={}",
        short(local.value),
        local.subsequence_rule,
        short(global.value)
    );
    let mut files =
        vec![("growth_local.csv".to_string(), local.to_csv()), ("growth_global.csv".to_string(), global.to_csv())];
    if let Some(lambda) = cfg.lambda {
        let terms = first_return_terms(&m, x0, lambda, cfg.n_max)?;
        let phi: f64 = terms.iter().sum();
        let mut csv = String::from("n,first_return_term\n");
        for (n, t) in terms.iter().enumerate() {
            writeln!(csv, "{},{t}", n + 1).unwrap();
        }
        write!(digest, "\nPhi(x0,x0|{lambda})={}", short(phi)).unwrap();
        match green_series(&m, x0, lambda, cfg.n_max) {
            Ok(g) => {
                write!(digest, ", Gamma(x0,x0|{lambda})={}", short(g)).unwrap();
                writeln!(csv, "# green,{g}").unwrap();
            }
            Err(BrwError::Divergent { .. }) => write!(digest, ", Gamma diverges").unwrap(),
            Err(e) => return Err(e.into()),
        }
        files.push(("series.csv".into(), csv));
    }
    Ok(Outcome { digest, files, hash: model_hash(&model), overflow: false })
}

fn mc_options(cfg: &RunConfig, default_cap: u64) -> McOptions {
    McOptions {
        horizon: cfg.horizon,
        replicas: cfg.replicas,
        seed: cfg.seed,
        hard_cap: cfg.hard_cap.unwrap_or(default_cap),
    }
}

fn spatial(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (model, x0) = scenario_model(cfg)?;
    let x0_id = model.id(x0);
    let exhaustion = ball_exhaustion(&model, x0_id)?;
    let opts = SpatialOptions {
        n_max: cfg.n_max,
        mc: cfg.mc.then(|| mc_options(cfg, DEFAULT_HARD_CAP)),
        ..SpatialOptions::default()
    };
    let r = spatial_experiment(&model, &exhaustion, x0_id, &opts)?;
    let mut digest = format!("full local growth={} ({})", short(r.full_growth), r.full_verdict);
    match r.first_crossing {
        Some(i) => write!(digest, "\nrestricted growth first exceeds 1 on ball {i}").unwrap(),
        None => write!(digest, "\nno restriction with local growth above 1").unwrap(),
    }
    Ok(Outcome {
        digest,
        files: vec![("spatial.csv".into(), r.to_csv())],
        hash: model_hash(&model),
        overflow: false,
    })
}

fn sweep_truncation(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (model, x0) = scenario_model(cfg)?;
    let eta0 = PopulationState::delta(model.len(), x0, 1)?;
    let hard_cap = cfg.hard_cap.unwrap_or(SWEEP_HARD_CAP);
    let s = truncation_sweep(&model, &cfg.caps, &eta0, cfg.horizon, cfg.replicas, Some(x0), cfg.seed, hard_cap)?;
    let mut digest = String::new();
    for r in &s.rows {
        let cap = r.cap.map_or("inf".to_string(), |m| m.to_string());
        let e = &r.estimate;
        writeln!(digest, "m={cap}: survival {} [{}, {}]", short(e.frequency), short(e.ci.0), short(e.ci.1)).unwrap();
    }
    write!(digest, "coupled domination: {}", if s.dominated { "holds" } else { "VIOLATED" }).unwrap();
    // overflow of the untruncated baseline is expected and counted as survival
    let overflow = s.rows.iter().any(|r| r.cap.is_some() && r.estimate.overflows > 0);
    let mut files = vec![("sweep.csv".to_string(), s.to_csv())];
    for r in &s.rows {
        let cap = r.cap.map_or("inf".to_string(), |m| m.to_string());
        files.push((format!("replicas_m{cap}.csv"), r.estimate.replicas_csv()));
    }
    Ok(Outcome { digest, files, hash: model_hash(&model), overflow })
}

fn sweep_lambda(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let name = cfg.scenario.as_deref().expect("validated");
    if name != "tree_counterpart" {
        return Err(RunError::Config(format!("lambda sweeps need the tree_counterpart scenario, not `{name}`")));
    }
    // the model itself is only built for its hash
    let model = build_scenario(name, &cfg.params)?;
    let get = |k: &str, d: usize| cfg.params.get(k).map_or(Ok(d), |v| v.parse().map_err(|_| RunError::Config(format!("param.{k}: not an integer"))));
    let (degree, depth) = (get("degree", 4)?, get("depth", 6)?);
    let radial = cfg.params.get("radial").is_some_and(|v| v == "true");
    let (rows, outside) = if radial { radial_tree_rates(degree, depth)? } else { TreeBall::new(degree, depth)?.unit_rates() };
    let n = rows.len();
    let rates = RateMatrix::new(rows, outside)?;
    let opts = SweepOptions {
        lo: cfg.lo,
        hi: cfg.hi,
        points: cfg.points,
        width: cfg.width,
        classify: ClassifyOptions { n_max: cfg.n_max, tol: cfg.tol, max_iter: cfg.max_iter, ..ClassifyOptions::default() },
        ..SweepOptions::default()
    };
    let r = lambda_sweep(&rates, 0, Some(&Projection::singleton(n)), &opts)?;
    let digest = format!(
        "lambda_w in [{}, {}], lambda_s in [{}, {}]",
        short(r.lambda_w.lo),
        short(r.lambda_w.hi),
        short(r.lambda_s.lo),
        short(r.lambda_s.hi)
    );
    Ok(Outcome {
        digest,
        files: vec![("lambda_sweep.csv".into(), r.to_csv())],
        hash: model_hash(&model),
        overflow: false,
    })
}

fn sweep_report(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let name = cfg.scenario.as_deref().expect("validated");
    let opts = ReportOptions {
        spatial: true,
        spatial_mc: cfg.mc,
        caps: cfg.caps.clone(),
        mc: mc_options(cfg, SWEEP_HARD_CAP),
        n_max: cfg.n_max,
        resolution: cfg.resolution,
        ..ReportOptions::default()
    };
    let r = approximation_report(name, &cfg.params, &opts)?;
    let files = r.sections.iter().map(|(n, body)| (format!("report_{n}.csv"), body.clone())).collect();
    Ok(Outcome { digest: r.summary.trim_end().to_string(), files, hash: r.model_hash.clone(), overflow: false })
}

fn percolate(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (graph, origin) = match cfg.graph.as_str() {
        "z" => (BaseGraph::ZWindow { radius: cfg.size }, cfg.size),
        _ => (BaseGraph::NWindow { len: cfg.size.max(1) }, 0),
    };
    let mut summary = String::from(PERCOLATION_HEADER);
    let mut replicas = String::from("p,replica,reached,revisits,depth\n");
    let mut digest = String::new();
    for &p in &cfg.p {
        let pc = PercolationConfig { graph: graph.clone(), p, horizon: cfg.horizon, origin };
        let r = oriented_percolation(&pc, cfg.replicas, cfg.seed)?;
        summary.push_str(&r.summary_row());
        for o in &r.outcomes {
            writeln!(replicas, "{p},{},{},{},{}", o.replica, o.reached as u8, o.revisits, o.depth).unwrap();
        }
        writeln!(digest, "p={p}: reaches level {} with frequency {}", cfg.horizon, short(r.frequency)).unwrap();
    }
    let hash = content_hash(&format!("graph={} size={} horizon={}\n", cfg.graph, cfg.size, cfg.horizon));
    Ok(Outcome {
        digest: digest.trim_end().to_string(),
        files: vec![("percolation.csv".into(), summary), ("percolation_replicas.csv".into(), replicas)],
        hash,
        overflow: false,
    })
}

/// Registry table for the `scenarios` command.
pub fn scenarios_table() -> String {
    let mut out = String::new();
    for s in list_scenarios() {
        writeln!(out, "{}\n  {}", s.name, s.construction).unwrap();
        for (k, d, meaning) in s.params {
            let d = if d.is_empty() { "-" } else { d };
            writeln!(out, "    {k} (default {d}): {meaning}").unwrap();
        }
    }
    out
}

/// Writes every file with a `# model_hash=` first line, then the manifest.
pub fn write_outputs(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(RunError::Io)?;
    for (name, body) in &outcome.files {
        let text = format!("# model_hash={}\n{body}", outcome.hash);
        std::fs::write(dir.join(name), text).map_err(RunError::Io)?;
    }
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let names: Vec<&str> = outcome.files.iter().map(|f| f.0.as_str()).collect();
    let manifest = format!(
        "{}\nmodel_hash={}\noverflow={}\nfiles={}\ncreated_unix={created}\n",
        cfg.describe(),
        outcome.hash,
        outcome.overflow,
        names.join(",")
    );
    std::fs::write(dir.join("manifest.txt"), manifest).map_err(RunError::Io)
}
