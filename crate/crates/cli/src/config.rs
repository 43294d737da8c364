//! Flat `key = value` run configuration: file, then `BRWLAB_SEED`, then
//! command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use brwlab::model::Params;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Keys accepted besides `param.<name>`.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario", "registered scenario name"),
    ("seed", "base seed of all random streams (default 0)"),
    ("horizon", "generations per trial (default 200)"),
    ("replicas", "Monte Carlo replicas (default 1000)"),
    ("caps", "comma list of truncation caps m for sweeps"),
    ("out", "output directory (default brwlab-out)"),
    ("x0", "starting vertex id (default: the scenario origin)"),
    ("tol", "fixed-point tolerance (default 1e-12)"),
    ("max_iter", "fixed-point iteration limit (default 200000)"),
    ("n_max", "matrix power horizon for growth rates (default 2000)"),
    ("hard_cap", "population at which a trial is stopped as overflowed"),
    ("strong_local", "comma list of vertex ids for strong local comparisons"),
    ("target", "extinction target: global, or a comma list of ids"),
    ("lambda", "series parameter for first-return and Green series"),
    ("mode", "sweep mode: truncation | lambda | report"),
    ("lo", "lambda sweep lower end"),
    ("hi", "lambda sweep upper end"),
    ("points", "lambda sweep grid points"),
    ("width", "lambda sweep bisection width"),
    ("mc", "spatial: also simulate each restriction (true/false)"),
    ("resolution", "grid resolution of the drift region"),
    ("p", "percolation: comma list of open probabilities"),
    ("graph", "percolation base graph: z | n"),
    ("size", "percolation window radius (z) or length (n)"),
];

/// Raw settings, later insertions win.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        if !key.starts_with("param.") && !KEYS.iter().any(|k| k.0 == key) {
            return Err(bad(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| bad(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        match self.get(key) {
            None | Some("") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad(format!("`{key}`: cannot parse `{s}`"))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Extinction,
    Spectral,
    Spatial,
    Sweep,
    Percolate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Extinction => "extinction",
            Command::Spectral => "spectral",
            Command::Spatial => "spatial",
            Command::Sweep => "sweep",
            Command::Percolate => "percolate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Truncation,
    Lambda,
    Report,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub scenario: Option<String>,
    pub params: Params,
    pub seed: u64,
    pub horizon: u64,
    pub replicas: u64,
    pub caps: Vec<u64>,
    pub out: PathBuf,
    pub x0: Option<u64>,
    pub tol: f64,
    pub max_iter: usize,
    pub n_max: usize,
    pub hard_cap: Option<u64>,
    pub strong_local: Vec<u64>,
    /// `None` is the global target.
    pub target: Option<Vec<u64>>,
    pub lambda: Option<f64>,
    pub mode: SweepMode,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub width: f64,
    pub mc: bool,
    pub resolution: usize,
    pub p: Vec<f64>,
    pub graph: String,
    pub size: usize,
}

impl RunConfig {
    pub fn from_settings(command: Command, s: &Settings) -> Result<Self, ConfigError> {
        let params: Params = s
            .values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("param.").map(|k| (k.to_string(), v.clone())))
            .collect();
        let target = match s.get("target") {
            None | Some("global") => None,
            Some(_) => Some(s.list("target")?),
        };
        let mode = match s.get("mode").unwrap_or("truncation") {
            "truncation" => SweepMode::Truncation,
            "lambda" => SweepMode::Lambda,
            "report" => SweepMode::Report,
            other => return Err(bad(format!("`mode`: unknown sweep mode `{other}`"))),
        };
        let cfg = RunConfig {
            command,
            scenario: s.get("scenario").map(str::to_string),
            params,
            seed: s.parse("seed", 0)?,
            horizon: s.parse("horizon", 200)?,
            replicas: s.parse("replicas", 1000)?,
            caps: s.list("caps")?,
            out: PathBuf::from(s.get("out").unwrap_or("brwlab-out")),
            x0: s.get("x0").map(|_| s.parse("x0", 0)).transpose()?,
            tol: s.parse("tol", 1e-12)?,
            max_iter: s.parse("max_iter", 200_000)?,
            n_max: s.parse("n_max", 2000)?,
            hard_cap: s.get("hard_cap").map(|_| s.parse("hard_cap", 0)).transpose()?,
            strong_local: s.list("strong_local")?,
            target,
            lambda: s.get("lambda").map(|_| s.parse("lambda", 0.0)).transpose()?,
            mode,
            lo: s.parse("lo", 0.05)?,
            hi: s.parse("hi", 2.0)?,
            points: s.parse("points", 17)?,
            width: s.parse("width", 1e-4)?,
            mc: s.parse("mc", false)?,
            resolution: s.parse("resolution", 100)?,
            p: s.list("p")?,
            graph: s.get("graph").unwrap_or("z").to_string(),
            size: s.parse("size", 20)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.replicas == 0 {
            return Err(bad("`replicas` must be at least 1"));
        }
        if self.command != Command::Percolate && self.scenario.is_none() {
            return Err(bad(format!("`{}` needs a scenario", self.command.name())));
        }
        if self.command == Command::Sweep && self.mode != SweepMode::Lambda && self.caps.is_empty() {
            return Err(bad("`caps` must be nonempty for a truncation sweep"));
        }
        if self.caps.windows(2).any(|w| w[0] >= w[1]) || self.caps.contains(&0) {
            return Err(bad("`caps` must be positive and strictly increasing"));
        }
        if !(self.tol > 0.0) {
            return Err(bad("`tol` must be positive"));
        }
        if self.command == Command::Percolate {
            if self.p.is_empty() {
                return Err(bad("`p` must list at least one open probability"));
            }
            if self.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(bad("`p` values must lie in [0, 1]"));
            }
            if self.graph != "z" && self.graph != "n" {
                return Err(bad("`graph` must be z or n"));
            }
            if self.horizon == 0 {
                return Err(bad("`horizon` must be at least 1"));
            }
        }
        Ok(())
    }

    /// Canonical `key=value` listing for the manifest.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "command={} scenario={} params=\"{}\" seed={} horizon={} replicas={}",
            self.command.name(),
            self.scenario.as_deref().unwrap_or("none"),
            params.join(" "),
            self.seed,
            self.horizon,
            self.replicas
        )
    }
}
