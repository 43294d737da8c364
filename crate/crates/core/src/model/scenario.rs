//! Registry of canonical models addressable by name and `key=value` params.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{param_err, BrwError, Result};
use crate::model::brw::{zwindow_coords, zwindow_id, BrwModel, Labeling, ModelMeta, Projection};
use crate::model::config::OffspringConfig;
use crate::model::dist::IntDistribution;
use crate::model::law::OffspringLaw;

pub type Params = BTreeMap<String, String>;

/// Registry entry.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioInfo {
    pub name: &'static str,
    /// `(key, default, meaning)`.
    pub params: &'static [(&'static str, &'static str, &'static str)],
    /// What the construction is and what it illustrates.
    pub construction: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "gw",
        params: &[
            ("rho", "", "offspring law as n:p pairs, e.g. 0:0.4,2:0.6"),
            ("mean", "2", "geometric offspring mean, used when rho is absent"),
        ],
        construction: "single-site Galton-Watson process",
    },
    ScenarioInfo {
        name: "line_noext",
        params: &[
            ("size", "9", "number of sites 0..size-1"),
            ("n", "", "comma list n_0,n_1,...; default from noext_sequence"),
        ],
        construction: "reducible line: n_i children at i+1 w.p. 2/n_i; row sums grow like 2^n yet extinction is certain",
    },
    ScenarioInfo {
        name: "line_noext_irreducible",
        params: &[
            ("size", "9", "number of sites 0..size-1"),
            ("n", "", "comma list n_i >= 9; default from noext_irreducible_sequence"),
        ],
        construction: "irreducible line: n_i children at i+1 plus one at i-1 w.p. 2/n_i; same means, still extinct",
    },
    ScenarioInfo {
        name: "line_ex45",
        params: &[
            ("size", "64", "number of sites 0..size-1"),
            ("variant", "irreducible", "irreducible | reducible"),
            ("base", "2", "p_i = 1 - base^-(i+2)"),
        ],
        construction: "one child at i+1 w.p. p_i, summable failures: subcritical row sums yet global survival",
    },
    ScenarioInfo {
        name: "zd_translation",
        params: &[
            ("dim", "1", "lattice dimension"),
            ("radius", "20", "window {-r..r}^dim"),
            ("mean", "1.5", "geometric offspring mean, used when rho is absent"),
            ("rho", "", "offspring law as n:p pairs"),
            ("periodic", "false", "wrap the window into a torus"),
        ],
        construction: "translation invariant product-form walk on Z^d, nearest-neighbour dispersal",
    },
    ScenarioInfo {
        name: "tree_counterpart",
        params: &[
            ("degree", "4", "tree degree"),
            ("depth", "6", "ball radius around the root"),
            ("lambda", "", "edge rate; each generation is the continuous-time counterpart"),
            ("mean", "1.1", "geometric offspring mean (sets lambda = mean/degree) when lambda is absent"),
            ("radial", "false", "lump the ball by distance to the root (exact for root quantities, allows large depth)"),
        ],
        construction: "discrete-time counterpart of the continuous BRW on a homogeneous tree, unit edge rates",
    },
    ScenarioInfo {
        name: "zdrift",
        params: &[
            ("p", "0.25", "probability of a +1 step"),
            ("q", "0.25", "probability of a -1 step"),
            ("mean", "1.5", "geometric offspring mean, used when rho is absent"),
            ("rho", "", "offspring law as n:p pairs"),
            ("width", "1", "size of the transverse factor Y"),
            ("radius", "20", "window {-r..r} on the Z factor"),
        ],
        construction: "Z x Y walk projecting onto a drifted walk on Z with steps +1/-1/0 w.p. p/q/1-p-q",
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    SCENARIOS
}

/// Builds a registered scenario.
pub fn build_scenario(name: &str, params: &Params) -> Result<BrwModel> {
    let info = SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| BrwError::UnknownScenario(name.to_string()))?;
    if let Some(k) = params.keys().find(|k| !info.params.iter().any(|p| p.0 == k.as_str())) {
        return Err(param_err(k, format!("not a parameter of `{name}`")));
    }
    let model = match name {
        "gw" => gw(params),
        "line_noext" => line_noext(params),
        "line_noext_irreducible" => line_noext_irreducible(params),
        "line_ex45" => line_summable_failures(params),
        "zd_translation" => zd_translation(params),
        "tree_counterpart" => tree_counterpart(params),
        "zdrift" => zdrift(params),
        _ => unreachable!("registry and dispatch disagree"),
    }?;
    let mut meta = model.meta().clone();
    meta.scenario = name.to_string();
    meta.params = params.clone();
    Ok(model.with_meta(meta))
}

/// Parses `key=value` pairs separated by whitespace or commas-free tokens.
pub fn parse_params<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Params> {
    let mut out = Params::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| param_err(item, "expected key=value"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get<'a>(params: &'a Params, key: &str) -> Option<&'a str> {
    params.get(key).map(String::as_str).filter(|s| !s.is_empty())
}

fn get_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match get(params, key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| param_err(key, format!("`{v}` is not a number"))),
    }
}

fn get_usize(params: &Params, key: &str, default: usize) -> Result<usize> {
    match get(params, key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| param_err(key, format!("`{v}` is not a nonnegative integer"))),
    }
}

fn get_bool(params: &Params, key: &str, default: bool) -> Result<bool> {
    match get(params, key) {
        None => Ok(default),
        Some("true" | "1" | "yes") => Ok(true),
        Some("false" | "0" | "no") => Ok(false),
        Some(v) => Err(param_err(key, format!("`{v}` is not a boolean"))),
    }
}

fn get_u64_list(params: &Params, key: &str) -> Result<Option<Vec<u64>>> {
    match get(params, key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| param_err(key, format!("`{s}` is not an integer"))))
            .collect::<Result<Vec<_>>>()
            .map(Some),
    }
}

/// Offspring law from `rho` (explicit) or `mean` (geometric).
fn offspring_law_param(params: &Params, default_mean: f64) -> Result<IntDistribution> {
    if let Some(text) = get(params, "rho") {
        return IntDistribution::parse(text).map_err(|e| param_err("rho", e.to_string()));
    }
    let mean = get_f64(params, "mean", default_mean)?;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(param_err("mean", "must be positive"));
    }
    IntDistribution::geometric(mean).map_err(|e| param_err("mean", e.to_string()))
}

fn positive_size(params: &Params, default: usize) -> Result<usize> {
    let size = get_usize(params, "size", default)?;
    if size == 0 {
        return Err(param_err("size", "must be at least 1"));
    }
    Ok(size)
}

fn meta(labeling: Labeling, truncation: Option<u64>, origin: u64) -> ModelMeta {
    ModelMeta { labeling, truncation, origin, ..ModelMeta::default() }
}

fn gw(params: &Params) -> Result<BrwModel> {
    let rho = offspring_law_param(params, 2.0)?;
    let law = OffspringLaw::product_form(rho, &[(0, 1.0)])?;
    BrwModel::new(vec![0], vec![law], meta(Labeling::Plain, None, 0))?.with_projection(Projection::identity(1))
}

/// Builds laws on `0..=size` (the extra site standing for the rest of the
/// half-line) and restricts to `0..size`.
fn line_truncation(size: usize, law_at: impl Fn(usize) -> Result<OffspringLaw>) -> Result<BrwModel> {
    let mut laws = Vec::with_capacity(size + 1);
    for i in 0..size {
        laws.push(law_at(i)?);
    }
    laws.push(OffspringLaw::from_atoms(vec![(OffspringConfig::empty(), 1.0)])?);
    let full = BrwModel::new((0..=size as u64).collect(), laws, meta(Labeling::Line, Some(size as u64), 0))?;
    full.restrict(&(0..size as u64).collect::<Vec<_>>())
}

fn atoms(list: Vec<(OffspringConfig, f64)>) -> Result<OffspringLaw> {
    OffspringLaw::from_atoms(list.into_iter().filter(|a| a.1 > 0.0).collect())
}

fn line_noext(params: &Params) -> Result<BrwModel> {
    let size = positive_size(params, 9)?;
    let ns = match get_u64_list(params, "n")? {
        Some(ns) => ns,
        None => noext_sequence(size)?,
    };
    if ns.len() < size {
        return Err(param_err("n", format!("need {size} values, got {}", ns.len())));
    }
    if let Some(bad) = ns.iter().find(|&&n| n < 2) {
        return Err(param_err("n", format!("n_i = {bad} gives p_i = 2/n_i > 1")));
    }
    line_truncation(size, |i| {
        let p = 2.0 / ns[i] as f64;
        atoms(vec![(OffspringConfig::single(i + 1, ns[i]), p), (OffspringConfig::empty(), 1.0 - p)])
    })
}

fn line_noext_irreducible(params: &Params) -> Result<BrwModel> {
    let size = positive_size(params, 9)?;
    let ns = match get_u64_list(params, "n")? {
        Some(ns) => ns,
        None => noext_irreducible_sequence(size)?,
    };
    if ns.len() < size {
        return Err(param_err("n", format!("need {size} values, got {}", ns.len())));
    }
    if let Some(bad) = ns.iter().find(|&&n| n < 2) {
        return Err(param_err("n", format!("n_i = {bad} gives p_i = 2/n_i > 1")));
    }
    line_truncation(size, |i| {
        let p = 2.0 / ns[i] as f64;
        let f = if i == 0 {
            OffspringConfig::single(1, ns[0])
        } else {
            OffspringConfig::new([(i + 1, ns[i]), (i - 1, 1)])
        };
        atoms(vec![(f, p), (OffspringConfig::empty(), 1.0 - p)])
    })
}

/// p_i = 1 − base^{−(i+2)}.
pub fn summable_failure_probability(base: f64, i: usize) -> f64 {
    1.0 - base.powf(-(i as f64 + 2.0))
}

fn line_summable_failures(params: &Params) -> Result<BrwModel> {
    let size = positive_size(params, 64)?;
    let base = get_f64(params, "base", 2.0)?;
    if base <= 1.0 {
        return Err(param_err("base", "must exceed 1"));
    }
    let irreducible = match get(params, "variant").unwrap_or("irreducible") {
        "irreducible" => true,
        "reducible" => false,
        other => return Err(param_err("variant", format!("unknown variant `{other}`"))),
    };
    line_truncation(size, |i| {
        let p = summable_failure_probability(base, i);
        let step = OffspringConfig::single(i + 1, 1);
        if !irreducible {
            return atoms(vec![(step, p), (OffspringConfig::empty(), 1.0 - p)]);
        }
        let back = OffspringConfig::single(i.saturating_sub(1), 1);
        atoms(vec![(step, p), (back, (1.0 - p) / 2.0), (OffspringConfig::empty(), (1.0 - p) / 2.0)])
    })
}

/// z(n) = 1 − Π_{i≥n} p_i for the first `size` sites, the infinite product
/// evaluated until its factors round to one.
pub fn summable_failure_subsolution(base: f64, size: usize) -> Vec<f64> {
    let mut tail = 1.0;
    let mut i = size;
    loop {
        let p = summable_failure_probability(base, i);
        if p == 1.0 {
            break;
        }
        tail *= p;
        i += 1;
    }
    let mut z = vec![0.0; size];
    for n in (0..size).rev() {
        tail *= summable_failure_probability(base, n);
        z[n] = 1.0 - tail;
    }
    z
}

/// Minimal solution of z(k) ≥ 1 − 2/n_k, z(i) ≥ (2/n_i) z(i+1)^{n_i} + 1 − 2/n_i
/// for the partial system over sites `0..ns.len()`.
pub fn noext_partial_solution(ns: &[u64]) -> Vec<f64> {
    let k = ns.len();
    let mut z = vec![0.0; k];
    if k == 0 {
        return z;
    }
    z[k - 1] = 1.0 - 2.0 / ns[k - 1] as f64;
    for i in (0..k - 1).rev() {
        let p = 2.0 / ns[i] as f64;
        z[i] = p * z[i + 1].powf(ns[i] as f64) + 1.0 - p;
    }
    z
}

/// n_0 = 4 and each n_{k+1} the smallest integer for which every solution
/// of the partial system through site k+1 satisfies z(i) ≥ k/(k+1).
pub fn noext_sequence(len: usize) -> Result<Vec<u64>> {
    let mut ns = vec![4u64];
    for k in 0..len.saturating_sub(1) {
        let target = k as f64 / (k as f64 + 1.0);
        let ok = |n: u64, ns: &mut Vec<u64>| {
            ns.push(n);
            let z = noext_partial_solution(ns);
            ns.pop();
            z.iter().all(|&v| v >= target)
        };
        let next = smallest_passing(2, &mut ns, ok).ok_or_else(|| param_err("n", "sequence exceeds u64"))?;
        ns.push(next);
    }
    ns.truncate(len.max(1));
    Ok(ns)
}

/// Minimal solution of the irreducible partial system over sites
/// `0..ns.len()`: the last site only satisfies z ≥ 1 − p.
pub fn noext_irreducible_partial_solution(ns: &[u64]) -> Vec<f64> {
    let k = ns.len();
    let p: Vec<f64> = ns.iter().map(|&n| 2.0 / n as f64).collect();
    let mut z = vec![0.0f64; k];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0f64; k];
        for i in 0..k {
            next[i] = if i + 1 == k {
                1.0 - p[i]
            } else if i == 0 {
                p[0] * z[1].powf(ns[0] as f64) + 1.0 - p[0]
            } else {
                p[i] * z[i + 1].powf(ns[i] as f64) * z[i - 1] + 1.0 - p[i]
            };
        }
        let step = next.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next;
        if step < 1e-15 {
            break;
        }
    }
    z
}

/// n_0 = 9 (keeping p_i = 2/n_i below 1/4) and each n_{k+1} ≥ 9 the smallest
/// integer with every partial solution above (k+1)/(k+2).
pub fn noext_irreducible_sequence(len: usize) -> Result<Vec<u64>> {
    let mut ns = vec![9u64];
    for k in 0..len.saturating_sub(1) {
        let target = (k as f64 + 1.0) / (k as f64 + 2.0);
        let ok = |n: u64, ns: &mut Vec<u64>| {
            ns.push(n);
            let z = noext_irreducible_partial_solution(ns);
            ns.pop();
            z.iter().all(|&v| v >= target)
        };
        let next = smallest_passing(9, &mut ns, ok).ok_or_else(|| param_err("n", "sequence exceeds u64"))?;
        ns.push(next);
    }
    ns.truncate(len.max(1));
    Ok(ns)
}

/// Smallest n ≥ lo with `ok(n)`, assuming `ok` is monotone in n.
fn smallest_passing(lo: u64, ns: &mut Vec<u64>, ok: impl Fn(u64, &mut Vec<u64>) -> bool) -> Option<u64> {
    if ok(lo, ns) {
        return Some(lo);
    }
    let mut hi = lo.checked_mul(2)?;
    while !ok(hi, ns) {
        hi = hi.checked_mul(2)?;
    }
    let mut low = hi / 2;
    while hi - low > 1 {
        let mid = low + (hi - low) / 2;
        if ok(mid, ns) {
            hi = mid;
        } else {
            low = mid;
        }
    }
    Some(hi)
}

fn zd_translation(params: &Params) -> Result<BrwModel> {
    let dim = get_usize(params, "dim", 1)?;
    let radius = get_usize(params, "radius", 20)? as i64;
    let periodic = get_bool(params, "periodic", false)?;
    if dim == 0 || dim > 4 {
        return Err(param_err("dim", "supported dimensions are 1..=4"));
    }
    let side = 2 * radius + 1;
    let count = (side as u64).checked_pow(dim as u32).filter(|&c| c <= 5_000_000);
    let count = count.ok_or_else(|| param_err("radius", "window too large"))?;
    let rho = Arc::new(offspring_law_param(params, 1.5)?);
    // all sites use the full dispersal row over an enlarged index space where
    // index `count` collects children leaving the window
    let outside = count as usize;
    let w = 1.0 / (2 * dim) as f64;
    let mut laws = Vec::with_capacity(count as usize);
    for id in 0..count {
        let x = zwindow_coords(id, radius, dim);
        let mut row = Vec::with_capacity(2 * dim);
        for k in 0..dim {
            for step in [-1i64, 1] {
                let mut y = x.clone();
                y[k] += step;
                if periodic {
                    y[k] = (y[k] + radius).rem_euclid(side) - radius;
                }
                row.push((zwindow_id(&y, radius).map_or(outside, |v| v as usize), w));
            }
        }
        let law = OffspringLaw::product_form(rho.clone(), &row)?;
        laws.push(if periodic { law } else { law.map_vertices(|v| (v != outside).then_some(v)) });
    }
    let origin = zwindow_id(&vec![0; dim], radius).unwrap();
    let truncation = (!periodic).then_some(radius as u64);
    let model = BrwModel::new((0..count).collect(), laws, meta(Labeling::ZWindow { radius, dim }, truncation, origin))?;
    let n = model.len();
    model.with_projection(Projection::singleton(n))
}

/// Projection of a window or strip model onto its first (ℤ) coordinate;
/// target ids are `i + radius`.
pub fn first_coordinate_projection(model: &BrwModel) -> Result<Projection> {
    let (radius, key): (i64, Box<dyn Fn(u64) -> i64>) = match model.meta().labeling {
        Labeling::ZWindow { radius, dim } => (radius, Box::new(move |id| zwindow_coords(id, radius, dim)[0])),
        Labeling::Strip { radius, width } => (radius, Box::new(move |id| (id / width as u64) as i64 - radius)),
        Labeling::Line => {
            let max = model.ids().iter().copied().max().unwrap_or(0) as i64;
            (0, Box::new(move |id| (id as i64).min(max)))
        }
        _ => return Err(BrwError::Projection("model has no integer coordinate".into())),
    };
    let coords: Vec<i64> = model.ids().iter().map(|&id| key(id)).collect();
    let lo = coords.iter().copied().min().unwrap_or(0);
    let hi = coords.iter().copied().max().unwrap_or(0);
    let map = coords.iter().map(|&c| (c - lo) as usize).collect();
    Projection::new(map, (lo..=hi).map(|c| (c + radius) as u64).collect())
}

/// Homogeneous tree ball in BFS order: `(parent, children)` per vertex.
#[derive(Debug, Clone)]
pub struct TreeBall {
    pub degree: usize,
    pub depth: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub level: Vec<usize>,
}

impl TreeBall {
    pub fn new(degree: usize, depth: usize) -> Result<Self> {
        if degree < 2 {
            return Err(param_err("degree", "must be at least 2"));
        }
        let mut size: u64 = 1;
        let mut layer: u64 = 1;
        for d in 0..depth {
            layer = layer.saturating_mul(if d == 0 { degree as u64 } else { degree as u64 - 1 });
            size = size.saturating_add(layer);
        }
        if size > 5_000_000 {
            return Err(param_err("depth", format!("ball has {size} vertices")));
        }
        let mut parent = vec![None];
        let mut children = vec![Vec::new()];
        let mut level = vec![0];
        let mut frontier = vec![0usize];
        for d in 0..depth {
            let mut next = Vec::new();
            for &v in &frontier {
                let k = if d == 0 { degree } else { degree - 1 };
                for _ in 0..k {
                    let c = parent.len();
                    parent.push(Some(v));
                    children.push(Vec::new());
                    level.push(d + 1);
                    children[v].push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        Ok(Self { degree, depth, parent, children, level })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Neighbours inside the ball and the number of edges leaving it.
    pub fn neighbours(&self, v: usize) -> (Vec<usize>, usize) {
        let mut out: Vec<usize> = self.parent[v].into_iter().collect();
        out.extend(&self.children[v]);
        let missing = self.degree - out.len();
        (out, missing)
    }

    /// Unit edge rates: `(rows, outside)` where `outside[v]` counts edges
    /// leaving the ball.
    pub fn unit_rates(&self) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        (0..self.len())
            .map(|v| {
                let (nb, missing) = self.neighbours(v);
                (nb.into_iter().map(|u| (u, 1.0)).collect(), missing as f64)
            })
            .unzip()
    }

    /// Height relative to the end reached along the child-0 ray from the
    /// root: h(v) = level(v) − 2·(number of ray edges shared with the path
    /// root → v).
    pub fn horocycle_height(&self, v: usize) -> i64 {
        let mut path = Vec::with_capacity(self.level[v]);
        let mut u = v;
        while let Some(p) = self.parent[u] {
            path.push(u);
            u = p;
        }
        path.reverse();
        let mut shared = 0;
        let mut cur = 0usize;
        for &step in &path {
            if self.children[cur].first() == Some(&step) {
                shared += 1;
                cur = step;
            } else {
                break;
            }
        }
        self.level[v] as i64 - 2 * shared as i64
    }
}

fn tree_counterpart(params: &Params) -> Result<BrwModel> {
    let degree = get_usize(params, "degree", 4)?;
    let depth = get_usize(params, "depth", 6)?;
    let lambda = match get(params, "lambda") {
        Some(_) => get_f64(params, "lambda", 0.0)?,
        None => get_f64(params, "mean", 1.1)? / degree as f64,
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(param_err("lambda", "must be positive"));
    }
    let (rows, outside, labeling) = if get_bool(params, "radial", false)? {
        let (rows, outside) = radial_tree_rates(degree, depth)?;
        (rows, outside, Labeling::Line)
    } else {
        let (rows, outside) = TreeBall::new(degree, depth)?.unit_rates();
        (rows, outside, Labeling::Tree { degree, depth })
    };
    counterpart_model(lambda, &rows, &outside, meta(labeling, Some(depth as u64), 0))
        .and_then(|m| {
            let n = m.len();
            m.with_projection(Projection::singleton(n))
        })
}

/// Tree ball of the given depth lumped by distance to the root: level j
/// sends rate `degree` (root) or `degree − 1` to level j+1 and rate 1 to
/// level j−1; the last level sends `degree − 1` outside. The first-moment
/// matrix and the counterpart generating function both commute with this
/// lumping, so every quantity seen from the root (return growth, q̄ at the
/// root) equals its value on the full ball.
pub fn radial_tree_rates(degree: usize, depth: usize) -> Result<(Vec<Vec<(usize, f64)>>, Vec<f64>)> {
    if degree < 2 {
        return Err(param_err("degree", "must be at least 2"));
    }
    if depth > 1_000_000 {
        return Err(param_err("depth", "radial depth above 10^6"));
    }
    let up = |j: usize| if j == 0 { degree as f64 } else { (degree - 1) as f64 };
    let mut rows = Vec::with_capacity(depth + 1);
    let mut outside = Vec::with_capacity(depth + 1);
    for j in 0..=depth {
        let mut row = Vec::with_capacity(2);
        if j > 0 {
            row.push((j - 1, 1.0));
        }
        if j < depth {
            row.push((j + 1, up(j)));
            outside.push(0.0);
        } else {
            outside.push(up(j));
        }
        rows.push(row);
    }
    Ok((rows, outside))
}

/// Counterpart model of rate matrix `rows` (with `outside` rates towards
/// unrepresented vertices) at parameter `lambda`. Vertices with equal total
/// rate share one geometric law.
pub fn counterpart_model(lambda: f64, rows: &[Vec<(usize, f64)>], outside: &[f64], meta: ModelMeta) -> Result<BrwModel> {
    let mut cache: Vec<(f64, Arc<IntDistribution>)> = Vec::new();
    let mut laws = Vec::with_capacity(rows.len());
    for (row, &out) in rows.iter().zip(outside) {
        let k: f64 = row.iter().map(|e| e.1).sum::<f64>() + out;
        if k <= 0.0 {
            return Err(BrwError::InvalidLaw("total rate k(x) is zero".into()));
        }
        let rho = match cache.iter().find(|(kk, _)| *kk == k) {
            Some((_, r)) => r.clone(),
            None => {
                let r = Arc::new(IntDistribution::geometric(lambda * k)?);
                cache.push((k, r.clone()));
                r
            }
        };
        laws.push(OffspringLaw::counterpart_with_rho(rho, row, out));
    }
    BrwModel::new((0..rows.len() as u64).collect(), laws, meta)
}

/// Projection of a tree ball onto horocycle heights; target ids are
/// `h + depth`.
pub fn horocycle_projection(ball: &TreeBall) -> Result<Projection> {
    let depth = ball.depth as i64;
    let map = (0..ball.len()).map(|v| (ball.horocycle_height(v) + depth) as usize).collect();
    Projection::new(map, (0..=2 * depth as u64).collect())
}

fn zdrift(params: &Params) -> Result<BrwModel> {
    let p = get_f64(params, "p", 0.25)?;
    let q = get_f64(params, "q", 0.25)?;
    if !(p >= 0.0 && q >= 0.0) {
        return Err(param_err("p", "step probabilities must be nonnegative"));
    }
    if p + q > 1.0 + 1e-12 {
        return Err(param_err("p", format!("p + q = {} exceeds 1", p + q)));
    }
    let width = get_usize(params, "width", 1)?.max(1);
    let radius = get_usize(params, "radius", 20)? as i64;
    let rho = Arc::new(offspring_law_param(params, 1.5)?);
    let rows_per_layer = width as u64;
    let count = (2 * radius as u64 + 1) * rows_per_layer;
    let outside = count as usize;
    let stay = (1.0 - p - q).max(0.0);
    let mut laws = Vec::with_capacity(count as usize);
    for id in 0..count {
        let i = (id / rows_per_layer) as i64 - radius;
        let mut row = Vec::with_capacity(3 * width);
        for (step, w) in [(1i64, p), (-1, q), (0, stay)] {
            if w == 0.0 {
                continue;
            }
            let j = i + step;
            for y in 0..width {
                let target = if j.abs() > radius { outside } else { ((j + radius) as u64 * rows_per_layer + y as u64) as usize };
                row.push((target, w / width as f64));
            }
        }
        let law = OffspringLaw::product_form(rho.clone(), &row)?;
        laws.push(law.map_vertices(|v| (v != outside).then_some(v)));
    }
    let origin = radius as u64 * rows_per_layer;
    let model = BrwModel::new(
        (0..count).collect(),
        laws,
        meta(Labeling::Strip { radius, width }, Some(radius as u64), origin),
    )?;
    let n = model.len();
    model.with_projection(Projection::singleton(n))
}
