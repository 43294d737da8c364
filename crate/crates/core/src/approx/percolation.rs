//! Bernoulli bond percolation on (I, E(I)) × oriented ℕ.
//!
//! Edge (x, l) → (y, l+1) is open iff a uniform derived from
//! (seed, replica, l, x, y) is below p, so runs at different p with the same
//! seed are coupled monotonically.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::simulate::{mix, unit_f64, wilson_interval};

/// Base graph I. Window graphs are lazy: each vertex also has an edge to
/// itself, which makes every level reachable at p = 1.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseGraph {
    /// {−radius..radius} with nearest-neighbour edges; index i is i − radius.
    ZWindow { radius: usize },
    /// {0..len−1} with nearest-neighbour edges.
    NWindow { len: usize },
    /// Directed edge list on 0..vertices.
    Custom { vertices: usize, edges: Vec<(usize, usize)> },
}

impl BaseGraph {
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let line = |n: usize| {
            (0..n)
                .map(|x| {
                    let mut nb = vec![x];
                    if x > 0 {
                        nb.push(x - 1);
                    }
                    if x + 1 < n {
                        nb.push(x + 1);
                    }
                    nb
                })
                .collect()
        };
        match self {
            BaseGraph::ZWindow { radius } => line(2 * radius + 1),
            BaseGraph::NWindow { len } => line(*len),
            BaseGraph::Custom { vertices, edges } => {
                let mut adj = vec![Vec::new(); *vertices];
                for &(x, y) in edges {
                    adj[x].push(y);
                }
                adj
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BaseGraph::ZWindow { radius } => 2 * radius + 1,
            BaseGraph::NWindow { len } => *len,
            BaseGraph::Custom { vertices, .. } => *vertices,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationConfig {
    pub graph: BaseGraph,
    pub p: f64,
    pub horizon: u64,
    /// Index of the origin in the base graph.
    pub origin: usize,
}

impl PercolationConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(param_err("p", "open probability must lie in [0, 1]"));
        }
        if self.horizon == 0 {
            return Err(param_err("horizon", "must be at least 1"));
        }
        if self.origin >= self.graph.len() {
            return Err(param_err("origin", "not a vertex of the base graph"));
        }
        if let BaseGraph::Custom { vertices, edges } = &self.graph {
            if edges.iter().any(|&(x, y)| x >= *vertices || y >= *vertices) {
                return Err(param_err("edges", "edge endpoint out of range"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationOutcome {
    pub replica: u64,
    /// The open cluster of (origin, 0) meets level `horizon`.
    pub reached: bool,
    /// Levels l in 1..=horizon with (origin, l) in the cluster.
    pub revisits: u64,
    /// Deepest level reached.
    pub depth: u64,
}

#[derive(Debug, Clone)]
pub struct PercolationResult {
    pub p: f64,
    pub horizon: u64,
    pub replicas: u64,
    pub reached: u64,
    pub frequency: f64,
    pub ci: (f64, f64),
    pub mean_revisits: f64,
    pub max_revisits: u64,
    pub outcomes: Vec<PercolationOutcome>,
}

impl PercolationResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replica,reached,revisits,depth\n");
        for o in &self.outcomes {
            writeln!(out, "{},{},{},{}", o.replica, o.reached as u8, o.revisits, o.depth).unwrap();
        }
        out
    }

    pub fn summary_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.p, self.horizon, self.replicas, self.frequency, self.ci.0, self.ci.1, self.mean_revisits, self.max_revisits
        )
    }
}

pub const PERCOLATION_HEADER: &str = "p,horizon,replicas,frequency,ci_low,ci_high,mean_revisits,max_revisits\n";

fn one_replica(adj: &[Vec<usize>], cfg: &PercolationConfig, seed: u64, replica: u64) -> PercolationOutcome {
    let n = adj.len();
    let mut cur = vec![false; n];
    let mut next = vec![false; n];
    let mut active = vec![cfg.origin];
    cur[cfg.origin] = true;
    let mut out = PercolationOutcome { replica, reached: false, revisits: 0, depth: 0 };
    for level in 0..cfg.horizon {
        let mut fresh = Vec::new();
        for &x in &active {
            for &y in &adj[x] {
                if next[y] {
                    continue;
                }
                let u = unit_f64(mix(&[seed, replica, level, x as u64, y as u64]));
                if u < cfg.p {
                    next[y] = true;
                    fresh.push(y);
                }
            }
        }
        for &x in &active {
            cur[x] = false;
        }
        if fresh.is_empty() {
            return out;
        }
        out.depth = level + 1;
        if next[cfg.origin] {
            out.revisits += 1;
        }
        std::mem::swap(&mut cur, &mut next);
        active = fresh;
    }
    out.reached = true;
    out
}

/// Runs `replicas` independent copies and reports how often the cluster
/// of the origin reaches the horizon level.
pub fn oriented_percolation(cfg: &PercolationConfig, replicas: u64, seed: u64) -> Result<PercolationResult> {
    cfg.validate()?;
    if replicas == 0 {
        return Err(param_err("replicas", "must be at least 1"));
    }
    let adj = cfg.graph.adjacency();
    let outcomes: Vec<PercolationOutcome> =
        (0..replicas).into_par_iter().map(|r| one_replica(&adj, cfg, seed, r)).collect();
    let reached = outcomes.iter().filter(|o| o.reached).count() as u64;
    let total_revisits: u64 = outcomes.iter().map(|o| o.revisits).sum();
    Ok(PercolationResult {
        p: cfg.p,
        horizon: cfg.horizon,
        replicas,
        reached,
        frequency: reached as f64 / replicas as f64,
        ci: wilson_interval(reached, replicas),
        mean_revisits: total_revisits as f64 / replicas as f64,
        max_revisits: outcomes.iter().map(|o| o.revisits).max().unwrap_or(0),
        outcomes,
    })
}
