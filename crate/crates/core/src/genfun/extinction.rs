//! Extinction probabilities as fixed points of G.

use std::fmt::Write as _;

use crate::error::{param_err, BrwError, Result};
use crate::genfun::field::{apply_g, sup_distance, FieldVector};
use crate::model::BrwModel;

/// Slack allowed in the monotonicity assertion on iterates.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Global extinction q̄.
    Global,
    /// Local extinction in a set of vertex indices, q(·,A).
    Set(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct ExtinctionResult {
    pub q: FieldVector,
    pub converged: bool,
    /// Iterations of the fixed-point map G.
    pub iterations: usize,
    /// Iterations spent computing the probability of never visiting the
    /// target set (zero for the global target).
    pub avoidance_iterations: usize,
    /// Sup-norm of the last step.
    pub step: f64,
    /// ‖G(q) − q‖∞.
    pub residual: f64,
    /// Sup-norm step of every G iteration.
    pub steps: Vec<f64>,
}

impl ExtinctionResult {
    /// CSV rows `iteration,step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,step\n");
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(out, "{},{s}", i + 1).unwrap();
        }
        out
    }
}

/// Least fixed point of G (global) or q(·,A) (set target).
///
/// Global: z_{n+1} = G(z_n) from 𝟎. Set A: first the probability w of never
/// having a particle in A, the decreasing limit of z ↦ 1_{A^c}·G(z) from
/// 1_{A^c}; then q(·,A) = lim G^n(w), a nondecreasing sequence because
/// G(w) = w off A and w = 0 on A. Iterating G from 1_{A^c} directly would
/// give the probability of A being empty at generation n, which oscillates
/// on periodic models.
///
/// Stops when the last step and the residual are both below `tol`. Running
/// out of iterations is reported through `converged = false`.
pub fn iterate_extinction(model: &BrwModel, target: &Target, tol: f64, max_iter: usize) -> Result<ExtinctionResult> {
    if !(tol > 0.0) {
        return Err(param_err("tol", "must be positive"));
    }
    let n = model.len();
    let (start, avoidance_iterations, avoid_ok) = match target {
        Target::Global => (vec![0.0; n], 0, true),
        Target::Set(set) => {
            if let Some(&x) = set.iter().find(|&&x| x >= n) {
                return Err(BrwError::IndexOutOfRange { index: x, len: n });
            }
            avoidance(model, set, tol, max_iter)
        }
    };
    // the avoidance vector is only known to within tol, which G may undo
    let slack = match target {
        Target::Global => MONOTONE_SLACK,
        Target::Set(_) => MONOTONE_SLACK + tol,
    };
    let mut z = start;
    let mut next = vec![0.0; n];
    let mut steps = Vec::new();
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    loop {
        apply_g(model, &z, &mut next);
        for (x, (a, b)) in next.iter().zip(&z).enumerate() {
            assert!(
                *a >= b - slack,
                "extinction iterates decreased at vertex {x}: {b} -> {a}"
            );
        }
        let d = sup_distance(&next, &z);
        // d is the residual of z and the step from z to G(z)
        if last_step < tol && d < tol {
            return Ok(ExtinctionResult {
                q: FieldVector::from_clamped(z),
                converged: avoid_ok,
                iterations,
                avoidance_iterations,
                step: last_step,
                residual: d,
                steps,
            });
        }
        if iterations == max_iter {
            return Ok(ExtinctionResult {
                q: FieldVector::from_clamped(next),
                converged: false,
                iterations,
                avoidance_iterations,
                step: d,
                residual: f64::NAN,
                steps,
            });
        }
        std::mem::swap(&mut z, &mut next);
        iterations += 1;
        steps.push(d);
        last_step = d;
    }
}

/// Probability of never visiting `set`, with the iteration count and whether
/// it converged.
fn avoidance(model: &BrwModel, set: &[usize], tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
    let n = model.len();
    let mut in_set = vec![false; n];
    for &x in set {
        in_set[x] = true;
    }
    let mut w: Vec<f64> = in_set.iter().map(|&a| if a { 0.0 } else { 1.0 }).collect();
    let mut next = vec![0.0; n];
    for it in 1..=max_iter {
        apply_g(model, &w, &mut next);
        for (x, v) in next.iter_mut().enumerate() {
            if in_set[x] {
                *v = 0.0;
            }
            assert!(*v <= w[x] + MONOTONE_SLACK, "avoidance iterates increased at vertex {x}");
        }
        let d = sup_distance(&next, &w);
        std::mem::swap(&mut w, &mut next);
        if d < tol {
            return (w, it, true);
        }
    }
    (w, max_iter, false)
}
