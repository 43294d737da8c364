//! Sub-solutions of G and the first-moment condition Mv ≥ v.

use crate::error::{param_err, Result};
use crate::genfun::field::{eval_g, FieldVector};
use crate::model::BrwModel;
use crate::spectral::MomentMatrix;

const SUBSOLUTION_TOL: f64 = 1e-12;
const EQUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionVerdict {
    pub passes: bool,
    /// max_x (G(z|x) − z(x))⁺ over checked vertices.
    pub max_violation: f64,
    pub worst_vertex: Option<usize>,
    /// z(x0) < 1 − 1e-12.
    pub below_one_at_x0: bool,
    /// Boundary vertices of a truncation, whose missing children make G
    /// unknown there; skipped unless `exempt_boundary` is false.
    pub exempt: Vec<usize>,
}

/// Checks G(z|x) ≤ z(x) for all x and z(x0) < 1.
///
/// On truncations the vertices that lost children to the outside are
/// skipped when `exempt_boundary` is set: their G depends on coordinates the
/// model does not represent.
pub fn check_subsolution(model: &BrwModel, z: &FieldVector, x0: usize, exempt_boundary: bool) -> SubsolutionVerdict {
    let g = eval_g(model, z);
    let mut verdict = SubsolutionVerdict {
        passes: false,
        max_violation: 0.0,
        worst_vertex: None,
        below_one_at_x0: z[x0] < 1.0 - SUBSOLUTION_TOL,
        exempt: Vec::new(),
    };
    for x in 0..model.len() {
        if exempt_boundary && model.law(x).lost_mean() > 0.0 {
            verdict.exempt.push(x);
            continue;
        }
        let v = g[x] - z[x];
        if v > verdict.max_violation {
            verdict.max_violation = v;
            verdict.worst_vertex = Some(x);
        }
    }
    verdict.passes = verdict.below_one_at_x0 && verdict.max_violation <= SUBSOLUTION_TOL;
    verdict
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityCase {
    /// (Mv)(x) = v(x) within 1e-10.
    pub mean_equal: bool,
    /// G(𝟏 − (1−t)v | x) = 1 − (1−t)v(x) within 1e-10 at every tested t.
    pub generating_equal: bool,
}

impl EqualityCase {
    /// The two sides of the equivalence agree at this vertex.
    pub fn consistent(&self) -> bool {
        self.mean_equal == self.generating_equal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanConditionVerdict {
    pub passes: bool,
    /// max_x (v(x) − (Mv)(x))⁺.
    pub max_violation: f64,
    pub positive_at_x0: bool,
    /// Equality-case check per vertex, when a model was supplied.
    pub equality: Option<Vec<EqualityCase>>,
}

/// Values of t at which the equality case is tested.
pub const EQUALITY_TS: [f64; 2] = [0.0, 0.5];

/// Checks Mv ≥ v (within 1e-12) and v(x0) > 0. With a model, also reports for
/// each x whether (Mv)(x) = v(x) holds exactly when
/// G(𝟏 − (1−t)v | x) = 1 − (1−t)v(x) for t in [`EQUALITY_TS`].
pub fn check_mean_condition(m: &MomentMatrix, v: &FieldVector, x0: usize, model: Option<&BrwModel>) -> MeanConditionVerdict {
    let mv = m.right_mul(v.values());
    let max_violation = (0..m.dim()).map(|x| v[x] - mv[x]).fold(0.0, f64::max);
    let positive_at_x0 = v[x0] > 0.0;
    let equality = model.map(|model| {
        let gs: Vec<(FieldVector, Vec<f64>)> = EQUALITY_TS
            .iter()
            .map(|&t| {
                let w: Vec<f64> = v.values().iter().map(|&vx| 1.0 - (1.0 - t) * vx).collect();
                let g = eval_g(model, &FieldVector::from_clamped(w.clone()));
                (g, w)
            })
            .collect();
        (0..m.dim())
            .map(|x| EqualityCase {
                mean_equal: (mv[x] - v[x]).abs() <= EQUALITY_TOL,
                generating_equal: gs.iter().all(|(g, w)| (g[x] - w[x]).abs() <= EQUALITY_TOL),
            })
            .collect()
    });
    MeanConditionVerdict { passes: positive_at_x0 && max_violation <= SUBSOLUTION_TOL, max_violation, positive_at_x0, equality }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanConditionSearch {
    /// First admissible v found (grid order), if any.
    pub found: Option<FieldVector>,
    pub tested: usize,
    pub grid_levels: usize,
}

/// Exhaustive search over v ∈ {0, 1/g, …, 1}^X with v(x0) > 0 for a vector
/// passing [`check_mean_condition`]. Finding none is evidence of global
/// extinction, never a proof; finding one proves nothing either way.
pub fn mean_condition_search(m: &MomentMatrix, x0: usize, grid_levels: usize, max_points: usize) -> Result<MeanConditionSearch> {
    if grid_levels == 0 {
        return Err(param_err("grid_levels", "must be positive"));
    }
    let n = m.dim();
    let base = grid_levels + 1;
    let total = (base as u128).checked_pow(n as u32).filter(|&t| t <= max_points as u128);
    let Some(total) = total else {
        return Err(param_err("grid_levels", format!("{base}^{n} grid points exceed the limit {max_points}")));
    };
    let mut digits = vec![0usize; n];
    let mut tested = 0;
    for _ in 0..total {
        if digits[x0] > 0 {
            tested += 1;
            let v = FieldVector::from_clamped(digits.iter().map(|&d| d as f64 / grid_levels as f64).collect());
            if check_mean_condition(m, &v, x0, None).passes {
                return Ok(MeanConditionSearch { found: Some(v), tested, grid_levels });
            }
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < base {
                break;
            }
            *d = 0;
        }
    }
    Ok(MeanConditionSearch { found: None, tested, grid_levels })
}
