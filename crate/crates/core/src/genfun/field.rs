use std::fmt;
use std::ops::Index;

use rayon::prelude::*;

use crate::error::{BrwError, Result};
use crate::model::BrwModel;
use crate::spectral::MomentMatrix;

/// Models at least this large evaluate G in parallel.
const PAR_THRESHOLD: usize = 20_000;

/// A point of [0,1]^X, indexed like the vertices of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector(Vec<f64>);

impl FieldVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(BrwError::InvalidParam { name: format!("z[{i}]"), reason: format!("{v} is outside [0,1]") });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    /// 1 off `set`, 0 on it.
    pub fn complement_indicator(n: usize, set: &[usize]) -> Self {
        let mut v = vec![1.0; n];
        for &x in set {
            v[x] = 0.0;
        }
        Self(v)
    }

    /// Values clamped into [0,1]; used for results of floating-point maps.
    pub(crate) fn from_clamped(mut values: Vec<f64>) -> Self {
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_distance(&self.0, &other.0)
    }

    /// Coordinatewise `self ≤ other + tol`.
    pub fn le(&self, other: &Self, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= b + tol)
    }
}

impl Index<usize> for FieldVector {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

impl fmt::Display for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// G(z|x) = Σ_f μ_x(f) Π_y z(y)^{f(y)} for every x.
pub fn eval_g(model: &BrwModel, z: &FieldVector) -> FieldVector {
    assert_eq!(z.len(), model.len(), "field vector length does not match the model");
    let mut out = vec![0.0; model.len()];
    apply_g(model, z.values(), &mut out);
    FieldVector::from_clamped(out)
}

pub(crate) fn apply_g(model: &BrwModel, z: &[f64], out: &mut [f64]) {
    let laws = model.laws();
    if laws.len() >= PAR_THRESHOLD {
        out.par_iter_mut().zip(laws.par_iter()).for_each(|(o, law)| *o = law.gen_fn(z).clamp(0.0, 1.0));
    } else {
        for (o, law) in out.iter_mut().zip(laws) {
            *o = law.gen_fn(z).clamp(0.0, 1.0);
        }
    }
}

/// 𝟏 / (𝟏 + M(𝟏 − z)), the closed form of G for continuous-time counterparts.
pub fn eval_g_geometric(m: &MomentMatrix, z: &FieldVector) -> FieldVector {
    assert_eq!(z.len(), m.dim(), "field vector length does not match the matrix");
    let one_minus: Vec<f64> = z.values().iter().map(|v| 1.0 - v).collect();
    let mv = m.right_mul(&one_minus);
    FieldVector::from_clamped(mv.into_iter().map(|s| 1.0 / (1.0 + s)).collect())
}
