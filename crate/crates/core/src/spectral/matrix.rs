use crate::error::{BrwError, Result};
use crate::model::{BrwModel, ClassStructure};

/// Sparse first-moment matrix m_xy in CSR layout.
///
/// `deficit[x]` is the expected number of children of x that a restriction
/// removed; it is zero for models that are not truncations.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    deficit: Vec<f64>,
    classes: ClassStructure,
}

impl MomentMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        Self::build(rows, vec![0.0; n])
    }

    /// Dense constructor, mainly for tests and small experiments.
    pub fn from_dense(m: &[Vec<f64>]) -> Result<Self> {
        let rows = m
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(j, &w)| (j, w)).collect())
            .collect();
        Self::from_rows(rows)
    }

    fn build(rows: Vec<Vec<(usize, f64)>>, deficit: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(j, w) in row {
                if j >= n {
                    return Err(BrwError::IndexOutOfRange { index: j, len: n });
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(BrwError::InvalidLaw(format!("matrix weight {w}")));
                }
                if w > 0.0 {
                    cols.push(j);
                    vals.push(w);
                }
            }
            row_ptr.push(cols.len());
        }
        let classes = ClassStructure::from_rows(&rows);
        Ok(Self { row_ptr, cols, vals, deficit, classes })
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[x]..self.row_ptr[x + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.row(x).find(|&(j, _)| j == y).map_or(0.0, |e| e.1)
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.vals[self.row_ptr[x]..self.row_ptr[x + 1]].iter().sum()
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim()).map(|x| self.row_sum(x)).fold(0.0, f64::max)
    }

    pub fn deficit(&self, x: usize) -> f64 {
        self.deficit[x]
    }

    pub fn has_deficit(&self) -> bool {
        self.deficit.iter().any(|&d| d > 0.0)
    }

    pub fn classes(&self) -> &ClassStructure {
        &self.classes
    }

    /// Period of the class containing `x` (`None` if `x` is on no cycle).
    pub fn period(&self, x: usize) -> Option<usize> {
        self.classes.period_of(x)
    }

    /// out = v M, i.e. out[y] = Σ_x v[x] m_xy.
    pub fn left_mul(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, &vx) in v.iter().enumerate() {
            if vx == 0.0 {
                continue;
            }
            for k in self.row_ptr[x]..self.row_ptr[x + 1] {
                out[self.cols[k]] += vx * self.vals[k];
            }
        }
    }

    /// (M v)(x) = Σ_y m_xy v[y].
    pub fn right_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|x| self.row(x).map(|(y, w)| w * v[y]).sum()).collect()
    }

    /// Submatrix on `keep` (indices), renumbered in the given order.
    pub fn submatrix(&self, keep: &[usize]) -> Result<Self> {
        let mut pos = vec![None; self.dim()];
        for (i, &x) in keep.iter().enumerate() {
            pos[x] = Some(i);
        }
        let mut deficit = Vec::with_capacity(keep.len());
        let rows = keep
            .iter()
            .map(|&x| {
                let mut lost = self.deficit[x];
                let row = self
                    .row(x)
                    .filter_map(|(y, w)| match pos[y] {
                        Some(j) => Some((j, w)),
                        None => {
                            lost += w;
                            None
                        }
                    })
                    .collect();
                deficit.push(lost);
                row
            })
            .collect();
        Self::build(rows, deficit)
    }

    /// Graph distance from `x0` to the nearest row with positive deficit.
    pub fn distance_to_deficit(&self, x0: usize) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.dim()];
        dist[x0] = 0;
        let mut queue = std::collections::VecDeque::from([x0]);
        while let Some(u) = queue.pop_front() {
            if self.deficit[u] > 0.0 {
                return Some(dist[u]);
            }
            for (v, _) in self.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Vertices reachable from `x0` (including `x0`).
    pub fn reachable(&self, x0: usize) -> Vec<usize> {
        let mut seen = vec![false; self.dim()];
        seen[x0] = true;
        let mut stack = vec![x0];
        let mut out = vec![x0];
        while let Some(u) = stack.pop() {
            for (v, _) in self.row(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                    out.push(v);
                }
            }
        }
        out
    }

    /// Graph distance from `x0` along positive entries; `usize::MAX` when
    /// unreachable.
    pub fn distances_from(&self, x0: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.dim()];
        dist[x0] = 0;
        let mut queue = std::collections::VecDeque::from([x0]);
        while let Some(u) = queue.pop_front() {
            for (v, _) in self.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub(crate) fn check_index(&self, x: usize) -> Result<()> {
        if x >= self.dim() {
            return Err(BrwError::IndexOutOfRange { index: x, len: self.dim() });
        }
        Ok(())
    }
}

/// m_xy = Σ_f f(y) μ_x(f), with removed mass kept as a per-row deficit.
pub fn moment_matrix(model: &BrwModel) -> MomentMatrix {
    let rows = model.mean_rows();
    let deficit = model.laws().iter().map(|l| l.lost_mean()).collect();
    MomentMatrix::build(rows, deficit).expect("model laws reference valid vertices")
}

/// η_0 M^n, computed by n sparse vector–matrix products.
pub fn expected_population(m: &MomentMatrix, eta0: &[f64], n: usize) -> Vec<f64> {
    let mut v = eta0.to_vec();
    let mut next = vec![0.0; v.len()];
    for _ in 0..n {
        m.left_mul(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    v
}
