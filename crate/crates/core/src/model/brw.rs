//! Finite (truncated) branching random walk models.

use std::collections::{BTreeMap, HashMap};

use crate::error::{BrwError, Result};
use crate::model::dist::IntDistribution;
use crate::model::graph::ClassStructure;
use crate::model::law::{OffspringLaw, DEFAULT_ATOM_LIMIT};

/// Tolerance used when comparing pushforward laws.
pub const LAW_TOL: f64 = 1e-12;

/// How vertex ids of a scenario map to geometric positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Labeling {
    /// Ids carry no geometry.
    Plain,
    /// Id `i` is the integer `i` on a half-line.
    Line,
    /// Box {-radius..radius}^dim flattened row-major; first coordinate slowest.
    ZWindow { radius: i64, dim: usize },
    /// Strip {-radius..radius} × {0..width}; id = (i + radius)·width + y.
    Strip { radius: i64, width: usize },
    /// Ball of a homogeneous tree, ids in BFS order from the root.
    Tree { degree: usize, depth: usize },
}

impl Labeling {
    /// Human readable position of an id.
    pub fn describe(&self, id: u64) -> String {
        match self {
            Labeling::Plain | Labeling::Line => id.to_string(),
            Labeling::ZWindow { radius, dim } => {
                let coords = zwindow_coords(id, *radius, *dim);
                let parts: Vec<String> = coords.iter().map(i64::to_string).collect();
                format!("({})", parts.join(","))
            }
            Labeling::Strip { radius, width } => {
                let w = *width as u64;
                format!("({},{})", (id / w) as i64 - radius, id % w)
            }
            Labeling::Tree { .. } => format!("t{id}"),
        }
    }
}

/// Coordinates of a row-major id inside {-r..r}^dim.
pub fn zwindow_coords(id: u64, radius: i64, dim: usize) -> Vec<i64> {
    let side = (2 * radius + 1) as u64;
    let mut rest = id;
    let mut out = vec![0; dim];
    for k in (0..dim).rev() {
        out[k] = (rest % side) as i64 - radius;
        rest /= side;
    }
    out
}

/// Row-major id of a point of {-r..r}^dim, `None` outside the box.
pub fn zwindow_id(coords: &[i64], radius: i64) -> Option<u64> {
    let side = (2 * radius + 1) as u64;
    let mut id = 0u64;
    for &c in coords {
        if c.abs() > radius {
            return None;
        }
        id = id * side + (c + radius) as u64;
    }
    Some(id)
}

/// Scenario metadata carried by a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub scenario: String,
    pub params: BTreeMap<String, String>,
    /// Size index of the truncation this model represents, if any.
    pub truncation: Option<u64>,
    pub labeling: Labeling,
    /// Canonical starting vertex (an id).
    pub origin: u64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        Self {
            scenario: "custom".into(),
            params: BTreeMap::new(),
            truncation: None,
            labeling: Labeling::Plain,
            origin: 0,
        }
    }
}

/// Surjective vertex map g from a model onto `target_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `map[x]` is the target index of source vertex index `x`.
    map: Vec<usize>,
    target_ids: Vec<u64>,
}

impl Projection {
    pub fn new(map: Vec<usize>, target_ids: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&t| t >= target_ids.len()) {
            return Err(BrwError::Projection(format!("image index {bad} outside target")));
        }
        let mut hit = vec![false; target_ids.len()];
        map.iter().for_each(|&t| hit[t] = true);
        if let Some(t) = hit.iter().position(|h| !h) {
            return Err(BrwError::Projection(format!("target {} has an empty fiber", target_ids[t])));
        }
        Ok(Self { map, target_ids })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect(), target_ids: (0..n as u64).collect() }
    }

    /// Collapses everything onto a single vertex.
    pub fn singleton(n: usize) -> Self {
        Self { map: vec![0; n], target_ids: vec![0] }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn target_ids(&self) -> &[u64] {
        &self.target_ids
    }

    pub fn target_len(&self) -> usize {
        self.target_ids.len()
    }

    /// Composition with an index selection (used when restricting the source).
    fn select(&self, kept: &[usize]) -> Self {
        Self { map: kept.iter().map(|&x| self.map[x]).collect(), target_ids: self.target_ids.clone() }
    }
}

/// A finite vertex set with one offspring law per vertex.
///
/// Laws refer to vertices by index in `0..len()`; `ids` are the opaque
/// labels exposed to users.
#[derive(Debug, Clone)]
pub struct BrwModel {
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    laws: Vec<OffspringLaw>,
    meta: ModelMeta,
    projection: Option<Projection>,
}

/// Verdict for one communicating class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssumption {
    pub members: Vec<u64>,
    /// Smallest μ_y(f: Σ_{w in class} f(w) = 1) over the class.
    pub min_single_child_prob: f64,
    pub passes: bool,
}

/// Nonsingularity check over the communicating classes of the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub classes: Vec<ClassAssumption>,
    /// Classes are computed on the represented truncation, which may split
    /// classes of the untruncated space.
    pub per_truncation: bool,
}

impl AssumptionReport {
    pub fn class_containing(&self, id: u64) -> Option<&ClassAssumption> {
        self.classes.iter().find(|c| c.members.contains(&id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub holds: bool,
    pub checked: Vec<u64>,
    /// Vertices skipped because their law or image touches the boundary.
    pub exempt: Vec<u64>,
    pub max_distance: f64,
    pub first_failure: Option<u64>,
}

impl BrwModel {
    pub fn new(ids: Vec<u64>, laws: Vec<OffspringLaw>, meta: ModelMeta) -> Result<Self> {
        if ids.len() != laws.len() {
            return Err(BrwError::InvalidLaw(format!("{} ids for {} laws", ids.len(), laws.len())));
        }
        if ids.is_empty() {
            return Err(BrwError::EmptySubset);
        }
        let n = ids.len();
        for law in &laws {
            if let Some(v) = law.max_vertex() {
                if v >= n {
                    return Err(BrwError::IndexOutOfRange { index: v, len: n });
                }
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, &id) in ids.iter().enumerate() {
            if index.insert(id, i).is_some() {
                return Err(BrwError::InvalidLaw(format!("duplicate vertex id {id}")));
            }
        }
        Ok(Self { ids, index, laws, meta, projection: None })
    }

    /// Model whose ids are `0..laws.len()`.
    pub fn from_laws(laws: Vec<OffspringLaw>) -> Result<Self> {
        let ids = (0..laws.len() as u64).collect();
        Self::new(ids, laws, ModelMeta::default())
    }

    pub fn with_projection(mut self, projection: Projection) -> Result<Self> {
        if projection.map.len() != self.len() {
            return Err(BrwError::Projection(format!(
                "projection defined on {} vertices, model has {}",
                projection.map.len(),
                self.len()
            )));
        }
        self.projection = Some(projection);
        Ok(self)
    }

    pub fn with_meta(mut self, meta: ModelMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> u64 {
        self.ids[x]
    }

    pub fn index_of(&self, id: u64) -> Result<usize> {
        self.index.get(&id).copied().ok_or(BrwError::UnknownVertex(id))
    }

    pub fn law(&self, x: usize) -> &OffspringLaw {
        &self.laws[x]
    }

    pub fn laws(&self) -> &[OffspringLaw] {
        &self.laws
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn projection(&self) -> Option<&Projection> {
        self.projection.as_ref()
    }

    /// Index of the canonical origin.
    pub fn origin(&self) -> Result<usize> {
        self.index_of(self.meta.origin)
    }

    /// Vertices whose laws lost children to vertices outside the model.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.laws[x].lost_mean() > 0.0).collect()
    }

    /// True when no law lost mass through a restriction.
    pub fn is_closed(&self) -> bool {
        self.laws.iter().all(|l| l.lost_mean() == 0.0)
    }

    pub fn mean_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.laws.iter().map(|l| l.mean_row().to_vec()).collect()
    }

    pub fn class_structure(&self) -> ClassStructure {
        ClassStructure::from_rows(&self.mean_rows())
    }

    /// Restriction to the vertices with the given ids: offspring placed
    /// outside the subset are suppressed.
    pub fn restrict(&self, subset: &[u64]) -> Result<Self> {
        if subset.is_empty() {
            return Err(BrwError::EmptySubset);
        }
        let mut kept: Vec<usize> = subset.iter().map(|&id| self.index_of(id)).collect::<Result<_>>()?;
        kept.sort_unstable();
        kept.dedup();
        let mut new_index = vec![None; self.len()];
        for (i, &x) in kept.iter().enumerate() {
            new_index[x] = Some(i);
        }
        let laws = kept.iter().map(|&x| self.laws[x].map_vertices(|v| new_index[v])).collect();
        let ids = kept.iter().map(|&x| self.ids[x]).collect();
        let mut out = Self::new(ids, laws, self.meta.clone())?;
        out.projection = self.projection.as_ref().map(|p| p.select(&kept));
        Ok(out)
    }

    /// Projected model (Y, ν) with ν_{g(x)} = μ_x ∘ π_g^{-1}; every fiber
    /// must carry a single pushforward law.
    pub fn project(&self, g: &Projection) -> Result<Self> {
        self.project_inner(g, false)
    }

    /// As [`project`](Self::project) but ignores boundary vertices when
    /// checking fibers, which is how a truncation of an infinite locally
    /// isomorphic model is projected.
    pub fn project_interior(&self, g: &Projection) -> Result<Self> {
        self.project_inner(g, true)
    }

    fn project_inner(&self, g: &Projection, skip_boundary: bool) -> Result<Self> {
        if g.map.len() != self.len() {
            return Err(BrwError::Projection(format!(
                "projection defined on {} vertices, model has {}",
                g.map.len(),
                self.len()
            )));
        }
        let mut reps: Vec<Option<(usize, OffspringLaw)>> = vec![None; g.target_len()];
        for x in 0..self.len() {
            if skip_boundary && self.laws[x].lost_mean() > 0.0 {
                continue;
            }
            let t = g.map[x];
            let pushed = self.laws[x].map_vertices(|v| Some(g.map[v]));
            match &reps[t] {
                None => reps[t] = Some((x, pushed)),
                Some((rep, law)) => {
                    let d = law.tv_distance(&pushed, DEFAULT_ATOM_LIMIT)?;
                    if d > LAW_TOL {
                        return Err(BrwError::Projection(format!(
                            "fiber of {} is inconsistent: vertices {} and {} differ by {d:e} in total variation",
                            g.target_ids[t], self.ids[*rep], self.ids[x]
                        )));
                    }
                }
            }
        }
        let mut laws = Vec::with_capacity(g.target_len());
        for (t, rep) in reps.into_iter().enumerate() {
            match rep {
                Some((_, law)) => laws.push(law),
                None => {
                    return Err(BrwError::Projection(format!(
                        "target {} has no interior representative",
                        g.target_ids[t]
                    )))
                }
            }
        }
        let mut meta = self.meta.clone();
        meta.scenario = format!("{}/projected", self.meta.scenario);
        meta.labeling = Labeling::Plain;
        meta.truncation = None;
        meta.origin = g.target_ids[g.map[self.origin().unwrap_or(0)]];
        Self::new(g.target_ids.clone(), laws, meta)
    }

    /// ρ(n) = sup_x ρ_x([n,∞)) − sup_x ρ_x([n+1,∞)).
    pub fn dominating_law(&self) -> IntDistribution {
        // the sup of step functions only jumps at the union of supports
        let mut points: Vec<usize> = self.laws.iter().flat_map(|l| l.children().support().iter().copied()).collect();
        points.sort_unstable();
        points.dedup();
        let sup_tail = |n: usize| -> f64 {
            if n == 0 {
                return 1.0;
            }
            self.laws.iter().map(|l| l.children().tail(n)).fold(0.0, f64::max)
        };
        let tails: Vec<f64> = points.iter().map(|&n| sup_tail(n)).collect();
        let pairs: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, (tails[i] - tails.get(i + 1).copied().unwrap_or(0.0)).max(0.0)))
            .collect();
        let total: f64 = pairs.iter().map(|a| a.1).sum();
        IntDistribution::from_sparse(pairs.into_iter().map(|(n, p)| (n, p / total)).collect(), None)
    }

    /// For each communicating class C, whether some y in C has
    /// μ_y(f: Σ_{w in C} f(w) = 1) < 1.
    pub fn check_assumption_nonsingular(&self) -> AssumptionReport {
        let cs = self.class_structure();
        let classes = cs
            .classes()
            .iter()
            .enumerate()
            .map(|(c, members)| {
                let min = members
                    .iter()
                    .map(|&y| self.laws[y].prob_one_child_in(|w| cs.class_of(w) == c))
                    .fold(f64::INFINITY, f64::min);
                ClassAssumption {
                    members: members.iter().map(|&x| self.ids[x]).collect(),
                    min_single_child_prob: min,
                    passes: min < 1.0 - LAW_TOL,
                }
            })
            .collect();
        AssumptionReport { classes, per_truncation: self.meta.truncation.is_some() || !self.is_closed() }
    }

    /// Checks μ_x(f) = μ_{γx}(f ∘ γ^{-1}) on every vertex where γ is defined
    /// on x and on the support of μ_x, and neither x nor γx lost mass to a
    /// restriction.
    pub fn check_invariance(&self, gamma: impl Fn(u64) -> Option<u64>) -> Result<InvarianceReport> {
        let n = self.len();
        let mut image: Vec<Option<usize>> = vec![None; n];
        let mut preimage: HashMap<usize, usize> = HashMap::new();
        for x in 0..n {
            if let Some(gid) = gamma(self.ids[x]) {
                if let Some(&gx) = self.index.get(&gid) {
                    if let Some(&other) = preimage.get(&gx) {
                        return Err(BrwError::NotInjective(other, x));
                    }
                    preimage.insert(gx, x);
                    image[x] = Some(gx);
                }
            }
        }
        let mut report = InvarianceReport {
            holds: true,
            checked: Vec::new(),
            exempt: Vec::new(),
            max_distance: 0.0,
            first_failure: None,
        };
        for x in 0..n {
            let law = &self.laws[x];
            let interior = match image[x] {
                Some(gx) => {
                    law.lost_mean() == 0.0
                        && self.laws[gx].lost_mean() == 0.0
                        && law.mean_row().iter().all(|&(v, _)| image[v].is_some())
                }
                None => false,
            };
            if !interior {
                report.exempt.push(self.ids[x]);
                continue;
            }
            let gx = image[x].unwrap();
            let pushed = law.map_vertices(|v| image[v]);
            let d = pushed.tv_distance(&self.laws[gx], DEFAULT_ATOM_LIMIT)?;
            report.max_distance = report.max_distance.max(d);
            report.checked.push(self.ids[x]);
            if d > LAW_TOL && report.holds {
                report.holds = false;
                report.first_failure = Some(self.ids[x]);
            }
        }
        Ok(report)
    }

    /// Replaces the law at index `x` (used by tests and perturbation studies).
    pub fn with_law(mut self, x: usize, law: OffspringLaw) -> Result<Self> {
        if let Some(v) = law.max_vertex() {
            if v >= self.len() {
                return Err(BrwError::IndexOutOfRange { index: v, len: self.len() });
            }
        }
        self.laws[x] = law;
        Ok(self)
    }
}
