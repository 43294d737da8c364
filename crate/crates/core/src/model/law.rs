//! Offspring laws μ_x over configurations.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{BrwError, Result};
use crate::model::config::OffspringConfig;
use crate::model::dist::{IntDistribution, MASS_TOL};

/// Default bound on the number of atoms produced when a factorized law is
/// expanded explicitly.
pub const DEFAULT_ATOM_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone)]
pub(crate) enum LawRepr {
    Atoms(Vec<(OffspringConfig, f64)>),
    /// Total drawn from `rho`, then each child independently placed at `y`
    /// with probability `dispersal[y]` or removed with probability `killed`.
    Product { rho: Arc<IntDistribution>, dispersal: Vec<(usize, f64)>, killed: f64 },
}

/// Offspring law of a single site together with its derived quantities:
/// the child-count law ρ_x, the mean row m_x· and the mean number of
/// children lost to vertices outside the model.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    repr: LawRepr,
    children: IntDistribution,
    mean_row: Vec<(usize, f64)>,
    lost_mean: f64,
}

impl OffspringLaw {
    /// Builds a law from explicit atoms.
    pub fn from_atoms(atoms: Vec<(OffspringConfig, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(BrwError::InvalidLaw("no atoms".into()));
        }
        let mut total = 0.0;
        for (f, p) in &atoms {
            if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                return Err(BrwError::InvalidLaw(format!("probability {p} for config {f}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BrwError::InvalidLaw(format!("probabilities sum to {total}")));
        }
        let mut sorted = atoms;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(BrwError::InvalidLaw(format!("duplicate config {}", w[0].0)));
            }
        }
        // renormalizing an already normalized law would break exact text roundtrips
        if (total - 1.0).abs() > 1e-14 {
            sorted.iter_mut().for_each(|a| a.1 /= total);
        }
        Ok(Self::from_sorted_atoms(sorted, 0.0))
    }

    fn from_sorted_atoms(atoms: Vec<(OffspringConfig, f64)>, lost_mean: f64) -> Self {
        let mut counts: Vec<(usize, f64)> = Vec::with_capacity(atoms.len());
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for (f, p) in &atoms {
            counts.push((f.total() as usize, *p));
            for &(v, c) in f.entries() {
                *row.entry(v).or_insert(0.0) += c as f64 * p;
            }
        }
        let children = IntDistribution::from_sparse(counts, None);
        Self {
            repr: LawRepr::Atoms(atoms),
            children,
            mean_row: row.into_iter().collect(),
            lost_mean,
        }
    }

    /// Product-form law: total from `rho`, children dispersed i.i.d. by
    /// `dispersal` (which must sum to one).
    pub fn product_form(rho: impl Into<Arc<IntDistribution>>, dispersal: &[(usize, f64)]) -> Result<Self> {
        let total: f64 = dispersal.iter().map(|&(_, p)| p).sum();
        if dispersal.iter().any(|&(_, p)| !(p.is_finite() && p >= 0.0)) {
            return Err(BrwError::InvalidLaw("negative dispersal weight".into()));
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BrwError::InvalidLaw(format!("dispersal row sums to {total}")));
        }
        Ok(Self::product_with_killed(rho.into(), merge_row(dispersal.iter().copied()), 0.0))
    }

    fn product_with_killed(rho: Arc<IntDistribution>, dispersal: Vec<(usize, f64)>, killed: f64) -> Self {
        let mean = rho.mean();
        let mean_row = dispersal.iter().map(|&(v, p)| (v, p * mean)).collect();
        let children = if killed > 0.0 { rho.thinned(1.0 - killed) } else { (*rho).clone() };
        let lost_mean = killed * mean;
        Self { repr: LawRepr::Product { rho, dispersal, killed }, children, mean_row, lost_mean }
    }

    /// Generation law of the continuous-time process with rate `lambda` and
    /// edge rates `rates` (plus `outside_rate` towards vertices that are not
    /// represented; those children are removed).
    pub fn continuous_counterpart(
        lambda: f64,
        rates: &[(usize, f64)],
        outside_rate: f64,
        tail_cap: Option<usize>,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(BrwError::InvalidLaw(format!("lambda must be positive, got {lambda}")));
        }
        if rates.iter().any(|&(_, k)| !(k.is_finite() && k >= 0.0)) || outside_rate < 0.0 {
            return Err(BrwError::InvalidLaw("rates must be nonnegative".into()));
        }
        let k: f64 = rates.iter().map(|&(_, k)| k).sum::<f64>() + outside_rate;
        if k <= 0.0 {
            return Err(BrwError::InvalidLaw("total rate k(x) is zero".into()));
        }
        let rho = match tail_cap {
            Some(cap) => IntDistribution::geometric_capped(lambda * k, cap)?,
            None => IntDistribution::geometric(lambda * k)?,
        };
        Ok(Self::counterpart_with_rho(Arc::new(rho), rates, outside_rate))
    }

    /// Same as [`continuous_counterpart`](Self::continuous_counterpart) with
    /// the geometric law supplied by the caller, so that many vertices with
    /// equal total rate can share it.
    pub fn counterpart_with_rho(rho: Arc<IntDistribution>, rates: &[(usize, f64)], outside_rate: f64) -> Self {
        let k: f64 = rates.iter().map(|&(_, k)| k).sum::<f64>() + outside_rate;
        let dispersal = merge_row(rates.iter().map(|&(v, r)| (v, r / k)));
        Self::product_with_killed(rho, dispersal, outside_rate / k)
    }

    /// ρ_x, the law of the number of children (after removals).
    pub fn children(&self) -> &IntDistribution {
        &self.children
    }

    /// ρ̄_x = Σ_y m_xy.
    pub fn mean(&self) -> f64 {
        self.mean_row.iter().map(|&(_, m)| m).sum()
    }

    /// Row (m_xy)_y as sorted sparse pairs.
    pub fn mean_row(&self) -> &[(usize, f64)] {
        &self.mean_row
    }

    /// Expected number of children removed by a restriction.
    pub fn lost_mean(&self) -> f64 {
        self.lost_mean
    }

    pub(crate) fn with_lost_mean(mut self, lost: f64) -> Self {
        self.lost_mean = lost;
        self
    }

    /// Law from already normalized product parts (used when reading a model
    /// back from text).
    pub(crate) fn from_product_parts(rho: IntDistribution, dispersal: Vec<(usize, f64)>, killed: f64) -> Result<Self> {
        let total: f64 = dispersal.iter().map(|e| e.1).sum::<f64>() + killed;
        if (total - 1.0).abs() > 1e-9 || killed < 0.0 {
            return Err(BrwError::InvalidLaw(format!("dispersal plus removal sums to {total}")));
        }
        Ok(Self::product_with_killed(Arc::new(rho), merge_row(dispersal), killed))
    }

    pub(crate) fn repr(&self) -> &LawRepr {
        &self.repr
    }

    /// `(rho, dispersal, killed)` when the law is stored in product form.
    pub fn product_parts(&self) -> Option<(&IntDistribution, &[(usize, f64)], f64)> {
        match &self.repr {
            LawRepr::Product { rho, dispersal, killed } => Some((rho, dispersal, *killed)),
            LawRepr::Atoms(_) => None,
        }
    }

    /// Largest vertex index referenced by the law.
    pub fn max_vertex(&self) -> Option<usize> {
        match &self.repr {
            LawRepr::Atoms(atoms) => atoms.iter().filter_map(|(f, _)| f.entries().last().map(|e| e.0)).max(),
            LawRepr::Product { dispersal, .. } => dispersal.last().map(|e| e.0),
        }
    }

    /// Number of atoms an explicit expansion would produce (an upper bound
    /// for factorized laws).
    pub fn atom_count_bound(&self) -> f64 {
        match &self.repr {
            LawRepr::Atoms(atoms) => atoms.len() as f64,
            LawRepr::Product { rho, dispersal, killed } => {
                let slots = dispersal.len() + usize::from(*killed > 0.0);
                rho.support()
                    .iter()
                    .map(|&n| binomial_f64(n + slots.max(1) - 1, slots.max(1) - 1))
                    .sum()
            }
        }
    }

    /// Explicit atoms, expanding a factorized law when needed.
    pub fn atoms(&self, limit: usize) -> Result<Vec<(OffspringConfig, f64)>> {
        match &self.repr {
            LawRepr::Atoms(atoms) => Ok(atoms.clone()),
            LawRepr::Product { rho, dispersal, killed } => {
                if self.atom_count_bound() > limit as f64 {
                    return Err(BrwError::TooManyAtoms { limit });
                }
                Ok(expand_product(rho, dispersal, *killed))
            }
        }
    }

    /// G(z|x) = Σ_f μ_x(f) Π_y z(y)^{f(y)}.
    pub fn gen_fn(&self, z: &[f64]) -> f64 {
        match &self.repr {
            LawRepr::Atoms(atoms) => atoms.iter().map(|(f, p)| p * f.monomial(z)).sum(),
            LawRepr::Product { rho, dispersal, killed } => {
                let s: f64 = dispersal.iter().map(|&(v, p)| p * z[v]).sum::<f64>() + killed;
                rho.pgf(s.min(1.0))
            }
        }
    }

    /// μ(f: Σ_{w ∈ C} f(w) = 1) for the vertex class selected by `in_class`.
    pub fn prob_one_child_in(&self, in_class: impl Fn(usize) -> bool) -> f64 {
        match &self.repr {
            LawRepr::Atoms(atoms) => atoms
                .iter()
                .filter(|(f, _)| f.entries().iter().filter(|e| in_class(e.0)).map(|e| e.1).sum::<u64>() == 1)
                .map(|(_, p)| p)
                .sum(),
            LawRepr::Product { rho, dispersal, .. } => {
                let s: f64 = dispersal.iter().filter(|e| in_class(e.0)).map(|e| e.1).sum();
                rho.atoms()
                    .filter(|&(n, _)| n > 0)
                    .map(|(n, p)| p * n as f64 * s * (1.0 - s).powf(n as f64 - 1.0))
                    .sum()
            }
        }
    }

    /// Pushforward ν(·) = μ(π^{-1}(·)) along a vertex map; vertices sent to
    /// `None` are removed and their mean is accounted as lost.
    pub fn map_vertices(&self, map: impl Fn(usize) -> Option<usize>) -> Self {
        let removed: f64 = self.mean_row.iter().filter(|&&(v, _)| map(v).is_none()).map(|&(_, m)| m).sum();
        let lost = self.lost_mean + removed;
        match &self.repr {
            LawRepr::Atoms(atoms) => {
                let mut merged: BTreeMap<OffspringConfig, f64> = BTreeMap::new();
                for (f, p) in atoms {
                    *merged.entry(f.map(&map)).or_insert(0.0) += p;
                }
                Self::from_sorted_atoms(merged.into_iter().collect(), lost)
            }
            LawRepr::Product { rho, dispersal, killed } => {
                let mut kept = Vec::with_capacity(dispersal.len());
                let mut k = *killed;
                for &(v, p) in dispersal {
                    match map(v) {
                        Some(w) => kept.push((w, p)),
                        None => k += p,
                    }
                }
                let mut law = Self::product_with_killed(rho.clone(), merge_row(kept), k);
                law.lost_mean = lost;
                law
            }
        }
    }

    /// Total variation distance between two laws.
    ///
    /// Two factorized laws with the same dispersal are compared through their
    /// totals, which bounds the distance from above; other pairs are expanded.
    pub fn tv_distance(&self, other: &Self, limit: usize) -> Result<f64> {
        if let (
            LawRepr::Product { rho: r1, dispersal: d1, killed: k1 },
            LawRepr::Product { rho: r2, dispersal: d2, killed: k2 },
        ) = (&self.repr, &other.repr)
        {
            if r1.max_value() == 0 && r2.max_value() == 0 {
                return Ok(0.0);
            }
            if (k1 - k2).abs() <= 1e-15 && rows_close(d1, d2, 1e-15) {
                return Ok(r1.tv_distance(r2));
            }
        }
        let a = self.atoms(limit)?;
        let b = other.atoms(limit)?;
        let mut merged: BTreeMap<&OffspringConfig, f64> = BTreeMap::new();
        for (f, p) in &a {
            *merged.entry(f).or_insert(0.0) += p;
        }
        for (f, p) in &b {
            *merged.entry(f).or_insert(0.0) -= p;
        }
        Ok(0.5 * merged.values().map(|d| d.abs()).sum::<f64>())
    }
}

fn merge_row(pairs: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut map: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, p) in pairs {
        if p > 0.0 {
            *map.entry(v).or_insert(0.0) += p;
        }
    }
    map.into_iter().collect()
}

fn rows_close(a: &[(usize, f64)], b: &[(usize, f64)], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= tol)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn expand_product(rho: &IntDistribution, dispersal: &[(usize, f64)], killed: f64) -> Vec<(OffspringConfig, f64)> {
    let mut slots: Vec<(Option<usize>, f64)> = dispersal.iter().map(|&(v, p)| (Some(v), p)).collect();
    if killed > 0.0 {
        slots.push((None, killed));
    }
    let max_n = rho.max_value();
    let mut ln_fact = vec![0.0; max_n + 1];
    for i in 1..=max_n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let mut out: BTreeMap<OffspringConfig, f64> = BTreeMap::new();
    let mut counts = vec![0u64; slots.len()];
    for (n, pn) in rho.atoms() {
        if n == 0 || slots.is_empty() {
            *out.entry(OffspringConfig::empty()).or_insert(0.0) += pn;
            continue;
        }
        distribute(n as u64, 0, &slots, &mut counts, &mut |counts| {
            let mut ln_p = ln_fact[n];
            for (c, (_, p)) in counts.iter().zip(&slots) {
                ln_p += *c as f64 * p.ln() - ln_fact[*c as usize];
            }
            let cfg = OffspringConfig::new(
                counts.iter().zip(&slots).filter_map(|(&c, &(v, _))| v.map(|v| (v, c))),
            );
            *out.entry(cfg).or_insert(0.0) += pn * ln_p.exp();
        });
    }
    out.into_iter().filter(|(_, p)| *p > 0.0).collect()
}

fn distribute(
    remaining: u64,
    slot: usize,
    slots: &[(Option<usize>, f64)],
    counts: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64]),
) {
    if slot + 1 == slots.len() {
        counts[slot] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[slot] = c;
        distribute(remaining - c, slot + 1, slots, counts, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(usize, u64)]) -> OffspringConfig {
        OffspringConfig::new(pairs.iter().copied())
    }

    #[test]
    fn deterministic_doubling() {
        let law = OffspringLaw::from_atoms(vec![(cfg(&[(0, 2)]), 1.0)]).unwrap();
        assert_eq!(law.children().prob(2), 1.0);
        assert_eq!(law.mean(), 2.0);
    }

    #[test]
    fn half_empty_half_pair() {
        let law = OffspringLaw::from_atoms(vec![(cfg(&[]), 0.5), (cfg(&[(0, 1), (1, 1)]), 0.5)]).unwrap();
        assert_eq!(law.children().prob(0), 0.5);
        assert_eq!(law.children().prob(2), 0.5);
        assert_eq!(law.mean_row(), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(law.mean(), 1.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(OffspringLaw::from_atoms(vec![(cfg(&[]), 0.4), (cfg(&[(0, 1)]), 0.5)]).is_err());
        assert!(OffspringLaw::from_atoms(vec![(cfg(&[(0, 1)]), 0.5), (cfg(&[(0, 1)]), 0.5)]).is_err());
    }

    #[test]
    fn multinomial_expansion_by_hand() {
        let rho = IntDistribution::from_pairs(&[(0, 0.5), (2, 0.5)]).unwrap();
        let law = OffspringLaw::product_form(rho, &[(0, 0.5), (1, 0.5)]).unwrap();
        let atoms = law.atoms(100).unwrap();
        let expect = [
            (cfg(&[]), 0.5),
            (cfg(&[(0, 1), (1, 1)]), 0.25),
            (cfg(&[(0, 2)]), 0.125),
            (cfg(&[(1, 2)]), 0.125),
        ];
        assert_eq!(atoms.len(), 4);
        for (f, p) in expect {
            let got = atoms.iter().find(|a| a.0 == f).unwrap().1;
            assert!((got - p).abs() < 1e-15, "{f}: {got} vs {p}");
        }
    }

    #[test]
    fn counterpart_rates() {
        let law = OffspringLaw::continuous_counterpart(0.5, &[(3, 2.0)], 0.0, None).unwrap();
        assert!((law.mean_row()[0].1 - 1.0).abs() < 1e-10);
        assert!(OffspringLaw::continuous_counterpart(1.0, &[], 0.0, None).is_err());
    }

    #[test]
    fn restriction_of_product_matches_expanded_restriction() {
        let rho = IntDistribution::from_pairs(&[(0, 0.2), (1, 0.3), (3, 0.5)]).unwrap();
        let law = OffspringLaw::product_form(rho, &[(0, 0.3), (1, 0.7)]).unwrap();
        let keep0 = |v: usize| (v == 0).then_some(0);
        let restricted = law.map_vertices(keep0);
        let expanded = OffspringLaw::from_atoms(law.atoms(1000).unwrap()).unwrap().map_vertices(keep0);
        let tv = restricted.tv_distance(&expanded, 1000).unwrap();
        assert!(tv < 1e-14, "tv {tv}");
        assert!((restricted.lost_mean() - law.mean_row()[1].1).abs() < 1e-14);
        assert!((restricted.children().mean() - restricted.mean()).abs() < 1e-12);
    }

    #[test]
    fn gen_fn_product_equals_atoms() {
        let rho = IntDistribution::from_pairs(&[(0, 0.1), (1, 0.2), (2, 0.3), (4, 0.4)]).unwrap();
        let law = OffspringLaw::product_form(rho, &[(0, 0.2), (1, 0.5), (2, 0.3)]).unwrap();
        let atoms = OffspringLaw::from_atoms(law.atoms(10_000).unwrap()).unwrap();
        let z = [0.3, 0.9, 0.55];
        assert!((law.gen_fn(&z) - atoms.gen_fn(&z)).abs() < 1e-14);
    }
}
