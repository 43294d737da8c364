//! Per-vertex offspring samplers built once per model.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{BrwError, Result};
use crate::model::law::LawRepr;
use crate::model::{BrwModel, IntDistribution, OffspringConfig, OffspringLaw};

#[derive(Debug, Clone)]
enum Count {
    Point(usize),
    Alias(Arc<WeightedAliasIndex<f64>>, Arc<[usize]>),
}

impl Count {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Count::Point(n) => *n,
            Count::Alias(a, values) => values[a.sample(rng)],
        }
    }
}

#[derive(Debug, Clone)]
enum Placement {
    /// Every child goes to the same vertex.
    Single(usize),
    /// Slot `i` is `targets[i]`; `None` removes the child.
    Alias { alias: WeightedAliasIndex<f64>, targets: Vec<Option<usize>> },
}

#[derive(Debug, Clone)]
enum VertexSampler {
    Atoms { alias: WeightedAliasIndex<f64>, configs: Vec<OffspringConfig> },
    Fixed(OffspringConfig),
    Product { count: Count, place: Placement },
}

/// Samplers for all vertices of a model. Each particle consumes draws from
/// the generator of its (generation, vertex) stream in a fixed order.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    samplers: Vec<VertexSampler>,
}

fn alias(weights: Vec<f64>) -> Result<WeightedAliasIndex<f64>> {
    WeightedAliasIndex::new(weights).map_err(|e| BrwError::InvalidLaw(format!("alias table: {e}")))
}

impl ModelSampler {
    pub fn new(model: &BrwModel) -> Result<Self> {
        let mut counts: HashMap<usize, Count> = HashMap::new();
        let samplers = model.laws().iter().map(|law| vertex_sampler(law, &mut counts)).collect::<Result<_>>()?;
        Ok(Self { samplers })
    }

    pub fn len(&self) -> usize {
        self.samplers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samplers.is_empty()
    }

    /// Draws the offspring of one particle at `x`, reporting each child
    /// vertex (with multiplicity) through `emit`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R, mut emit: impl FnMut(usize, u64)) {
        match &self.samplers[x] {
            VertexSampler::Fixed(f) => f.entries().iter().for_each(|&(y, c)| emit(y, c)),
            VertexSampler::Atoms { alias, configs } => {
                configs[alias.sample(rng)].entries().iter().for_each(|&(y, c)| emit(y, c));
            }
            VertexSampler::Product { count, place } => {
                let n = count.sample(rng);
                match place {
                    Placement::Single(y) => {
                        if n > 0 {
                            emit(*y, n as u64)
                        }
                    }
                    Placement::Alias { alias, targets } => {
                        for _ in 0..n {
                            if let Some(y) = targets[alias.sample(rng)] {
                                emit(y, 1);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Offspring of one particle as a configuration.
    pub fn sample_config<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> OffspringConfig {
        let mut pairs = Vec::new();
        self.sample(x, rng, |y, c| pairs.push((y, c)));
        OffspringConfig::new(pairs)
    }
}

fn vertex_sampler(law: &OffspringLaw, counts: &mut HashMap<usize, Count>) -> Result<VertexSampler> {
    match law.repr() {
        LawRepr::Atoms(atoms) => {
            if atoms.len() == 1 {
                return Ok(VertexSampler::Fixed(atoms[0].0.clone()));
            }
            Ok(VertexSampler::Atoms {
                alias: alias(atoms.iter().map(|a| a.1).collect())?,
                configs: atoms.iter().map(|a| a.0.clone()).collect(),
            })
        }
        LawRepr::Product { rho, dispersal, killed } => {
            let key = Arc::as_ptr(rho) as usize;
            let count = match counts.get(&key) {
                Some(c) => c.clone(),
                None => {
                    let c = count_sampler(rho)?;
                    counts.insert(key, c.clone());
                    c
                }
            };
            let place = if dispersal.len() == 1 && *killed == 0.0 {
                Placement::Single(dispersal[0].0)
            } else {
                let mut weights: Vec<f64> = dispersal.iter().map(|e| e.1).collect();
                let mut targets: Vec<Option<usize>> = dispersal.iter().map(|e| Some(e.0)).collect();
                if *killed > 0.0 {
                    weights.push(*killed);
                    targets.push(None);
                }
                if weights.is_empty() {
                    // every child is removed
                    weights.push(1.0);
                    targets.push(None);
                }
                Placement::Alias { alias: alias(weights)?, targets }
            };
            Ok(VertexSampler::Product { count, place })
        }
    }
}

fn count_sampler(rho: &IntDistribution) -> Result<Count> {
    if rho.support().len() == 1 {
        return Ok(Count::Point(rho.max_value()));
    }
    Ok(Count::Alias(Arc::new(alias(rho.masses().to_vec())?), rho.support().into()))
}

/// The alternative description of one step: draw the total number of
/// children from ρ_x, then the configuration conditionally on that total.
/// Only used to cross-check [`ModelSampler`] on explicit atom laws.
#[derive(Debug, Clone)]
pub struct TwoStageSampler {
    totals: WeightedAliasIndex<f64>,
    by_total: Vec<Option<(WeightedAliasIndex<f64>, Vec<OffspringConfig>)>>,
}

impl TwoStageSampler {
    pub fn new(law: &OffspringLaw, atom_limit: usize) -> Result<Self> {
        let atoms = law.atoms(atom_limit)?;
        let max_total = atoms.iter().map(|a| a.0.total()).max().unwrap_or(0) as usize;
        let mut groups: Vec<Vec<(OffspringConfig, f64)>> = vec![Vec::new(); max_total + 1];
        for (f, p) in atoms {
            groups[f.total() as usize].push((f, p));
        }
        let totals = alias(groups.iter().map(|g| g.iter().map(|a| a.1).sum()).collect())?;
        let by_total = groups
            .into_iter()
            .map(|g| {
                if g.is_empty() {
                    return Ok(None);
                }
                let a = alias(g.iter().map(|e| e.1).collect())?;
                Ok(Some((a, g.into_iter().map(|e| e.0).collect())))
            })
            .collect::<Result<_>>()?;
        Ok(Self { totals, by_total })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OffspringConfig {
        let t = self.totals.sample(rng);
        let (a, configs) = self.by_total[t].as_ref().expect("totals with positive mass have atoms");
        configs[a.sample(rng)].clone()
    }
}
