//! Population states and one-generation dynamics (plain, capped, coupled).

use std::collections::BTreeMap;

use crate::error::{BrwError, Result};
use crate::model::BrwModel;
use crate::simulate::rng::StreamKey;
use crate::simulate::sampler::ModelSampler;

/// Default bound on the total population of a trial.
pub const DEFAULT_HARD_CAP: u64 = 100_000_000;

/// Count vector η_n with its generation index and the number N_n of
/// particles that existed in generations 0..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationState {
    counts: Vec<u64>,
    /// Occupied vertices in increasing order.
    occupied: Vec<usize>,
    generation: u64,
    total_born: u64,
}

impl PopulationState {
    pub fn empty(n: usize) -> Self {
        Self { counts: vec![0; n], occupied: Vec::new(), generation: 0, total_born: 0 }
    }

    /// `count` particles at `x`.
    pub fn delta(n: usize, x: usize, count: u64) -> Result<Self> {
        let mut counts = vec![0; n];
        *counts.get_mut(x).ok_or(BrwError::IndexOutOfRange { index: x, len: n })? = count;
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let occupied: Vec<usize> = (0..counts.len()).filter(|&x| counts[x] > 0).collect();
        let total_born = counts.iter().sum();
        Self { counts, occupied, generation: 0, total_born }
    }

    pub fn count(&self, x: usize) -> u64 {
        self.counts[x]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn total(&self) -> u64 {
        self.occupied.iter().map(|&x| self.counts[x]).sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn total_born(&self) -> u64 {
        self.total_born
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Occupied vertices with their counts.
    pub fn to_map(&self) -> BTreeMap<usize, u64> {
        self.occupied.iter().map(|&x| (x, self.counts[x])).collect()
    }

    /// Coordinatewise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.occupied.iter().all(|&x| self.counts[x] <= other.counts[x])
    }
}

/// The population exceeded the hard cap; the trial stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overflow {
    pub generation: u64,
    pub population: u64,
}

/// Vertex map F_x applied to the lower process of a coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Identity,
    /// Children placed outside the kept vertices are removed: f ↦ f|_Y.
    Restriction(Vec<bool>),
}

impl Coupling {
    /// Restriction to the vertices with the given indices.
    pub fn restriction(n: usize, keep: &[usize]) -> Self {
        let mut mask = vec![false; n];
        keep.iter().for_each(|&x| mask[x] = true);
        Coupling::Restriction(mask)
    }

    fn keeps(&self, y: usize) -> bool {
        match self {
            Coupling::Identity => true,
            Coupling::Restriction(mask) => mask[y],
        }
    }
}

/// Simulation engine for one model.
#[derive(Debug, Clone)]
pub struct Simulator {
    sampler: ModelSampler,
    hard_cap: u64,
}

/// Arrivals accumulated into a recycled state buffer.
struct Arrivals<'a> {
    out: &'a mut PopulationState,
    total: u64,
}

impl<'a> Arrivals<'a> {
    fn new(out: &'a mut PopulationState, n: usize) -> Self {
        if out.counts.len() != n {
            *out = PopulationState::empty(n);
        }
        for &y in &out.occupied {
            out.counts[y] = 0;
        }
        out.occupied.clear();
        Self { out, total: 0 }
    }

    #[inline]
    fn add(&mut self, y: usize, c: u64) {
        if self.out.counts[y] == 0 {
            self.out.occupied.push(y);
        }
        self.out.counts[y] += c;
        self.total += c;
    }

    /// Applies min(·, cap) after all arrivals are summed.
    fn finish(self, prev: &PopulationState, cap: Option<u64>) {
        let out = self.out;
        if let Some(m) = cap {
            for &y in &out.occupied {
                out.counts[y] = out.counts[y].min(m);
            }
        }
        out.occupied.sort_unstable();
        let total: u64 = out.occupied.iter().map(|&y| out.counts[y]).sum();
        out.generation = prev.generation + 1;
        out.total_born = prev.total_born + total;
    }
}

impl Simulator {
    pub fn new(model: &BrwModel) -> Result<Self> {
        Ok(Self { sampler: ModelSampler::new(model)?, hard_cap: DEFAULT_HARD_CAP })
    }

    pub fn with_hard_cap(mut self, hard_cap: u64) -> Self {
        self.hard_cap = hard_cap;
        self
    }

    pub fn hard_cap(&self) -> u64 {
        self.hard_cap
    }

    pub fn len(&self) -> usize {
        self.sampler.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sampler.is_empty()
    }

    pub fn sampler(&self) -> &ModelSampler {
        &self.sampler
    }

    /// One generation: every particle draws its offspring independently and
    /// the new state is the sum of the drawn configurations.
    pub fn step(&self, state: &PopulationState, key: StreamKey) -> std::result::Result<PopulationState, Overflow> {
        self.step_truncated(state, None, key)
    }

    /// As [`step`](Self::step), then each site count is replaced by
    /// min(count, cap). `None` means no cap.
    pub fn step_truncated(
        &self,
        state: &PopulationState,
        cap: Option<u64>,
        key: StreamKey,
    ) -> std::result::Result<PopulationState, Overflow> {
        let mut out = PopulationState::empty(state.len());
        self.step_into(state, cap, key, &mut out)?;
        Ok(out)
    }

    /// [`step_truncated`](Self::step_truncated) writing into a recycled
    /// buffer, which avoids clearing a full count vector per generation.
    pub fn step_into(
        &self,
        state: &PopulationState,
        cap: Option<u64>,
        key: StreamKey,
        out: &mut PopulationState,
    ) -> std::result::Result<(), Overflow> {
        let mut arr = Arrivals::new(out, state.len());
        for &x in &state.occupied {
            let mut rng = key.rng(state.generation, x as u64);
            for _ in 0..state.counts[x] {
                self.sampler.sample(x, &mut rng, |y, c| arr.add(y, c));
                if arr.total > self.hard_cap {
                    return Err(Overflow { generation: state.generation + 1, population: arr.total });
                }
            }
        }
        arr.finish(state, cap);
        Ok(())
    }

    /// One generation of a coupled pair. The upper process moves exactly as
    /// [`step_truncated`](Self::step_truncated) with cap `m`; each lower
    /// particle at x reuses the draws of the corresponding upper particle,
    /// passed through `coupling`, and the lower process is capped at `k`.
    ///
    /// Panics if the lower state does not stay dominated, which would be a
    /// bug in the coupling.
    pub fn step_coupled(
        &self,
        upper: &PopulationState,
        lower: &PopulationState,
        m: Option<u64>,
        k: Option<u64>,
        coupling: &Coupling,
        key: StreamKey,
    ) -> std::result::Result<(PopulationState, PopulationState), Overflow> {
        assert!(lower.le(upper), "coupled pair is not ordered before the step");
        assert!(cap_le(k, m), "lower cap must not exceed the upper cap");
        let mut up_state = PopulationState::empty(upper.len());
        let mut low_state = PopulationState::empty(lower.len());
        let mut up = Arrivals::new(&mut up_state, upper.len());
        let mut low = Arrivals::new(&mut low_state, lower.len());
        for &x in &upper.occupied {
            let mut rng = key.rng(upper.generation, x as u64);
            let shared = lower.counts[x];
            for j in 0..upper.counts[x] {
                if j < shared {
                    self.sampler.sample(x, &mut rng, |y, c| {
                        up.add(y, c);
                        if coupling.keeps(y) {
                            low.add(y, c);
                        }
                    });
                } else {
                    self.sampler.sample(x, &mut rng, |y, c| up.add(y, c));
                }
                if up.total > self.hard_cap {
                    return Err(Overflow { generation: upper.generation + 1, population: up.total });
                }
            }
        }
        up.finish(upper, m);
        low.finish(lower, k);
        low_state.generation = up_state.generation;
        assert!(low_state.le(&up_state), "coupled domination violated at generation {}", up_state.generation);
        Ok((up_state, low_state))
    }
}

fn cap_le(k: Option<u64>, m: Option<u64>) -> bool {
    match (k, m) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(k), Some(m)) => k <= m,
    }
}
