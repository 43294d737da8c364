use std::fmt;

use crate::error::{BrwError, Result};

/// A finitely supported offspring placement f: vertex → count.
///
/// Entries are kept sorted by vertex with no zero counts, so two configs are
/// equal exactly when they place the same children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OffspringConfig {
    entries: Vec<(usize, u64)>,
}

impl OffspringConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a config; repeated vertices accumulate and zero counts vanish.
    pub fn new(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut entries: Vec<(usize, u64)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, u64)> = Vec::with_capacity(entries.len());
        for (v, c) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        Self { entries: merged }
    }

    /// Like [`new`](Self::new) but accepts signed counts and rejects negatives.
    pub fn from_signed(pairs: impl IntoIterator<Item = (usize, i64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (v, c) in pairs {
            if c < 0 {
                return Err(BrwError::InvalidLaw(format!("negative count {c} at vertex {v}")));
            }
            out.push((v, c as u64));
        }
        Ok(Self::new(out))
    }

    pub fn single(vertex: usize, count: u64) -> Self {
        Self::new([(vertex, count)])
    }

    pub fn entries(&self) -> &[(usize, u64)] {
        &self.entries
    }

    pub fn get(&self, vertex: usize) -> u64 {
        self.entries
            .binary_search_by_key(&vertex, |&(v, _)| v)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// H(f), the total number of children.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pushforward of the config along `map`; vertices mapped to `None` are
    /// dropped (their children are killed).
    pub fn map(&self, map: impl Fn(usize) -> Option<usize>) -> Self {
        Self::new(self.entries.iter().filter_map(|&(v, c)| map(v).map(|w| (w, c))))
    }

    /// Π_y z(y)^{f(y)}.
    pub fn monomial(&self, z: &[f64]) -> f64 {
        let mut acc = 1.0;
        for &(v, c) in &self.entries {
            let base = z[v];
            acc *= if c <= i32::MAX as u64 { base.powi(c as i32) } else { base.powf(c as f64) };
            if acc == 0.0 {
                break;
            }
        }
        acc
    }

    /// Pointwise comparison f ≤ g.
    pub fn le(&self, other: &Self) -> bool {
        self.entries.iter().all(|&(v, c)| c <= other.get(v))
    }
}

impl fmt::Display for OffspringConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("-");
        }
        for (i, (v, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}:{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_sorts() {
        let f = OffspringConfig::new([(3, 1), (1, 2), (3, 4), (2, 0)]);
        assert_eq!(f.entries(), &[(1, 2), (3, 5)]);
        assert_eq!(f.total(), 7);
        assert_eq!(f.get(2), 0);
    }

    #[test]
    fn negative_counts_rejected() {
        assert!(OffspringConfig::from_signed([(0, -1)]).is_err());
    }

    #[test]
    fn map_merges_fibers() {
        let f = OffspringConfig::new([(0, 1), (1, 2), (2, 3)]);
        let g = f.map(|v| if v == 2 { None } else { Some(0) });
        assert_eq!(g.entries(), &[(0, 3)]);
    }
}
