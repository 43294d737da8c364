//! Finitely supported laws on the nonnegative integers.

use crate::error::{BrwError, Result};

/// Tolerance on the total mass of a user supplied law.
pub const MASS_TOL: f64 = 1e-12;

/// Tail mass allowed when a geometric law is cut at a finite cap.
pub const GEOMETRIC_TAIL_TOL: f64 = 1e-12;

/// Probability law on {0, 1, ..., N}, stored sparsely.
///
/// `values` is the strictly increasing support and `masses` the matching
/// positive masses, so laws with a few atoms at huge values stay cheap. When
/// the law was obtained by truncating a geometric law, `geometric_mean`
/// keeps the untruncated mean so that analytic shortcuts remain available.
#[derive(Debug, Clone, PartialEq)]
pub struct IntDistribution {
    values: Vec<usize>,
    masses: Vec<f64>,
    mean: f64,
    variance: f64,
    geometric_mean: Option<f64>,
}

impl IntDistribution {
    /// Builds from dense masses, `probs[n]` being the mass at `n`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(BrwError::InvalidDistribution("empty support".into()));
        }
        let pairs: Vec<(usize, f64)> = probs.into_iter().enumerate().collect();
        Self::from_pairs(&pairs)
    }

    /// Builds from `(value, mass)` pairs; repeated values accumulate.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(BrwError::InvalidDistribution("empty support".into()));
        }
        for &(n, p) in pairs {
            if !p.is_finite() || p < 0.0 {
                return Err(BrwError::InvalidDistribution(format!("mass {p} at {n}")));
            }
        }
        let total: f64 = pairs.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BrwError::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(Self::from_sparse(pairs.to_vec(), None))
    }

    pub fn point(n: usize) -> Self {
        Self::from_sparse(vec![(n, 1.0)], None)
    }

    /// Geometric law ρ(i) = m^i / (1+m)^{i+1} with mean `mean`, cut at the
    /// smallest cap whose tail mass and tail contribution to the mean are
    /// both below 1e-13, then renormalized.
    pub fn geometric(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(BrwError::InvalidDistribution(format!("geometric mean {mean}")));
        }
        if mean == 0.0 {
            return Ok(Self::point(0));
        }
        let r = mean / (1.0 + mean);
        // tail P(X > N) = r^{N+1}; tail mean contribution ≈ r^{N+1} (N + 1 + m)
        let mut cap = 0usize;
        loop {
            let tail = r.powi(cap as i32 + 1);
            if tail < 1e-13 && tail * (cap as f64 + 1.0 + mean) < 1e-13 {
                break;
            }
            cap += 1;
            if cap > 1_000_000 {
                return Err(BrwError::InvalidDistribution(format!(
                    "geometric mean {mean} needs an unreasonably large cap"
                )));
            }
        }
        Self::geometric_capped(mean, cap)
    }

    /// Geometric law with an explicit cap; errors if the discarded tail is
    /// not below 1e-12.
    pub fn geometric_capped(mean: f64, cap: usize) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(BrwError::InvalidDistribution(format!("geometric mean {mean}")));
        }
        let r = mean / (1.0 + mean);
        let tail = r.powf(cap as f64 + 1.0);
        if tail >= GEOMETRIC_TAIL_TOL {
            return Err(BrwError::InvalidDistribution(format!(
                "cap {cap} leaves tail mass {tail:e} for geometric mean {mean}"
            )));
        }
        let mut pairs = Vec::with_capacity(cap + 1);
        let mut term = 1.0 / (1.0 + mean);
        for n in 0..=cap {
            pairs.push((n, term));
            term *= r;
        }
        let total: f64 = pairs.iter().map(|a| a.1).sum();
        pairs.iter_mut().for_each(|a| a.1 /= total);
        Ok(Self::from_sparse(pairs, Some(mean)))
    }

    /// Trusted constructor: masses must already sum to one. Pairs may come
    /// in any order, repeat values, or carry zero mass.
    pub(crate) fn from_sparse(mut pairs: Vec<(usize, f64)>, geometric_mean: Option<f64>) -> Self {
        pairs.sort_by_key(|a| a.0);
        let mut values: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pairs.len());
        for (n, p) in pairs {
            if values.last() == Some(&n) {
                *masses.last_mut().unwrap() += p;
            } else {
                values.push(n);
                masses.push(p);
            }
        }
        let (values, masses): (Vec<usize>, Vec<f64>) = if masses.iter().any(|&p| p > 0.0) {
            values.into_iter().zip(masses).filter(|a| a.1 > 0.0).unzip()
        } else {
            (vec![0], vec![1.0])
        };
        let mut mean = 0.0;
        let mut second = 0.0;
        for (&n, &p) in values.iter().zip(&masses) {
            let x = n as f64;
            mean += x * p;
            second += x * x * p;
        }
        let variance = (second - mean * mean).max(0.0);
        Self { values, masses, mean, variance, geometric_mean }
    }

    /// Support points with positive mass, increasing, paired with their mass.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn support(&self) -> &[usize] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Dense masses on 0..=max_value(); only sensible for small supports.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.max_value() + 1];
        for (n, p) in self.atoms() {
            out[n] = p;
        }
        out
    }

    pub fn prob(&self, n: usize) -> f64 {
        match self.values.binary_search(&n) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Largest value with positive mass.
    pub fn max_value(&self) -> usize {
        *self.values.last().unwrap()
    }

    /// Untruncated mean when built from a geometric law.
    pub fn geometric_mean(&self) -> Option<f64> {
        self.geometric_mean
    }

    /// P(X ≥ n).
    pub fn tail(&self, n: usize) -> f64 {
        let i = self.values.partition_point(|&v| v < n);
        self.masses[i..].iter().sum::<f64>().min(1.0)
    }

    /// Tails at the support points: `(v, P(X ≥ v))` for each v in the
    /// support. P(X ≥ n) is constant between consecutive support points.
    pub fn support_tails(&self) -> Vec<(usize, f64)> {
        let mut out = vec![(0, 0.0); self.values.len()];
        let mut acc = 0.0;
        for i in (0..self.values.len()).rev() {
            acc += self.masses[i];
            out[i] = (self.values[i], acc.min(1.0));
        }
        out
    }

    /// Probability generating function F(s) = Σ ρ(n) s^n.
    pub fn pgf(&self, s: f64) -> f64 {
        self.atoms().map(|(n, p)| if n == 0 { p } else { p * s.powf(n as f64) }).sum()
    }

    /// Law of the number of survivors when each outcome is kept
    /// independently with probability `keep`.
    pub fn thinned(&self, keep: f64) -> Self {
        if keep >= 1.0 {
            return self.clone();
        }
        if keep <= 0.0 {
            return Self::point(0);
        }
        let (ln_keep, ln_lose) = (keep.ln(), (1.0 - keep).ln());
        let mut out = vec![0.0; self.max_value() + 1];
        for (n, p) in self.atoms() {
            // binomial(n, keep) masses in log space
            let mut ln_choose = 0.0;
            for j in 0..=n {
                out[j] += p * (ln_choose + j as f64 * ln_keep + (n - j) as f64 * ln_lose).exp();
                ln_choose += ((n - j) as f64 / (j + 1) as f64).ln();
            }
        }
        let total: f64 = out.iter().sum();
        Self::from_sparse(out.into_iter().enumerate().map(|(n, p)| (n, p / total)).collect(), None)
    }

    /// Total variation distance.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let mut points: Vec<usize> = self.values.iter().chain(&other.values).copied().collect();
        points.sort_unstable();
        points.dedup();
        0.5 * points.iter().map(|&n| (self.prob(n) - other.prob(n)).abs()).sum::<f64>()
    }

    /// True when `self` dominates `other` stochastically, up to `tol`.
    pub fn dominates(&self, other: &Self, tol: f64) -> bool {
        // both tails are step functions jumping only at support points
        let mut points: Vec<usize> = self.values.iter().chain(&other.values).copied().collect();
        points.sort_unstable();
        points.dedup();
        points.iter().all(|&n| self.tail(n) + tol >= other.tail(n))
    }

    /// Parses `0:0.4,2:0.6`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (n, p) = item
                .split_once(':')
                .ok_or_else(|| BrwError::InvalidDistribution(format!("expected n:p, got `{item}`")))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| BrwError::InvalidDistribution(format!("bad value `{n}`")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| BrwError::InvalidDistribution(format!("bad mass `{p}`")))?;
            pairs.push((n, p));
        }
        Self::from_pairs(&pairs)
    }
}
