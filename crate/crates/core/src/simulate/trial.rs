//! Survival trials and their Monte Carlo aggregation.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::simulate::rng::StreamKey;
use crate::simulate::state::{PopulationState, Simulator};

/// Fraction of the horizon at the end within which a visit to the target
/// counts as "alive locally".
pub const LOCAL_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub replica: u64,
    /// Seed identifying the replica's streams.
    pub seed: u64,
    /// Population nonempty at the horizon, or the trial overflowed.
    pub alive: bool,
    pub overflow: bool,
    /// Generations n ≤ horizon with η_n(target) > 0.
    pub visits: u64,
    pub last_visit: Option<u64>,
    pub peak_population: u64,
    pub generations: u64,
    /// N_n: particles in generations 0..=n at the end of the trial.
    pub total_born: u64,
}

impl TrialOutcome {
    /// Target visited within the last [`LOCAL_WINDOW`] of the horizon (an
    /// overflowed trial counts as alive at the target too).
    pub fn alive_at_target(&self, horizon: u64) -> bool {
        if self.overflow {
            return true;
        }
        let from = horizon - ((horizon as f64 * LOCAL_WINDOW).floor() as u64);
        self.last_visit.is_some_and(|g| g >= from)
    }
}

/// Runs one trial from `eta0` for `horizon` generations with optional cap.
pub fn run_survival_trial(
    sim: &Simulator,
    eta0: &PopulationState,
    horizon: u64,
    target: Option<usize>,
    cap: Option<u64>,
    key: StreamKey,
) -> TrialOutcome {
    let mut state = eta0.clone();
    let mut buf = PopulationState::empty(eta0.len());
    let mut out = TrialOutcome {
        replica: key.replica,
        seed: key.replica_seed(),
        alive: !state.is_extinct(),
        overflow: false,
        visits: 0,
        last_visit: None,
        peak_population: state.total(),
        generations: 0,
        total_born: state.total_born(),
    };
    let visit = |s: &PopulationState, out: &mut TrialOutcome| {
        if let Some(t) = target {
            if s.count(t) > 0 {
                out.visits += 1;
                out.last_visit = Some(s.generation());
            }
        }
    };
    visit(&state, &mut out);
    while state.generation() < horizon && !state.is_extinct() {
        if sim.step_into(&state, cap, key, &mut buf).is_err() {
            out.overflow = true;
            out.alive = true;
            out.generations = state.generation() + 1;
            return out;
        }
        std::mem::swap(&mut state, &mut buf);
        out.generations = state.generation();
        out.total_born = state.total_born();
        out.peak_population = out.peak_population.max(state.total());
        visit(&state, &mut out);
    }
    out.alive = !state.is_extinct();
    out
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone)]
pub struct SurvivalEstimate {
    pub horizon: u64,
    pub cap: Option<u64>,
    pub replicas: u64,
    pub alive: u64,
    pub frequency: f64,
    pub ci: (f64, f64),
    pub overflows: u64,
    /// Replicas alive at the target near the horizon, when a target was set.
    pub alive_at_target: Option<u64>,
    pub outcomes: Vec<TrialOutcome>,
}

impl SurvivalEstimate {
    pub fn target_frequency(&self) -> Option<(f64, (f64, f64))> {
        self.alive_at_target.map(|a| (a as f64 / self.replicas as f64, wilson_interval(a, self.replicas)))
    }

    /// Per-replica CSV.
    pub fn replicas_csv(&self) -> String {
        let mut out = String::from("replica,seed,alive_flag,last_target_visit,peak_population,N_horizon,overflow\n");
        for o in &self.outcomes {
            let last = o.last_visit.map_or(String::new(), |g| g.to_string());
            writeln!(
                out,
                "{},{},{},{last},{},{},{}",
                o.replica, o.seed, o.alive as u8, o.peak_population, o.total_born, o.overflow as u8
            )
            .unwrap();
        }
        out
    }

    /// One summary row (without header); see [`SUMMARY_HEADER`].
    pub fn summary_row(&self, scenario: &str, params: &str) -> String {
        let cap = self.cap.map_or("inf".to_string(), |m| m.to_string());
        format!(
            "{scenario},\"{params}\",{cap},{},{},{},{},{}\n",
            self.horizon, self.replicas, self.frequency, self.ci.0, self.ci.1
        )
    }
}

pub const SUMMARY_HEADER: &str = "scenario,params,m,horizon,replicas,frequency,ci_low,ci_high\n";

/// Survival frequency at `horizon` over independent replicas; replica r
/// uses the streams of `StreamKey::new(seed, r)`, so the result does not
/// depend on the number of worker threads.
pub fn estimate_survival(
    sim: &Simulator,
    eta0: &PopulationState,
    horizon: u64,
    replicas: u64,
    target: Option<usize>,
    cap: Option<u64>,
    seed: u64,
) -> Result<SurvivalEstimate> {
    if replicas == 0 {
        return Err(param_err("replicas", "must be at least 1"));
    }
    if cap == Some(0) {
        return Err(param_err("m", "cap must be at least 1"));
    }
    let outcomes: Vec<TrialOutcome> = (0..replicas)
        .into_par_iter()
        .map(|r| run_survival_trial(sim, eta0, horizon, target, cap, StreamKey::new(seed, r)))
        .collect();
    let alive = outcomes.iter().filter(|o| o.alive).count() as u64;
    let overflows = outcomes.iter().filter(|o| o.overflow).count() as u64;
    let alive_at_target = target.map(|_| outcomes.iter().filter(|o| o.alive_at_target(horizon)).count() as u64);
    Ok(SurvivalEstimate {
        horizon,
        cap,
        replicas,
        alive,
        frequency: alive as f64 / replicas as f64,
        ci: wilson_interval(alive, replicas),
        overflows,
        alive_at_target,
        outcomes,
    })
}

/// Per-generation mean and variance of η_n(x), n = 0..=generations.
#[derive(Debug, Clone)]
pub struct PopulationMoments {
    pub replicas: u64,
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
    /// Mean of N_n.
    pub mean_total_born: Vec<f64>,
    pub overflows: u64,
}

impl PopulationMoments {
    /// Standard error of the mean of η_n(x).
    pub fn std_error(&self, n: usize, x: usize) -> f64 {
        (self.variance[n][x] / self.replicas as f64).sqrt()
    }
}

/// Sample moments of the uncapped process over independent replicas.
/// Overflowed replicas are excluded and counted.
pub fn population_moments(
    sim: &Simulator,
    eta0: &PopulationState,
    generations: usize,
    replicas: u64,
    seed: u64,
) -> Result<PopulationMoments> {
    if replicas == 0 {
        return Err(param_err("replicas", "must be at least 1"));
    }
    let n = eta0.len();
    // integer accumulators keep the result independent of the reduction order
    let zero = || (vec![vec![0u128; n]; generations + 1], vec![vec![0u128; n]; generations + 1], vec![0u128; generations + 1], 0u64, 0u64);
    let (sum, sum_sq, born, used, overflows) = (0..replicas)
        .into_par_iter()
        .fold(zero, |mut acc, r| {
            let key = StreamKey::new(seed, r);
            let mut path = vec![eta0.clone()];
            for g in 0..generations {
                match sim.step(&path[g], key) {
                    Ok(s) => path.push(s),
                    Err(_) => {
                        acc.4 += 1;
                        return acc;
                    }
                }
            }
            for (g, s) in path.iter().enumerate() {
                for &x in s.occupied() {
                    let c = s.count(x) as u128;
                    acc.0[g][x] += c;
                    acc.1[g][x] += c * c;
                }
                acc.2[g] += s.total_born() as u128;
            }
            acc.3 += 1;
            acc
        })
        .reduce(zero, |mut a, b| {
            for g in 0..=generations {
                for x in 0..n {
                    a.0[g][x] += b.0[g][x];
                    a.1[g][x] += b.1[g][x];
                }
                a.2[g] += b.2[g];
            }
            a.3 += b.3;
            a.4 += b.4;
            a
        });
    let k = used.max(1) as f64;
    let mean: Vec<Vec<f64>> = sum.iter().map(|row| row.iter().map(|&s| s as f64 / k).collect()).collect();
    let variance = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, mu)| {
            sq.iter()
                .zip(mu)
                .map(|(&s, m)| if used > 1 { ((s as f64 - k * m * m) / (k - 1.0)).max(0.0) } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(PopulationMoments {
        replicas: used,
        mean,
        variance,
        mean_total_born: born.iter().map(|&b| b as f64 / k).collect(),
        overflows,
    })
}
