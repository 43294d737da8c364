//! Exact-law and capped simulation of branching random walks.

pub mod rng;
pub mod sampler;
pub mod state;
pub mod trial;

pub use rng::{mix, splitmix64, unit_f64, StreamKey, StreamRng};
pub use sampler::{ModelSampler, TwoStageSampler};
pub use state::{Coupling, Overflow, PopulationState, Simulator, DEFAULT_HARD_CAP};
pub use trial::{
    estimate_survival, population_moments, run_survival_trial, wilson_interval, PopulationMoments, SurvivalEstimate,
    TrialOutcome, LOCAL_WINDOW, SUMMARY_HEADER,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrwModel, IntDistribution, OffspringConfig, OffspringLaw};

    fn doubling() -> BrwModel {
        BrwModel::from_laws(vec![OffspringLaw::from_atoms(vec![(OffspringConfig::single(0, 2), 1.0)]).unwrap()]).unwrap()
    }

    #[test]
    fn deterministic_doubling_and_contact_cap() {
        let sim = Simulator::new(&doubling()).unwrap();
        let s0 = PopulationState::delta(1, 0, 1).unwrap();
        let key = StreamKey::new(1, 0);
        let s1 = sim.step(&s0, key).unwrap();
        assert_eq!(s1.count(0), 2);
        assert_eq!(s1.total_born(), 3);
        let c1 = sim.step_truncated(&s0, Some(1), key).unwrap();
        assert_eq!(c1.count(0), 1);
        let o = run_survival_trial(&sim, &s0, 20, Some(0), Some(1), key);
        assert!(o.alive);
        assert_eq!(o.visits, 21);
    }

    #[test]
    fn empty_law_goes_extinct() {
        let m = BrwModel::from_laws(vec![OffspringLaw::from_atoms(vec![(OffspringConfig::empty(), 1.0)]).unwrap()]).unwrap();
        let sim = Simulator::new(&m).unwrap();
        let s = sim.step(&PopulationState::delta(1, 0, 5).unwrap(), StreamKey::new(0, 0)).unwrap();
        assert!(s.is_extinct());
    }

    #[test]
    fn overflow_is_reported() {
        let sim = Simulator::new(&doubling()).unwrap().with_hard_cap(1000);
        let o = run_survival_trial(&sim, &PopulationState::delta(1, 0, 1).unwrap(), 100, None, None, StreamKey::new(3, 0));
        assert!(o.overflow && o.alive);
        assert_eq!(o.generations, 10);
    }

    #[test]
    fn trials_are_reproducible() {
        let rho = IntDistribution::from_pairs(&[(0, 0.4), (2, 0.6)]).unwrap();
        let m = BrwModel::from_laws(vec![OffspringLaw::product_form(rho, &[(0, 1.0)]).unwrap()]).unwrap();
        let sim = Simulator::new(&m).unwrap();
        let eta = PopulationState::delta(1, 0, 1).unwrap();
        let a = estimate_survival(&sim, &eta, 50, 200, Some(0), None, 9).unwrap();
        let b = estimate_survival(&sim, &eta, 50, 200, Some(0), None, 9).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        let h0 = estimate_survival(&sim, &eta, 0, 10, None, None, 9).unwrap();
        assert_eq!(h0.frequency, 1.0);
    }

    #[test]
    fn identity_coupling_keeps_states_equal() {
        let rho = IntDistribution::from_pairs(&[(0, 0.3), (1, 0.2), (3, 0.5)]).unwrap();
        let laws = vec![
            OffspringLaw::product_form(rho.clone(), &[(0, 0.5), (1, 0.5)]).unwrap(),
            OffspringLaw::product_form(rho, &[(0, 0.5), (1, 0.5)]).unwrap(),
        ];
        let sim = Simulator::new(&BrwModel::from_laws(laws).unwrap()).unwrap();
        let mut up = PopulationState::delta(2, 0, 3).unwrap();
        let mut low = up.clone();
        let key = StreamKey::new(5, 2);
        for _ in 0..15 {
            let plain = sim.step_truncated(&up, Some(4), key).unwrap();
            let (u, l) = sim.step_coupled(&up, &low, Some(4), Some(4), &Coupling::Identity, key).unwrap();
            assert_eq!(u, plain);
            assert_eq!(u.counts(), l.counts());
            up = u;
            low = l;
        }
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }
}
