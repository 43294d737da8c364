//! Approximation studies: spatial exhaustions, truncation sweeps, the drift
//! exponent Q, Chebyshev population sizes and oriented percolation.

pub mod chebyshev;
pub mod drift;
pub mod experiments;
pub mod percolation;

pub use chebyshev::{chebyshev_k, gw_variance, second_moment_bound, variance_bound};
pub use drift::{
    ln_q_value, q_value, supercritical_region, DriftParams, DriftSelection, Rectangle, RegionPoint, SupercriticalRegion,
};
pub use experiments::{
    approximation_report, ball_exhaustion, spatial_experiment, truncation_sweep, ApproxReport, McOptions,
    ReportOptions, SpatialOptions, SpatialReport, SpatialRow, TruncationRow, TruncationSweep, SWEEP_HARD_CAP,
};
pub use percolation::{
    oriented_percolation, BaseGraph, PercolationConfig, PercolationOutcome, PercolationResult, PERCOLATION_HEADER,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::Verdict;
    use crate::model::{build_scenario, parse_params, IntDistribution, Params};
    use crate::simulate::PopulationState;

    #[test]
    fn q_identity_and_reference_value() {
        let d = DriftParams::new(1.2, 0.25, 0.25).unwrap();
        assert!((q_value(&d, 0.0, 0.25).unwrap() - 1.2).abs() < 1e-12);
        // 40-digit evaluation of the closed form
        assert!((q_value(&d, 0.05, 0.3).unwrap() - 1.191_290_676_897_201_5).abs() < 1e-12);
        assert!(q_value(&d, 0.3, 0.2).is_err());
        // degenerate exponent β = α
        let e = DriftParams::new(2.0, 0.5, 0.0).unwrap();
        assert!((q_value(&e, 0.5, 0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn region_and_selection() {
        let d = DriftParams::new(1.2, 0.25, 0.25).unwrap();
        let r = supercritical_region(&d, 100).unwrap();
        assert!(r.contains(0.0, 0.25));
        let s = r.selection.unwrap();
        assert!(s.d1 < s.d2 && s.q1 > 1.0 && s.q2 > 1.0);
        let sub = supercritical_region(&DriftParams::new(0.9, 0.25, 0.25).unwrap(), 50).unwrap();
        assert!(sub.is_empty() && sub.rectangle.is_none());
        assert!(supercritical_region(&DriftParams::new(1.5, 0.5, 0.0).unwrap(), 50).is_err());
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_k(4.0, 1.0, 0.1).unwrap(), 36);
        assert_eq!(chebyshev_k(0.0, 1.0, 0.1).unwrap(), 0);
        assert!(chebyshev_k(1.0, 0.5, 0.1).is_err());
        let rho = IntDistribution::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(variance_bound(&rho, 3).unwrap(), 4.0);
        assert_eq!(gw_variance(&rho, 1).unwrap(), 1.0);
        assert!(gw_variance(&rho, 3).unwrap() > variance_bound(&rho, 3).unwrap());
        assert_eq!(variance_bound(&IntDistribution::point(2), 5).unwrap(), 0.0);
    }

    #[test]
    fn percolation_extremes() {
        let mut cfg = PercolationConfig { graph: BaseGraph::ZWindow { radius: 5 }, p: 1.0, horizon: 30, origin: 5 };
        let full = oriented_percolation(&cfg, 20, 4).unwrap();
        assert_eq!(full.frequency, 1.0);
        assert!(full.outcomes.iter().all(|o| o.revisits == 30));
        cfg.p = 0.0;
        let none = oriented_percolation(&cfg, 20, 4).unwrap();
        assert!(none.outcomes.iter().all(|o| o.depth == 0 && o.revisits == 0 && !o.reached));
    }

    #[test]
    fn spatial_crossing_on_line_window() {
        let model = build_scenario("zd_translation", &parse_params(["radius=4"]).unwrap()).unwrap();
        let x0 = model.meta().origin;
        let ex = ball_exhaustion(&model, x0).unwrap();
        assert_eq!(ex.len(), 5);
        let rep = spatial_experiment(&model, &ex, x0, &SpatialOptions::default()).unwrap();
        assert_eq!(rep.full_verdict, Verdict::Survives);
        assert_eq!(rep.first_crossing, Some(1));
        assert!((rep.rows[1].local_growth - 1.5 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn sweep_is_dominated() {
        let model = build_scenario("zd_translation", &parse_params(["radius=3"]).unwrap()).unwrap();
        let x0 = model.index_of(model.meta().origin).unwrap();
        let eta0 = PopulationState::delta(model.len(), x0, 1).unwrap();
        let s = truncation_sweep(&model, &[1, 2, 5], &eta0, 40, 200, Some(x0), 3, 100_000).unwrap();
        assert!(s.dominated);
        assert_eq!(s.rows.len(), 4);
        assert!(truncation_sweep(&model, &[3, 2], &eta0, 5, 5, None, 0, 1000).is_err());
    }

    #[test]
    fn report_sections() {
        let opts = ReportOptions { caps: vec![1, 2], mc: McOptions { replicas: 50, horizon: 20, ..Default::default() }, ..Default::default() };
        let gw = approximation_report("gw", &Params::new(), &opts).unwrap();
        assert!(gw.section("spatial").is_none());
        assert!(gw.summary.contains("skipped"));
        let zd = approximation_report("zdrift", &parse_params(["radius=5"]).unwrap(), &opts).unwrap();
        assert!(zd.section("q_region").is_some() && zd.section("sweep").is_some());
        assert!(approximation_report("nope", &Params::new(), &opts).is_err());
    }
}
