//! The generating function G, extinction fixed points and survival
//! classification.

pub mod classify;
pub mod conditions;
pub mod extinction;
pub mod field;
pub mod sweep;

pub use classify::{
    classify_survival, strong_local_compare, ClassifyOptions, LadderRung, StrongLocal, StrongLocalResult, SurvivalReport,
    Verdict, MEAN_CONDITION_FLAG,
};
pub use conditions::{
    check_mean_condition, check_subsolution, mean_condition_search, EqualityCase, MeanConditionSearch,
    MeanConditionVerdict, SubsolutionVerdict,
};
pub use extinction::{iterate_extinction, ExtinctionResult, Target};
pub use field::{eval_g, eval_g_geometric, FieldVector};
pub use sweep::{lambda_sweep, RateMatrix, SweepOptions, SweepResult, SweepRow, Threshold};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, parse_params, BrwModel, IntDistribution, OffspringLaw};
    use crate::spectral::moment_matrix;

    fn gw(pairs: &[(usize, f64)]) -> BrwModel {
        let rho = IntDistribution::from_pairs(pairs).unwrap();
        BrwModel::from_laws(vec![OffspringLaw::product_form(rho, &[(0, 1.0)]).unwrap()]).unwrap()
    }

    #[test]
    fn g_at_corners() {
        let m = gw(&[(0, 0.4), (2, 0.6)]);
        assert!((eval_g(&m, &FieldVector::ones(1))[0] - 1.0).abs() < 1e-15);
        assert!((eval_g(&m, &FieldVector::zeros(1))[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn quadratic_gw_fixed_point() {
        let m = gw(&[(0, 0.4), (2, 0.6)]);
        let r = iterate_extinction(&m, &Target::Global, 1e-13, 100_000).unwrap();
        assert!(r.converged);
        assert!((r.q[0] - 2.0 / 3.0).abs() < 1e-10, "{}", r.q[0]);
    }

    #[test]
    fn subcritical_gw_dies() {
        let rho = IntDistribution::geometric(0.9).unwrap();
        let m = BrwModel::from_laws(vec![OffspringLaw::product_form(rho, &[(0, 1.0)]).unwrap()]).unwrap();
        let r = iterate_extinction(&m, &Target::Global, 1e-12, 100_000).unwrap();
        assert!((r.q[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn geometric_closed_form_matches() {
        let m = build_scenario("tree_counterpart", &parse_params(["degree=3", "depth=3", "lambda=0.4"]).unwrap()).unwrap();
        let mm = moment_matrix(&m);
        let z = FieldVector::new((0..m.len()).map(|i| (i as f64 * 0.37).fract()).collect()).unwrap();
        let a = eval_g(&m, &z);
        let b = eval_g_geometric(&mm, &z);
        assert!(a.sup_distance(&b) < 1e-10, "{}", a.sup_distance(&b));
    }

    #[test]
    fn set_extinction_on_a_periodic_pair() {
        // two sites swapping children: A = {0} is empty every other generation
        let rho = IntDistribution::from_pairs(&[(0, 0.2), (2, 0.8)]).unwrap();
        let laws = vec![
            OffspringLaw::product_form(rho.clone(), &[(1, 1.0)]).unwrap(),
            OffspringLaw::product_form(rho, &[(0, 1.0)]).unwrap(),
        ];
        let m = BrwModel::from_laws(laws).unwrap();
        let global = iterate_extinction(&m, &Target::Global, 1e-13, 100_000).unwrap();
        let local = iterate_extinction(&m, &Target::Set(vec![0]), 1e-13, 100_000).unwrap();
        assert!(local.converged);
        assert!((global.q[0] - 0.25).abs() < 1e-10);
        assert!(local.q.sup_distance(&global.q) < 1e-9);
        let empty = iterate_extinction(&m, &Target::Set(vec![]), 1e-13, 100).unwrap();
        assert_eq!(empty.q.values(), &[1.0, 1.0]);
    }

    #[test]
    fn transient_set_has_local_extinction() {
        // 0 sends its children to 1, which keeps them; 0 is never revisited
        let laws = vec![
            OffspringLaw::product_form(IntDistribution::point(2), &[(1, 1.0)]).unwrap(),
            OffspringLaw::product_form(IntDistribution::from_pairs(&[(0, 0.25), (2, 0.75)]).unwrap(), &[(1, 1.0)]).unwrap(),
        ];
        let m = BrwModel::from_laws(laws).unwrap();
        let local = iterate_extinction(&m, &Target::Set(vec![0]), 1e-13, 1000).unwrap();
        assert_eq!(local.q.values(), &[1.0, 1.0]);
        let global = iterate_extinction(&m, &Target::Global, 1e-13, 1000).unwrap();
        assert!((global.q[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn subsolution_checks() {
        let m = gw(&[(0, 0.4), (2, 0.6)]);
        assert!(!check_subsolution(&m, &FieldVector::ones(1), 0, true).passes);
        assert!(check_subsolution(&m, &FieldVector::constant(1, 2.0 / 3.0).unwrap(), 0, true).passes);
        assert!(!check_subsolution(&m, &FieldVector::constant(1, 0.5).unwrap(), 0, true).passes);
    }

    #[test]
    fn mean_condition_checks() {
        let m = gw(&[(0, 0.5), (4, 0.5)]);
        let mm = moment_matrix(&m);
        assert!(!check_mean_condition(&mm, &FieldVector::zeros(1), 0, None).passes);
        let v = check_mean_condition(&mm, &FieldVector::constant(1, 0.5).unwrap(), 0, Some(&m));
        assert!(v.passes);
        assert!(v.equality.unwrap()[0].consistent());
    }

    #[test]
    fn noext_truncation_admits_no_mean_vector() {
        let m = build_scenario("line_noext", &parse_params(["size=4"]).unwrap()).unwrap();
        let s = mean_condition_search(&moment_matrix(&m), 0, 4, 1_000_000).unwrap();
        assert!(s.found.is_none());
        assert_eq!(s.tested, 4 * 125);
    }

    #[test]
    fn classify_gw() {
        let m = build_scenario("gw", &parse_params(["mean=2"]).unwrap()).unwrap();
        let r = classify_survival(&m, 0, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.local, Verdict::Survives);
        assert_eq!(r.global, Verdict::Survives);
        assert!((r.q_bar.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn classify_noext_flags_mean_condition() {
        let m = build_scenario("line_noext", &parse_params(["size=8"]).unwrap()).unwrap();
        let r = classify_survival(&m, 0, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.global, Verdict::DiesOnEveryTruncation, "{}", r.to_text());
        assert!(r.flags.iter().any(|f| f == MEAN_CONDITION_FLAG), "{}", r.to_text());
    }

    #[test]
    fn tree_counterpart_survives_globally_only() {
        let m = build_scenario("tree_counterpart", &parse_params(["degree=4", "depth=6", "mean=1.1"]).unwrap()).unwrap();
        let r = classify_survival(&m, 0, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.global, Verdict::Survives, "{}", r.to_text());
        assert_eq!(r.local, Verdict::Dies, "{}", r.to_text());
    }

    #[test]
    fn strong_local_on_single_site() {
        let m = gw(&[(0, 0.4), (2, 0.6)]);
        let s = strong_local_compare(&m, 0, 0, 1e-6).unwrap();
        assert_eq!(s.verdict, StrongLocal::Yes);
        let sub = gw(&[(0, 0.6), (2, 0.4)]);
        assert_eq!(strong_local_compare(&sub, 0, 0, 1e-6).unwrap().verdict, StrongLocal::No);
    }

    #[test]
    fn single_site_sweep() {
        let rates = RateMatrix::new(vec![vec![(0, 1.0)]], vec![0.0]).unwrap();
        let opts = SweepOptions { lo: 0.25, hi: 4.0, points: 9, width: 1e-5, ..SweepOptions::default() };
        let r = lambda_sweep(&rates, 0, None, &opts).unwrap();
        assert!((r.lambda_w.estimate() - 1.0).abs() < 1e-4, "{:?}", r.lambda_w);
        assert!((r.lambda_s.estimate() - 1.0).abs() < 1e-4, "{:?}", r.lambda_s);
        assert!((r.table[0].q_bar.unwrap() - 1.0).abs() < 1e-10);
    }
}
