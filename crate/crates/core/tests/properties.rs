//! Invariants of the generating-function, spectral and approximation layers
//! on randomly generated small models.

use proptest::prelude::*;

use brwlab::approx::{chebyshev_k, oriented_percolation, q_value, BaseGraph, DriftParams, PercolationConfig};
use brwlab::genfun::{eval_g, iterate_extinction, FieldVector, Target};
use brwlab::model::serialize::{model_hash, read_model, write_model};
use brwlab::model::{BrwModel, IntDistribution, OffspringConfig, OffspringLaw};

const N: usize = 4;

fn law_strategy() -> impl Strategy<Value = OffspringLaw> {
    let rho = prop::collection::vec(0.01f64..1.0, 1..5);
    let disp = prop::collection::vec(0.0f64..1.0, N + 1);
    (rho, disp).prop_map(|(rho, disp)| {
        let s: f64 = rho.iter().sum();
        let rho = IntDistribution::new(rho.iter().map(|p| p / s).collect()).unwrap();
        let total: f64 = disp.iter().sum::<f64>() + 1e-3;
        let pairs: Vec<(usize, f64)> = disp.iter().enumerate().map(|(y, &w)| (y, (w + 1e-3 / (N + 1) as f64) / total)).collect();
        // children placed on the extra vertex N leave the model
        OffspringLaw::product_form(rho, &pairs).unwrap().map_vertices(|v| (v < N).then_some(v))
    })
}

fn atom_law_strategy() -> impl Strategy<Value = OffspringLaw> {
    prop::collection::btree_map(prop::collection::vec(0u64..3, N), 0.05f64..1.0, 1..5).prop_map(|atoms| {
        let s: f64 = atoms.values().sum();
        let atoms = atoms
            .into_iter()
            .map(|(c, p)| (OffspringConfig::new(c.into_iter().enumerate()), p / s))
            .collect();
        OffspringLaw::from_atoms(atoms).unwrap()
    })
}

fn model_strategy() -> impl Strategy<Value = BrwModel> {
    prop_oneof![
        prop::collection::vec(law_strategy(), N),
        prop::collection::vec(atom_law_strategy(), N),
    ]
    .prop_map(|laws| BrwModel::from_laws(laws).unwrap())
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generating_map_is_monotone(model in model_strategy(), a in field(), b in field()) {
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let g_lo = eval_g(&model, &FieldVector::new(lo).unwrap());
        let g_hi = eval_g(&model, &FieldVector::new(hi).unwrap());
        prop_assert!(g_lo.le(&g_hi, 1e-12));
        for &v in g_hi.values() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn global_extinction_is_least_fixed_point(model in model_strategy(), z in field(), shift in 1e-3f64..0.2) {
        let r = iterate_extinction(&model, &Target::Global, 1e-13, 1_000_000).unwrap();
        prop_assume!(r.converged);
        prop_assert!(r.residual < 1e-9);
        // the orbit of 0 stays below the orbit of any z, and below q̄
        let mut lo = FieldVector::zeros(N);
        let mut w = FieldVector::new(z.clone()).unwrap();
        for _ in 0..50 {
            lo = eval_g(&model, &lo);
            w = eval_g(&model, &w);
            prop_assert!(lo.le(&w, 1e-12) && lo.le(&r.q, 1e-9));
        }
        // a point below q̄ somewhere is never a supersolution G(v) ≤ v
        let v: Vec<f64> = r.q.values().iter().zip(&z).map(|(q, u)| (q - shift * u).max(0.0)).collect();
        prop_assume!(v.iter().zip(r.q.values()).any(|(a, q)| *a < q - 1e-6));
        let v = FieldVector::new(v).unwrap();
        let gv = eval_g(&model, &v);
        prop_assert!(!gv.le(&v, -1e-13), "G(v) {:?} ≤ v {:?} below q̄ {:?}", gv.values(), v.values(), r.q.values());
    }

    #[test]
    fn set_extinction_is_monotone_in_the_set(model in model_strategy(), y in 0..N, extra in 0..N) {
        let global = iterate_extinction(&model, &Target::Global, 1e-12, 1_000_000).unwrap();
        let small = iterate_extinction(&model, &Target::Set(vec![y]), 1e-12, 1_000_000).unwrap();
        let mut set = vec![y, extra];
        set.sort_unstable();
        set.dedup();
        let big = iterate_extinction(&model, &Target::Set(set), 1e-12, 1_000_000).unwrap();
        prop_assume!(global.converged && small.converged && big.converged);
        prop_assert!(big.q.le(&small.q, 1e-7));
        prop_assert!(global.q.le(&big.q, 1e-7));
    }

    #[test]
    fn drift_exponent_at_the_mean_step_is_the_growth(rho in 1.0f64..4.0, p in 0.01f64..0.9, frac in 0.0f64..0.98) {
        let q = (1.0 - p) * frac;
        let d = DriftParams::new(rho, p, q).unwrap();
        let v = q_value(&d, p - q, p).unwrap();
        prop_assert!((v - rho).abs() < 1e-10 * rho);
    }

    #[test]
    fn drift_exponent_never_exceeds_growth(rho in 1.0f64..4.0, p in 0.05f64..0.5, q in 0.05f64..0.45, a in -1.0f64..1.0, b in 0.0f64..1.0) {
        let d = DriftParams::new(rho, p, q).unwrap();
        if let Ok(v) = q_value(&d, a, b) {
            prop_assert!(v <= rho * (1.0 + 1e-12));
        }
    }

    #[test]
    fn chebyshev_k_is_minimal(sigma2 in 0.0f64..1e4, d in 1.0f64..20.0, eps in 1e-4f64..0.999) {
        let k = chebyshev_k(sigma2, d, eps).unwrap();
        let bound = |k: u64| sigma2 / (d * d * k as f64 + sigma2);
        if sigma2 > 0.0 {
            prop_assert!(bound(k) <= eps);
            if k > 0 {
                prop_assert!(bound(k - 1) > eps);
            }
        } else {
            prop_assert_eq!(k, 0);
        }
    }

    #[test]
    fn serialization_roundtrip(model in model_strategy()) {
        let text = write_model(&model);
        let back = read_model(&text).unwrap();
        prop_assert_eq!(write_model(&back), text);
        prop_assert_eq!(model_hash(&back), model_hash(&model));
        let z = FieldVector::constant(N, 0.37).unwrap();
        let (a, b) = (eval_g(&model, &z), eval_g(&back, &z));
        prop_assert!(a.sup_distance(&b) < 1e-12);
    }

    #[test]
    fn percolation_is_monotone_in_p(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0, seed in 0u64..1000) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let cfg = |p| PercolationConfig { graph: BaseGraph::ZWindow { radius: 4 }, p, horizon: 25, origin: 4 };
        let a = oriented_percolation(&cfg(lo), 40, seed).unwrap();
        let b = oriented_percolation(&cfg(hi), 40, seed).unwrap();
        for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
            prop_assert!(!x.reached || y.reached);
            prop_assert!(x.depth <= y.depth);
            prop_assert!(x.revisits <= y.revisits);
        }
    }

    #[test]
    fn sparse_law_matches_dense_view(masses in prop::collection::vec(0.0f64..1.0, 1..12), keep in 0.0f64..1.0) {
        let s: f64 = masses.iter().sum();
        prop_assume!(s > 0.0);
        let d = IntDistribution::new(masses.iter().map(|p| p / s).collect()).unwrap();
        let dense = d.dense();
        let mean: f64 = dense.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        prop_assert!((d.mean() - mean).abs() < 1e-12);
        for n in 0..dense.len() + 1 {
            let tail: f64 = dense.iter().skip(n).sum();
            prop_assert!((d.tail(n) - tail.min(1.0)).abs() < 1e-12);
        }
        let t = d.thinned(keep);
        prop_assert!((t.mean() - keep * d.mean()).abs() < 1e-10);
        prop_assert!(d.dominates(&t, 1e-12));
    }
}
