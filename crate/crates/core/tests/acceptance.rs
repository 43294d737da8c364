//! Acceptance suite: one line per criterion, nonzero exit status if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use brwlab::approx::{
    chebyshev_k, oriented_percolation, q_value, supercritical_region, truncation_sweep, BaseGraph, DriftParams,
    PercolationConfig,
};
use brwlab::genfun::{
    check_subsolution, classify_survival, iterate_extinction, lambda_sweep, ClassifyOptions, FieldVector, RateMatrix,
    SweepOptions, Target, Verdict,
};
use brwlab::model::brw::zwindow_id;
use brwlab::model::scenario::{
    counterpart_model, summable_failure_probability, summable_failure_subsolution, noext_partial_solution, noext_sequence, radial_tree_rates,
    TreeBall,
};
use brwlab::model::{build_scenario, parse_params, BrwModel, IntDistribution, ModelMeta, OffspringLaw, Projection};
use brwlab::simulate::{
    estimate_survival, population_moments, Coupling, PopulationState, Simulator, StreamKey,
};
use brwlab::spectral::{
    expected_population, first_return_series, global_growth_rate, green_series, local_growth_rate, moment_matrix,
    seneta_sequence, MomentMatrix,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn scenario(name: &str, params: &[&str]) -> Result<BrwModel, String> {
    build_scenario(name, &parse_params(params.iter().copied()).map_err(err)?).map_err(err)
}

fn counterpart_fixed_point() -> Check {
    let mut worst: f64 = 0.0;
    for lk in [1.5, 2.0, 4.0] {
        // single site with k = 1, and a 7-cycle with k = 2
        let single = counterpart_model(lk, &[vec![(0, 1.0)]], &[0.0], ModelMeta::default()).map_err(err)?;
        let rows: Vec<Vec<(usize, f64)>> = (0..7).map(|i| vec![((i + 1) % 7, 1.0), ((i + 6) % 7, 1.0)]).collect();
        let ring = counterpart_model(lk / 2.0, &rows, &[0.0; 7], ModelMeta::default()).map_err(err)?;
        for m in [&single, &ring] {
            let r = iterate_extinction(m, &Target::Global, 1e-14, 1_000_000).map_err(err)?;
            ensure(r.converged, format!("λk={lk}: not converged"))?;
            for &q in r.q.values() {
                worst = worst.max((q - 1.0 / lk).abs());
            }
        }
    }
    ensure(worst < 1e-8, format!("max |q̄ − 1/(λk)| = {worst:e}"))?;
    Ok(format!("max |q̄ − 1/(λk)| = {worst:.1e}"))
}

fn gw_quadratic() -> Check {
    let m = scenario("gw", &["rho=0:0.4,2:0.6"])?;
    let r = iterate_extinction(&m, &Target::Global, 1e-14, 1_000_000).map_err(err)?;
    let q = r.q[0];
    ensure((q - 2.0 / 3.0).abs() < 1e-8, format!("q̄ = {q}"))?;
    // extinction from 10^4 particles has probability (2/3)^10^4, so stopping a
    // trial there and counting it alive does not bias the frequency
    let sim = Simulator::new(&m).map_err(err)?.with_hard_cap(10_000);
    let eta = PopulationState::delta(1, 0, 1).map_err(err)?;
    let est = estimate_survival(&sim, &eta, 500, 10_000, None, None, 2024).map_err(err)?;
    ensure(est.ci.0 <= 1.0 / 3.0 && 1.0 / 3.0 <= est.ci.1, format!("frequency {} with CI {:?}", est.frequency, est.ci))?;
    Ok(format!("q̄ = {q:.10}, survival {:.4} CI [{:.4}, {:.4}]", est.frequency, est.ci.0, est.ci.1))
}

fn perron_root(m: &MomentMatrix) -> f64 {
    let n = m.dim();
    let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    dense.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn perron_cross_check() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let (mut compared, mut skipped) = (0, 0);
    for trial in 0..100 {
        let laws: Vec<OffspringLaw> = (0..5)
            .map(|_| {
                let probs: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let s: f64 = probs.iter().sum();
                let rho = IntDistribution::new(probs.iter().map(|p| p / s).collect())?;
                let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>() + 0.05).collect();
                let ws: f64 = w.iter().sum();
                let disp: Vec<(usize, f64)> = w.iter().enumerate().map(|(y, &v)| (y, v / ws)).collect();
                OffspringLaw::product_form(rho, &disp)
            })
            .collect::<brwlab::Result<_>>()
            .map_err(err)?;
        let model = BrwModel::from_laws(laws).map_err(err)?;
        let root = perron_root(&moment_matrix(&model));
        if (root - 1.0).abs() <= 1e-3 {
            skipped += 1;
            continue;
        }
        let r = classify_survival(&model, 0, &ClassifyOptions::default()).map_err(err)?;
        let expected = if root > 1.0 { Verdict::Survives } else { Verdict::Dies };
        ensure(r.local == expected, format!("model {trial}: root {root}, local verdict {}", r.local))?;
        compared += 1;
    }
    Ok(format!("{compared} of {compared} verdicts agree ({skipped} within 1e-3 of 1 skipped)"))
}

fn mean_propagation() -> Check {
    let m = scenario("zd_translation", &["mean=1.5"])?;
    let x0 = m.index_of(m.meta().origin).map_err(err)?;
    let sim = Simulator::new(&m).map_err(err)?;
    let eta = PopulationState::delta(m.len(), x0, 1).map_err(err)?;
    let mom = population_moments(&sim, &eta, 8, 100_000, 77).map_err(err)?;
    ensure(mom.overflows == 0, "unexpected overflow")?;
    let mm = moment_matrix(&m);
    let mut start = vec![0.0; m.len()];
    start[x0] = 1.0;
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let exact = expected_population(&mm, &start, n)[x0];
        let z = (mom.mean[n][x0] - exact) / mom.std_error(n, x0).max(1e-12);
        worst = worst.max(z.abs());
        ensure(z.abs() <= 4.0, format!("n={n}: MC {} vs exact {exact}, z = {z:.2}", mom.mean[n][x0]))?;
    }
    Ok(format!("max |z| = {worst:.2} over n = 1..8"))
}

fn coupling_domination() -> Check {
    let m = scenario("zd_translation", &["mean=1.5", "radius=10"])?;
    let x0 = m.index_of(m.meta().origin).map_err(err)?;
    let sim = Simulator::new(&m).map_err(err)?.with_hard_cap(20_000);
    let inner: Vec<usize> = (-3i64..=3).map(|i| zwindow_id(&[i], 10).unwrap() as usize).collect();
    let restrict = Coupling::restriction(m.len(), &inner);
    let kinds: [(Option<u64>, Option<u64>, &Coupling); 4] = [
        (None, Some(1), &Coupling::Identity),
        (None, Some(5), &Coupling::Identity),
        (None, Some(5), &restrict),
        (Some(5), Some(1), &restrict),
    ];
    let results: Vec<Result<u64, String>> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let (mcap, kcap, coupling) = kinds[(r % 4) as usize];
            let key = StreamKey::new(55, r);
            let mut up = PopulationState::delta(m.len(), x0, 1).unwrap();
            let mut low = up.clone();
            let mut steps = 0;
            for _ in 0..30 {
                match catch_unwind(AssertUnwindSafe(|| sim.step_coupled(&up, &low, mcap, kcap, coupling, key))) {
                    Err(_) => return Err(format!("replica {r}: domination assertion fired")),
                    Ok(Err(_)) => break,
                    Ok(Ok((u, l))) => {
                        if !l.le(&u) {
                            return Err(format!("replica {r}: lower exceeds upper"));
                        }
                        up = u;
                        low = l;
                        steps += 1;
                    }
                }
                if up.is_extinct() {
                    break;
                }
            }
            Ok(steps)
        })
        .collect();
    let mut steps = 0;
    for r in results {
        steps += r?;
    }
    Ok(format!("10000 coupled trajectories, {steps} coupled steps, 0 violations"))
}

fn seneta_convergence() -> Check {
    let m = scenario("zd_translation", &["mean=1.5", "radius=30"])?;
    let origin = m.meta().origin;
    let windows: Vec<Vec<u64>> =
        (1..=30i64).map(|r| (-r..=r).map(|i| zwindow_id(&[i], 30).unwrap()).collect()).collect();
    let est = seneta_sequence(&m, &windows, origin, 4000).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut prev = 0.0;
    for (r, e) in (1..=30usize).zip(&est) {
        let size = 2 * r + 1;
        let t = DMatrix::from_fn(size, size, |i, j| if i.abs_diff(j) == 1 { 0.75 } else { 0.0 });
        let eig = SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::MIN, f64::max);
        let closed = 1.5 * (std::f64::consts::PI / (2 * r + 2) as f64).cos();
        ensure((eig - closed).abs() < 1e-10, format!("radius {r}: eigen oracle {eig} vs closed form {closed}"))?;
        let dev = (e.value - eig).abs();
        worst = worst.max(dev);
        ensure(dev < 1e-4, format!("radius {r}: growth {} vs {eig}", e.value))?;
        ensure(e.value >= prev - 1e-12, format!("radius {r}: growth decreased"))?;
        prev = e.value;
    }
    Ok(format!("max deviation {worst:.1e} over radii 1..30, monotone"))
}

fn noext_ladder() -> Check {
    let mut prev = 0.0;
    let mut parts = Vec::new();
    for k in [4usize, 8, 16, 32] {
        let size = (k + 1).to_string();
        let m = scenario("line_noext", &[&format!("size={size}")])?;
        let g = global_growth_rate(&moment_matrix(&m), 0, 2000).map_err(err)?;
        ensure((g.value - 2.0).abs() <= 0.1, format!("K={k}: global growth {}", g.value))?;
        let q = iterate_extinction(&m, &Target::Global, 1e-14, 1_000_000).map_err(err)?.q[0];
        ensure(q >= prev - 1e-12, format!("K={k}: q̄ decreased to {q}"))?;
        ensure(q > 0.99, format!("K={k}: q̄ = {q}"))?;
        let ns = noext_sequence(k + 1).map_err(err)?;
        let partial = noext_partial_solution(&ns)[0];
        parts.push(format!("K={k}: growth {:.3}, q̄ {q:.6}, partial {partial:.6}", g.value));
        prev = q;
    }
    Ok(parts.join("; "))
}

fn summable_failure_subsolution_check() -> Check {
    let m = scenario("line_ex45", &["size=64"])?;
    let z = FieldVector::new(summable_failure_subsolution(2.0, 64)).map_err(err)?;
    let v = check_subsolution(&m, &z, 0, true);
    ensure(v.passes && v.max_violation <= 1e-10, format!("violation {:e} at {:?}", v.max_violation, v.worst_vertex))?;
    ensure(v.below_one_at_x0, "z(0) is not below one")?;
    let sim = Simulator::new(&m).map_err(err)?;
    let eta = PopulationState::delta(m.len(), 0, 1).map_err(err)?;
    let est = estimate_survival(&sim, &eta, 60, 2000, None, None, 45).map_err(err)?;
    ensure(est.ci.0 > 0.0, format!("survival frequency {} with CI {:?}", est.frequency, est.ci))?;
    let straight: f64 = (0..60).map(|i| summable_failure_probability(2.0, i)).product();
    Ok(format!(
        "violation {:.1e}; survival to 60: {:.3} CI [{:.3}, {:.3}] (straight path alone {straight:.3})",
        v.max_violation, est.frequency, est.ci.0, est.ci.1
    ))
}

fn green_identity() -> Check {
    let mut rng = StdRng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dense: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..6).map(|_| if rng.random::<f64>() < 0.6 { rng.random::<f64>() * 2.0 } else { 0.0 }).collect())
            .collect();
        let m = MomentMatrix::from_dense(&dense).map_err(err)?;
        if m.max_row_sum() == 0.0 {
            continue;
        }
        let lambda = 0.5 / m.max_row_sum();
        for x in 0..6 {
            let phi = first_return_series(&m, x, lambda, 10_000).map_err(err)?;
            let gamma = green_series(&m, x, lambda, 10_000).map_err(err)?;
            worst = worst.max((gamma * (1.0 - phi) - 1.0).abs());
        }
    }
    ensure(worst < 1e-8, format!("max |Γ(1−Φ) − 1| = {worst:e}"))?;
    Ok(format!("max |Γ(1−Φ) − 1| = {worst:.1e}"))
}

fn q_identity_and_selection() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..10 {
        for j in 0..10 {
            let p = 0.05 + 0.04 * i as f64;
            let q = 0.03 + 0.05 * j as f64;
            let rho = 0.5 + 0.37 * ((i * 10 + j) % 7) as f64;
            let d = DriftParams::new(rho, p, q).map_err(err)?;
            worst = worst.max((q_value(&d, p - q, p).map_err(err)? - rho).abs());
            count += 1;
        }
    }
    ensure(worst < 1e-12, format!("max |Q(p−q,p) − ρ̄| = {worst:e}"))?;
    let mut selections = 0;
    for rho in [1.051, 1.1, 1.5, 3.0] {
        for p in [0.1, 0.2, 0.3, 0.5, 0.7, 0.8] {
            for q in [0.1, 0.2, 0.3, 0.5, 0.7, 0.8] {
                if 1.0 - p - q < 0.1 - 1e-12 {
                    continue;
                }
                let d = DriftParams::new(rho, p, q).map_err(err)?;
                let region = supercritical_region(&d, 100).map_err(|e| format!("ρ̄={rho} p={p} q={q}: {e}"))?;
                let (r, s) = (region.rectangle.unwrap(), region.selection.unwrap());
                let n = s.n as f64;
                let ok = r.alpha1 < r.alpha2
                    && r.alpha2 <= r.beta1
                    && r.beta1 < r.beta2
                    && r.alpha1 * n <= s.d1 as f64
                    && s.d1 < s.d2
                    && s.d2 as f64 <= r.alpha2 * n
                    && r.beta1 * n <= s.d3 as f64
                    && s.d3 as f64 <= r.beta2 * n
                    && s.d3 != s.d1
                    && s.d3 != s.d2
                    && q_value(&d, s.d1 as f64 / n, s.d3 as f64 / n).map_err(err)? > 1.0
                    && q_value(&d, s.d2 as f64 / n, s.d3 as f64 / n).map_err(err)? > 1.0;
                ensure(ok, format!("ρ̄={rho} p={p} q={q}: invalid selection {s:?} in {r:?}"))?;
                selections += 1;
            }
        }
    }
    Ok(format!("identity error {worst:.1e} on {count} points; {selections} valid (d1,d2,d3,N) selections"))
}

fn truncation_sweep_check() -> Check {
    let m = scenario("zd_translation", &["mean=1.5"])?;
    let x0 = m.index_of(m.meta().origin).map_err(err)?;
    let eta = PopulationState::delta(m.len(), x0, 1).map_err(err)?;
    let caps = [1, 2, 4, 8, 16, 32];
    // a population of 10^5 on this window dies out with negligible probability
    let s = truncation_sweep(&m, &caps, &eta, 200, 2000, Some(x0), 2011, 100_000).map_err(err)?;
    ensure(s.dominated, "shared-stream domination violated")?;
    for w in s.rows.windows(2) {
        let (a, b) = (&w[0].estimate, &w[1].estimate);
        ensure(a.frequency <= b.frequency || a.ci.0 <= b.ci.1, format!("frequency drops from {} to {}", a.frequency, b.frequency))?;
    }
    let m32 = &s.row(Some(32)).unwrap().estimate;
    let inf = &s.row(None).unwrap().estimate;
    ensure(inf.ci.0 <= m32.frequency && m32.frequency <= inf.ci.1, format!("m=32 {} outside baseline CI {:?}", m32.frequency, inf.ci))?;
    let freqs: Vec<String> = s
        .rows
        .iter()
        .map(|r| format!("{}:{:.3}", r.cap.map_or("inf".into(), |c| c.to_string()), r.estimate.frequency))
        .collect();
    Ok(freqs.join(" "))
}

fn tree_lambda_sweep() -> Check {
    // the radial lumping is exact for quantities seen from the root: check it
    // against the full ball first
    let ball = TreeBall::new(4, 8).map_err(err)?;
    let (rows, outside) = ball.unit_rates();
    let (rrows, routside) = radial_tree_rates(4, 8).map_err(err)?;
    for lambda in [0.2, 0.3] {
        let full = counterpart_model(lambda, &rows, &outside, ModelMeta::default()).map_err(err)?;
        let lumped = counterpart_model(lambda, &rrows, &routside, ModelMeta::default()).map_err(err)?;
        let a = local_growth_rate(&moment_matrix(&full), 0, 2000).map_err(err)?.value;
        let b = local_growth_rate(&moment_matrix(&lumped), 0, 2000).map_err(err)?.value;
        ensure((a - b).abs() < 1e-9, format!("λ={lambda}: ball {a} vs radial {b}"))?;
    }
    let depth = 400;
    let (rows, outside) = radial_tree_rates(4, depth).map_err(err)?;
    let n = rows.len();
    let rates = RateMatrix::new(rows, outside).map_err(err)?;
    let opts = SweepOptions { lo: 0.1, hi: 1.0, points: 10, width: 1e-4, ..SweepOptions::default() };
    let r = lambda_sweep(&rates, 0, Some(&Projection::singleton(n)), &opts).map_err(err)?;
    let (ls, lw) = (r.lambda_s.estimate(), r.lambda_w.estimate());
    let s_exact = 1.0 / (2.0 * 3f64.sqrt());
    ensure((ls - s_exact).abs() <= 0.01, format!("λ_s = {ls}"))?;
    ensure((lw - 0.25).abs() <= 0.01, format!("λ_w = {lw}"))?;
    Ok(format!("depth {depth}: λ_s = {ls:.4} (exact {s_exact:.4}), λ_w = {lw:.4} (exact 0.25)"))
}

fn percolation_sanity() -> Check {
    let cfg = |p| PercolationConfig { graph: BaseGraph::ZWindow { radius: 50 }, p, horizon: 200, origin: 50 };
    let one = oriented_percolation(&cfg(1.0), 200, 13).map_err(err)?;
    ensure(one.outcomes.iter().all(|o| o.reached && o.revisits == 200), "p=1 is not exact")?;
    let zero = oriented_percolation(&cfg(0.0), 200, 13).map_err(err)?;
    ensure(zero.outcomes.iter().all(|o| !o.reached && o.depth == 0 && o.revisits == 0), "p=0 is not exact")?;
    let ps = [0.3, 0.45, 0.55, 0.6, 0.7, 0.9];
    let runs: Vec<_> = ps.iter().map(|&p| oriented_percolation(&cfg(p), 1000, 13)).collect::<brwlab::Result<_>>().map_err(err)?;
    for w in runs.windows(2) {
        let pairwise = w[0].outcomes.iter().zip(&w[1].outcomes).all(|(a, b)| (!a.reached || b.reached) && a.depth <= b.depth);
        ensure(pairwise, format!("not monotone between p={} and p={}", w[0].p, w[1].p))?;
    }
    let f: Vec<String> = runs.iter().map(|r| format!("{}:{:.3}", r.p, r.frequency)).collect();
    Ok(format!("exact at p=0,1; monotone per replica; {}", f.join(" ")))
}

fn chebyshev_minimality() -> Check {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..1000 {
        let sigma2 = rng.random::<f64>() * 100.0;
        let d = 1.0 + rng.random::<f64>() * 9.0;
        let eps = 1e-4 + rng.random::<f64>() * 0.9;
        let k = chebyshev_k(sigma2, d, eps).map_err(err)?;
        let bound = |k: u64| sigma2 / (d * d * k as f64 + sigma2);
        ensure(bound(k) <= eps, format!("k={k} fails for σ²={sigma2} D={d} ε={eps}"))?;
        ensure(k == 0 || bound(k - 1) > eps, format!("k−1={} already suffices for σ²={sigma2} D={d} ε={eps}", k - 1))?;
    }
    Ok("1000 random inputs minimal".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "geometric counterpart fixed point", budget: Duration::from_secs(1), run: counterpart_fixed_point },
        Criterion { id: 2, name: "GW quadratic", budget: Duration::from_secs(30), run: gw_quadratic },
        Criterion { id: 3, name: "Perron cross-check", budget: Duration::from_secs(10), run: perron_cross_check },
        Criterion { id: 4, name: "mean propagation", budget: Duration::from_secs(60), run: mean_propagation },
        Criterion { id: 5, name: "coupling domination", budget: Duration::from_secs(60), run: coupling_domination },
        Criterion { id: 6, name: "Seneta convergence", budget: Duration::from_secs(10), run: seneta_convergence },
        Criterion { id: 7, name: "no-extinction line ladder", budget: Duration::from_secs(60), run: noext_ladder },
        Criterion { id: 8, name: "summable-failure line sub-solution", budget: Duration::from_secs(30), run: summable_failure_subsolution_check },
        Criterion { id: 9, name: "Green identity", budget: Duration::from_secs(5), run: green_identity },
        Criterion { id: 10, name: "Q identity and integer selection", budget: Duration::from_secs(5), run: q_identity_and_selection },
        Criterion { id: 11, name: "truncation sweep", budget: Duration::from_secs(300), run: truncation_sweep_check },
        Criterion { id: 12, name: "tree λ-sweep", budget: Duration::from_secs(120), run: tree_lambda_sweep },
        Criterion { id: 13, name: "percolation sanity", budget: Duration::from_secs(30), run: percolation_sanity },
        Criterion { id: 14, name: "chebyshev_k minimality", budget: Duration::from_secs(1), run: chebyshev_minimality },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.contains(&c.id) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let dt = t.elapsed();
        let time = format!("{:.2}s of {}s", dt.as_secs_f64(), c.budget.as_secs());
        let over = if dt > c.budget { " [over time budget]" } else { "" };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {}: {detail} ({time}){over}", c.id, c.name),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {}: {detail} ({time}){over}", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
