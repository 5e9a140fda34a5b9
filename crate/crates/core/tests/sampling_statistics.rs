use filtered_tpq::exact::exact_traces;
use filtered_tpq::sampling::{covariance_diagnostic, estimate_traces, SampleOptions};
use filtered_tpq::{
    full_diagonalize, run_samples, Boundary, DiagOptions, EnsembleKind, FilterParams, RandomStateSpec,
    SpinChainModel, TrotterPlan,
};

fn chain(n: usize) -> SpinChainModel {
    SpinChainModel::new(n, 1.0, Boundary::Periodic).unwrap()
}

const KINDS: [EnsembleKind; 3] = [EnsembleKind::FullPhase, EnsembleKind::ProductPhase, EnsembleKind::EntangledPhase];

#[test]
fn exact_filter_estimates_are_unbiased() {
    let m = chain(6);
    let s = full_diagonalize(&m, DiagOptions::default()).unwrap();
    let d = s.dim() as f64;
    for kind in KINDS {
        for (e, tau) in [(0.5, 1.0), (0.5, 3.0), (0.125, 2.0)] {
            let r = 4096;
            let diag = covariance_diagnostic(&m, kind, e * 6.0, tau, r, 17).unwrap();
            let sem = d * (diag.empirical / r as f64).sqrt();
            let want = exact_traces(&s, e * 6.0, tau).tr_g;
            assert!((d * diag.mean - want).abs() <= 5.0 * sem, "{kind} ({e}, {tau})");
        }
    }
}

#[test]
fn entangled_phases_reduce_error() {
    let m = chain(6);
    let rel = |kind| {
        let d = covariance_diagnostic(&m, kind, -0.25 * 6.0, 3.0, 4096, 3).unwrap();
        d.empirical.sqrt() / d.mean
    };
    assert!(rel(EnsembleKind::EntangledPhase) < rel(EnsembleKind::ProductPhase));
}

#[test]
fn pipeline_matches_exact_traces() {
    let m = chain(6);
    let s = full_diagonalize(&m, DiagOptions::default()).unwrap();
    let grid: Vec<FilterParams> = [(-0.25, 1.0), (0.5, 2.0), (0.875, 1.5)]
        .iter()
        .map(|&(e, t)| FilterParams::new(e * 6.0, t).unwrap())
        .collect();
    let plan = TrotterPlan::from_t_max(0.01, 30.0).unwrap();
    for kind in KINDS {
        let set = run_samples(&m, &RandomStateSpec::new(kind, 6, 2), &plan, &grid, 128, SampleOptions::default()).unwrap();
        for (i, p) in grid.iter().enumerate() {
            let est = estimate_traces(&set, i).unwrap();
            let t = exact_traces(&s, p.target_energy, p.filtering_time);
            assert!((est.tr_g - t.tr_g).abs() <= 5.0 * est.tr_g_sem, "{kind} trG at {p:?}");
            assert!((est.tr_hg - t.tr_hg).abs() <= 5.0 * est.tr_hg_sem, "{kind} trHG at {p:?}");
            assert!(!est.truncated);
        }
    }
}

#[test]
fn zero_filter_estimate_is_dimension() {
    let m = chain(4);
    let grid = [FilterParams::new(0.0, 1e-6).unwrap()];
    let set = run_samples(&m, &RandomStateSpec::new(EnsembleKind::EntangledPhase, 4, 0), &TrotterPlan::new(0.01, 100), &grid, 16, SampleOptions::default()).unwrap();
    let est = estimate_traces(&set, 0).unwrap();
    assert!((est.tr_g - 16.0).abs() < 1e-10);
    assert!(est.tr_g_sem < 1e-10);
}

#[test]
fn order_of_samples_does_not_matter() {
    let m = chain(4);
    let grid = [FilterParams::new(1.0, 1.0).unwrap(), FilterParams::new(2.5, 2.0).unwrap()];
    let set = run_samples(&m, &RandomStateSpec::new(EnsembleKind::FullPhase, 4, 6), &TrotterPlan::from_t_max(0.01, 20.0).unwrap(), &grid, 8, SampleOptions::default()).unwrap();
    let reversed = set.permuted(&(0..8).rev().collect::<Vec<_>>()).unwrap();
    for i in 0..grid.len() {
        let a = estimate_traces(&set, i).unwrap();
        let b = estimate_traces(&reversed, i).unwrap();
        assert!((a.tr_g - b.tr_g).abs() <= 1e-13 * a.tr_g);
        assert!((a.tr_g_sem - b.tr_g_sem).abs() <= 1e-10 * a.tr_g_sem);
    }
}
