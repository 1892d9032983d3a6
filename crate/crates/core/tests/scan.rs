use std::f64::consts::{FRAC_PI_8, SQRT_2};

use svbound::scan::{evaluate_point, filtered_point, optimize_filter, scan, Mode, ScanSpec, ThresholdOutcome};
use svbound::{
    build_chi_state, build_ghz_noise_state, filtered_bound, unfiltered_bound, AnalysisConfig, Family, FilterSearch,
    FilterTriple, DEFAULT_SEED,
};

#[test]
fn optimized_filter_never_loses_to_identity() {
    let cfg = AnalysisConfig::default();
    for p in [0.1, 0.3, 0.45, 0.6, 0.9] {
        for rho in [build_chi_state(p, FRAC_PI_8).unwrap(), build_ghz_noise_state(p).unwrap()] {
            let best = filtered_point(&rho, &FilterSearch::default(), &cfg).unwrap();
            let identity = unfiltered_bound(&rho, &cfg).unwrap();
            assert!(best.report.achieved >= identity.achieved - 1e-9, "p={p}");
            assert!(best.report.tight, "p={p}");
        }
    }
}

#[test]
fn optimum_sits_where_the_diagonal_term_meets_the_pair() {
    // At the optimum for these families the third singular value of X/N
    // is no larger than the degenerate pair.
    let rho = build_ghz_noise_state(0.5).unwrap();
    let opt = optimize_filter(&rho, &FilterSearch::default()).unwrap();
    let s = opt.analysis.x_svd.singular_values;
    assert!(opt.restricted);
    assert!((s[0] - s[1]).abs() <= 1e-8 * s[0]);
    assert!(s[2] <= s[0] + 1e-12);
    let again = filtered_bound(&rho, &FilterTriple::diagonal(opt.params)).unwrap();
    assert_eq!(again.lambda1_prime, opt.analysis.lambda1_prime);
}

#[test]
fn ghz_noise_curves_at_known_points() {
    let spec = ScanSpec::new(Family::GhzColoredNoise, vec![0.0, 1.0], DEFAULT_SEED).unwrap();
    let both = [Mode::Unfiltered, Mode::Filtered];
    let at0 = evaluate_point(&spec.family, 0.0, &both, &spec).unwrap();
    assert_eq!(at0.unfiltered.as_ref().unwrap().bound, 0.0);
    assert!(at0.filtered.as_ref().unwrap().report.bound.abs() < 1e-12);
    assert_eq!(at0.violates_after(), Some(false));
    let at1 = evaluate_point(&spec.family, 1.0, &both, &spec).unwrap();
    assert!((at1.unfiltered.unwrap().achieved - 4.0 * SQRT_2).abs() < 1e-9);
    assert!((at1.filtered.unwrap().report.achieved - 4.0 * SQRT_2).abs() < 1e-9);
}

#[test]
fn coarse_scan_orders_the_thresholds() {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for family in [Family::chi(), Family::GhzColoredNoise] {
        let spec = ScanSpec::new(family, grid.clone(), DEFAULT_SEED).unwrap();
        let rep = scan(&spec, &[Mode::Unfiltered, Mode::Filtered]).unwrap();
        let filtered = rep.thresholds.filtered.as_ref().unwrap().value().unwrap();
        match rep.thresholds.unfiltered.as_ref().unwrap() {
            ThresholdOutcome::Threshold { p, .. } => assert!(filtered <= *p),
            ThresholdOutcome::NoTransition { always } => assert!(!always),
            other => panic!("{other:?}"),
        }
        for r in &rep.records {
            let after = r.filtered.as_ref().unwrap();
            assert_eq!(r.violates_after(), Some(after.report.achieved > 4.0 + 1e-9));
            if r.violates_after() == Some(true) {
                assert!(after.report.tight);
            }
        }
        let [lo, hi] = rep.activation_window.unwrap();
        assert!(0.0 <= lo && lo < hi && hi <= 1.0);
    }
}

#[test]
fn reports_are_reproducible() {
    let spec = ScanSpec::new(Family::chi(), vec![0.3, 0.4, 0.5], 7).unwrap();
    let a = scan(&spec, &[Mode::Unfiltered, Mode::Filtered]).unwrap();
    let b = scan(&spec, &[Mode::Unfiltered, Mode::Filtered]).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
    let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), 3);
    assert_eq!(a.to_csv().lines().count(), 4);
}
