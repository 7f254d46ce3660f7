use epqubits::model::SystemParams;
use epqubits::optimizer::{
    concurrence_map, concurrence_series, differential_phase_scan, enhancement_factor, first_peak_optimum,
    hermitian_baseline, OptimalSearch, PhaseTime, HERMITIAN_TARGET,
};
use epqubits::spectra::SweepRange;
use epqubits::state::PureState;

#[test]
fn halving_the_grid_keeps_the_argmax_within_a_cell() {
    let coarse = concurrence_map(1e-3, 6.0, &SweepRange::new(1.5, 1.7, 41).unwrap(), &SweepRange::new(4.5, 6.0, 76).unwrap())
        .unwrap();
    let fine = concurrence_map(1e-3, 6.0, &SweepRange::new(1.5, 1.7, 81).unwrap(), &SweepRange::new(4.5, 6.0, 151).unwrap())
        .unwrap();
    let (a, b) = (coarse.argmax, fine.argmax);
    assert!((a.grid_omega - b.grid_omega).abs() < 0.005 + 1e-12, "{} vs {}", a.grid_omega, b.grid_omega);
    assert!((a.grid_t - b.grid_t).abs() < 0.02 + 1e-12, "{} vs {}", a.grid_t, b.grid_t);
    assert!(b.c_max >= a.c_max - 1e-3);
}

#[test]
fn optimum_stays_near_one_and_enhancement_falls_with_coupling() {
    let js = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let report = enhancement_factor(6.0, &js, &OptimalSearch::default()).unwrap();
    for p in &report.points {
        assert!(p.c_max >= 0.99, "J = {}: C = {}", p.j, p.c_max);
    }
    for w in report.points.windows(2) {
        assert!(w[1].factor <= w[0].factor, "factor rises between J = {} and {}", w[0].j, w[1].j);
        assert!(w[1].t_star <= w[0].t_star);
    }
    assert!(report.slope < 0.0);
}

#[test]
fn strong_coupling_optimum_is_fast() {
    let opt = first_peak_optimum(&SystemParams::identical(6.0, 1.5, 0.1).unwrap(), &OptimalSearch::default()).unwrap();
    assert!(opt.t_star < 2.0, "T* = {}", opt.t_star);
    assert!((opt.omega_star - 2.2).abs() < 0.05, "Omega* = {}", opt.omega_star);
}

#[test]
fn swap_baseline_matches_closed_form() {
    // no drive, |fe>: C = |sin 2Jt|
    for j in [1e-3, 0.1, 0.7] {
        let t = hermitian_baseline(j, 0.0, &PureState::fe(), HERMITIAN_TARGET).unwrap();
        let expected = HERMITIAN_TARGET.asin() / (2.0 * j);
        assert!((t / expected - 1.0).abs() < 1e-9, "J = {j}: {t} vs {expected}");
    }
}

#[test]
fn strong_drive_baseline_follows_slow_envelope() {
    // |ff> under a drive much larger than J: C ~ |sin(tJ/2)|
    let j = 0.01;
    let t = hermitian_baseline(j, 2.0, &PureState::ff(), HERMITIAN_TARGET).unwrap();
    let envelope = 2.0 * HERMITIAN_TARGET.asin() / j;
    assert!((t / envelope - 1.0).abs() < 0.05, "{t} vs {envelope}");
}

#[test]
fn series_matches_direct_sampling() {
    let s = SystemParams::identical(6.0, 1.6, 1e-3).unwrap();
    let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.06).collect();
    let series = concurrence_series(&s, &PureState::ff(), &t).unwrap();
    for (k, &tk) in t.iter().enumerate() {
        let direct = epqubits::entanglement::concurrence_pure(&epqubits::dynamics::evolve_exact(&s, &PureState::ff(), tk).unwrap().raw)
            .unwrap();
        assert!((series[k] - direct).abs() < 1e-9);
    }
}

#[test]
fn differential_phase_scan_at_fixed_and_optimal_times() {
    let js = [2.5e-4, 5e-4, 1e-3];
    let fixed = differential_phase_scan(6.0, 1.6, &js, PhaseTime::Fixed(5.325), &OptimalSearch::default()).unwrap();
    for p in &fixed {
        assert_eq!(p.t, 5.325);
        assert!((p.analytic - p.exact).abs() < 0.05);
    }
    let search = OptimalSearch {
        omega: SweepRange::new(1.6, 1.61, 2).unwrap(),
        t: SweepRange::new(0.0, 12.0, 1201).unwrap(),
        floor: 0.0,
    };
    let per_j = differential_phase_scan(6.0, 1.6, &[1e-3], PhaseTime::PerJOptimum, &search).unwrap();
    assert!((per_j[0].t - 5.325).abs() < 0.05);
}
