use epqubits::lindblad::{integrate_master, LindbladParams};
use epqubits::model::{QubitParams, SystemParams};
use epqubits::state::{DensityMatrix, PureState};

fn run(system: SystemParams, gamma_f: f64, t_max: f64, psi: &PureState) -> epqubits::lindblad::LindbladTrace {
    let p = LindbladParams::new(system, gamma_f, t_max).unwrap();
    integrate_master(&DensityMatrix::from_pure(psi), &p).unwrap()
}

#[test]
fn undriven_decay_follows_exponential_populations() {
    let g = 0.7;
    let trace = run(SystemParams::identical(0.0, 0.0, 0.0).unwrap(), g, 3.0, &PureState::ff());
    for pt in &trace.points {
        let f = (-g * pt.t).exp();
        let expected = [f * f, f * (1.0 - f), f * (1.0 - f), (1.0 - f) * (1.0 - f)];
        for (a, b) in pt.populations.iter().zip(expected) {
            assert!((a - b).abs() <= 1e-10, "t = {}: {a} vs {b}", pt.t);
        }
        assert!((pt.trace - 1.0).abs() <= 1e-12);
        assert!(pt.concurrence <= 1e-10);
    }
}

#[test]
fn dissipationless_hermitian_evolution_stays_pure() {
    let s = SystemParams::identical(0.0, 1.3, 0.2).unwrap();
    let trace = run(s, 0.0, 4.0, &PureState::ff());
    for pt in &trace.points {
        assert!((pt.trace - 1.0).abs() <= 1e-12);
        assert!((pt.rho.purity() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn trajectories_stay_hermitian_and_positive() {
    let q = QubitParams::new(0.0, 6.0, 1.6).unwrap();
    for gf in [0.0, 1e-4, 1e-3, 0.2] {
        let trace = run(SystemParams::new(q, q, 1e-3).unwrap(), gf, 6.0, &PureState::ff());
        for pt in &trace.points {
            assert!(pt.rho.hermiticity_error() <= 1e-10);
            let lowest = pt.rho.trace_normalized().unwrap().min_eigenvalue().unwrap();
            assert!(lowest >= -1e-8, "gamma_f = {gf}, t = {}: eigenvalue {lowest}", pt.t);
        }
    }
}

#[test]
fn mismatched_decay_rates_are_supported() {
    let s = SystemParams::identical(0.0, 0.0, 0.0).unwrap();
    let mut p = LindbladParams::new(s, 0.0, 2.0).unwrap();
    p.gamma_f1 = 0.5;
    let trace = integrate_master(&DensityMatrix::from_pure(&PureState::ff()), &p).unwrap();
    let last = trace.points.last().unwrap();
    let f = (-0.5 * last.t).exp();
    // only the first qubit decays
    assert!((last.populations[0] - f).abs() <= 1e-10);
    assert!((last.populations[2] - (1.0 - f)).abs() <= 1e-10);
}
