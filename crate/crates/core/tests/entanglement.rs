use epqubits::entanglement::{concurrence_mixed, concurrence_mixed_via_product, concurrence_pure};
use epqubits::numerics::{c, expm, CMatrix, C64};
use epqubits::state::{DensityMatrix, PureState};
use proptest::prelude::*;

fn amplitudes() -> impl Strategy<Value = PureState> {
    prop::collection::vec(-1.0f64..1.0, 8)
        .prop_filter("non-zero", |x| x.iter().map(|v| v * v).sum::<f64>() > 1e-6)
        .prop_map(|x| PureState::new(c(x[0], x[1]), c(x[2], x[3]), c(x[4], x[5]), c(x[6], x[7])))
}

/// `A A^dagger / tr`, a generic full-rank density matrix.
fn density() -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_map(|x| {
        let a = CMatrix::from_fn(4, 4, |i, j| c(x[2 * (4 * i + j)], x[2 * (4 * i + j) + 1]));
        let rho = &a * &a.adjoint();
        let tr = rho.trace();
        DensityMatrix::new(rho.scale(C64::new(1.0, 0.0) / tr)).unwrap()
    })
}

fn unitary2() -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-3.0f64..3.0, 4).prop_map(|x| {
        let h = CMatrix::from_rows([[c(x[0], 0.0), c(x[1], x[2])], [c(x[1], -x[2]), c(x[3], 0.0)]]);
        expm(&h.scale(c(0.0, -1.0))).unwrap()
    })
}

/// Closed form for states with only diagonal and anti-diagonal entries.
fn x_state_concurrence(rho: &CMatrix) -> f64 {
    let r = |i: usize, j: usize| rho[(i, j)];
    let a = r(0, 3).norm() - (r(1, 1).re * r(2, 2).re).sqrt();
    let b = r(1, 2).norm() - (r(0, 0).re * r(3, 3).re).sqrt();
    (2.0 * a.max(b)).max(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn wootters_reduces_to_pure_formula(psi in amplitudes()) {
        let pure = concurrence_pure(&psi).unwrap();
        let mixed = concurrence_mixed(&DensityMatrix::from_pure(&psi.normalize().unwrap())).unwrap();
        prop_assert!((pure - mixed).abs() <= 1e-10, "{pure} vs {mixed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn concurrence_is_bounded(rho in density()) {
        let v = concurrence_mixed(&rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn both_wootters_routes_agree(rho in density()) {
        prop_assert!((concurrence_mixed(&rho).unwrap() - concurrence_mixed_via_product(&rho).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn local_unitaries_leave_concurrence_unchanged(psi in amplitudes(), w in 0.0f64..1.0, u1 in unitary2(), u2 in unitary2()) {
        // mix with white noise so both entangled and separable states occur
        let pure = DensityMatrix::from_pure(&psi.normalize().unwrap());
        let noise = DensityMatrix::maximally_mixed();
        let rho = &pure.matrix().scale(c(w, 0.0)) + &noise.matrix().scale(c(1.0 - w, 0.0));
        let u = u1.kron(&u2);
        let rotated = &(&u * &rho) * &u.adjoint();
        let before = concurrence_mixed(&DensityMatrix::new(rho).unwrap()).unwrap();
        let after = concurrence_mixed(&DensityMatrix::new(rotated.hermitian_part()).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-10, "{before} vs {after}");
    }

    #[test]
    fn global_phase_is_irrelevant(psi in amplitudes(), phi in -7.0f64..7.0) {
        let rotated = psi.scale(C64::from_polar(1.0, phi));
        prop_assert!((concurrence_pure(&rotated).unwrap() - concurrence_pure(&psi).unwrap()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn x_states_match_closed_form(p in prop::collection::vec(0.01f64..1.0, 4), z1 in 0.0f64..1.0, z2 in 0.0f64..1.0, ph in -3.0f64..3.0) {
        let tr: f64 = p.iter().sum();
        let d: Vec<f64> = p.iter().map(|x| x / tr).collect();
        // largest coherences allowed by positivity, scaled down
        let c14 = C64::from_polar(z1 * (d[0] * d[3]).sqrt(), ph);
        let c23 = C64::from_polar(z2 * (d[1] * d[2]).sqrt(), -ph);
        let mut m = CMatrix::diagonal(&d.iter().map(|x| c(*x, 0.0)).collect::<Vec<_>>());
        m[(0, 3)] = c14;
        m[(3, 0)] = c14.conj();
        m[(1, 2)] = c23;
        m[(2, 1)] = c23.conj();
        let expected = x_state_concurrence(&m);
        prop_assert!((concurrence_mixed(&DensityMatrix::new(m).unwrap()).unwrap() - expected).abs() <= 1e-9);
    }
}
