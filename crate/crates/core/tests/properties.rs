use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schwinger::kernel_builder::{build_kernel, coefficient_distance, compose};
use schwinger::phase_dynamics::{
    conserved_energy_check, invert_endpoints, solve_heisenberg, QuadraticHamiltonian, Representation,
};
use schwinger::verification::{check_classical_limit, random_hamiltonian, run_suite, Status, SuiteConfig};

fn hamiltonian() -> impl Strategy<Value = QuadraticHamiltonian> {
    (
        0.1..2.0f64,
        -0.01..2.0f64,
        -0.3..0.3f64,
        -0.5..0.5f64,
        -0.5..0.5f64,
        0.5..1.5f64,
    )
        .prop_map(
            |(kinetic, potential, cross, linear_p, linear_x, hbar)| QuadraticHamiltonian {
                kinetic,
                potential,
                cross,
                linear_p,
                linear_x,
                hbar,
            },
        )
}

fn rep() -> impl Strategy<Value = Representation> {
    prop_oneof![Just(Representation::Momentum), Just(Representation::Position)]
}

/// Largest time before the first caustic, capped.
fn safe_time(h: &QuadraticHamiltonian, cap: f64) -> f64 {
    let d = h.discriminant();
    if d > 0.0 {
        (0.9 * std::f64::consts::PI / d.sqrt()).min(cap)
    } else {
        cap
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_symplectic(h in hamiltonian(), t in 0.0..5.0f64) {
        let tm = solve_heisenberg(&h, t).unwrap();
        prop_assert!((tm.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn flow_is_a_group(h in hamiltonian(), t1 in 0.0..2.0f64, t2 in 0.0..2.0f64) {
        let joined = solve_heisenberg(&h, t1).unwrap().then(&solve_heisenberg(&h, t2).unwrap());
        let direct = solve_heisenberg(&h, t1 + t2).unwrap();
        let scale = 1.0 + direct.m11.abs() + direct.m12.abs() + direct.m21.abs() + direct.m22.abs();
        for (a, b) in [
            (joined.m11, direct.m11),
            (joined.m12, direct.m12),
            (joined.m21, direct.m21),
            (joined.m22, direct.m22),
            (joined.drift_x, direct.drift_x),
            (joined.drift_p, direct.drift_p),
        ] {
            prop_assert!((a - b).abs() < 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn classical_energy_is_conserved(h in hamiltonian(), t in 0.0..3.0f64, x in -2.0..2.0f64, p in -2.0..2.0f64) {
        let tm = solve_heisenberg(&h, t).unwrap();
        prop_assert!(conserved_energy_check(&tm, &h) < 1e-12);
        let (xt, pt) = tm.apply(x, p);
        let e0 = h.classical(x, p);
        prop_assert!((h.classical(xt, pt) - e0).abs() < 1e-11 * (1.0 + e0.abs()));
    }

    #[test]
    fn ordering_has_the_classical_limit(h in hamiltonian(), r in rep(), seed in any::<u64>()) {
        let ts = safe_time(&h, 2.5);
        let times = [0.2 * ts, 0.6 * ts, ts];
        let e = check_classical_limit(&h, r, &times, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(e.passed, "{e:?}");
    }

    #[test]
    fn kernels_compose(h in hamiltonian(), r in rep(), f in 0.2..0.8f64) {
        let t = safe_time(&h, 1.5);
        let (t1, t2) = (f * t, (1.0 - f) * t);
        let k1 = build_kernel(&h, t1, r).unwrap();
        let k2 = build_kernel(&h, t2, r).unwrap();
        let k12 = build_kernel(&h, t, r).unwrap();
        let scale = k12.coefficients().iter().map(|c| c.norm()).fold(1.0, f64::max);
        let d = coefficient_distance(&compose(&k2, &k1).unwrap(), &k12);
        prop_assert!(d < 1e-9 * scale, "{d}");
    }

    #[test]
    fn kernel_satisfies_derivative_conditions(h in hamiltonian(), r in rep()) {
        let t = safe_time(&h, 1.2);
        let k = build_kernel(&h, t, r).unwrap();
        let inv = invert_endpoints(&solve_heisenberg(&h, t).unwrap(), r).unwrap();
        // the endpoint expectation equals the gradient of the exponent
        let sign = if r == Representation::Momentum { 1.0 } else { -1.0 };
        let a_tt = -sign * inv.at_end.end / 2.0;
        prop_assert!((k.a_tt - Complex64::new(a_tt, 0.0)).norm() < 1e-9 * (1.0 + a_tt.abs()));
    }
}

#[test]
fn random_hamiltonians_pass_the_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let config = SuiteConfig {
        times: vec![0.3, 0.6],
        composition_splits: vec![(0.1, 0.3)],
        delta_times: vec![1e-2, 1e-3],
        ..SuiteConfig::default()
    };
    for _ in 0..2 {
        let h = random_hamiltonian(&mut rng);
        let report = run_suite(&h, &config, None).unwrap();
        for e in report.failures() {
            eprintln!("{h:?}: {e:?}");
        }
        assert!(report.overall);
        assert!(report.entries.iter().any(|e| e.status == Status::Pass));
    }
}
