//! Property-based invariants.

use proptest::prelude::*;

use qhmetric::evolution::{
    dyson_factor, propagate_nonstationary, propagate_stationary, StateVector,
};
use qhmetric::linalg::{eig_general, vec_norm};
use qhmetric::metric::{metric_rho, quasi_hermiticity_residual};
use qhmetric::models::{h2, theta0_2, CustomModel, Model, ToyModel};
use qhmetric::report::format_number;
use qhmetric::scalar::re;
use qhmetric::scan::{
    boundary_scan, classify_point, classify_strict, scan, RegimeKind, ScanReport,
};
use qhmetric::{DoubleDouble, C64};

fn model_strategy() -> impl Strategy<Value = ToyModel> {
    prop_oneof![Just(ToyModel::TwoLevel), Just(ToyModel::FourLevel)]
}

fn state_strategy(n: usize) -> impl Strategy<Value = StateVector<f64>> {
    prop::collection::vec((-1.0..1.0_f64, -1.0..1.0_f64), n)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1)
        })
        .prop_map(|v| {
            StateVector::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quasi_hermiticity_holds(m in model_strategy(), t in 0.01..0.99_f64, rho in 0u32..=6) {
        let h = m.hamiltonian(t);
        let theta = metric_rho(&m.metric0(t), &h, rho).unwrap();
        prop_assert!(quasi_hermiticity_residual(&h, &theta) <= 1e-10);
    }

    #[test]
    fn energies_are_linear(a in 0.05..2.0_f64, sign in prop::bool::ANY) {
        // The exceptional point amplifies rounding as a square root, so stay clear of it.
        let t = if sign { a } else { -a };
        for m in [ToyModel::TwoLevel, ToyModel::FourLevel] {
            let e = eig_general(&m.hamiltonian(t), 1e-10).unwrap().eigenvalues;
            let exact = m.energies(t).unwrap();
            for (z, w) in e.iter().zip(exact) {
                prop_assert!((z - re(w)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn hamiltonian_hermitian_beyond_unit_interval(a in 1.0..5.0_f64, sign in prop::bool::ANY) {
        let t = if sign { a } else { -a };
        for m in [ToyModel::TwoLevel, ToyModel::FourLevel] {
            let h = m.hamiltonian(t);
            prop_assert!((&h - &h.adjoint()).frobenius_norm() <= 1e-12);
        }
    }

    #[test]
    fn theta_norm_is_conserved(
        psi in state_strategy(4),
        t in 0.2..0.9_f64,
        rho in 0u32..=2,
    ) {
        for m in [ToyModel::TwoLevel, ToyModel::FourLevel] {
            let n = Model::<f64>::dim(&m);
            let psi = StateVector::new(psi.amplitudes()[..n].to_vec()).unwrap();
            prop_assume!(psi.euclidean_norm() > 0.1);
            let h = m.hamiltonian(t);
            let theta = metric_rho(&m.metric0(t), &h, rho).unwrap().hermitian_part();
            let rec = propagate_stationary(&h, &theta, &psi, 100.0, 100).unwrap();
            prop_assert!(rec.drift <= 1e-8, "drift {}", rec.drift);
        }
    }

    #[test]
    fn scan_report_json_round_trip(a in 0.05..0.5_f64, b in 0.5..3.0_f64, rho in 0u32..=4) {
        let grid: Vec<f64> = (0..7).map(|k| a + (b - a) * k as f64 / 6.0).collect();
        let report = scan(&ToyModel::TwoLevel, rho, &grid, 1e-8).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: ScanReport<f64> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn csv_numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn double_double_division_is_exact_to_working_precision(a in 1e-3..1e3_f64, b in 1e-3..1e3_f64) {
        let (a, b) = (DoubleDouble::new(a), DoubleDouble::new(b));
        let q = a / b;
        let err = ((q * b - a) / a).hi().abs();
        prop_assert!(err <= 1e-30, "err {err:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn boundaries_invariant_under_metric_scale(c in 0.01..100.0_f64, rho in 0u32..=2) {
        let scaled = CustomModel::new(
            "scaled-two",
            2,
            h2::<f64>,
            move |t: f64| theta0_2(t).scale_real(c),
        );
        let plain = boundary_scan(&ToyModel::TwoLevel, rho, 0.0, 3.5, 1e-10).unwrap();
        let other = boundary_scan(&scaled, rho, 0.0, 3.5, 1e-10).unwrap();
        prop_assert_eq!(plain.len(), other.len());
        for (p, q) in plain.iter().zip(&other) {
            prop_assert_eq!((p.from, p.to), (q.from, q.to));
            prop_assert!((p.t - q.t).abs() <= 2e-10);
        }
    }

    #[test]
    fn refinement_is_monotone(exp in 4.0..10.0_f64, rho in 0u32..=2) {
        let tol_t = 10f64.powf(-exp);
        let coarse = boundary_scan(&ToyModel::TwoLevel, rho, 0.0, 3.5, tol_t).unwrap();
        let fine = boundary_scan(&ToyModel::TwoLevel, rho, 0.0, 3.5, tol_t / 2.0).unwrap();
        prop_assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            prop_assert!((a.t - b.t).abs() <= tol_t);
        }
    }

    #[test]
    fn boundaries_are_bracketed(exp in 5.0..9.0_f64, rho in 0u32..=2) {
        let tol_t = 10f64.powf(-exp);
        for b in boundary_scan(&ToyModel::TwoLevel, rho, 0.0, 3.5, tol_t).unwrap() {
            let left = classify_point(&ToyModel::TwoLevel, rho, b.t - 10.0 * tol_t, 1e-8).unwrap();
            let right = classify_point(&ToyModel::TwoLevel, rho, b.t + 10.0 * tol_t, 1e-8).unwrap();
            prop_assert_eq!((left.kind, right.kind), (b.from, b.to));
        }
    }

    #[test]
    fn parity_of_transition_kinds(rho in 1u32..=4, offset in 1e-3..0.2_f64) {
        let dd = DoubleDouble::new;
        let found = boundary_scan(&ToyModel::TwoLevel, rho, dd(0.0), dd(5.0), dd(1e-12)).unwrap();
        let limit = qhmetric::scan::unitarity_limit(&found).unwrap();
        let want = if rho % 2 == 1 {
            RegimeKind::KreinPseudoMetric
        } else {
            RegimeKind::ComplexSpectrum
        };
        prop_assert_eq!(limit.from, RegimeKind::UnitaryMetric);
        prop_assert_eq!(limit.to, want);
        let beyond = classify_strict(&ToyModel::TwoLevel, rho, limit.t + dd(offset), dd(1e-8)).unwrap();
        prop_assert_eq!(beyond, want);
    }

    #[test]
    fn dyson_image_norm_is_transported(m in model_strategy(), rho in 0u32..=2) {
        let psi = StateVector::basis(Model::<f64>::dim(&m), 0);
        let rec = propagate_nonstationary(&m, rho, 0.3, 0.8, 400, &psi).unwrap();
        let norms: Vec<f64> = rec
            .samples
            .iter()
            .zip(&rec.states)
            .map(|(&t, s)| {
                let (_, omega) = dyson_factor(&m, rho, t).unwrap();
                vec_norm(&omega.mul_vec(s.amplitudes()))
            })
            .collect();
        for n in &norms {
            prop_assert!((n - norms[0]).abs() <= 1e-8 * norms[0]);
        }
    }
}

#[test]
fn triple_zero_crossing_is_bracketed() {
    let dd = DoubleDouble::new;
    // The smallest metric eigenvalue vanishes cubically here, so the probe
    // offset must keep it above the working precision.
    let tol_t = dd(1e-9);
    let found = boundary_scan(&ToyModel::TwoLevel, 3, dd(0.0), dd(5.0), tol_t).unwrap();
    let b = qhmetric::scan::unitarity_limit(&found).unwrap();
    let side = |t| classify_strict(&ToyModel::TwoLevel, 3, t, dd(1e-8)).unwrap();
    assert_eq!(side(b.t - tol_t * dd(10.0)), b.from);
    assert_eq!(side(b.t + tol_t * dd(10.0)), b.to);
}

#[test]
fn scans_do_not_depend_on_thread_count() {
    let grid: Vec<f64> = (1..=300).map(|k| k as f64 * 0.015).collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan(&ToyModel::FourLevel, 2, &grid, 1e-8).unwrap())
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    assert_eq!(one, serde_json::to_string(&run(4)).unwrap());
    assert_eq!(one, serde_json::to_string(&run(3)).unwrap());
}
