use std::f64::consts::PI;

use floquet_phase_core::driven::{periodic_particular, ActionIntegral};
use floquet_phase_core::floquet::{build_basis_direct, classify, monodromy};
use floquet_phase_core::phases::{phase_report, quasiperiod, GridSettings, PhaseInputs};
use floquet_phase_core::quantum::{gram_deviation, orthonormality_matrix, QuantumStateSpec, SpatialGrid};
use floquet_phase_core::{Coefficients, FourierSeries, PeriodicCoefficients, PhaseReport, ToleranceSettings};
use proptest::prelude::*;

fn reports(coeffs: &PeriodicCoefficients, scale: f64, levels: u32) -> Vec<PhaseReport> {
    let tol = ToleranceSettings::default();
    let class = classify(&monodromy(coeffs, &tol).unwrap(), coeffs.tau(), tol.boundary_eps);
    assert!(class.is_stable(), "{class:?}");
    let basis = build_basis_direct(coeffs, class, &tol).unwrap().scaled(scale);
    let xp = coeffs.is_driven().then(|| periodic_particular(coeffs, &tol, 12).unwrap());
    let tau_prime = quasiperiod(&basis, xp.as_ref()).value;
    let action = xp.as_ref().map(|xp| ActionIntegral::new(xp, coeffs, tau_prime, tol.quad_abs));
    let inputs =
        PhaseInputs { basis: &basis, coeffs, drive: action.as_ref(), hbar: coeffs.hbar(), quad_abs: tol.quad_abs };
    let grid = GridSettings { width_factor: 10.0, n_points: 1025 };
    (0..=levels).map(|n| phase_report(&inputs, n, tau_prime, grid).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // first stability band of the Mathieu chart
    #[test]
    fn mathieu_first_band_closes(a in 0.1f64..0.8, q in 0.0f64..0.1) {
        let c = PeriodicCoefficients::mathieu(a, q).unwrap();
        for r in reports(&c, 1.0, 3) {
            let chi = r.chi_value();
            prop_assert!((r.gamma_value() - (chi - r.delta_value())).abs() < 1e-7 * (1.0 + chi.abs()));
            prop_assert!(r.quasi_residual < 1e-6);
            // homogeneous parts are linear in n + 1/2
            let unit = r.chi.homogeneous / (r.n as f64 + 0.5);
            prop_assert!(unit < 0.0 && unit > -PI);
        }
    }

    #[test]
    fn common_basis_scale_is_invisible(scale in 0.2f64..5.0) {
        let c = PeriodicCoefficients::mathieu(0.4, 0.15).unwrap();
        let base = reports(&c, 1.0, 2);
        for (x, y) in base.iter().zip(reports(&c, scale, 2)) {
            prop_assert!((x.chi_value() - y.chi_value()).abs() < 1e-9);
            prop_assert!((x.delta_value() - y.delta_value()).abs() < 1e-9);
            prop_assert!((x.gamma_value() - y.gamma_value()).abs() < 1e-9);
        }
    }

    #[test]
    fn action_terms_scale_inversely_with_hbar(hbar in 0.1f64..4.0, amp in 0.5f64..3.0) {
        let force = FourierSeries::new(PI, 0.0, vec![amp], vec![]).unwrap();
        let c = PeriodicCoefficients::constant_frequency(1.0, PI).unwrap().with_force(Some(force)).unwrap();
        let unit = reports(&c, 1.0, 1);
        let scaled = reports(&c.clone().with_hbar(hbar).unwrap(), 1.0, 1);
        for (x, y) in unit.iter().zip(&scaled) {
            prop_assert_eq!(x.gamma.action, y.gamma.action);
            prop_assert_eq!(x.chi.homogeneous, y.chi.homogeneous);
            // closed form for x_p = −(amp/3) cos 2t over 2π: ∫ẋ_p² = 4π amp²/9
            prop_assert!((y.gamma.action - 4.0 * PI * amp * amp / 9.0).abs() < 1e-7);
            prop_assert!((y.gamma_value() - (y.gamma.homogeneous + y.gamma.action / hbar)).abs() < 1e-12);
        }
    }
}

#[test]
fn states_stay_orthonormal_on_a_variable_mass_system() {
    let tau = 2.0 * PI;
    let coeffs = PeriodicCoefficients::new(
        tau,
        FourierSeries::new(tau, 1.0, vec![0.2], vec![]).unwrap(),
        FourierSeries::new(tau, 0.6, vec![0.1], vec![]).unwrap(),
        None,
        0.7,
    )
    .unwrap();
    let tol = ToleranceSettings::default();
    let class = classify(&monodromy(&coeffs, &tol).unwrap(), tau, tol.boundary_eps);
    let basis = build_basis_direct(&coeffs, class, &tol).unwrap();
    let base = QuantumStateSpec::new(&basis, None, coeffs.hbar(), 0).unwrap();
    let specs: Vec<_> = (0..=6).map(|n| base.with_n(n)).collect();
    for t in [0.0, 1.3, 4.9] {
        let grid = SpatialGrid::for_states(&base, t, 6, 10.0, 2049).unwrap();
        let gram = orthonormality_matrix(&specs, t, &grid).unwrap();
        assert!(gram_deviation(&gram) < 1e-9, "t = {t}");
    }
}
