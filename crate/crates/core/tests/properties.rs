//! Property tests over randomized inputs: structural invariants that must
//! hold for every spectrum, profile and state, not just the worked examples.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use backstep_core::closed_loop::{assemble_closed_loop, simulate};
use backstep_core::control::{gram_matrix, minimal_norm_control};
use backstep_core::feedback::{
    build_t, operator_equality_residual, solve_feedback, ControlProfile, FeedbackGains,
};
use backstep_core::linalg;
use backstep_core::riesz::{build_s, frame_bounds, q_vector};
use backstep_core::seeded::unit_state;
use backstep_core::spectral::{
    parity_decompose, parity_recombine, sobolev_inner, CoeffVector, Parity, Spectrum, SystemSpec,
};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), len).prop_map(|v| {
        v.into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect()
    })
}

fn water_wave_spectrum(n: usize) -> Spectrum {
    Spectrum::new(&SystemSpec::water_wave_default(), n, Parity::Odd).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_round_trip_is_exact(coeffs in complex_vec(17)) {
        let (odd, even) = parity_decompose(&coeffs);
        prop_assert_eq!(parity_recombine(&odd, &even), coeffs);
    }

    #[test]
    fn inner_product_is_sesquilinear(
        u in complex_vec(6),
        v in complex_vec(6),
        scale_re in -2.0..2.0f64,
        scale_im in -2.0..2.0f64,
        r in -1.0..1.0f64,
    ) {
        let a = CoeffVector::new(Parity::Odd, 0.0, u.clone());
        let b = CoeffVector::new(Parity::Odd, 0.0, v.clone());
        let s = Complex64::new(scale_re, scale_im);
        let scaled = CoeffVector::new(Parity::Odd, 0.0, u.iter().map(|x| x * s).collect());

        let plain = sobolev_inner(&a, &b, r).unwrap();
        let left = sobolev_inner(&scaled, &b, r).unwrap();
        prop_assert!((left - s * plain).norm() <= 1e-10 * (1.0 + plain.norm() * s.norm()));

        let flipped = sobolev_inner(&b, &a, r).unwrap();
        prop_assert!((flipped - plain.conj()).norm() <= 1e-10 * (1.0 + plain.norm()));
    }

    #[test]
    fn gap_constant_conjugation_invariant(n in 2usize..24) {
        let spectrum = water_wave_spectrum(n);
        let flipped = Spectrum::from_values(
            Parity::Odd,
            spectrum.alpha(),
            spectrum.values().iter().map(|l| -l).collect(),
        );
        let a = backstep_core::spectral::gap_constant(&spectrum);
        let b = backstep_core::spectral::gap_constant(&flipped);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn q_vector_denominators_bounded_by_rate(
        n_modes in 2usize..16,
        lambda in 0.1..10.0f64,
    ) {
        let spectrum = water_wave_spectrum(n_modes);
        for n in 1..=n_modes {
            let q = q_vector(n, &spectrum, lambda).unwrap();
            for c in &q.coeffs {
                prop_assert!(c.norm() <= 1.0 / lambda + 1e-12);
            }
            let diag = q.coeffs[n - 1];
            prop_assert!((diag - Complex64::new(1.0 / lambda, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn split_diagonal_is_identity_over_rate(
        n_modes in 2usize..20,
        lambda in 0.2..5.0f64,
        r in -0.9..0.9f64,
    ) {
        let spectrum = water_wave_spectrum(n_modes);
        let split = build_s(&spectrum, lambda, r).unwrap();
        for i in 0..n_modes {
            prop_assert_eq!(split.s_compact[(i, i)], Complex64::new(0.0, 0.0));
            let d = split.s[(i, i)] - Complex64::new(1.0 / lambda, 0.0);
            prop_assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn unitary_families_have_unit_frame_bounds(phases in proptest::collection::vec(0.0..std::f64::consts::TAU, 5)) {
        // permutation-with-phases unitary
        let n = phases.len();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (i, phi) in phases.iter().enumerate() {
            m[((i + 2) % n, i)] = Complex64::from_polar(1.0, *phi);
        }
        let bounds = frame_bounds(&m);
        prop_assert!((bounds.c1 - 1.0).abs() < 1e-12);
        prop_assert!((bounds.c2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intertwining_residual_is_gain_independent(
        gains_raw in complex_vec(8),
        lambda in 0.3..4.0f64,
    ) {
        let spectrum = water_wave_spectrum(8);
        let profile = ControlProfile::unit(Parity::Odd, 8);
        let candidate = FeedbackGains {
            parity: Parity::Odd,
            corrections: gains_raw
                .iter()
                .map(|k| -(k + Complex64::new(lambda, 0.0)))
                .collect(),
            gains: gains_raw,
            lambda,
            solve_residual: 0.0,
            cond: 1.0,
        };
        let bundle = build_t(&candidate, &profile, &spectrum, lambda, 0.0).unwrap();
        let res = operator_equality_residual(&bundle, &candidate, &profile, &spectrum, lambda);
        let scale = bundle.sigma_min * bundle.cond;
        prop_assert!(res <= 1e-10 * scale.max(1.0), "residual {} at scale {}", res, scale);
    }

    #[test]
    fn synthesis_is_deterministic_and_decomposition_exact(
        n_modes in 2usize..24,
        lambda in 0.3..4.0f64,
        amplitude in -0.8..0.8f64,
    ) {
        let spectrum = water_wave_spectrum(n_modes);
        let profile = ControlProfile::sinusoidal(Parity::Odd, n_modes, amplitude).unwrap();
        let a = solve_feedback(&profile, &spectrum, lambda).unwrap();
        let b = solve_feedback(&profile, &spectrum, lambda).unwrap();
        prop_assert_eq!(&a.gains, &b.gains);
        for i in 0..n_modes {
            let lhs = profile.b[i] * a.gains[i];
            let rhs = -(Complex64::new(lambda, 0.0) + a.corrections[i]);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn free_flow_preserves_moduli(seed in 0u64..1000, n_modes in 2usize..24) {
        let spectrum = water_wave_spectrum(n_modes);
        let profile = ControlProfile::unit(Parity::Odd, n_modes);
        let zero_gains = FeedbackGains {
            parity: Parity::Odd,
            gains: vec![Complex64::new(0.0, 0.0); n_modes],
            corrections: vec![Complex64::new(-1.0, 0.0); n_modes],
            lambda: 1.0,
            solve_residual: 0.0,
            cond: 1.0,
        };
        let mat = assemble_closed_loop(&spectrum, &profile, &zero_gains, 0.0).unwrap();
        let u0 = unit_state(seed, Parity::Odd, n_modes, 0.0);
        let grid: Vec<f64> = (0..9).map(|i| i as f64 * 0.35).collect();
        let traj = simulate(&mat, &u0, &grid, None).unwrap();
        for state in &traj.states {
            for (i, c) in state.iter().enumerate() {
                prop_assert!((c.norm() - u0.coeffs[i].norm()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gram_matrix_is_hermitian_positive(n_modes in 2usize..14, t_horizon in 0.3..3.0f64) {
        let spectrum = water_wave_spectrum(n_modes);
        let g = gram_matrix(&spectrum, t_horizon).unwrap();
        for i in 0..n_modes {
            for j in 0..n_modes {
                prop_assert_eq!(g[(i, j)], g[(j, i)].conj());
            }
        }
        // positive definite in exact arithmetic; at short horizons the
        // family is so close to dependent that the smallest computed
        // eigenvalue can round to a signed zero, so assert nonnegativity at
        // roundoff scale relative to the largest one
        let eig = nalgebra::SymmetricEigen::new(g);
        let emax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        for e in eig.eigenvalues.iter() {
            prop_assert!(*e >= -1e-14 * emax, "eigenvalue {} below roundoff floor", e);
        }
    }

    #[test]
    fn transform_factorization_recomposes(
        n_modes in 2usize..16,
        lambda in 0.4..3.0f64,
        r in -0.7..0.7f64,
    ) {
        let spectrum = water_wave_spectrum(n_modes);
        let profile = ControlProfile::unit(Parity::Odd, n_modes);
        let gains = solve_feedback(&profile, &spectrum, lambda).unwrap();
        let bundle = build_t(&gains, &profile, &spectrum, lambda, r).unwrap();
        let recomposed = &bundle.tau_k * &bundle.tau * &bundle.s;
        let err = linalg::max_abs(&(recomposed - &bundle.t));
        prop_assert!(err <= 1e-11 * linalg::max_abs(&bundle.t).max(1.0));
    }
}

// regression for the case proptest found: 12 exponentials on [0, 0.3] are so
// close to dependent that the smallest Gram eigenvalue rounds to a signed
// zero (about -6e-18) in f64
#[test]
fn short_horizon_gram_rounds_to_semidefinite() {
    let spectrum = water_wave_spectrum(12);
    let g = gram_matrix(&spectrum, 0.3).unwrap();
    let eig = nalgebra::SymmetricEigen::new(g);
    let emax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let emin = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(
        emin >= -1e-14 * emax,
        "eigenvalue {emin} below roundoff floor"
    );
    assert!(emin < 1e-10 * emax, "unexpectedly well conditioned: {emin}");

    // minimal_norm_control must refuse such a horizon rather than return a
    // meaningless plan
    let profile = ControlProfile::unit(Parity::Odd, 12);
    let u0 = unit_state(5, Parity::Odd, 12, 0.0);
    assert!(minimal_norm_control(&u0, &profile, &spectrum, 0.3).is_err());
}
