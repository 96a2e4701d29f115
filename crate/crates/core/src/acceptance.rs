//! The acceptance suite: one function per verifiable claim, each pinned to
//! its tolerance. The CLI `acceptance` subcommand and the integration test
//! target both run [`run_all`] and report one line per criterion.

use std::time::Instant;

use num_complex::Complex64;

use crate::closed_loop::{
    assemble_closed_loop, closed_loop_spectrum, decay_rate, simulate, NormKind,
};
use crate::control::{minimal_norm_control, verify_null_control};
use crate::feedback::{
    asymptotic_refinement, build_t, operator_equality_residual, solve_feedback, ControlProfile,
    FeedbackGains,
};
use crate::riesz::{riesz_bounds, riesz_family, sum_bound_check, SUM_CHECK_OVERSAMPLING};
use crate::seeded::unit_state;
use crate::spectral::{gap_constant, Parity, Spectrum, SystemSpec};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        CriterionResult {
            id,
            name,
            passed,
            detail,
        }
    }
}

/// Base seed for every randomized acceptance input.
pub const ACCEPTANCE_SEED: u64 = 42;

fn ww_spectrum(n: usize) -> Spectrum {
    Spectrum::new(&SystemSpec::water_wave_default(), n, Parity::Odd)
        .expect("default water-wave spectrum")
}

fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| t_end * i as f64 / (points - 1) as f64)
        .collect()
}

fn pole_shift_worst_mismatch(
    spec: &SystemSpec,
    n: usize,
    lambda: f64,
) -> crate::error::Result<f64> {
    let spectrum = Spectrum::new(spec, n, Parity::Odd)?;
    let profile = ControlProfile::unit(Parity::Odd, spectrum.len());
    let gains = solve_feedback(&profile, &spectrum, lambda)?;
    let mat = assemble_closed_loop(&spectrum, &profile, &gains, 0.0)?;
    let eigs = closed_loop_spectrum(&mat)?;
    let mut worst = 0.0_f64;
    for (i, eig) in eigs.iter().enumerate() {
        let expected = spectrum.value(i) - Complex64::new(lambda, 0.0);
        worst = worst.max((eig - expected).norm() / expected.norm());
    }
    Ok(worst)
}

/// Criterion 1: closed-loop poles are the open-loop ones shifted by the
/// requested rate, within 1e-8 relative, in under two seconds.
pub fn criterion_pole_shift() -> CriterionResult {
    let started = Instant::now();
    let spec = SystemSpec::water_wave_default();
    let outcome = pole_shift_worst_mismatch(&spec, 64, 1.0);
    let elapsed = started.elapsed().as_secs_f64();
    match outcome {
        Ok(worst) => CriterionResult::new(
            1,
            "pole shift at N = 64",
            worst <= 1e-8 && elapsed < 2.0,
            format!("worst relative mismatch {worst:.3e}, elapsed {elapsed:.2} s"),
        ),
        Err(e) => CriterionResult::new(1, "pole shift at N = 64", false, e.to_string()),
    }
}

/// Criterion 2: the transformed norm decays exactly like `e^{-lambda t}` at
/// every grid point, for three rates and ten seeded initial states.
pub fn criterion_dnorm_decay() -> CriterionResult {
    let run = || -> crate::error::Result<f64> {
        let n = 64;
        let spectrum = ww_spectrum(n);
        let profile = ControlProfile::unit(Parity::Odd, n);
        let grid = uniform_grid(6.0, 256);
        let mut worst = 0.0_f64;
        for lambda in [0.5, 1.0, 5.0] {
            let gains = solve_feedback(&profile, &spectrum, lambda)?;
            let bundle = build_t(&gains, &profile, &spectrum, lambda, 0.0)?;
            let mat = assemble_closed_loop(&spectrum, &profile, &gains, 0.0)?;
            for trial in 0..10 {
                let u0 = unit_state(ACCEPTANCE_SEED + trial, Parity::Odd, n, 0.0);
                let traj = simulate(&mat, &u0, &grid, Some(&bundle))?;
                let d = traj.norms_d.as_ref().expect("bundle supplied");
                let d0 = d[0].ln();
                for (t, dn) in traj.times.iter().zip(d) {
                    worst = worst.max((dn.ln() - d0 + lambda * t).abs());
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CriterionResult::new(
            2,
            "exact transformed-norm decay",
            worst <= 1e-6,
            format!("worst |log d + lambda t - log d0| = {worst:.3e}"),
        ),
        Err(e) => CriterionResult::new(2, "exact transformed-norm decay", false, e.to_string()),
    }
}

/// Criterion 3: plain and weighted Sobolev norms decay at the requested rate
/// to 2%, with tight exponential fits, once the transient window is skipped.
///
/// Known to fail at the larger rates: once `lambda` exceeds the low-mode
/// eigenvalue gaps the transform's condition number explodes (2.7e3 at
/// `lambda = 5`), the plain norms oscillate inside a log-band of that width,
/// and the fit window `[1/lambda, 6/lambda]` is shorter than the slowest
/// beat period (2pi over the first eigenvalue gap, about 2.7 s), so no
/// window of that length can produce a 2% single-exponential fit. The
/// transformed norm of criterion 2 is the decay statement that holds
/// exactly.
pub fn criterion_sobolev_decay() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64, Vec<String>)> {
        let n = 64;
        let spectrum = ww_spectrum(n);
        let profile = ControlProfile::unit(Parity::Odd, n);
        let mut worst_rate_err = 0.0_f64;
        let mut worst_r2 = 1.0_f64;
        let mut per_rate = Vec::new();
        for lambda in [0.5, 1.0, 5.0] {
            let gains = solve_feedback(&profile, &spectrum, lambda)?;
            let mat = assemble_closed_loop(&spectrum, &profile, &gains, 0.5)?;
            let grid = uniform_grid(6.0 / lambda, 256);
            let window = (1.0 / lambda, 6.0 / lambda);
            let mut rate_err = 0.0_f64;
            let mut r2_min = 1.0_f64;
            for trial in 0..10 {
                let u0 = unit_state(ACCEPTANCE_SEED + trial, Parity::Odd, n, 0.0);
                let traj = simulate(&mat, &u0, &grid, None)?;
                for kind in [NormKind::L2, NormKind::Hr] {
                    let (rate, r2) = decay_rate(&traj, kind, window)?;
                    rate_err = rate_err.max((rate + lambda).abs() / lambda);
                    r2_min = r2_min.min(r2);
                }
            }
            per_rate.push(format!(
                "lambda={lambda}: err {rate_err:.2e}, r2 {r2_min:.4}"
            ));
            worst_rate_err = worst_rate_err.max(rate_err);
            worst_r2 = worst_r2.min(r2_min);
        }
        Ok((worst_rate_err, worst_r2, per_rate))
    };
    match run() {
        Ok((rate_err, r2, per_rate)) => CriterionResult::new(
            3,
            "Sobolev decay rates",
            rate_err <= 0.02 && r2 >= 0.999,
            format!("[{}]", per_rate.join("; ")),
        ),
        Err(e) => CriterionResult::new(3, "Sobolev decay rates", false, e.to_string()),
    }
}

/// Criterion 4: gain boundedness and tail decay under truncation refinement.
pub fn criterion_gain_decay() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64, f64, f64, f64)> {
        let g256 = solve_feedback(
            &ControlProfile::unit(Parity::Odd, 256),
            &ww_spectrum(256),
            1.0,
        )?;
        let g512 = solve_feedback(
            &ControlProfile::unit(Parity::Odd, 512),
            &ww_spectrum(512),
            1.0,
        )?;
        let max_k = |g: &FeedbackGains| g.gains.iter().map(|k| k.norm()).fold(0.0, f64::max);
        let max256 = max_k(&g256);
        let max512 = max_k(&g512);
        let weighted: Vec<f64> = g512
            .corrections
            .iter()
            .enumerate()
            .map(|(i, k)| k.norm() * ((i + 1) as f64).powf(0.4))
            .collect();
        let head = weighted[..16].iter().cloned().fold(0.0, f64::max);
        let tail = weighted.iter().cloned().fold(0.0, f64::max);
        // gain magnitudes are the truncation-stable quantity; the complex
        // values rotate by a global phase that decays only like N^{-1/2}
        let mut drift = 0.0_f64;
        for i in 0..128 {
            drift = drift
                .max((g512.gains[i].norm() - g256.gains[i].norm()).abs() / g256.gains[i].norm());
        }
        Ok((max256, max512, head, tail, drift))
    };
    match run() {
        Ok((max256, max512, head, tail, drift)) => {
            let passed = max512 <= 1.2 * max256 && tail <= 2.0 * head && drift <= 1e-4;
            CriterionResult::new(
                4,
                "gain boundedness and tail decay",
                passed,
                format!(
                    "max|K| {max256:.6} -> {max512:.6}, weighted tail {tail:.4} vs head {head:.4}, magnitude drift {drift:.3e} on n <= 128"
                ),
            )
        }
        Err(e) => CriterionResult::new(4, "gain boundedness and tail decay", false, e.to_string()),
    }
}

/// Criterion 5: frame bounds of the weighted resolvent family stay put when
/// the truncation doubles, across the Sobolev range.
pub fn criterion_frame_stability() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64)> {
        let s128 = ww_spectrum(128);
        let s256 = ww_spectrum(256);
        let mut worst_change = 0.0_f64;
        let mut min_c1 = f64::INFINITY;
        for r in [-0.9, 0.0, 0.9] {
            let b128 = riesz_bounds(&riesz_family(&s128, 1.0, r)?);
            let b256 = riesz_bounds(&riesz_family(&s256, 1.0, r)?);
            min_c1 = min_c1.min(b128.c1).min(b256.c1);
            worst_change = worst_change.max((b256.cond - b128.cond).abs() / b128.cond);
        }
        Ok((worst_change, min_c1))
    };
    match run() {
        Ok((change, min_c1)) => CriterionResult::new(
            5,
            "frame-bound stability",
            change <= 0.10 && min_c1 > 0.0,
            format!("worst condition drift {change:.3e}, smallest lower bound {min_c1:.3e}"),
        ),
        Err(e) => CriterionResult::new(5, "frame-bound stability", false, e.to_string()),
    }
}

/// Criterion 6: the intertwining identity holds to 1e-10 of the transform
/// norm at N = 256, and stays at roundoff scale for arbitrary gains.
pub fn criterion_operator_equality() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64)> {
        let spectrum = ww_spectrum(256);
        let profile = ControlProfile::unit(Parity::Odd, 256);
        let gains = solve_feedback(&profile, &spectrum, 1.0)?;
        let bundle = build_t(&gains, &profile, &spectrum, 1.0, 0.0)?;
        let res = operator_equality_residual(&bundle, &gains, &profile, &spectrum, 1.0);
        let scale = bundle.sigma_min * bundle.cond; // sigma_max
        let rel_synth = res / scale.max(1.0);

        // gain independence at N = 8
        use rand_core::{RngCore, SeedableRng};
        let spectrum8 = ww_spectrum(8);
        let profile8 = ControlProfile::unit(Parity::Odd, 8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED);
        let mut unif = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut worst_random = 0.0_f64;
        for _ in 0..100 {
            let raw: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(4.0 * unif() - 2.0, 4.0 * unif() - 2.0))
                .collect();
            let candidate = FeedbackGains {
                parity: Parity::Odd,
                corrections: raw
                    .iter()
                    .map(|k| -(k + Complex64::new(1.0, 0.0)))
                    .collect(),
                gains: raw,
                lambda: 1.0,
                solve_residual: 0.0,
                cond: 1.0,
            };
            let b = build_t(&candidate, &profile8, &spectrum8, 1.0, 0.0)?;
            let r = operator_equality_residual(&b, &candidate, &profile8, &spectrum8, 1.0);
            let smax = b.sigma_min * b.cond;
            worst_random = worst_random.max(r / smax.max(1.0));
        }
        Ok((rel_synth, worst_random))
    };
    match run() {
        Ok((rel_synth, rel_random)) => CriterionResult::new(
            6,
            "intertwining identity residual",
            rel_synth <= 1e-10 && rel_random <= 1e-10,
            format!("synthesized {rel_synth:.3e}, worst of 100 random gain draws {rel_random:.3e}"),
        ),
        Err(e) => CriterionResult::new(6, "intertwining identity residual", false, e.to_string()),
    }
}

/// Criterion 7: moment-method control drives a random state to zero.
pub fn criterion_null_control() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64, f64)> {
        let n = 16;
        let spectrum = ww_spectrum(n);
        let profile = ControlProfile::unit(Parity::Odd, n);
        let u0 = unit_state(ACCEPTANCE_SEED, Parity::Odd, n, 0.0);
        let plan = minimal_norm_control(&u0, &profile, &spectrum, 1.0)?;
        let report = verify_null_control(&u0, &plan, &profile, &spectrum, 1.0 / 4096.0);
        Ok((
            report.final_relative_norm,
            report.moment_residual,
            report.quadrature_mismatch,
        ))
    };
    match run() {
        Ok((final_norm, moments, quad)) => CriterionResult::new(
            7,
            "null controllability at N = 16",
            final_norm <= 1e-6 && moments <= 1e-10 && quad <= 1e-8,
            format!(
                "final relative norm {final_norm:.3e}, moment residual {moments:.3e}, quadrature mismatch {quad:.3e}"
            ),
        ),
        Err(e) => CriterionResult::new(7, "null controllability at N = 16", false, e.to_string()),
    }
}

/// Criterion 8: the eigenvalue gap constant and the resolvent sum ratios are
/// positive, finite and stable under refinement.
pub fn criterion_gap_and_sums() -> CriterionResult {
    let run = || -> crate::error::Result<(f64, f64, f64)> {
        let g128 = gap_constant(&ww_spectrum(128));
        let g256 = gap_constant(&ww_spectrum(256));
        let gap_drift = (g256 - g128).abs() / g128;

        let mut worst_sum_drift = 0.0_f64;
        let spec64 = ww_spectrum(SUM_CHECK_OVERSAMPLING * 64);
        let spec128 = ww_spectrum(SUM_CHECK_OVERSAMPLING * 128);
        for s in [-0.5, 0.0, 0.4] {
            let r64 = sum_bound_check(s, &spec64, 64)?;
            let r128 = sum_bound_check(s, &spec128, 128)?;
            if !r64.sup_ratio.is_finite() || !r128.sup_ratio.is_finite() {
                return Err(crate::error::Error::Numerical("sum ratio diverged".into()));
            }
            worst_sum_drift =
                worst_sum_drift.max((r128.sup_ratio - r64.sup_ratio).abs() / r64.sup_ratio);
        }
        Ok((g128.min(g256), gap_drift, worst_sum_drift))
    };
    match run() {
        Ok((gap_min, gap_drift, sum_drift)) => CriterionResult::new(
            8,
            "gap constant and sum estimates",
            gap_min > 0.0 && gap_drift <= 0.05 && sum_drift <= 0.15,
            format!(
                "gap constant >= {gap_min:.6}, drift {gap_drift:.3e}; worst sum-ratio drift {sum_drift:.3e}"
            ),
        ),
        Err(e) => CriterionResult::new(8, "gap constant and sum estimates", false, e.to_string()),
    }
}

/// Criterion 9: the layer schedule for a slowly growing multiplier
/// terminates after two refinements with non-increasing corrections.
///
/// The sup-monotonicity clause is known to fail: the first layer re-expands
/// the correction through the resolvent sums, whose coherent low-mode
/// accumulation grows the sup (2.64 to 3.92 at N = 256, attained at modes 1
/// and 2) before the exponent schedule wins at the next level. The layered
/// reassembly identity and the schedule arithmetic hold exactly.
pub fn criterion_refinement_schedule() -> CriterionResult {
    let run = || -> crate::error::Result<(Vec<f64>, Vec<f64>, bool)> {
        let spec = SystemSpec::power_law(1.2)?;
        let spectrum = Spectrum::new(&spec, 256, Parity::Odd)?;
        let profile = ControlProfile::unit(Parity::Odd, 256);
        let gains = solve_feedback(&profile, &spectrum, 1.0)?;
        let layers = asymptotic_refinement(&gains, &spectrum, 1.0, &profile, 8)?;
        Ok((
            layers.schedule.clone(),
            layers.sup_k.clone(),
            layers.terminated,
        ))
    };
    match run() {
        Ok((schedule, sup_k, terminated)) => {
            let schedule_ok = terminated
                && schedule.len() == 3
                && (schedule[0] - 0.3).abs() < 1e-12
                && (schedule[1] - 0.1).abs() < 1e-10
                && (schedule[2] + 0.1).abs() < 1e-10;
            let monotone = sup_k.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            CriterionResult::new(
                9,
                "layer schedule for alpha = 1.2",
                schedule_ok && monotone,
                format!("schedule {schedule:?}, correction sups {sup_k:?}"),
            )
        }
        Err(e) => CriterionResult::new(9, "layer schedule for alpha = 1.2", false, e.to_string()),
    }
}

/// Criterion 10: the pole shift replays on generic power-law multipliers.
pub fn criterion_general_pole_shift() -> CriterionResult {
    let run = || -> crate::error::Result<f64> {
        let mut worst = 0.0_f64;
        for alpha in [1.2, 2.0] {
            let spec = SystemSpec::power_law(alpha)?;
            worst = worst.max(pole_shift_worst_mismatch(&spec, 64, 1.0)?);
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CriterionResult::new(
            10,
            "pole shift for generic multipliers",
            worst <= 1e-8,
            format!("worst relative mismatch {worst:.3e} over alpha in {{1.2, 2}}"),
        ),
        Err(e) => CriterionResult::new(
            10,
            "pole shift for generic multipliers",
            false,
            e.to_string(),
        ),
    }
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_pole_shift(),
        criterion_dnorm_decay(),
        criterion_sobolev_decay(),
        criterion_gain_decay(),
        criterion_frame_stability(),
        criterion_operator_equality(),
        criterion_null_control(),
        criterion_gap_and_sums(),
        criterion_refinement_schedule(),
        criterion_general_pole_shift(),
    ]
}
