//! Open-loop null controllability through the moment method.
//!
//! Driving a state to zero at time `T` reduces, mode by mode, to the moment
//! constraints `int_0^T e^{-lambda_n s} v(s) ds = -u0_n / b_n`. The
//! exponentials `f_n(s) = e^{-lambda_n s}` have pairwise inner products in
//! closed form, so the minimal-norm control in their conjugate span comes out
//! of one Hermitian solve against the Gram matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::feedback::ControlProfile;
use crate::spectral::{CoeffVector, Spectrum};

/// Lower/upper bound report on the control samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondBReport {
    pub pass: bool,
    pub c1: f64,
    pub c2: f64,
}

/// Check that every retained mode is actuated.
pub fn check_condb(profile: &ControlProfile) -> CondBReport {
    CondBReport {
        pass: profile.satisfies_lower_bound(),
        c1: profile.c1,
        c2: profile.c2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    /// Gaps are measured over frequencies with index at least `n0`.
    pub n0: usize,
    /// Smallest adjacent frequency gap beyond `n0`.
    pub gamma: f64,
    /// Horizon above which the nonharmonic family is well-conditioned when
    /// only those frequencies matter: `2 pi / gamma`.
    pub min_horizon: f64,
}

/// Adjacent-gap survey of the frequency sequence `omega_n = |lambda_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// Uniform lower gap over the whole range.
    pub omega: f64,
    /// False when two retained frequencies coincide.
    pub pass: bool,
    pub rows: Vec<GapRow>,
}

/// Survey adjacent frequency gaps, cutting the head at successive powers of
/// two. For spectra with super-linear growth the tail gap `gamma` improves as
/// the head is discarded, shrinking the usable horizon `2 pi / gamma`.
pub fn ingham_gap_report(spectrum: &Spectrum) -> Result<GapReport> {
    if spectrum.len() < 3 {
        return Err(Error::InsufficientSample(
            "gap report needs at least three modes".into(),
        ));
    }
    let omegas: Vec<f64> = spectrum.values().iter().map(|l| l.norm()).collect();
    let gaps: Vec<f64> = omegas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let omega = gaps.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut rows = Vec::new();
    let mut n0 = 1usize;
    while n0 < spectrum.len() {
        let from = n0.saturating_sub(spectrum.parity().first_mode());
        let gamma = gaps[from..].iter().cloned().fold(f64::INFINITY, f64::min);
        if !gamma.is_finite() {
            break;
        }
        rows.push(GapRow {
            n0,
            gamma,
            min_horizon: 2.0 * std::f64::consts::PI / gamma,
        });
        n0 *= 2;
    }
    Ok(GapReport {
        omega,
        pass: omega > 0.0,
        rows,
    })
}

/// Closed-form inner product `int_0^T e^{i w1 s} e^{-i w2 s} ds`.
fn exp_inner(w1: f64, w2: f64, t_horizon: f64) -> Complex64 {
    let d = w1 - w2;
    if d == 0.0 {
        return Complex64::new(t_horizon, 0.0);
    }
    let id = Complex64::new(0.0, d);
    ((id * t_horizon).exp() - Complex64::new(1.0, 0.0)) / id
}

/// Duplicate frequencies below this spacing make the Gram matrix singular.
const FREQUENCY_COLLISION_TOL: f64 = 1e-12;

/// Gram matrix of the exponential family `f_n(s) = e^{-lambda_n s}` on
/// `[0, T]`; Hermitian by construction, with `T` on the diagonal.
pub fn gram_matrix(spectrum: &Spectrum, t_horizon: f64) -> Result<DMatrix<Complex64>> {
    if !t_horizon.is_finite() || t_horizon <= 0.0 {
        return Err(Error::Config(format!(
            "control horizon must be positive, got {t_horizon}"
        )));
    }
    let omegas: Vec<f64> = spectrum.values().iter().map(|l| l.norm()).collect();
    for i in 0..omegas.len() {
        for j in 0..i {
            if (omegas[i] - omegas[j]).abs() < FREQUENCY_COLLISION_TOL {
                return Err(Error::Singular(format!(
                    "duplicate frequencies at slots {j} and {i}: the exponential family degenerates"
                )));
            }
        }
    }
    let n = omegas.len();
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        g[(i, i)] = Complex64::new(t_horizon, 0.0);
        for j in 0..i {
            let v = exp_inner(omegas[i], omegas[j], t_horizon);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Moment targets, Gram data and minimal-norm control coefficients for one
/// steering problem.
///
/// The control is held in two bases. The numerically faithful one is the
/// Gram-Schmidt orthonormalization of the exponential family (coefficients
/// `ortho_coeffs` against the Cholesky factor `chol_l`, `G = L L^H`): there
/// the coefficient vector has the size of the control itself and the moments
/// evaluate stably as `L * conj-free forward product`. The raw-exponential
/// coefficients `coefficients` are derived from it for pointwise evaluation
/// and export; they can be many orders of magnitude larger than the control
/// norm when the Gram matrix is ill-conditioned, so they must not be used to
/// measure moment residuals.
#[derive(Debug, Clone)]
pub struct ControlPlan {
    pub t_horizon: f64,
    pub gram: DMatrix<Complex64>,
    /// Lower-triangular Cholesky factor of the Gram matrix.
    pub chol_l: DMatrix<Complex64>,
    /// Moment targets `d_n = -u0_n / b_n`.
    pub targets: Vec<Complex64>,
    /// Expansion coefficients of `v` over the conjugate exponentials.
    pub coefficients: Vec<Complex64>,
    /// Expansion coefficients over the orthonormalized family.
    pub ortho_coeffs: Vec<Complex64>,
    pub gram_cond: f64,
    /// `L^2(0, T)` norm of the control signal.
    pub control_norm: f64,
}

impl ControlPlan {
    /// Control signal `v(t) = sum_m c_m conj(f_m(t))`.
    pub fn control_value(&self, spectrum: &Spectrum, t: f64) -> Complex64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let w = spectrum.value(m).norm();
                c * Complex64::new(0.0, -w * t).exp()
            })
            .sum()
    }

    /// Rows of the biorthogonal family evaluated through the Gram inverse:
    /// column `m` of `G^{-1}` gives the coefficients expressing the `m`-th
    /// biorthogonal function over the conjugate exponentials.
    pub fn biorthogonal_coefficients(&self) -> Result<DMatrix<Complex64>> {
        self.gram
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Singular("gram matrix is not invertible".into()))
    }

    /// Achieved moments `int_0^T e^{-lambda_p s} v(s) ds`, evaluated through
    /// the Cholesky factor where the arithmetic stays at control-norm scale.
    pub fn achieved_moments(&self) -> Vec<Complex64> {
        let beta = DVector::from_vec(self.ortho_coeffs.clone());
        let moments = &self.chol_l * beta;
        moments.iter().cloned().collect()
    }
}

/// Solve for the minimal-norm control steering `u0` to zero at `t_horizon`.
pub fn minimal_norm_control(
    u0: &CoeffVector,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    t_horizon: f64,
) -> Result<ControlPlan> {
    if u0.parity != spectrum.parity() || u0.len() != spectrum.len() {
        return Err(Error::Shape(
            "initial state does not match the spectrum's sector".into(),
        ));
    }
    if profile.len() != spectrum.len() {
        return Err(Error::Shape(
            "control profile length differs from spectrum".into(),
        ));
    }
    if !profile.satisfies_lower_bound() {
        return Err(Error::ControlProfile(
            "unactuated mode: moment targets are undefined".into(),
        ));
    }
    let gram = gram_matrix(spectrum, t_horizon)?;

    let eig = nalgebra::SymmetricEigen::new(gram.clone());
    let mut emin = f64::INFINITY;
    let mut emax = 0.0_f64;
    for e in eig.eigenvalues.iter() {
        emin = emin.min(*e);
        emax = emax.max(*e);
    }
    let gram_cond = if emin > 0.0 {
        emax / emin
    } else {
        f64::INFINITY
    };
    if !gram_cond.is_finite() || gram_cond > 1e12 {
        return Err(Error::Singular(format!(
            "gram matrix condition {gram_cond:.3e} too large; increase the control horizon beyond {t_horizon}"
        )));
    }

    let targets: Vec<Complex64> = u0
        .coeffs
        .iter()
        .zip(&profile.b)
        .map(|(u, b)| -u / b)
        .collect();
    let rhs = DVector::from_vec(targets.clone());

    // G = L L^H; solving the two triangular systems keeps every intermediate
    // at the scale of the control norm, so the achieved moments L y match
    // the targets to roundoff even when G is badly conditioned.
    let chol = nalgebra::linalg::Cholesky::new(gram.clone()).ok_or_else(|| {
        Error::Singular("gram matrix lost positive definiteness in finite precision".into())
    })?;
    let chol_l = chol.l();
    let ortho = chol_l
        .solve_lower_triangular(&rhs)
        .ok_or_else(|| Error::Singular("forward substitution failed".into()))?;
    let coeffs = chol_l
        .ad_solve_lower_triangular(&ortho)
        .ok_or_else(|| Error::Singular("back substitution failed".into()))?;

    let rhs_norm = rhs.norm();
    let residual = (&chol_l * &ortho - &rhs).norm();
    if rhs_norm > 0.0 && residual > 1e-10 * rhs_norm {
        return Err(Error::Numerical(format!(
            "moment solve residual {residual:.3e} above tolerance"
        )));
    }

    Ok(ControlPlan {
        t_horizon,
        gram,
        chol_l,
        targets,
        coefficients: coeffs.iter().cloned().collect(),
        ortho_coeffs: ortho.iter().cloned().collect(),
        gram_cond,
        control_norm: ortho.norm(),
    })
}

/// Outcome of replaying a control plan through the mode ODEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullControlReport {
    /// `||u(T)|| / ||u0||`; zero when the initial state is zero.
    pub final_relative_norm: f64,
    /// Worst deviation of the achieved moments from their targets.
    pub moment_residual: f64,
    /// Worst disagreement between closed-form moment integrals and composite
    /// Gauss quadrature at the requested step.
    pub quadrature_mismatch: f64,
}

/// Abscissas/weights of 3-point Gauss-Legendre on [-1, 1].
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Replay the plan: per-mode Duhamel integrals evaluated in closed form,
/// cross-checked against composite Gauss quadrature with step `dt`.
pub fn verify_null_control(
    u0: &CoeffVector,
    plan: &ControlPlan,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    dt: f64,
) -> NullControlReport {
    let n = spectrum.len();
    let t_end = plan.t_horizon;
    let omegas: Vec<f64> = spectrum.values().iter().map(|l| l.norm()).collect();

    let mut final_norm_sq = 0.0;
    let mut moment_residual = 0.0_f64;
    let mut quadrature_mismatch = 0.0_f64;

    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;

    // sample the control once per Gauss node, not once per mode
    let mut nodes = Vec::with_capacity(steps * GAUSS3.len());
    for step in 0..steps {
        let a = step as f64 * h;
        for (x, w) in GAUSS3 {
            let s = a + 0.5 * h * (x + 1.0);
            nodes.push((s, 0.5 * h * w, plan.control_value(spectrum, s)));
        }
    }

    let closed_moments = plan.achieved_moments();
    for p in 0..n {
        let closed = closed_moments[p];
        moment_residual = moment_residual.max((closed - plan.targets[p]).norm());

        // quadrature of e^{-lambda_p s} v(s)
        let mut quad = Complex64::new(0.0, 0.0);
        for (s, w, v) in &nodes {
            let kernel = Complex64::new(0.0, omegas[p] * s).exp();
            quad += Complex64::new(*w, 0.0) * kernel * v;
        }
        quadrature_mismatch = quadrature_mismatch.max((quad - closed).norm());

        // Duhamel: u_p(T) = e^{lambda_p T} (u0_p + b_p I_p)
        let evolve = (spectrum.value(p) * t_end).exp();
        let u_final = evolve * (u0.coeffs[p] + profile.b[p] * closed);
        final_norm_sq += u_final.norm_sqr();
    }

    let u0_norm = u0.norm_in(0.0);
    let final_relative_norm = if u0_norm > 0.0 {
        final_norm_sq.sqrt() / u0_norm
    } else {
        final_norm_sq.sqrt()
    };
    NullControlReport {
        final_relative_norm,
        moment_residual,
        quadrature_mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Parity, SystemSpec};
    use approx::assert_relative_eq;

    fn ww_spectrum(n: usize) -> Spectrum {
        Spectrum::new(&SystemSpec::water_wave_default(), n, Parity::Odd).unwrap()
    }

    #[test]
    fn condb_reports_bounds() {
        let profile = ControlProfile::unit(Parity::Odd, 8);
        let rep = check_condb(&profile);
        assert!(rep.pass);
        assert_eq!((rep.c1, rep.c2), (1.0, 1.0));

        let mut b = vec![Complex64::new(1.0, 0.0); 8];
        b[2] = Complex64::new(0.0, 0.0);
        let broken = ControlProfile::from_values(Parity::Odd, b);
        assert!(!check_condb(&broken).pass);

        let wavy = ControlProfile::sinusoidal(Parity::Odd, 64, 0.5).unwrap();
        let rep = check_condb(&wavy);
        assert!(rep.pass && rep.c1 >= 0.5 && rep.c2 <= 1.5);
    }

    #[test]
    fn gap_report_water_wave_gaps_grow() {
        let spectrum = ww_spectrum(64);
        let report = ingham_gap_report(&spectrum).unwrap();
        assert!(report.pass);
        assert!(report.omega > 0.0);
        let g1 = report.rows.iter().find(|r| r.n0 == 1).unwrap().gamma;
        let g32 = report.rows.iter().find(|r| r.n0 == 32).unwrap().gamma;
        assert!(g32 > g1);
        // horizons shrink as the head is discarded
        for w in report.rows.windows(2) {
            assert!(w[1].min_horizon <= w[0].min_horizon + 1e-12);
        }
    }

    #[test]
    fn gap_report_uniform_spacing() {
        let values: Vec<Complex64> = (1..=16).map(|n| Complex64::new(0.0, -(n as f64))).collect();
        let spectrum = Spectrum::from_values(Parity::Odd, 1.5, values);
        let report = ingham_gap_report(&spectrum).unwrap();
        for row in &report.rows {
            assert_relative_eq!(row.gamma, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn gap_report_flags_degenerate_frequencies() {
        let spectrum = Spectrum::from_values(
            Parity::Odd,
            1.5,
            vec![
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, -2.0),
            ],
        );
        let report = ingham_gap_report(&spectrum).unwrap();
        assert!(!report.pass);
        assert_eq!(report.omega, 0.0);
    }

    #[test]
    fn gram_single_mode_is_horizon() {
        let spectrum = Spectrum::from_values(Parity::Odd, 1.5, vec![Complex64::new(0.0, -1.0)]);
        let g = gram_matrix(&spectrum, 0.8).unwrap();
        assert_eq!(g[(0, 0)], Complex64::new(0.8, 0.0));
    }

    #[test]
    fn gram_full_period_decouples() {
        use std::f64::consts::PI;
        let spectrum = Spectrum::from_values(
            Parity::Odd,
            1.5,
            vec![
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, -(1.0 + 2.0 * PI)),
            ],
        );
        let g = gram_matrix(&spectrum, 1.0).unwrap();
        assert!(g[(0, 1)].norm() < 1e-14);
        assert!(g[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn gram_is_hermitian_and_positive() {
        let spectrum = ww_spectrum(16);
        let g = gram_matrix(&spectrum, 1.0).unwrap();
        let mut herm_err = 0.0_f64;
        for i in 0..16 {
            for j in 0..16 {
                herm_err = herm_err.max((g[(i, j)] - g[(j, i)].conj()).norm());
            }
        }
        assert!(herm_err == 0.0);
        let eig = nalgebra::SymmetricEigen::new(g);
        assert!(eig.eigenvalues.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn gram_rejects_duplicate_frequencies() {
        let spectrum = Spectrum::from_values(
            Parity::Odd,
            1.5,
            vec![Complex64::new(0.0, -2.0), Complex64::new(0.0, -2.0)],
        );
        assert!(matches!(
            gram_matrix(&spectrum, 1.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn zero_state_needs_no_control() {
        let spectrum = ww_spectrum(8);
        let profile = ControlProfile::unit(Parity::Odd, 8);
        let u0 = CoeffVector::zeros(Parity::Odd, 0.0, 8);
        let plan = minimal_norm_control(&u0, &profile, &spectrum, 1.0).unwrap();
        assert!(plan.coefficients.iter().all(|c| c.norm() < 1e-14));
        assert_eq!(plan.control_norm, 0.0);
    }

    #[test]
    fn single_mode_plan_by_hand() {
        // G = [T], d = -u0/b = -1, so c = -1/T = -1 at T = 1.
        let spectrum = ww_spectrum(1);
        let profile = ControlProfile::unit(Parity::Odd, 1);
        let u0 = CoeffVector::unit(Parity::Odd, 0.0, 1, 1);
        let plan = minimal_norm_control(&u0, &profile, &spectrum, 1.0).unwrap();
        assert_relative_eq!(plan.coefficients[0].re, -1.0, max_relative = 1e-13);
        assert!(plan.coefficients[0].im.abs() < 1e-14);

        let report = verify_null_control(&u0, &plan, &profile, &spectrum, 1.0 / 4096.0);
        assert!(report.final_relative_norm <= 1e-12);
    }

    #[test]
    fn free_flow_is_isometric() {
        let spectrum = ww_spectrum(8);
        let profile = ControlProfile::unit(Parity::Odd, 8);
        let u0 = CoeffVector::new(
            Parity::Odd,
            0.0,
            (0..8)
                .map(|i| Complex64::new(0.3 * i as f64 - 1.0, 0.7 - 0.1 * i as f64))
                .collect(),
        );
        let gram = gram_matrix(&spectrum, 1.0).unwrap();
        let chol_l = nalgebra::linalg::Cholesky::new(gram.clone()).unwrap().l();
        let plan = ControlPlan {
            t_horizon: 1.0,
            gram,
            chol_l,
            targets: vec![Complex64::new(0.0, 0.0); 8],
            coefficients: vec![Complex64::new(0.0, 0.0); 8],
            ortho_coeffs: vec![Complex64::new(0.0, 0.0); 8],
            gram_cond: 1.0,
            control_norm: 0.0,
        };
        let report = verify_null_control(&u0, &plan, &profile, &spectrum, 1.0 / 512.0);
        assert_relative_eq!(report.final_relative_norm, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn full_pipeline_n16_drives_state_to_zero() {
        let spectrum = ww_spectrum(16);
        let profile = ControlProfile::unit(Parity::Odd, 16);
        let u0 = crate::seeded::unit_state(11, Parity::Odd, 16, 0.0);
        let plan = minimal_norm_control(&u0, &profile, &spectrum, 1.0).unwrap();
        let report = verify_null_control(&u0, &plan, &profile, &spectrum, 1.0 / 4096.0);
        assert!(report.final_relative_norm <= 1e-6, "{report:?}");
        assert!(report.moment_residual <= 1e-10);
        assert!(report.quadrature_mismatch <= 1e-8);
    }

    #[test]
    fn biorthogonal_coefficients_invert_the_gram() {
        // well-conditioned small case: the recovered family must pair to
        // the identity against the exponentials
        let spectrum = ww_spectrum(6);
        let profile = ControlProfile::unit(Parity::Odd, 6);
        let u0 = crate::seeded::unit_state(1, Parity::Odd, 6, 0.0);
        let plan = minimal_norm_control(&u0, &profile, &spectrum, 2.0).unwrap();
        let inv = plan.biorthogonal_coefficients().unwrap();
        let eye = &inv * &plan.gram;
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)].re - expected).abs() < 1e-9);
                assert!(eye[(i, j)].im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plan_scales_linearly_with_state() {
        let spectrum = ww_spectrum(12);
        let profile = ControlProfile::unit(Parity::Odd, 12);
        let u0 = crate::seeded::unit_state(3, Parity::Odd, 12, 0.0);
        let mut u0_double = u0.clone();
        for c in u0_double.coeffs.iter_mut() {
            *c *= Complex64::new(2.0, 0.0);
        }
        let p1 = minimal_norm_control(&u0, &profile, &spectrum, 1.0).unwrap();
        let p2 = minimal_norm_control(&u0_double, &profile, &spectrum, 1.0).unwrap();
        for (a, b) in p1.coefficients.iter().zip(&p2.coefficients) {
            assert!((b - a * Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        assert_relative_eq!(p2.control_norm, 2.0 * p1.control_norm, max_relative = 1e-10);
    }
}
