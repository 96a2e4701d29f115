//! Gain synthesis and the backstepping transform.
//!
//! The gains `K_n` are pinned by the fixed-point condition `T B = B`:
//! expanding both sides over the eigenbasis turns it into the dense linear
//! system `sum_n (-K_n b_n) b_p / (lambda_n - lambda_p + lambda) = b_p`.
//! The transform itself factors as `T = tau_K . tau . S` and satisfies the
//! intertwining identity `T A + B K = (A - lambda) T` column-exactly at any
//! truncation, for any gain vector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::riesz::{build_s, check_r};
use crate::spectral::{mode_weight, Parity, Spectrum};

/// Samples of the control shape `B` over the eigenbasis, `b_n = <B, phi_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    pub parity: Parity,
    pub b: Vec<Complex64>,
    /// Smallest entry modulus.
    pub c1: f64,
    /// Largest entry modulus.
    pub c2: f64,
}

impl ControlProfile {
    pub fn from_values(parity: Parity, b: Vec<Complex64>) -> Self {
        let c1 = b.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        let c2 = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
        ControlProfile { parity, b, c1, c2 }
    }

    /// `b_n = 1` for every retained mode.
    pub fn unit(parity: Parity, len: usize) -> Self {
        Self::from_values(parity, vec![Complex64::new(1.0, 0.0); len])
    }

    /// `b_n = 1 + amplitude * sin(n)`; stays bounded away from zero for
    /// `|amplitude| < 1`.
    pub fn sinusoidal(parity: Parity, len: usize, amplitude: f64) -> Result<Self> {
        if amplitude.abs() >= 1.0 {
            return Err(Error::ControlProfile(format!(
                "sinusoidal amplitude must stay below 1 in modulus, got {amplitude}"
            )));
        }
        let first = parity.first_mode();
        let b = (0..len)
            .map(|i| Complex64::new(1.0 + amplitude * ((first + i) as f64).sin(), 0.0))
            .collect();
        Ok(Self::from_values(parity, b))
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// True when every mode is actuated: `min |b_n| > 0` (which covers the
    /// constant mode in the even sector).
    pub fn satisfies_lower_bound(&self) -> bool {
        self.c1 > 0.0
    }

    fn is_unit(&self) -> bool {
        self.b.iter().all(|x| *x == Complex64::new(1.0, 0.0))
    }
}

/// Synthesized feedback data.
///
/// `gains[i]` is `K_n` on the `i`-th retained mode, and `corrections[i]` the
/// deviation `k_n` in the decomposition `b_n K_n = -(lambda + k_n)`, exact by
/// construction.
#[derive(Debug, Clone)]
pub struct FeedbackGains {
    pub parity: Parity,
    pub gains: Vec<Complex64>,
    pub corrections: Vec<Complex64>,
    pub lambda: f64,
    /// Relative residual of the moment solve in weighted coordinates.
    pub solve_residual: f64,
    /// Condition number of the weighted moment matrix.
    pub cond: f64,
}

/// Sobolev index of the coordinates in which the moment system is solved.
/// The weighting is a diagonal similarity, so the gains do not depend on it.
const SOLVE_WEIGHT_R: f64 = -0.75;

const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

fn check_profile(profile: &ControlProfile, spectrum: &Spectrum) -> Result<()> {
    if profile.parity != spectrum.parity() {
        return Err(Error::Shape(
            "control profile parity differs from spectrum".into(),
        ));
    }
    if profile.len() != spectrum.len() {
        return Err(Error::Shape(format!(
            "control profile holds {} samples, spectrum {} modes",
            profile.len(),
            spectrum.len()
        )));
    }
    if !profile.satisfies_lower_bound() {
        return Err(Error::ControlProfile(
            "some |b_n| vanishes; every mode must be actuated".into(),
        ));
    }
    Ok(())
}

/// Solve the fixed-point condition for the unique truncated gain vector.
pub fn solve_feedback(
    profile: &ControlProfile,
    spectrum: &Spectrum,
    lambda: f64,
) -> Result<FeedbackGains> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Config(format!(
            "decay rate lambda must be positive, got {lambda}"
        )));
    }
    check_profile(profile, spectrum)?;
    let n = spectrum.len();

    // weighted moment matrix D M D^{-1}, D = diag(mode^{-3/4})
    let m = DMatrix::from_fn(n, n, |p, q| {
        let denom = spectrum.value(q) - spectrum.value(p) + Complex64::new(lambda, 0.0);
        let w = spectrum.weight(p, SOLVE_WEIGHT_R) * spectrum.weight(q, -SOLVE_WEIGHT_R);
        profile.b[p] * Complex64::new(w, 0.0) / denom
    });
    let rhs = DVector::from_fn(n, |p, _| {
        profile.b[p] * Complex64::new(spectrum.weight(p, SOLVE_WEIGHT_R), 0.0)
    });

    let cond = linalg::condition_number(&m);
    if !cond.is_finite() || cond > linalg::DEGENERACY_THRESHOLD {
        return Err(Error::Synthesis(format!(
            "moment matrix numerically singular: cond = {cond:.3e} at N = {n}"
        )));
    }

    let lu = m.clone().lu();
    let y = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Synthesis("LU solve of the moment system failed".into()))?;
    let residual = (&m * &y - &rhs).norm() / rhs.norm();
    if residual > SOLVE_RESIDUAL_TOL {
        return Err(Error::Synthesis(format!(
            "moment solve residual {residual:.3e} exceeds {SOLVE_RESIDUAL_TOL:.0e} (cond = {cond:.3e})"
        )));
    }

    // unweight: x_n = -K_n b_n
    let mut gains = Vec::with_capacity(n);
    let mut corrections = Vec::with_capacity(n);
    for i in 0..n {
        let x = y[i] / Complex64::new(spectrum.weight(i, SOLVE_WEIGHT_R), 0.0);
        gains.push(-x / profile.b[i]);
        corrections.push(x - Complex64::new(lambda, 0.0));
    }
    Ok(FeedbackGains {
        parity: spectrum.parity(),
        gains,
        corrections,
        lambda,
        solve_residual: residual,
        cond,
    })
}

/// The assembled transform at one Sobolev index, with its factors and
/// conditioning metadata.
#[derive(Debug, Clone)]
pub struct TransformBundle {
    /// `T` in `H^r`-orthonormal coordinates.
    pub t: DMatrix<Complex64>,
    /// `S` in the same coordinates.
    pub s: DMatrix<Complex64>,
    /// Diagonal factor of control samples.
    pub tau: DMatrix<Complex64>,
    /// Gain factor, reconstructed so that `t = tau_k * tau * s`.
    pub tau_k: DMatrix<Complex64>,
    pub r: f64,
    pub lambda: f64,
    pub spectrum: Spectrum,
    pub sigma_min: f64,
    pub cond: f64,
}

const FACTORIZATION_TOL: f64 = 1e-12;

/// Assemble `T` in `H^r` coordinates from synthesized (or candidate) gains.
///
/// Column `n` of `T` is `(-K_n)` times the weighted coordinates of
/// `n^{-r} tau q_n`; the factor `tau_K` is recovered by solving against
/// `tau * S` and the product is verified entrywise.
pub fn build_t(
    gains: &FeedbackGains,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    lambda: f64,
    r: f64,
) -> Result<TransformBundle> {
    check_profile(profile, spectrum)?;
    check_r(spectrum, r)?;
    if gains.gains.len() != spectrum.len() {
        return Err(Error::Shape(format!(
            "gain vector holds {} entries, spectrum {} modes",
            gains.gains.len(),
            spectrum.len()
        )));
    }
    let n = spectrum.len();
    let split = build_s(spectrum, lambda, r)?;
    let s = split.s;
    let tau = DMatrix::from_fn(n, n, |p, q| {
        if p == q {
            profile.b[p]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });

    // column-exact assembly: T_{p,n} = (-K_n) b_p S_{p,n}
    let t = DMatrix::from_fn(n, n, |p, q| -gains.gains[q] * profile.b[p] * s[(p, q)]);

    let tau_s = &tau * &s;
    let tau_s_inv =
        tau_s.clone().lu().try_inverse().ok_or_else(|| {
            Error::Singular("tau * S is not invertible at this truncation".into())
        })?;
    let tau_k = &t * &tau_s_inv;

    let recomposed = &tau_k * &tau_s;
    let err = linalg::max_abs(&(&recomposed - &t));
    let scale = linalg::max_abs(&t).max(1.0);
    if err > FACTORIZATION_TOL * scale * 10.0 {
        return Err(Error::Numerical(format!(
            "factor recovery mismatch {err:.3e} exceeds tolerance at N = {n}"
        )));
    }

    let (sigma_min, sigma_max) = linalg::singular_extrema(&t);
    let cond = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    Ok(TransformBundle {
        t,
        s,
        tau,
        tau_k,
        r,
        lambda,
        spectrum: spectrum.clone(),
        sigma_min,
        cond,
    })
}

impl TransformBundle {
    /// Column `n` of `T` in plain eigenbasis coordinates.
    pub(crate) fn raw_column(&self, q: usize) -> DVector<Complex64> {
        let n = self.t.nrows();
        DVector::from_fn(n, |p, _| {
            let w = self.spectrum.weight(p, -self.r) * self.spectrum.weight(q, self.r);
            self.t[(p, q)] * Complex64::new(w, 0.0)
        })
    }

    /// Apply `T` to a raw coefficient vector, returning `H^r` coordinates of
    /// the image.
    pub fn apply_weighted(&self, raw: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.t.nrows();
        let weighted = DVector::from_fn(n, |i, _| {
            raw[i] * Complex64::new(self.spectrum.weight(i, self.r), 0.0)
        });
        &self.t * weighted
    }
}

/// Worst column residual of the intertwining identity
/// `T A + B K = (A - lambda) T`, measured in `H^{-3/4}`-weighted coordinates.
///
/// The identity telescopes column-exactly at finite truncation for any gain
/// vector, so anything beyond roundoff scale indicates a wiring bug between
/// the transform, the spectrum and the gains.
pub fn operator_equality_residual(
    bundle: &TransformBundle,
    gains: &FeedbackGains,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    lambda: f64,
) -> f64 {
    let n = spectrum.len();
    let mut worst = 0.0_f64;
    for q in 0..n {
        let t_col = bundle.raw_column(q);
        let lam_n = spectrum.value(q);
        let mut acc = 0.0_f64;
        for p in 0..n {
            let drift = lam_n - spectrum.value(p) + Complex64::new(lambda, 0.0);
            let entry = drift * t_col[p] + gains.gains[q] * profile.b[p];
            let w = spectrum.weight(p, SOLVE_WEIGHT_R);
            acc += (w * entry.norm()).powi(2);
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}

/// Residual of the fixed-point condition: `||T b - b||` in `H^{r_test}`.
///
/// Rebuilt from the gains alone (not the bundle) so the measurement
/// discriminates gain vectors: perturbing synthesized gains by 1% moves the
/// residual far above the solve tolerance.
pub fn tbb_residual(
    gains: &FeedbackGains,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    lambda: f64,
    r_test: f64,
) -> f64 {
    let n = spectrum.len();
    let mut acc = 0.0_f64;
    for p in 0..n {
        let mut image = Complex64::new(0.0, 0.0);
        for q in 0..n {
            let denom = spectrum.value(q) - spectrum.value(p) + Complex64::new(lambda, 0.0);
            image += -gains.gains[q] * profile.b[q] * profile.b[p] / denom;
        }
        let w = spectrum.weight(p, r_test);
        acc += (w * (image - profile.b[p]).norm()).powi(2);
    }
    acc.sqrt()
}

/// Layered asymptotic decomposition of the gains for slowly growing
/// multipliers.
///
/// Level `i` splits `-K_n = e^0_n + ... + e^i_n + k^i_n`; each new layer
/// re-expands the previous correction through the resolvent sums, and the
/// exponent schedule `s_i = s_0 + (1 - alpha) i` says how many layers are
/// needed before the correction becomes square-summable.
#[derive(Debug, Clone)]
pub struct RefinementLayers {
    /// `s_0 .. s_M`; the last entry is the first negative one unless the
    /// depth cap was hit.
    pub schedule: Vec<f64>,
    pub e_layers: Vec<Vec<Complex64>>,
    pub k_layers: Vec<Vec<Complex64>>,
    /// `sup_n |k^i_n|` per level.
    pub sup_k: Vec<f64>,
    /// Whether the schedule reached a negative exponent within the cap.
    pub terminated: bool,
}

/// Run the layer recursion on synthesized gains. Requires a generic
/// multiplier with `alpha` in `(1, 3/2]` and the unit control profile.
pub fn asymptotic_refinement(
    gains: &FeedbackGains,
    spectrum: &Spectrum,
    lambda: f64,
    profile: &ControlProfile,
    max_depth: usize,
) -> Result<RefinementLayers> {
    let alpha = spectrum.alpha();
    if !(alpha > 1.0 && alpha <= 1.5) {
        return Err(Error::Hypothesis(format!(
            "layer refinement targets growth exponents in (1, 3/2], got alpha = {alpha}"
        )));
    }
    if !profile.is_unit() {
        return Err(Error::UnsupportedNormalization(
            "layer refinement assumes the unit control profile (b_n = 1)".into(),
        ));
    }
    let n = spectrum.len();
    if gains.gains.len() != n {
        return Err(Error::Shape(
            "gain vector length differs from spectrum".into(),
        ));
    }

    let s0 = 1.5 - alpha;
    let lam = Complex64::new(lambda, 0.0);
    let resolvent_sum = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, vm) in v.iter().enumerate() {
                    if m == i {
                        continue;
                    }
                    acc += vm / (spectrum.value(m) - spectrum.value(i) + lam);
                }
                -lam * acc
            })
            .collect()
    };

    let mut schedule = vec![s0];
    let mut e_layers = vec![vec![lam; n]];
    let mut k_layers = vec![gains.corrections.clone()];
    let sup = |v: &[Complex64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut sup_k = vec![sup(&k_layers[0])];

    let mut terminated = s0 < 0.0;
    let mut level = 0usize;
    while !terminated && level < max_depth {
        let next_e = resolvent_sum(&e_layers[level]);
        let next_k = resolvent_sum(&k_layers[level]);
        sup_k.push(sup(&next_k));
        e_layers.push(next_e);
        k_layers.push(next_k);
        level += 1;
        let s_next = s0 + (1.0 - alpha) * level as f64;
        schedule.push(s_next);
        terminated = s_next < 0.0;
    }

    Ok(RefinementLayers {
        schedule,
        e_layers,
        k_layers,
        sup_k,
        terminated,
    })
}

impl RefinementLayers {
    /// Reassemble `-K_n` from level `i`: `sum_{j <= i} e^j_n + k^i_n`.
    pub fn reassembled(&self, level: usize) -> Vec<Complex64> {
        let n = self.k_layers[level].len();
        (0..n)
            .map(|idx| {
                let partial: Complex64 = self.e_layers[..=level].iter().map(|e| e[idx]).sum();
                partial + self.k_layers[level][idx]
            })
            .collect()
    }
}

/// Independent series cross-check of the correction terms: re-derive each
/// `k_n` from `lambda * sum_{m != n} K_m b_m / (lambda_m - lambda_n + lambda)`
/// (the projection of the fixed-point condition with the diagonal term
/// separated) and return the worst disagreement with the solve's `k_n`.
pub fn correction_series_residual(
    gains: &FeedbackGains,
    profile: &ControlProfile,
    spectrum: &Spectrum,
    lambda: f64,
) -> f64 {
    let n = spectrum.len();
    let lam = Complex64::new(lambda, 0.0);
    let mut worst = 0.0_f64;
    for i in 0..n {
        let mut series = Complex64::new(0.0, 0.0);
        for m in 0..n {
            if m == i {
                continue;
            }
            series += gains.gains[m] * profile.b[m] / (spectrum.value(m) - spectrum.value(i) + lam);
        }
        worst = worst.max((lam * series - gains.corrections[i]).norm());
    }
    worst
}

/// Smallest index from which `|b_n K_n| >= lambda / 2` holds through the end
/// of the truncation, if any.
pub fn gain_lower_bound_onset(gains: &FeedbackGains, profile: &ControlProfile) -> Option<usize> {
    let prod: Vec<f64> = gains
        .gains
        .iter()
        .zip(&profile.b)
        .map(|(k, b)| (k * b).norm())
        .collect();
    let threshold = gains.lambda / 2.0;
    let mut onset = None;
    for (i, v) in prod.iter().enumerate() {
        if *v >= threshold {
            onset.get_or_insert(i);
        } else {
            onset = None;
        }
    }
    onset
}

/// Weighted `H^r` norm of a raw sample vector against a spectrum's modes.
pub fn weighted_norm(spectrum: &Spectrum, v: &[Complex64], r: f64) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, c)| (mode_weight(spectrum.mode(i), r) * c.norm()).powi(2))
        .sum::<f64>()
        .sqrt()
}
