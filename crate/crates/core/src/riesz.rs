//! The candidate Riesz family `q_n`, the resolvent-type operator `S` with its
//! identity-plus-compact split, and the frame-bound and sum-estimate
//! diagnostics that certify the family numerically.
//!
//! `q_n = sum_p phi_p / (lambda_n - lambda_p + lambda)`; since the spectrum is
//! purely imaginary and the decay rate `lambda` is a positive real, every
//! denominator has modulus at least `lambda`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{CoeffVector, Spectrum};

/// Candidate Riesz family `{n^{-r} q_n}` in `H^r`-orthonormal coordinates.
///
/// Column `n` of `family` holds the coefficients of `n^{-r} q_n` against the
/// orthonormal basis `(p^{-r} phi_p)`: entry `(p, n)` is
/// `p^r n^{-r} / (lambda_n - lambda_p + lambda)`.
#[derive(Debug, Clone)]
pub struct RieszFamily {
    pub spectrum: Spectrum,
    pub lambda: f64,
    pub r: f64,
    pub family: DMatrix<Complex64>,
}

/// Identity-plus-compact split `S = (1/lambda) I + S_c` of the operator
/// mapping `n^{-r} phi_n` to `n^{-r} q_n`.
///
/// `S_c` has a zero diagonal in weighted coordinates; `epsilon` records the
/// smoothing margin probed by [`compact_tail_diagnostic`].
#[derive(Debug, Clone)]
pub struct FredholmSplit {
    pub s: DMatrix<Complex64>,
    pub s_compact: DMatrix<Complex64>,
    pub r: f64,
    pub epsilon: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Config(format!(
            "decay rate lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

pub(crate) fn check_r(spectrum: &Spectrum, r: f64) -> Result<()> {
    let alpha = spectrum.alpha();
    let (lo, hi) = (0.5 - alpha, alpha - 0.5);
    if r <= lo || r >= hi {
        return Err(Error::SobolevRange { r, lo, hi, alpha });
    }
    Ok(())
}

/// Entry `(p, n)` of `S` (equivalently of the family matrix) in
/// `H^r`-orthonormal coordinates.
#[inline]
pub(crate) fn s_entry(spectrum: &Spectrum, lambda: f64, r: f64, p: usize, n: usize) -> Complex64 {
    let denom = spectrum.value(n) - spectrum.value(p) + Complex64::new(lambda, 0.0);
    let w = spectrum.weight(p, r) * spectrum.weight(n, -r);
    Complex64::new(w, 0.0) / denom
}

/// The truncated resolvent vector `q_n` in plain eigenbasis coordinates:
/// entry `p` is `1 / (lambda_n - lambda_p + lambda)`, entry `n` is `1/lambda`.
pub fn q_vector(n: usize, spectrum: &Spectrum, lambda: f64) -> Result<CoeffVector> {
    check_lambda(lambda)?;
    let slot = spectrum.slot(n).ok_or_else(|| {
        Error::Shape(format!(
            "mode {n} outside the retained range of the spectrum"
        ))
    })?;
    let coeffs = (0..spectrum.len())
        .map(|p| {
            Complex64::new(1.0, 0.0)
                / (spectrum.value(slot) - spectrum.value(p) + Complex64::new(lambda, 0.0))
        })
        .collect();
    Ok(CoeffVector::new(spectrum.parity(), 0.0, coeffs))
}

/// Smoothing margin stored on a fresh split: half the distance from `|r|`
/// to the edge of the admissible range, capped at 0.2.
fn default_epsilon(spectrum: &Spectrum, r: f64) -> f64 {
    let margin = (spectrum.alpha() - 0.5) - r.abs();
    (margin / 2.0).min(0.2)
}

/// Build `S` at truncation `N` in `H^r` coordinates together with its
/// identity-plus-compact split.
pub fn build_s(spectrum: &Spectrum, lambda: f64, r: f64) -> Result<FredholmSplit> {
    check_lambda(lambda)?;
    check_r(spectrum, r)?;
    let n = spectrum.len();
    let s = DMatrix::from_fn(n, n, |p, q| s_entry(spectrum, lambda, r, p, q));
    let mut s_compact = s.clone();
    for i in 0..n {
        s_compact[(i, i)] = Complex64::new(0.0, 0.0);
    }
    Ok(FredholmSplit {
        s,
        s_compact,
        r,
        epsilon: default_epsilon(spectrum, r),
    })
}

/// Build the weighted family `{n^{-r} q_n}` as a matrix of column vectors.
pub fn riesz_family(spectrum: &Spectrum, lambda: f64, r: f64) -> Result<RieszFamily> {
    let split = build_s(spectrum, lambda, r)?;
    Ok(RieszFamily {
        spectrum: spectrum.clone(),
        lambda,
        r,
        family: split.s,
    })
}

/// Two-sided frame bounds of a family of column vectors.
///
/// `c1 = sigma_min^2`, `c2 = sigma_max^2`; a rank-deficient family comes back
/// with `c1 = 0` and the `degenerate` flag raised instead of an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszBounds {
    pub c1: f64,
    pub c2: f64,
    pub cond: f64,
    pub degenerate: bool,
}

/// Frame bounds of an arbitrary column family.
pub fn frame_bounds(family: &DMatrix<Complex64>) -> RieszBounds {
    let (smin, smax) = linalg::singular_extrema(family);
    let c1 = smin * smin;
    let c2 = smax * smax;
    let cond = if c1 > 0.0 { c2 / c1 } else { f64::INFINITY };
    RieszBounds {
        c1,
        c2,
        cond,
        degenerate: c1 <= 0.0 || cond > linalg::DEGENERACY_THRESHOLD,
    }
}

/// Frame bounds of the weighted family `{n^{-r} q_n}`.
pub fn riesz_bounds(family: &RieszFamily) -> RieszBounds {
    frame_bounds(&family.family)
}

/// Operator norm of `D^epsilon S_c` in weighted coordinates, `D` the diagonal
/// of mode indices. A bounded smoothing norm across truncations is the
/// finite-dimensional stand-in for the compactness of `S_c`.
pub fn compact_tail_diagnostic(split: &FredholmSplit, epsilon: f64, spectrum: &Spectrum) -> f64 {
    let n = split.s_compact.nrows();
    let mut scaled = split.s_compact.clone();
    for p in 0..n {
        let w = Complex64::new(spectrum.weight(p, epsilon), 0.0);
        for q in 0..n {
            scaled[(p, q)] *= w;
        }
    }
    linalg::operator_norm(&scaled)
}

/// One row of the resolvent-sum diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBoundRow {
    pub p: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumBoundReport {
    pub s: f64,
    pub p_max: usize,
    pub rows: Vec<SumBoundRow>,
    pub sup_ratio: f64,
}

/// Oversampling factor: the inner sum runs over `16 * p_max` modes so the
/// tail behaviour is visible at every probed `p`.
pub const SUM_CHECK_OVERSAMPLING: usize = 16;

/// Compare `sum_{n != p} n^s / |lambda_n - lambda_p|` against the model bound
/// `p^{1 - alpha + s} log(p) + p^{-alpha}` for each `p <= p_max`.
///
/// Requires `s < alpha - 1` and a spectrum holding at least `16 * p_max`
/// modes.
pub fn sum_bound_check(s: f64, spectrum: &Spectrum, p_max: usize) -> Result<SumBoundReport> {
    let alpha = spectrum.alpha();
    if s >= alpha - 1.0 {
        return Err(Error::Hypothesis(format!(
            "sum exponent s = {s} must be below alpha - 1 = {}",
            alpha - 1.0
        )));
    }
    if p_max < 1 {
        return Err(Error::InsufficientSample("p_max must be at least 1".into()));
    }
    let needed = SUM_CHECK_OVERSAMPLING * p_max;
    if spectrum.truncation() < needed {
        return Err(Error::InsufficientSample(format!(
            "sum check at p_max = {p_max} needs {needed} modes, spectrum holds {}",
            spectrum.truncation()
        )));
    }

    let mut rows = Vec::with_capacity(p_max);
    let mut sup_ratio = 0.0_f64;
    for p in 1..=p_max {
        let p_slot = spectrum.slot(p).expect("checked above");
        let lam_p = spectrum.value(p_slot);
        let mut lhs = 0.0;
        for i in 0..spectrum.len() {
            let n = spectrum.mode(i);
            if n == 0 || n == p || n > needed {
                continue;
            }
            lhs += (n as f64).powf(s) / (spectrum.value(i) - lam_p).norm();
        }
        let pf = p as f64;
        let rhs = pf.powf(1.0 - alpha + s) * pf.ln() + pf.powf(-alpha);
        let ratio = lhs / rhs;
        sup_ratio = sup_ratio.max(ratio);
        rows.push(SumBoundRow { p, lhs, rhs, ratio });
    }
    Ok(SumBoundReport {
        s,
        p_max,
        rows,
        sup_ratio,
    })
}
