//! Small helpers around nalgebra's dense complex factorizations.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Condition numbers above this are treated as numerically degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e12;

/// Smallest and largest singular values of a dense complex matrix.
pub fn singular_extrema(m: &DMatrix<Complex64>) -> (f64, f64) {
    let svd = m.clone().svd(false, false);
    let mut smin = f64::INFINITY;
    let mut smax = 0.0_f64;
    for s in svd.singular_values.iter() {
        smin = smin.min(*s);
        smax = smax.max(*s);
    }
    (smin, smax)
}

/// Spectral-norm condition number; infinite for a singular matrix.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let (smin, smax) = singular_extrema(m);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Operator (spectral) norm.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    singular_extrema(m).1
}

/// Numerical rank: singular values above `tol_rel * sigma_max`.
pub fn rank_by_svd(m: &DMatrix<Complex64>, tol_rel: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|s| **s > tol_rel * smax)
        .count()
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |a, c| a.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn extrema_of_diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.0, 3.0),
            Complex64::new(0.5, 0.0),
        ]));
        let (smin, smax) = singular_extrema(&m);
        assert_relative_eq!(smin, 0.5, max_relative = 1e-14);
        assert_relative_eq!(smax, 3.0, max_relative = 1e-14);
        assert_relative_eq!(condition_number(&m), 6.0, max_relative = 1e-13);
    }

    #[test]
    fn rank_detects_deficiency() {
        let mut m = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        assert_eq!(rank_by_svd(&m, 1e-12), 1);
        m[(1, 1)] = Complex64::new(2.0, 0.0);
        assert_eq!(rank_by_svd(&m, 1e-12), 2);
    }
}
