//! Dense linear-algebra helpers.

use nalgebra::{DMatrix, SVD};

/// Thin SVD with a convergence threshold below machine epsilon. The default
/// threshold can stop with reconstruction errors near 1e-9 on well-conditioned
/// inputs, which is too coarse for exact interpolation checks.
pub fn svd(m: DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    match m.clone().try_svd(true, true, 1e-17, 1_000_000) {
        Some(s) => s,
        None => m.svd(true, true),
    }
}

/// Largest over smallest singular value; infinite when singular.
pub fn condition_number(singular_values: &[f64]) -> f64 {
    let max = singular_values.iter().copied().fold(0.0, f64::max);
    let min = singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstruction_is_tight() {
        let a = DMatrix::from_fn(25, 25, |r, c| libm::cos((r * 7 + c * 3) as f64 * 0.37) + if r == c { 2.0 } else { 0.0 });
        let s = svd(a.clone());
        let rec = s.u.as_ref().unwrap() * DMatrix::from_diagonal(&s.singular_values) * s.v_t.as_ref().unwrap();
        assert!((rec - a).norm() < 1e-13);
    }

    #[test]
    fn conditioning() {
        assert_eq!(condition_number(&[4.0, 2.0, 0.5]), 8.0);
        assert!(condition_number(&[1.0, 0.0]).is_infinite());
    }
}
