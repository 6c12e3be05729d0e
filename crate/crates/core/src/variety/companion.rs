//! Univariate roots via companion-matrix eigenvalues.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// All complex roots of `Σ_k c_k Z^k` (coefficients in ascending degree).
///
/// Exactly zero leading coefficients are dropped first. Roots are sorted by
/// argument in `[0, 2π)`, then by modulus.
pub fn companion_roots_1d(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs
        .iter()
        .rposition(|c| *c != Complex64::new(0.0, 0.0))
        .unwrap_or(0);
    if degree == 0 {
        return Err(Error::DegenerateDegree);
    }
    let lead = coeffs[degree];
    let mut roots = if degree == 1 {
        vec![-coeffs[0] / lead]
    } else {
        let c = Mat::from_fn(degree, degree, |i, j| {
            if j == degree - 1 {
                -coeffs[i] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        c.eigenvalues()
            .map_err(|e| Error::LinearAlgebra(format!("eigenvalue solver failed: {e:?}")))?
    };
    let key = |z: &Complex64| {
        let a = z.arg();
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    };
    roots.sort_by(|a, b| {
        key(a)
            .total_cmp(&key(b))
            .then(a.norm().total_cmp(&b.norm()))
    });
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn simple_cases() {
        let r = companion_roots_1d(&[c(-1.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - c(1.0)).norm() < 1e-14);
        assert!((r[1] - c(-1.0)).norm() < 1e-14);

        let r = companion_roots_1d(&[c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|z| z.norm() < 1e-12));

        assert!(matches!(
            companion_roots_1d(&[c(2.0)]),
            Err(Error::DegenerateDegree)
        ));
        assert!(matches!(
            companion_roots_1d(&[c(2.0), c(0.0)]),
            Err(Error::DegenerateDegree)
        ));
        let r = companion_roots_1d(&[c(3.0), c(0.0), c(-1.0), c(0.0)]).unwrap();
        assert_eq!(r.len(), 2);
    }
}
