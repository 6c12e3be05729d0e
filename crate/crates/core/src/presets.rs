//! Fixed instances used by the CLI presets, tests and benches.

use num_complex::Complex64;

use crate::model::ExponentialSum;

fn ones(count: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); count]
}

/// `f(k) = (1,1)^k + (-1,-1)^k`, sampled at order 2.
pub fn example_2d() -> ExponentialSum {
    ExponentialSum::from_torus(2, &ones(2), &[vec![0.0, 0.0], vec![0.5, 0.5]])
        .expect("valid preset")
}

pub const EXAMPLE_2D_ORDER: usize = 2;

/// Three unit atoms at `t = 0.12, 1/π, e^{-1/2}`, sampled at order 30.
pub fn example_1d() -> ExponentialSum {
    let ts = [0.12, std::f64::consts::FRAC_1_PI, (-0.5f64).exp()];
    ExponentialSum::from_torus(1, &ones(3), &ts.map(|t| vec![t])).expect("valid preset")
}

pub const EXAMPLE_1D_ORDER: usize = 30;

/// Two atoms in dimension 3 sampled at order 1.
pub fn two_atoms_3d() -> ExponentialSum {
    ExponentialSum::from_torus(3, &ones(2), &[vec![0.1, 0.3, 0.25], vec![0.7, 0.8, 0.9]])
        .expect("valid preset")
}

pub const TWO_ATOMS_3D_ORDER: usize = 1;

/// Three atoms `(x_j, 0)` on one coordinate line, sampled at order 2.
///
/// With order below the number of atoms the kernel polynomials share a
/// positive-dimensional zero set, so the parameters are not identifiable.
pub fn collinear_2d() -> ExponentialSum {
    ExponentialSum::from_torus(
        2,
        &ones(3),
        &[vec![0.1, 0.0], vec![0.4, 0.0], vec![0.7, 0.0]],
    )
    .expect("valid preset")
}

pub const COLLINEAR_2D_ORDER: usize = 2;
