//! Damped Newton minimization of the kernel energy on the torus.

use faer::{Mat, Side};

use super::eval::{energy_eval, EnergyEval};
use super::TorusCandidate;
use crate::error::{Error, Result};
use crate::kernel::{BasisRole, PolynomialBasis};
use crate::model::wrap_unit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop once the accepted step is shorter than this (`ℓ∞`).
    pub step_tol: f64,
    /// Step halvings per line search.
    pub max_halvings: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iter: 50,
            step_tol: 1e-12,
            max_halvings: 30,
        }
    }
}

/// Smallest-to-largest Hessian eigenvalue ratio above which a minimum is
/// reported as isolated.
const ISOLATION_RATIO: f64 = 1e-8;

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Eigen {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

fn sym_eigen(h: &[f64], d: usize) -> Option<Eigen> {
    let m = Mat::from_fn(d, d, |i, j| h[i * d + j]);
    let e = m.self_adjoint_eigen(Side::Lower).ok()?;
    let values = e.S().column_vector().iter().copied().collect();
    Some(Eigen {
        values,
        vectors: e.U().to_owned(),
    })
}

/// Whether the Hessian is positive definite with a bounded eigenvalue ratio.
pub(crate) fn is_isolated(h: &[f64], d: usize) -> bool {
    match sym_eigen(h, d) {
        Some(e) => {
            let lo = e.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = e.values.iter().copied().fold(0.0, f64::max);
            hi > 0.0 && lo > ISOLATION_RATIO * hi
        }
        None => false,
    }
}

/// Newton step `-H⁻¹g` when `H` is safely positive definite, otherwise the
/// gradient step `-g / ‖H‖`.
fn descent_step(ev: &EnergyEval, d: usize) -> Vec<f64> {
    let g = &ev.gradient;
    if let Some(e) = sym_eigen(&ev.hessian, d) {
        let hi = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lo = e.values.iter().copied().fold(f64::INFINITY, f64::min);
        if hi > 0.0 && lo > 1e-10 * hi {
            let mut step = vec![0.0; d];
            for (c, &lambda) in e.values.iter().enumerate() {
                let proj: f64 = (0..d).map(|i| e.vectors[(i, c)] * g[i]).sum();
                for (i, s) in step.iter_mut().enumerate() {
                    *s -= e.vectors[(i, c)] * proj / lambda;
                }
            }
            return step;
        }
        if hi > 0.0 {
            return g.iter().map(|x| -x / hi).collect();
        }
    }
    g.iter().map(|x| -x).collect()
}

fn candidate(
    basis: &PolynomialBasis,
    t: Vec<f64>,
    ev: &EnergyEval,
    refined: bool,
    iterations: usize,
) -> TorusCandidate {
    let n = basis.size() as f64;
    TorusCandidate {
        kernel_energy: ev.value,
        certificate: 1.0 - ev.value / n,
        refined,
        iterations,
        isolated: is_isolated(&ev.hessian, basis.dim()),
        t,
    }
}

/// Minimizes the kernel energy starting from `start`.
///
/// Steps are limited to `1/(2n)` in each coordinate and halved until the
/// energy does not increase. Coordinates are kept in `[0, 1)`.
pub fn refine(
    start: &TorusCandidate,
    basis: &PolynomialBasis,
    opts: &RefineOptions,
) -> Result<TorusCandidate> {
    let d = basis.dim();
    if start.t.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: start.t.len(),
        });
    }
    let radius = 0.5 / basis.order().max(1) as f64;
    let eps = f64::EPSILON;
    let slack = |q: f64| match basis.role() {
        BasisRole::Signal => 64.0 * eps * basis.size() as f64,
        BasisRole::Kernel => 64.0 * eps * q,
    };
    let mut t: Vec<f64> = start.t.iter().map(|&x| wrap_unit(x)).collect();
    let mut ev = energy_eval(basis, &t, true);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut step = descent_step(&ev, d);
        let len = inf_norm(&step);
        if !(len >= opts.step_tol) {
            converged = true;
            break;
        }
        if len > radius {
            step.iter_mut().for_each(|s| *s *= radius / len);
        }
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = t.iter().zip(&step).map(|(a, s)| wrap_unit(a + s)).collect();
            let tev = energy_eval(basis, &trial, true);
            if tev.value <= ev.value + slack(ev.value) {
                accepted = Some((trial, tev));
                break;
            }
            step.iter_mut().for_each(|s| *s *= 0.5);
            if inf_norm(&step) < opts.step_tol {
                break;
            }
        }
        match accepted {
            Some((nt, nev)) => {
                t = nt;
                ev = nev;
                iterations += 1;
                if inf_norm(&step) < opts.step_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // no decrease at machine resolution
                converged = true;
                break;
            }
        }
    }
    if converged {
        Ok(candidate(basis, t, &ev, true, iterations))
    } else {
        Err(Error::DidNotConverge {
            iterations,
            best: Box::new(candidate(basis, t, &ev, false, iterations)),
        })
    }
}
