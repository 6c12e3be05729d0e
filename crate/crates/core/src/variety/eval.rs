//! Evaluation of box polynomials `p(t) = Σ_k c_k e^{2πi k·t}` and of the
//! energies built from a basis.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::kernel::{BasisRole, PolynomialBasis};
use crate::model::{cis_turns, phase};
use crate::par::{self, Execution};
use crate::structure::IndexShape;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `e^{2πi k t}` for `k = 0..=order`.
pub(crate) fn axis_powers(order: usize, t: f64) -> Vec<Complex64> {
    (0..=order)
        .map(|k| cis_turns(phase(&[k as i64], &[t])))
        .collect()
}

/// All monomials `e^{2πi k·t}`, `k ∈ {0..n}^d`, in box order.
pub(crate) fn monomials(dim: usize, order: usize, t: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(t.len(), dim);
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for &ti in t {
        let pw = axis_powers(order, ti);
        let mut next = Vec::with_capacity(out.len() * pw.len());
        for p in &pw {
            next.extend(out.iter().map(|v| v * p));
        }
        out = next;
    }
    out
}

/// Side length `n + 1` of a box with `len` entries in dimension `dim`.
pub(crate) fn side_of(len: usize, dim: usize) -> usize {
    let side = (len as f64).powf(1.0 / dim as f64).round() as usize;
    assert_eq!(
        side.pow(dim as u32),
        len,
        "coefficient vector length {len} is not a {dim}-dimensional box"
    );
    side
}

fn assert_box(basis: &PolynomialBasis) {
    assert_eq!(
        basis.shape(),
        IndexShape::Box,
        "torus evaluation needs coefficients over the box"
    );
}

/// Value and derivatives of a polynomial with respect to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyValue {
    pub value: Complex64,
    /// `∂p/∂t_a = 2πi Σ_k k_a c_k e^{2πi k·t}`.
    pub gradient: Vec<Complex64>,
    /// Row-major `d × d`, `∂²p/∂t_a∂t_b`.
    pub hessian: Vec<Complex64>,
}

/// Monomials and their `k`-weighted copies, shared by all polynomials
/// evaluated at one point.
struct Features {
    dim: usize,
    e: Vec<Complex64>,
    /// `k_a` for each box index, `a`-major.
    k: Vec<f64>,
}

impl Features {
    fn new(dim: usize, order: usize, t: &[f64]) -> Self {
        let e = monomials(dim, order, t);
        let side = order + 1;
        let len = e.len();
        let mut k = vec![0.0; dim * len];
        for pos in 0..len {
            let mut rest = pos;
            for a in 0..dim {
                k[a * len + pos] = (rest % side) as f64;
                rest /= side;
            }
        }
        Features { dim, e, k }
    }

    fn eval(&self, coeffs: impl Iterator<Item = Complex64>, hessian: bool) -> PolyValue {
        let d = self.dim;
        let mut value = ZERO;
        let mut s1 = vec![ZERO; d];
        let mut s2 = vec![ZERO; if hessian { d * d } else { 0 }];
        for (pos, c) in coeffs.enumerate() {
            let ce = c * self.e[pos];
            value += ce;
            for a in 0..d {
                let ka = self.k[a * self.e.len() + pos];
                s1[a] += ce * ka;
                if hessian {
                    for b in a..d {
                        let kb = self.k[b * self.e.len() + pos];
                        s2[a * d + b] += ce * (ka * kb);
                    }
                }
            }
        }
        let i2pi = Complex64::new(0.0, TAU);
        let gradient = s1.iter().map(|s| s * i2pi).collect();
        let mut h = vec![ZERO; s2.len()];
        if hessian {
            for a in 0..d {
                for b in a..d {
                    let v = s2[a * d + b] * (-TAU * TAU);
                    h[a * d + b] = v;
                    h[b * d + a] = v;
                }
            }
        }
        PolyValue {
            value,
            gradient,
            hessian: h,
        }
    }
}

/// Evaluates the polynomial with box coefficients `coeffs` at `t`, with
/// gradient and Hessian.
pub fn eval_poly(coeffs: &[Complex64], dim: usize, t: &[f64]) -> PolyValue {
    let side = side_of(coeffs.len(), dim);
    let f = Features::new(dim, side - 1, t);
    f.eval(coeffs.iter().copied(), true)
}

/// Kernel energy `q(t) = Σ_{kernel} |p_ℓ(t)|²` and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Energy {
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct EnergyEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `d × d`; empty unless requested.
    pub hessian: Vec<f64>,
}

/// `q` with derivatives. For a signal basis the kernel energy is obtained
/// as `N - Σ_{signal} |p_ℓ|²`, since all `N` basis polynomials together sum
/// to `N` in squared modulus.
pub(crate) fn energy_eval(basis: &PolynomialBasis, t: &[f64], hessian: bool) -> EnergyEval {
    assert_box(basis);
    let d = basis.dim();
    let f = Features::new(d, basis.order(), t);
    let vecs = basis.vectors();
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; if hessian { d * d } else { 0 }];
    for l in 0..basis.len() {
        let pv = f.eval(vecs.col(l).iter().copied(), hessian);
        value += pv.value.norm_sqr();
        for a in 0..d {
            grad[a] += 2.0 * (pv.value.conj() * pv.gradient[a]).re;
            if hessian {
                for b in 0..d {
                    hess[a * d + b] += 2.0
                        * (pv.gradient[a].conj() * pv.gradient[b]
                            + pv.value.conj() * pv.hessian[a * d + b])
                            .re;
                }
            }
        }
    }
    if basis.role() == BasisRole::Signal {
        value = basis.size() as f64 - value;
        grad.iter_mut().for_each(|g| *g = -*g);
        hess.iter_mut().for_each(|h| *h = -*h);
    }
    EnergyEval {
        value: value.max(0.0),
        gradient: grad,
        hessian: hess,
    }
}

/// Kernel energy at `t`; accepts a kernel basis or a signal basis.
pub fn kernel_energy(basis: &PolynomialBasis, t: &[f64]) -> Energy {
    let e = energy_eval(basis, t, false);
    Energy {
        value: e.value,
        gradient: e.gradient,
    }
}

/// Dual certificate `p(t) = (1/N) Σ_{signal} |p_ℓ(t)|² = 1 - q(t)/N`.
pub fn certificate(basis: &PolynomialBasis, t: &[f64]) -> f64 {
    let n = basis.size() as f64;
    match basis.role() {
        BasisRole::Signal => {
            assert_box(basis);
            let f = Features::new(basis.dim(), basis.order(), t);
            let vecs = basis.vectors();
            let s: f64 = (0..basis.len())
                .map(|l| f.eval(vecs.col(l).iter().copied(), false).value.norm_sqr())
                .sum();
            s / n
        }
        BasisRole::Kernel => 1.0 - kernel_energy(basis, t).value / n,
    }
}

/// Contracts the first `axes` box axes of `coeffs` against the grid, one
/// axis at a time. The result has shape `g^axes × side^(d-axes)`, fastest
/// axis first.
fn contract_axes(
    coeffs: &[Complex64],
    dim: usize,
    axes: usize,
    side: usize,
    table: &[Complex64],
    g: usize,
) -> Vec<Complex64> {
    let mut cur: Vec<Complex64> = coeffs.to_vec();
    let mut shape = vec![side; dim];
    for a in 0..axes {
        let inner: usize = shape[..a].iter().product();
        let outer: usize = shape[a + 1..].iter().product();
        let s = shape[a];
        let mut next = vec![ZERO; inner * g * outer];
        for o in 0..outer {
            for j in 0..g {
                let row = &table[j * side..j * side + s];
                let dst = &mut next[(o * g + j) * inner..(o * g + j + 1) * inner];
                for (k, w) in row.iter().enumerate() {
                    let src = &cur[(o * s + k) * inner..(o * s + k + 1) * inner];
                    dst.iter_mut().zip(src).for_each(|(d, v)| *d += v * w);
                }
            }
        }
        shape[a] = g;
        cur = next;
    }
    cur
}

/// Values of one box polynomial on the grid `(i_1/g, …, i_d/g)`, coordinate
/// 1 fastest.
#[cfg(test)]
fn grid_values(
    coeffs: &[Complex64],
    dim: usize,
    side: usize,
    table: &[Complex64],
    g: usize,
) -> Vec<Complex64> {
    contract_axes(coeffs, dim, dim, side, table, g)
}

/// Kernel energy on the uniform grid with `g` points per axis.
///
/// Each polynomial is first contracted along all axes but the last; the
/// last contraction and the sum of squares then run in parallel over
/// slices of the last axis. Every grid value is accumulated over the basis
/// in the same order under both execution policies.
pub(crate) fn grid_energy(basis: &PolynomialBasis, g: usize, exec: Execution) -> Vec<f64> {
    assert_box(basis);
    let d = basis.dim();
    let side = basis.order() + 1;
    // table[j][k] = e^{2πi jk/g}
    let table: Vec<Complex64> = (0..g)
        .flat_map(|j| (0..side).map(move |k| cis_turns(((j * k) % g) as f64 / g as f64)))
        .collect();
    let vecs = basis.vectors();
    let partials: Vec<Vec<Complex64>> = par::map_indices(exec, basis.len(), |l| {
        let c: Vec<Complex64> = vecs.col(l).iter().copied().collect();
        contract_axes(&c, d, d - 1, side, &table, g)
    });
    let inner = g.pow(d as u32 - 1);
    let slices = par::map_indices(exec, g, |j| {
        let row = &table[j * side..(j + 1) * side];
        let mut acc = vec![0.0; inner];
        let mut vals = vec![ZERO; inner];
        for p in &partials {
            vals.iter_mut().for_each(|v| *v = ZERO);
            for (k, w) in row.iter().enumerate() {
                let src = &p[k * inner..(k + 1) * inner];
                vals.iter_mut().zip(src).for_each(|(v, x)| *v += x * w);
            }
            acc.iter_mut()
                .zip(&vals)
                .for_each(|(s, v)| *s += v.norm_sqr());
        }
        acc
    });
    let mut sum: Vec<f64> = slices.concat();
    if basis.role() == BasisRole::Signal {
        let n = basis.size() as f64;
        sum.iter_mut().for_each(|s| *s = (n - *s).max(0.0));
    }
    sum
}
