//! Small oracles shared by the integration tests. They deliberately avoid
//! the library's own evaluation and linear algebra paths.

#![allow(dead_code)]

use std::f64::consts::TAU;

use prony_core::Complex64;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `e^{2πi k·t}` with the phase reduced to `[0,1)` before the exponential.
pub fn monomial(k: &[usize], t: &[f64]) -> Complex64 {
    let s: f64 = k.iter().zip(t).map(|(&k, &t)| k as f64 * t).sum();
    let frac = s - s.floor();
    Complex64::from_polar(1.0, TAU * frac)
}

/// Box indices `{0..=n}^d`, coordinate 1 fastest.
pub fn box_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let side = order + 1;
    (0..side.pow(dim as u32))
        .map(|mut p| {
            (0..dim)
                .map(|_| {
                    let v = p % side;
                    p /= side;
                    v
                })
                .collect()
        })
        .collect()
}

/// `Σ_k c_k e^{2πi k·t}` by direct summation.
pub fn poly_at(coeffs: &[Complex64], dim: usize, order: usize, t: &[f64]) -> Complex64 {
    box_indices(dim, order)
        .iter()
        .zip(coeffs)
        .map(|(k, c)| c * monomial(k, t))
        .sum()
}

/// Solves `A x = b` for a small dense complex system by Gaussian
/// elimination with partial pivoting. `a` is row-major `n × n`.
pub fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, v) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![c(0.0); n];
    for row in (0..n).rev() {
        let s: Complex64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `‖P e(t)‖² / N` where `P` projects onto the span of the monomial vectors
/// `e(t_j)`, computed through the Gram system.
pub fn projected_certificate(params: &[Vec<f64>], order: usize, t: &[f64]) -> f64 {
    let dim = t.len();
    let idx = box_indices(dim, order);
    let vec_of = |p: &[f64]| -> Vec<Complex64> { idx.iter().map(|k| monomial(k, p)).collect() };
    let cols: Vec<Vec<Complex64>> = params.iter().map(|p| vec_of(p)).collect();
    let e = vec_of(t);
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let gram: Vec<Vec<Complex64>> = cols
        .iter()
        .map(|a| cols.iter().map(|b| dot(a, b)).collect())
        .collect();
    let rhs: Vec<Complex64> = cols.iter().map(|a| dot(a, &e)).collect();
    let x = solve(gram, rhs.clone());
    // ‖P e‖² = rhsᴴ G⁻¹ rhs
    let q: Complex64 = rhs.iter().zip(&x).map(|(r, x)| r.conj() * x).sum();
    q.re / idx.len() as f64
}

/// Coefficients of `Π_j (z - z_j)`, lowest degree first.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![c(1.0)];
    for &r in roots {
        let mut next = vec![c(0.0); p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r;
        }
        p = next;
    }
    p
}
