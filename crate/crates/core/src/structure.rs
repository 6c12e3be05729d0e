//! Index sets and the structured matrices built from moments.
//!
//! All multi-index enumerations put coordinate 1 innermost: in the box
//! `{0,…,n}^d` the position of `k` is `Σ_i k_i (n+1)^(i-1)`. Coefficient
//! vectors of polynomials use the same order everywhere in the crate.
//!
//! The Toeplitz matrix is stored with `entry(k, l) = f(k - l)`. Under this
//! convention its transpose factors as `P Aᵀ D A` (Vandermonde `A`, diagonal
//! `D`, index reversal `P`), so the polynomials vanishing on the parameters
//! are the null vectors of `Tᵀ`; see [`crate::kernel`].

use std::io::{self, Write};

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{MomentGrid, MomentSource, ParameterPoint};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexShape {
    /// `I_n = {0,…,n}^d`.
    Box,
    /// `J_n = {k ≥ 0 : |k|_1 ≤ n}`, graded, coordinate 1 fastest per grade.
    Simplex,
}

/// Ordered multi-index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    shape: IndexShape,
    dim: usize,
    order: usize,
    flat: Vec<i64>,
}

pub type BoxIndexSet = IndexSet;
pub type SimplexIndexSet = IndexSet;

impl IndexSet {
    pub fn shape(&self) -> IndexShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.flat[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.flat.chunks_exact(self.dim)
    }

    /// Position of `k` in the set.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        match self.shape {
            IndexShape::Box => box_position(self.dim, self.order, k),
            IndexShape::Simplex => self.iter().position(|x| x == k),
        }
    }
}

fn box_position(dim: usize, order: usize, k: &[i64]) -> Option<usize> {
    if k.len() != dim {
        return None;
    }
    let side = order + 1;
    let mut pos = 0usize;
    for &ki in k.iter().rev() {
        if ki < 0 || ki as usize > order {
            return None;
        }
        pos = pos * side + ki as usize;
    }
    Some(pos)
}

fn box_indices(dim: usize, order: usize) -> Vec<i64> {
    let side = order + 1;
    let len = side.pow(dim as u32);
    let mut flat = Vec::with_capacity(len * dim);
    for mut pos in 0..len {
        for _ in 0..dim {
            flat.push((pos % side) as i64);
            pos /= side;
        }
    }
    flat
}

pub fn index_set_box(dim: usize, order: usize) -> IndexSet {
    assert!(dim >= 1, "dimension must be positive");
    IndexSet {
        shape: IndexShape::Box,
        dim,
        order,
        flat: box_indices(dim, order),
    }
}

pub fn index_set_simplex(dim: usize, order: usize) -> IndexSet {
    assert!(dim >= 1, "dimension must be positive");
    let boxed = box_indices(dim, order);
    let mut members: Vec<&[i64]> = boxed
        .chunks_exact(dim)
        .filter(|k| k.iter().sum::<i64>() <= order as i64)
        .collect();
    // stable: keeps the coordinate-1-fastest order inside each grade
    members.sort_by_key(|k| k.iter().sum::<i64>());
    IndexSet {
        shape: IndexShape::Simplex,
        dim,
        order,
        flat: members.concat(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// `entry(k, l) = f(k - l)` on the box.
    Toeplitz,
    /// `entry(k, l) = f(k + l)` on the simplex.
    Hankel,
}

/// Dense moment matrix together with the index set labelling its rows and
/// columns.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    kind: MatrixKind,
    indices: IndexSet,
    matrix: Mat<Complex64>,
}

impl MomentMatrix {
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.dim
    }

    pub fn order(&self) -> usize {
        self.indices.order
    }

    /// Number of rows (and columns).
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// `diag(w) · T · diag(w)`.
    pub fn weighted(&self, w: &[f64]) -> Mat<Complex64> {
        assert_eq!(w.len(), self.size(), "weight vector length");
        Mat::from_fn(self.size(), self.size(), |i, j| {
            self.matrix[(i, j)] * (w[i] * w[j])
        })
    }

    /// `‖T - T*‖_F / ‖T‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.size();
        let mut diff = 0.0;
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let a = self.matrix[(i, j)];
                diff += (a - self.matrix[(j, i)].conj()).norm_sqr();
                total += a.norm_sqr();
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (diff / total).sqrt()
        }
    }

    /// Writes every entry as `row_k;col_k;re;im`, multi-index components
    /// joined by commas, rows in column-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "row_k;col_k;re;im")?;
        let join = |k: &[i64]| k.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        for (j, kc) in self.indices.iter().enumerate() {
            let col = join(kc);
            for (i, kr) in self.indices.iter().enumerate() {
                let v = self.matrix[(i, j)];
                writeln!(out, "{};{};{:e};{:e}", join(kr), col, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// `T_n = (f(k - l))_{k,l ∈ I_n}` at the grid's own order.
pub fn build_toeplitz(grid: &MomentGrid) -> MomentMatrix {
    build_toeplitz_with(grid, grid.order(), Execution::default())
        .expect("a grid always covers its own order")
}

/// `T_order` from a grid of order at least `order`.
pub fn build_toeplitz_with(
    grid: &MomentGrid,
    order: usize,
    exec: Execution,
) -> Result<MomentMatrix> {
    if order > grid.order() {
        return Err(Error::IncompleteGrid(format!(
            "Toeplitz order {order} needs moments up to {order}, grid has order {}",
            grid.order()
        )));
    }
    let dim = grid.dim();
    let indices = index_set_box(dim, order);
    let size = indices.len();
    let side = 2 * grid.order() + 1;
    // grid position of k - l is lin(k) - lin(l) + centre
    let lin: Vec<i64> = indices
        .iter()
        .map(|k| k.iter().rev().fold(0i64, |acc, &ki| acc * side as i64 + ki))
        .collect();
    let centre = (0..dim).fold(0i64, |acc, _| acc * side as i64 + grid.order() as i64);
    let values = grid.values();
    let mut data = vec![Complex64::new(0.0, 0.0); size * size];
    par::for_each_chunk_mut(exec, &mut data, size, |col, column| {
        let base = centre - lin[col];
        for (row, v) in column.iter_mut().enumerate() {
            *v = values[(base + lin[row]) as usize];
        }
    });
    let matrix = MatRef::from_column_major_slice(&data, size, size).to_owned();
    Ok(MomentMatrix {
        kind: MatrixKind::Toeplitz,
        indices,
        matrix,
    })
}

/// `T_order` from an arbitrary sample source.
pub fn build_toeplitz_from(source: &impl MomentSource, order: usize) -> Result<MomentMatrix> {
    let indices = index_set_box(source.dim(), order);
    let matrix = fill(&indices, source, |k, l, out| {
        out.iter_mut()
            .zip(k.iter().zip(l))
            .for_each(|(o, (a, b))| *o = a - b)
    })?;
    Ok(MomentMatrix {
        kind: MatrixKind::Toeplitz,
        indices,
        matrix,
    })
}

/// `H_n = (f(k + l))_{k,l ∈ J_n}`; needs `f` on `J_{2n}` only.
pub fn build_hankel(source: &impl MomentSource, order: usize) -> Result<MomentMatrix> {
    let indices = index_set_simplex(source.dim(), order);
    let matrix = fill(&indices, source, |k, l, out| {
        out.iter_mut()
            .zip(k.iter().zip(l))
            .for_each(|(o, (a, b))| *o = a + b)
    })?;
    Ok(MomentMatrix {
        kind: MatrixKind::Hankel,
        indices,
        matrix,
    })
}

fn fill(
    indices: &IndexSet,
    source: &impl MomentSource,
    combine: impl Fn(&[i64], &[i64], &mut [i64]),
) -> Result<Mat<Complex64>> {
    let size = indices.len();
    let mut m = Mat::zeros(size, size);
    let mut idx = vec![0i64; indices.dim()];
    for (j, l) in indices.iter().enumerate() {
        for (i, k) in indices.iter().enumerate() {
            combine(k, l, &mut idx);
            m[(i, j)] = source
                .moment(&idx)
                .ok_or_else(|| Error::IncompleteGrid(format!("moment at {idx:?} is missing")))?;
        }
    }
    Ok(m)
}

/// Multivariate Vandermonde matrix `(z_j^k)_{j, k}`, one row per parameter,
/// columns in the order of `indices`.
pub fn build_vandermonde(params: &[ParameterPoint], indices: &IndexSet) -> Mat<Complex64> {
    Mat::from_fn(params.len(), indices.len(), |j, c| {
        params[j].monomial(indices.get(c))
    })
}

/// Tensor-product triangular weights `Π_i max(min(k_i + 1, n + 1 - k_i), 1)`
/// in box order.
pub fn triangular_weights(dim: usize, order: usize) -> Vec<f64> {
    let one_d: Vec<f64> = (0..=order)
        .map(|k| (k + 1).min(order + 1 - k).max(1) as f64)
        .collect();
    index_set_box(dim, order)
        .iter()
        .map(|k| k.iter().map(|&ki| one_d[ki as usize]).product())
        .collect()
}
