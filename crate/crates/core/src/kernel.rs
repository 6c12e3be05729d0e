//! Numerical rank, polynomial kernel and signal bases, conditioning.
//!
//! Index vectors of polynomials are coefficient vectors over the box, and a
//! polynomial vanishes on the parameters iff its coefficient vector is
//! annihilated by `Tᵀ` (not `T`). With `T = U Σ Vᴴ` the kernel is therefore
//! spanned by `conj(U[:, r..])` and the signal space by `conj(U[:, ..r])`.
//! For Hermitian `T` this coincides with the null space of `T` up to complex
//! conjugation of the coefficients.
//!
//! Two routes compute the decomposition:
//! * a full SVD (default for `N ≤ 1024`);
//! * a rank-revealing Householder QR of `conj(T)` with column pivoting, which
//!   stops at the numerical rank and only yields the leading singular values.
//!   Its implicit unitary factor still provides the full orthonormal basis.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result, Warning};
use crate::par::{self, Execution};
use crate::structure::{IndexShape, MomentMatrix};
use crate::variety::eval::monomials;

/// Largest matrix size decomposed with a full SVD under [`SvdStrategy::Auto`].
pub const FULL_SVD_LIMIT: usize = 1024;

/// Spectral gap below which [`Warning::NoSpectralGap`] is raised.
pub const GAP_WARNING: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdStrategy {
    #[default]
    Auto,
    Full,
    RankRevealing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    /// Singular values above `rel_tol · σ_1` count towards the rank.
    pub rel_tol: f64,
    pub rank_override: Option<usize>,
    pub strategy: SvdStrategy,
    /// Decompose `diag(w) T diag(w)` instead of `T`. The bases returned are
    /// still those of `T`.
    pub weights: Option<Vec<f64>>,
    pub exec: Execution,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            rel_tol: 1e-10,
            rank_override: None,
            strategy: SvdStrategy::Auto,
            weights: None,
            exec: Execution::default(),
        }
    }
}

/// Product `H_1 ⋯ H_r` of Householder reflections `H_j = I - 2 v_j v_jᴴ`,
/// with `v_j` supported on rows `j..`.
#[derive(Debug, Clone)]
pub(crate) struct Reflectors {
    size: usize,
    vs: Vec<Vec<Complex64>>,
}

fn reflect(v: &[Complex64], y: &mut [Complex64]) {
    let s: Complex64 = v.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
    if s == Complex64::new(0.0, 0.0) {
        return;
    }
    let s2 = s * 2.0;
    y.iter_mut().zip(v).for_each(|(yi, vi)| *yi -= s2 * vi);
}

impl Reflectors {
    /// `y ← Qᴴ y`.
    pub(crate) fn apply_adjoint(&self, y: &mut [Complex64]) {
        for (j, v) in self.vs.iter().enumerate() {
            reflect(v, &mut y[j..]);
        }
    }

    /// `y ← Q y`.
    pub(crate) fn apply(&self, y: &mut [Complex64]) {
        for (j, v) in self.vs.iter().enumerate().rev() {
            reflect(v, &mut y[j..]);
        }
    }

    fn columns(&self, range: std::ops::Range<usize>, exec: Execution) -> Mat<Complex64> {
        let size = self.size;
        let count = range.len();
        let mut data = vec![Complex64::new(0.0, 0.0); size * count];
        par::for_each_chunk_mut(exec, &mut data, size, |c, col| {
            col[range.start + c] = Complex64::new(1.0, 0.0);
            self.apply(col);
        });
        MatRef::from_column_major_slice(&data, size, count).to_owned()
    }
}

struct QrOutcome {
    reflectors: Reflectors,
    /// Leading rows of `R` (column order permuted).
    r: Mat<Complex64>,
    /// Frobenius norm of the unreduced block before each step and after the
    /// last one.
    residuals: Vec<f64>,
}

/// Householder QR with column pivoting on the columns of an `size × m`
/// column-major array. `stop(step, residual, |r11|)` ends the loop early.
fn pivoted_qr(
    mut data: Vec<Complex64>,
    size: usize,
    max_steps: usize,
    exec: Execution,
    stop: impl Fn(usize, f64, f64) -> bool,
) -> QrOutcome {
    let m = data.len() / size.max(1);
    let steps_cap = max_steps.min(m).min(size);
    let col_norm2 =
        |col: &[Complex64], from: usize| -> f64 { col[from..].iter().map(|v| v.norm_sqr()).sum() };
    let mut norms2: Vec<f64> = data.chunks_exact(size).map(|c| col_norm2(c, 0)).collect();
    let mut vs = Vec::new();
    let mut residuals = Vec::new();
    let mut r11 = 0.0;
    for j in 0..=steps_cap {
        let residual = norms2[j.min(m)..].iter().sum::<f64>().sqrt();
        residuals.push(residual);
        if j == steps_cap || !(residual > 0.0) || stop(j, residual, r11) {
            break;
        }
        let p = j + norms2[j..]
            .iter()
            .enumerate()
            .fold(
                (0, -1.0),
                |best, (i, &v)| if v > best.1 { (i, v) } else { best },
            )
            .0;
        if p != j {
            let (a, b) = data.split_at_mut(p * size);
            a[j * size..(j + 1) * size].swap_with_slice(&mut b[..size]);
            norms2.swap(j, p);
        }
        let pivot = &mut data[j * size..(j + 1) * size];
        let x = &pivot[j..];
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= vnorm);
        pivot[j] = alpha;
        pivot[j + 1..]
            .iter_mut()
            .for_each(|c| *c = Complex64::new(0.0, 0.0));
        if j == 0 {
            r11 = norm;
        }
        let tail = &mut data[(j + 1) * size..];
        par::for_each_chunk_mut(exec, tail, size, |_, col| reflect(&v, &mut col[j..]));
        for (c, n2) in norms2.iter_mut().enumerate().skip(j + 1) {
            *n2 = col_norm2(&data[c * size..(c + 1) * size], j + 1);
        }
        norms2[j] = 0.0;
        vs.push(v);
    }
    let rows = vs.len();
    let r = Mat::from_fn(rows, m, |i, c| data[c * size + i]);
    QrOutcome {
        reflectors: Reflectors { size, vs },
        r,
        residuals,
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Svd {
        u: Mat<Complex64>,
        v: Mat<Complex64>,
    },
    Householder(Reflectors),
}

/// Singular values, numerical rank and an orthonormal basis adapted to the
/// kernel of a moment matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    order: usize,
    shape: IndexShape,
    size: usize,
    singular_values: Vec<f64>,
    rank: usize,
    rel_tol: f64,
    gap: f64,
    trailing_bound: Option<f64>,
    warnings: Vec<Warning>,
    factor: Factor,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Index set labelling rows and columns.
    pub fn shape(&self) -> IndexShape {
        self.shape
    }

    /// Matrix size, `(n+1)^d` for Toeplitz matrices.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Nonincreasing. Length `N` for the full route, the computed leading
    /// part otherwise (see [`SpectralDecomposition::is_complete`]).
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn is_complete(&self) -> bool {
        self.singular_values.len() == self.size
    }

    /// Upper bound on the singular values that were not computed.
    pub fn trailing_bound(&self) -> Option<f64> {
        self.trailing_bound
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Absolute threshold `rel_tol · σ_1`.
    pub fn threshold(&self) -> f64 {
        self.rel_tol * self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// `σ_r / σ_{r+1}`, infinite when either side is absent or zero.
    pub fn spectral_gap(&self) -> f64 {
        self.gap
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn left_singular_vectors(&self) -> Option<MatRef<'_, Complex64>> {
        match &self.factor {
            Factor::Svd { u, .. } => Some(u.as_ref()),
            Factor::Householder(_) => None,
        }
    }

    pub fn right_singular_vectors(&self) -> Option<MatRef<'_, Complex64>> {
        match &self.factor {
            Factor::Svd { v, .. } => Some(v.as_ref()),
            Factor::Householder(_) => None,
        }
    }

    fn basis_columns(&self, range: std::ops::Range<usize>, exec: Execution) -> Mat<Complex64> {
        match &self.factor {
            Factor::Svd { u, .. } => {
                let start = range.start;
                Mat::from_fn(self.size, range.len(), |i, j| u[(i, start + j)].conj())
            }
            Factor::Householder(h) => h.columns(range, exec),
        }
    }

    /// `Σ_ℓ |p_ℓ(e^{2πit})|²` over all `N` basis polynomials (kernel and
    /// signal together) at each point. Toeplitz decompositions only.
    pub fn total_energy(&self, points: &[Vec<f64>], exec: Execution) -> Vec<f64> {
        assert_eq!(
            self.shape,
            IndexShape::Box,
            "torus evaluation needs box indices"
        );
        match &self.factor {
            Factor::Svd { u, .. } => {
                // p_ℓ(t) = Σ_k conj(u_kℓ) e_k(t), i.e. the vector Uᴴ e(t)
                let e = Mat::from_fn(self.size, points.len(), |_, _| Complex64::new(0.0, 0.0));
                let mut e = e;
                for (j, t) in points.iter().enumerate() {
                    for (i, v) in monomials(self.dim, self.order, t).into_iter().enumerate() {
                        e[(i, j)] = v;
                    }
                }
                let p = u.adjoint() * &e;
                (0..points.len())
                    .map(|j| p.col(j).iter().map(|v| v.norm_sqr()).sum())
                    .collect()
            }
            Factor::Householder(h) => par::map_slice(exec, points, |t| {
                // ‖Qᵀ e‖ = ‖Qᴴ conj(e)‖
                let mut y: Vec<Complex64> = monomials(self.dim, self.order, t)
                    .into_iter()
                    .map(|v| v.conj())
                    .collect();
                h.apply_adjoint(&mut y);
                y.iter().map(|v| v.norm_sqr()).sum()
            }),
        }
    }
}

fn validate(t: &MomentMatrix, opts: &DecomposeOptions) -> Result<()> {
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance {} must lie in (0, 1)",
            opts.rel_tol
        )));
    }
    if let Some(r) = opts.rank_override {
        if r > t.size() {
            return Err(Error::InvalidArgument(format!(
                "rank {r} exceeds matrix size {}",
                t.size()
            )));
        }
    }
    if let Some(w) = &opts.weights {
        check_weights(w, t.size())?;
    }
    Ok(())
}

fn check_weights(w: &[f64], size: usize) -> Result<()> {
    if w.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: w.len(),
        });
    }
    if let Some(x) = w.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weights must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

fn working_matrix(t: &MomentMatrix, weights: Option<&[f64]>) -> Mat<Complex64> {
    match weights {
        Some(w) => t.weighted(w),
        None => t.matrix().to_owned(),
    }
}

fn count_above(sv: &[f64], rel_tol: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().take_while(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Singular values, numerical rank and kernel/signal bases of `T`.
pub fn decompose(t: &MomentMatrix, opts: &DecomposeOptions) -> Result<SpectralDecomposition> {
    validate(t, opts)?;
    let size = t.size();
    let full = match opts.strategy {
        SvdStrategy::Full => true,
        SvdStrategy::RankRevealing => false,
        SvdStrategy::Auto => size <= FULL_SVD_LIMIT,
    };
    let a = working_matrix(t, opts.weights.as_deref());
    let mut warnings = Vec::new();
    let (singular_values, rank, gap, trailing_bound, mut factor) = if full {
        let svd = a
            .svd()
            .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
        let sv: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
        let rank = opts
            .rank_override
            .unwrap_or_else(|| count_above(&sv, opts.rel_tol));
        let gap = if rank == 0 || rank == size || sv[rank] == 0.0 {
            f64::INFINITY
        } else {
            sv[rank - 1] / sv[rank]
        };
        let factor = Factor::Svd {
            u: svd.U().to_owned(),
            v: svd.V().to_owned(),
        };
        (sv, rank, gap, None, factor)
    } else {
        // columns of conj(T) span the signal space
        let mut data = Vec::with_capacity(size * size);
        for j in 0..size {
            data.extend(a.col(j).iter().map(|v| v.conj()));
        }
        drop(a);
        let rel_tol = opts.rel_tol;
        let max_steps = opts.rank_override.unwrap_or(size);
        let fixed = opts.rank_override.is_some();
        let qr = pivoted_qr(data, size, max_steps, opts.exec, |step, residual, r11| {
            !fixed && step > 0 && residual <= rel_tol * r11
        });
        let mut sv = if qr.r.nrows() == 0 {
            Vec::new()
        } else {
            qr.r.singular_values()
                .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?
        };
        let steps = qr.reflectors.vs.len();
        let mut reflectors = qr.reflectors;
        let rank = if fixed {
            max_steps
        } else {
            count_above(&sv, rel_tol)
        };
        if rank < steps {
            reflectors.vs.truncate(rank);
            sv.truncate(rank);
        }
        // an exactly reduced matrix ends the loop before a forced rank
        for j in steps..rank {
            reflectors.vs.push(vec![Complex64::new(0.0, 0.0); size - j]);
            sv.push(0.0);
        }
        let bound = qr.residuals[rank.min(steps)];
        let gap = if rank == 0 || bound == 0.0 {
            f64::INFINITY
        } else {
            sv[rank - 1] / bound
        };
        if sv.len() < size {
            warnings.push(Warning::TruncatedSpectrum {
                computed: sv.len(),
                size,
            });
        }
        (sv, rank, gap, Some(bound), Factor::Householder(reflectors))
    };
    if opts.rank_override.is_none() && rank > 0 && gap < GAP_WARNING {
        warnings.push(Warning::NoSpectralGap { rank, gap });
    }
    if let Some(w) = &opts.weights {
        // signal space of T is W⁻¹ times that of WTW
        let tmp = SpectralDecomposition {
            dim: t.dim(),
            order: t.order(),
            shape: t.index_set().shape(),
            size,
            singular_values: Vec::new(),
            rank,
            rel_tol: opts.rel_tol,
            gap,
            trailing_bound,
            warnings: Vec::new(),
            factor,
        };
        let sw = tmp.basis_columns(0..rank, opts.exec);
        let mut data = Vec::with_capacity(size * rank);
        for j in 0..rank {
            data.extend(sw.col(j).iter().zip(w).map(|(v, wi)| v / wi));
        }
        let qr = pivoted_qr(data, size, rank, opts.exec, |_, _, _| false);
        factor = Factor::Householder(qr.reflectors);
    }
    Ok(SpectralDecomposition {
        dim: t.dim(),
        order: t.order(),
        shape: t.index_set().shape(),
        size,
        singular_values,
        rank,
        rel_tol: opts.rel_tol,
        gap,
        trailing_bound,
        warnings,
        factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRole {
    /// Orthonormal basis of the polynomial kernel.
    Kernel,
    /// Orthonormal basis of its complement.
    Signal,
}

/// Orthonormal coefficient vectors, one per column, over the box
/// `{0,…,n}^d` (or the simplex for Hankel matrices).
#[derive(Debug, Clone)]
pub struct PolynomialBasis {
    dim: usize,
    order: usize,
    shape: IndexShape,
    role: BasisRole,
    vectors: Mat<Complex64>,
}

impl PolynomialBasis {
    /// Wraps box coefficient vectors that the caller guarantees to be
    /// orthonormal.
    pub fn new(dim: usize, order: usize, role: BasisRole, vectors: Mat<Complex64>) -> Result<Self> {
        let size = (order + 1).pow(dim as u32);
        if vectors.nrows() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: vectors.nrows(),
            });
        }
        Ok(PolynomialBasis {
            dim,
            order,
            shape: IndexShape::Box,
            role,
            vectors,
        })
    }

    /// Orthonormalizes the given coefficient vectors (columns) and wraps
    /// them; the columns must be linearly independent.
    pub fn orthonormalize(
        dim: usize,
        order: usize,
        role: BasisRole,
        vectors: MatRef<'_, Complex64>,
    ) -> Result<Self> {
        let thin = vectors
            .thin_svd()
            .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
        let sv = thin.S().column_vector();
        let count = vectors.ncols();
        if count > 0 && !(sv[count - 1].re > 1e-12 * sv[0].re) {
            return Err(Error::InvalidArgument(
                "vectors are linearly dependent".into(),
            ));
        }
        Self::new(dim, order, role, thin.U().to_owned())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn role(&self) -> BasisRole {
        self.role
    }

    pub fn shape(&self) -> IndexShape {
        self.shape
    }

    /// Number of polynomials.
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// Length `N` of each coefficient vector.
    pub fn size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> MatRef<'_, Complex64> {
        self.vectors.as_ref()
    }

    pub fn coefficients(&self, i: usize) -> Vec<Complex64> {
        self.vectors.col(i).iter().copied().collect()
    }

    /// Dimension of the polynomial kernel this basis describes.
    pub fn kernel_dim(&self) -> usize {
        match self.role {
            BasisRole::Kernel => self.len(),
            BasisRole::Signal => self.size() - self.len(),
        }
    }

    /// `max |VᴴV - I|`.
    pub fn gram_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let mut worst = 0.0f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `‖x - V Vᴴ x‖ / ‖x‖`.
    pub fn projection_residual(&self, x: &[Complex64]) -> f64 {
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let mut r: Vec<Complex64> = x.to_vec();
        for j in 0..self.len() {
            let col = self.vectors.col(j);
            let c: Complex64 = col.iter().zip(x).map(|(v, xi)| v.conj() * xi).sum();
            r.iter_mut()
                .zip(col.iter())
                .for_each(|(ri, v)| *ri -= c * v);
        }
        r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / norm
    }

    /// `max_ℓ ‖Tᵀ v_ℓ‖`; small for a kernel basis.
    pub fn annihilation(&self, t: &MomentMatrix) -> f64 {
        let y = t.matrix().transpose() * &self.vectors;
        (0..y.ncols())
            .map(|j| y.col(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the polynomial kernel (`N - rank` vectors).
pub fn kernel_basis(dec: &SpectralDecomposition) -> Result<PolynomialBasis> {
    if dec.rank == dec.size {
        return Err(Error::EmptyKernel(dec.size));
    }
    Ok(PolynomialBasis {
        dim: dec.dim,
        order: dec.order,
        shape: dec.shape,
        role: BasisRole::Kernel,
        vectors: dec.basis_columns(dec.rank..dec.size, Execution::default()),
    })
}

/// Orthonormal basis of the signal space (`rank` vectors).
pub fn signal_basis(dec: &SpectralDecomposition) -> PolynomialBasis {
    PolynomialBasis {
        dim: dec.dim,
        order: dec.order,
        shape: dec.shape,
        role: BasisRole::Signal,
        vectors: dec.basis_columns(0..dec.rank, Execution::default()),
    }
}

/// Upper bound on `cond₂(W T W)` for `q`-separated parameters with positive
/// coefficients:
/// `((nq)^{d+1} + (2d)^{d+1}) / ((nq)^{d+1} - (2d)^{d+1}) · fmax / fmin`.
///
/// Infinite when `n q ≤ 2d`.
pub fn condition_bound(dim: usize, order: usize, q: f64, fmax: f64, fmin: f64) -> Result<f64> {
    if !(fmin > 0.0) {
        return Err(Error::InvalidCoefficients(fmin));
    }
    if !(q > 0.0) || fmax < fmin || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "need d ≥ 1, q > 0 and fmax ≥ fmin (d = {dim}, q = {q}, fmax = {fmax}, fmin = {fmin})"
        )));
    }
    let e = dim as i32 + 1;
    let a = (order as f64 * q).powi(e);
    let b = (2.0 * dim as f64).powi(e);
    if a <= b * (1.0 + 1e-12) {
        return Ok(f64::INFINITY);
    }
    Ok((a + b) / (a - b) * (fmax / fmin))
}

/// `σ_1 / σ_rank` of `diag(w) T diag(w)`.
pub fn empirical_condition(t: &MomentMatrix, w: &[f64], rank: usize) -> Result<f64> {
    empirical_condition_with(t, w, rank, SvdStrategy::Auto, Execution::default())
}

pub fn empirical_condition_with(
    t: &MomentMatrix,
    w: &[f64],
    rank: usize,
    strategy: SvdStrategy,
    exec: Execution,
) -> Result<f64> {
    check_weights(w, t.size())?;
    if rank == 0 || rank > t.size() {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must lie in 1..={}",
            t.size()
        )));
    }
    let dec = decompose(
        t,
        &DecomposeOptions {
            rank_override: Some(rank),
            strategy,
            weights: Some(w.to_vec()),
            exec,
            ..DecomposeOptions::default()
        },
    )?;
    let sv = dec.singular_values();
    let last = sv[rank - 1];
    if !(last > 1e-300) {
        return Err(Error::RankDeficient { rank, value: last });
    }
    Ok(sv[0] / last)
}
