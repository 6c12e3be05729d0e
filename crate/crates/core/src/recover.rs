//! Coefficient recovery, the end-to-end pipeline and model matching.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::kernel::{decompose, signal_basis, DecomposeOptions, PolynomialBasis, SvdStrategy};
use crate::model::{cis_turns, phase, torus_distance, wrap_unit, ExponentialSum, MomentGrid};
use crate::par::{self, Execution};
use crate::structure::{build_toeplitz_with, triangular_weights};
use crate::variety::{
    self, companion_roots_1d, eval::energy_eval, extract_parameters, ExtractOptions, RefineOptions,
    TorusCandidate,
};

/// Condition number above which the coefficient system is rejected.
pub const MAX_SYSTEM_CONDITION: f64 = 1e12;

/// Distance from the unit circle above which a univariate root is reported.
pub const OFF_TORUS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit {
    pub coeffs: Vec<Complex64>,
    /// `‖A c - f‖ / ‖f‖` over the whole grid (absolute if `f = 0`).
    pub residual: f64,
    /// `σ_max / σ_min` of the system matrix.
    pub condition: f64,
}

/// Least-squares coefficients for fixed torus parameters on the full grid
/// `{-n,…,n}^d`.
pub fn recover_coefficients(params: &[Vec<f64>], grid: &MomentGrid) -> Result<CoefficientFit> {
    recover_coefficients_with(params, grid, Execution::default())
}

pub fn recover_coefficients_with(
    params: &[Vec<f64>],
    grid: &MomentGrid,
    exec: Execution,
) -> Result<CoefficientFit> {
    let d = grid.dim();
    if let Some(p) = params.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    for (i, a) in params.iter().enumerate() {
        if params[i + 1..].iter().any(|b| b == a) {
            return Err(Error::InvalidArgument(format!("parameter {i} is repeated")));
        }
    }
    let rows = grid.len();
    let m = params.len();
    let b_norm = grid.norm();
    if m == 0 {
        return Ok(CoefficientFit {
            coeffs: Vec::new(),
            residual: if b_norm > 0.0 { 1.0 } else { 0.0 },
            condition: 1.0,
        });
    }
    let indices: Vec<Vec<i64>> = (0..rows).map(|p| grid.index(p)).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); rows * m];
    par::for_each_chunk_mut(exec, &mut data, rows, |j, col| {
        for (v, k) in col.iter_mut().zip(&indices) {
            *v = cis_turns(phase(k, &params[j]));
        }
    });
    let a = MatRef::from_column_major_slice(&data, rows, m);
    let svd = a
        .thin_svd()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
    let condition = if s[m - 1] > 0.0 {
        s[0] / s[m - 1]
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_SYSTEM_CONDITION) {
        return Err(Error::IllConditionedSystem(condition));
    }
    let b = Mat::from_fn(rows, 1, |i, _| grid.values()[i]);
    let utb = svd.U().adjoint() * &b;
    let scaled = Mat::from_fn(m, 1, |i, _| utb[(i, 0)] / s[i]);
    let x = svd.V() * &scaled;
    let coeffs: Vec<Complex64> = (0..m).map(|i| x[(i, 0)]).collect();
    let fitted = a * &x;
    let r: f64 = (0..rows)
        .map(|i| (fitted[(i, 0)] - grid.values()[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(CoefficientFit {
        coeffs,
        residual: if b_norm > 0.0 { r / b_norm } else { r },
        condition,
    })
}

/// How roots are located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    /// Companion matrix for `d = 1` when `n ≥ M`, grid and Newton otherwise.
    #[default]
    Auto,
    Companion,
    GridNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    pub rel_tol: f64,
    pub rank_override: Option<usize>,
    pub grid_per_dim: Option<usize>,
    pub dedup_radius: Option<f64>,
    pub energy_cap: Option<f64>,
    pub max_refine: Option<usize>,
    /// Determine the rank from `W T W` with triangular weights.
    pub weights: bool,
    pub root_method: RootMethod,
    pub svd: SvdStrategy,
    pub refine: RefineOptions,
    pub exec: Execution,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            rel_tol: 1e-10,
            rank_override: None,
            grid_per_dim: None,
            dedup_radius: None,
            energy_cap: None,
            max_refine: None,
            weights: false,
            root_method: RootMethod::Auto,
            svd: SvdStrategy::Auto,
            refine: RefineOptions::default(),
            exec: Execution::default(),
        }
    }
}

impl ReconstructOptions {
    fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            grid_per_dim: self.grid_per_dim,
            dedup_radius: self.dedup_radius,
            energy_cap: self.energy_cap,
            max_refine: self.max_refine,
            refine: self.refine,
            exec: self.exec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub dim: usize,
    pub order: usize,
    pub model: ExponentialSum,
    pub rank: usize,
    /// All singular values, or the leading ones when
    /// `complete_spectrum` is false.
    pub singular_values: Vec<f64>,
    pub complete_spectrum: bool,
    /// `σ_r / σ_{r+1}`; absent when infinite.
    pub spectral_gap: Option<f64>,
    pub method: RootMethod,
    pub roots: Vec<TorusCandidate>,
    pub residual: f64,
    pub coefficient_condition: Option<f64>,
    pub warnings: Vec<Warning>,
}

/// Coefficients of the monic-up-to-scale kernel polynomial of degree `M`
/// in dimension 1: the vector over `0..=M` orthogonal to the signal space.
pub fn prony_polynomial_1d(signal: &PolynomialBasis) -> Result<Vec<Complex64>> {
    let m = signal.len();
    if signal.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: signal.dim(),
        });
    }
    if m == 0 || signal.order() < m {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ M ≤ n, got M = {m}, n = {}",
            signal.order()
        )));
    }
    let s = signal.vectors();
    let a = Mat::from_fn(m, m + 1, |j, k| s[(k, j)].conj());
    let svd = a
        .svd()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    Ok(svd.V().col(m).iter().copied().collect())
}

fn companion_extraction(
    signal: &PolynomialBasis,
    count: usize,
    opts: &ExtractOptions,
) -> Result<variety::Extraction> {
    let p = prony_polynomial_1d(signal)?;
    let roots = companion_roots_1d(&p)?;
    let mut warnings = Vec::new();
    let n = signal.size() as f64;
    let cands = roots
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let modulus = z.norm();
            if (modulus - 1.0).abs() > OFF_TORUS_TOLERANCE {
                warnings.push(Warning::OffTorusRoot { index: i, modulus });
            }
            let t = vec![wrap_unit(z.arg() / std::f64::consts::TAU)];
            let ev = energy_eval(signal, &t, true);
            TorusCandidate {
                kernel_energy: ev.value,
                certificate: 1.0 - ev.value / n,
                refined: false,
                iterations: 0,
                isolated: ev.hessian[0] > 0.0,
                t,
            }
        })
        .collect();
    variety::finish(cands, signal, count, opts, warnings)
}

/// Full pipeline: Toeplitz matrix, rank and kernel, torus roots,
/// coefficients.
pub fn prony_reconstruct(
    grid: &MomentGrid,
    opts: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    let n = grid.order();
    let d = grid.dim();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "moment grid order must be at least 1".into(),
        ));
    }
    let t = build_toeplitz_with(grid, n, opts.exec)?;
    let dec = decompose(
        &t,
        &DecomposeOptions {
            rel_tol: opts.rel_tol,
            rank_override: opts.rank_override,
            strategy: opts.svd,
            weights: opts.weights.then(|| triangular_weights(d, n)),
            exec: opts.exec,
        },
    )?;
    drop(t);
    let mut warnings = dec.warnings().to_vec();
    let rank = dec.rank();
    let gap = dec.spectral_gap();
    let singular_values = dec.singular_values().to_vec();
    let complete_spectrum = dec.is_complete();
    let base = |model, method, roots, residual, condition, warnings| ReconstructionResult {
        dim: d,
        order: n,
        model,
        rank,
        singular_values: singular_values.clone(),
        complete_spectrum,
        spectral_gap: gap.is_finite().then_some(gap),
        method,
        roots,
        residual,
        coefficient_condition: condition,
        warnings,
    };
    if rank == 0 {
        warnings.push(Warning::ZeroSignal);
        let residual = if grid.norm() > 0.0 { 1.0 } else { 0.0 };
        return Ok(base(
            ExponentialSum::zero(d),
            opts.root_method,
            Vec::new(),
            residual,
            None,
            warnings,
        ));
    }
    let signal = signal_basis(&dec);
    drop(dec);
    let eopts = opts.extract_options();
    let method = match opts.root_method {
        RootMethod::Auto if d == 1 && n >= rank => RootMethod::Companion,
        RootMethod::Auto => RootMethod::GridNewton,
        other => other,
    };
    let extraction = match method {
        RootMethod::Companion => companion_extraction(&signal, rank, &eopts)?,
        _ => extract_parameters(&signal, rank, &eopts)?,
    };
    warnings.extend(extraction.warnings.iter().cloned());
    let params: Vec<Vec<f64>> = extraction.roots.iter().map(|c| c.t.clone()).collect();
    let fit = recover_coefficients_with(&params, grid, opts.exec)?;
    let model = ExponentialSum::from_torus(d, &fit.coeffs, &params)?;
    Ok(base(
        model,
        method,
        extraction.roots,
        fit.residual,
        Some(fit.condition),
        warnings,
    ))
}

/// `⌈max(2d/q, M)⌉`, the smallest order covered by the localization and
/// conditioning results.
pub fn recommended_order(count: usize, q: f64, dim: usize) -> usize {
    assert!(q > 0.0, "separation must be positive");
    let x = 2.0 * dim as f64 / q;
    let r = x.round();
    // 4/0.1 must give 40, not 41
    let n = if (x - r).abs() <= 1e-9 * x {
        r
    } else {
        x.ceil()
    };
    (n as usize).max(count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub truth: usize,
    pub estimate: usize,
    /// Wrap-around `ℓ∞` distance of the parameters.
    pub param_error: f64,
    pub coeff_abs_error: f64,
    pub coeff_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tol: f64,
    /// Assigned pairs within `tol` in parameter distance.
    pub pairs: Vec<MatchedPair>,
    /// Assigned pairs whose parameter distance exceeds `tol`.
    pub rejected: Vec<MatchedPair>,
    pub unmatched_truth: Vec<usize>,
    pub unmatched_estimate: Vec<usize>,
    pub max_param_error: f64,
    pub max_coeff_rel_error: f64,
}

impl MatchReport {
    /// Complete bijection with all parameter and relative coefficient errors
    /// within `tol`.
    pub fn is_match(&self) -> bool {
        self.unmatched_truth.is_empty()
            && self.unmatched_estimate.is_empty()
            && self.max_param_error <= self.tol
            && self.max_coeff_rel_error <= self.tol
    }
}

/// Assignment of the shorter list into the longer one minimizing the total
/// distance, returned as `(short index, long index)` pairs.
fn assign(dist: &[Vec<f64>], exhaustive: bool) -> Vec<(usize, usize)> {
    let rows = dist.len();
    let cols = dist.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if exhaustive {
        fn search(
            dist: &[Vec<f64>],
            row: usize,
            used: &mut Vec<bool>,
            current: &mut Vec<usize>,
            cost: f64,
            best: &mut (f64, Vec<usize>),
        ) {
            if cost >= best.0 {
                return;
            }
            if row == dist.len() {
                *best = (cost, current.clone());
                return;
            }
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    current.push(c);
                    search(dist, row + 1, used, current, cost + dist[row][c], best);
                    current.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = (f64::INFINITY, Vec::new());
        search(
            dist,
            0,
            &mut vec![false; cols],
            &mut Vec::new(),
            0.0,
            &mut best,
        );
        return best.1.into_iter().enumerate().collect();
    }
    let mut all: Vec<(f64, usize, usize)> = dist
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (v, i, j)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut out = Vec::new();
    for (_, i, j) in all {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out.sort();
    out
}

/// Matches estimated atoms to true ones by wrap-around `ℓ∞` parameter
/// distance: exhaustive search when both models have at most 8 terms,
/// greedy otherwise.
pub fn match_models(
    truth: &ExponentialSum,
    estimate: &ExponentialSum,
    tol: f64,
) -> Result<MatchReport> {
    let tp = truth
        .torus_params()
        .ok_or_else(|| Error::InvalidArgument("true model has non-torus parameters".into()))?;
    let ep = estimate
        .torus_params()
        .ok_or_else(|| Error::InvalidArgument("estimate has non-torus parameters".into()))?;
    if !truth.is_empty() && !estimate.is_empty() && truth.dim() != estimate.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            got: estimate.dim(),
        });
    }
    let flip = tp.len() > ep.len();
    let (short, long) = if flip { (&ep, &tp) } else { (&tp, &ep) };
    let dist: Vec<Vec<f64>> = short
        .iter()
        .map(|a| long.iter().map(|b| torus_distance(a, b)).collect())
        .collect();
    let exhaustive = tp.len().max(ep.len()) <= 8;
    let tc = truth.coefficients();
    let ec = estimate.coefficients();
    let mut pairs = Vec::new();
    let mut rejected = Vec::new();
    let mut used_t = vec![false; tp.len()];
    let mut used_e = vec![false; ep.len()];
    for (s, l) in assign(&dist, exhaustive) {
        let (ti, ei) = if flip { (l, s) } else { (s, l) };
        let abs = (tc[ti] - ec[ei]).norm();
        let pair = MatchedPair {
            truth: ti,
            estimate: ei,
            param_error: dist[s][l],
            coeff_abs_error: abs,
            coeff_rel_error: abs / tc[ti].norm(),
        };
        if pair.param_error <= tol {
            used_t[ti] = true;
            used_e[ei] = true;
            pairs.push(pair);
        } else {
            rejected.push(pair);
        }
    }
    pairs.sort_by_key(|p| p.truth);
    let max_param_error = pairs.iter().map(|p| p.param_error).fold(0.0, f64::max);
    let max_coeff_rel_error = pairs.iter().map(|p| p.coeff_rel_error).fold(0.0, f64::max);
    Ok(MatchReport {
        tol,
        pairs,
        rejected,
        unmatched_truth: (0..tp.len()).filter(|&i| !used_t[i]).collect(),
        unmatched_estimate: (0..ep.len()).filter(|&i| !used_e[i]).collect(),
        max_param_error,
        max_coeff_rel_error,
    })
}
