//! Common torus roots of the kernel polynomials and the dual certificate.
//!
//! Roots are located as zeros of the kernel energy
//! `q(t) = Σ_{kernel} |p_ℓ(e^{2πit})|²`: a grid scan proposes local minima,
//! damped Newton refines them, and nearby results are merged.

mod companion;
pub(crate) mod eval;
mod newton;

use serde::{Deserialize, Serialize};

pub use companion::companion_roots_1d;
pub use eval::{certificate, eval_poly, kernel_energy, Energy, PolyValue};
pub use newton::{refine, RefineOptions};

use crate::error::{Error, Result, Warning};
use crate::kernel::{BasisRole, PolynomialBasis};
use crate::model::torus_distance;
use crate::par::{self, Execution};

/// A point of the torus with its kernel energy `q` and certificate
/// `p = 1 - q/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusCandidate {
    pub t: Vec<f64>,
    pub kernel_energy: f64,
    pub certificate: f64,
    pub refined: bool,
    pub iterations: usize,
    /// Positive definite energy Hessian, i.e. an isolated minimum.
    pub isolated: bool,
}

fn has_no_kernel(basis: &PolynomialBasis) -> bool {
    match basis.role() {
        BasisRole::Kernel => basis.is_empty(),
        BasisRole::Signal => basis.len() == basis.size(),
    }
}

/// Strict local minima of the kernel energy on the grid `(i_1/g, …, i_d/g)`
/// with wrap-around neighbourhoods, by ascending energy.
///
/// Ties are broken by grid position, so flat regions yield one candidate.
pub fn grid_scan(basis: &PolynomialBasis, grid_per_dim: usize) -> Result<Vec<TorusCandidate>> {
    grid_scan_with(basis, grid_per_dim, Execution::default())
}

pub fn grid_scan_with(
    basis: &PolynomialBasis,
    grid_per_dim: usize,
    exec: Execution,
) -> Result<Vec<TorusCandidate>> {
    let g = grid_per_dim;
    if g < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 points per axis, got {g}"
        )));
    }
    if has_no_kernel(basis) {
        return Ok(Vec::new());
    }
    let d = basis.dim();
    let q = eval::grid_energy(basis, g, exec);
    let strides: Vec<usize> = (0..d).map(|a| g.pow(a as u32)).collect();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut o| {
            (0..d)
                .map(|_| {
                    let v = (o % 3) as i64 - 1;
                    o /= 3;
                    v
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&v| v != 0))
        .collect();
    let below = |a: usize, b: usize| (q[a], a) < (q[b], b);
    let minima: Vec<Option<usize>> = par::map_indices(exec, q.len(), |pos| {
        let coords: Vec<usize> = (0..d).map(|a| (pos / strides[a]) % g).collect();
        let is_min = offsets.iter().all(|off| {
            let nb: usize = (0..d)
                .map(|a| ((coords[a] as i64 + off[a]).rem_euclid(g as i64)) as usize * strides[a])
                .sum();
            nb == pos || below(pos, nb)
        });
        is_min.then_some(pos)
    });
    let n = basis.size() as f64;
    let mut out: Vec<(usize, TorusCandidate)> = minima
        .into_iter()
        .flatten()
        .map(|pos| {
            let t = (0..d)
                .map(|a| ((pos / strides[a]) % g) as f64 / g as f64)
                .collect();
            let cand = TorusCandidate {
                t,
                kernel_energy: q[pos],
                certificate: 1.0 - q[pos] / n,
                refined: false,
                iterations: 0,
                isolated: false,
            };
            (pos, cand)
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.kernel_energy
            .total_cmp(&b.1.kernel_energy)
            .then(a.0.cmp(&b.0))
    });
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

/// Kernel energy at every point `(i_1/g, …, i_d/g)`, coordinate 1 fastest.
pub fn energy_grid(
    basis: &PolynomialBasis,
    grid_per_dim: usize,
    exec: Execution,
) -> Result<Vec<f64>> {
    if grid_per_dim < 1 {
        return Err(Error::InvalidArgument(
            "grid needs at least one point per axis".into(),
        ));
    }
    if has_no_kernel(basis) {
        return Ok(vec![0.0; grid_per_dim.pow(basis.dim() as u32)]);
    }
    Ok(eval::grid_energy(basis, grid_per_dim, exec))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractOptions {
    /// Default `4n + 1`.
    pub grid_per_dim: Option<usize>,
    /// Default `1/(4n)`.
    pub dedup_radius: Option<f64>,
    /// Default `1e-8 · N`.
    pub energy_cap: Option<f64>,
    /// Number of lowest grid minima refined; default `max(4M, 32)`.
    pub max_refine: Option<usize>,
    pub refine: RefineOptions,
    pub exec: Execution,
}

impl ExtractOptions {
    pub fn grid_for(&self, order: usize) -> usize {
        self.grid_per_dim.unwrap_or(4 * order + 1).max(2)
    }

    pub fn radius_for(&self, order: usize) -> f64 {
        self.dedup_radius.unwrap_or(0.25 / order.max(1) as f64)
    }

    pub fn cap_for(&self, size: usize) -> f64 {
        self.energy_cap.unwrap_or(1e-8 * size as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// The `M` lowest-energy cluster representatives.
    pub roots: Vec<TorusCandidate>,
    /// Clusters with energy below the cap.
    pub clusters_below_cap: usize,
    /// Clusters with energy below a tenth of the cap.
    pub strict_clusters: usize,
    pub warnings: Vec<Warning>,
}

/// Greedy clustering by ascending energy; each cluster keeps its lowest
/// member.
pub(crate) fn cluster(mut cands: Vec<TorusCandidate>, radius: f64) -> Vec<TorusCandidate> {
    cands.sort_by(|a, b| a.kernel_energy.total_cmp(&b.kernel_energy));
    let mut reps: Vec<TorusCandidate> = Vec::new();
    for c in cands {
        if reps.iter().all(|r| torus_distance(&r.t, &c.t) > radius) {
            reps.push(c);
        }
    }
    reps
}

/// Finds `count` common torus roots of the kernel polynomials.
///
/// `basis` may be a kernel basis or a signal basis; with the latter the
/// energy is evaluated through the complement.
pub fn extract_parameters(
    basis: &PolynomialBasis,
    count: usize,
    opts: &ExtractOptions,
) -> Result<Extraction> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "number of roots must be positive".into(),
        ));
    }
    let order = basis.order();
    let cands = grid_scan_with(basis, opts.grid_for(order), opts.exec)?;
    let take = opts.max_refine.unwrap_or((4 * count).max(32)).max(count);
    let starts = &cands[..cands.len().min(take)];
    let refined: Vec<TorusCandidate> = par::map_slice(opts.exec, starts, |c| {
        match refine(c, basis, &opts.refine) {
            Ok(r) => r,
            Err(Error::DidNotConverge { best, .. }) => *best,
            Err(_) => c.clone(),
        }
    });
    finish(refined, basis, count, opts, Vec::new())
}

pub(crate) fn finish(
    cands: Vec<TorusCandidate>,
    basis: &PolynomialBasis,
    count: usize,
    opts: &ExtractOptions,
    mut warnings: Vec<Warning>,
) -> Result<Extraction> {
    let cap = opts.cap_for(basis.size());
    let reps = cluster(cands, opts.radius_for(basis.order()));
    let passing: Vec<TorusCandidate> = reps
        .into_iter()
        .filter(|c| c.kernel_energy <= cap)
        .collect();
    let strict = passing
        .iter()
        .filter(|c| c.kernel_energy <= cap / 10.0)
        .count();
    if passing.len() < count {
        return Err(Error::TooFewRoots {
            found: passing.len(),
            expected: count,
        });
    }
    let clusters_below_cap = passing.len();
    let roots: Vec<TorusCandidate> = passing.into_iter().take(count).collect();
    let non_isolated = roots.iter().filter(|c| !c.isolated).count();
    if strict > count || non_isolated > 0 {
        warnings.push(Warning::SpuriousRoots {
            expected: count,
            strict_clusters: strict,
            non_isolated,
        });
    }
    Ok(Extraction {
        roots,
        clusters_below_cap,
        strict_clusters: strict,
        warnings,
    })
}
