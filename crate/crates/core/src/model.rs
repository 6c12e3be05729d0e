//! Exponential sums, their moments, and separated test instances.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Rejection-sampling budget for [`random_separated_model`].
pub const GENERATION_ATTEMPTS: usize = 10_000;

/// Reduces `x` into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negative inputs up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap-around distance between two reals modulo 1, in `[0, 0.5]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    // |a - b| keeps the result symmetric in its arguments
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Wrap-around `ℓ∞` distance on the torus `[0,1)^d`.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| circle_distance(x, y))
        .fold(0.0, f64::max)
}

/// `k · t` reduced modulo 1, coordinate by coordinate.
pub(crate) fn phase(k: &[i64], t: &[f64]) -> f64 {
    let s: f64 = k
        .iter()
        .zip(t)
        .map(|(&ki, &ti)| (ki as f64 * ti).rem_euclid(1.0))
        .sum();
    s.rem_euclid(1.0)
}

/// `e^{2πi x}`, exact at multiples of a quarter turn.
pub(crate) fn cis_turns(x: f64) -> Complex64 {
    let quarters = (4.0 * x).round();
    let r = x - quarters / 4.0;
    let z = if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::cis(TAU * r)
    };
    match (quarters as i64).rem_euclid(4) {
        0 => z,
        1 => Complex64::new(-z.im, z.re),
        2 => Complex64::new(-z.re, -z.im),
        _ => Complex64::new(z.im, -z.re),
    }
}

/// Location of one atom: a torus point `t ∈ [0,1)^d` (meaning `z = e^{2πi t}`)
/// or a general point of `(C∖{0})^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterPoint {
    Torus(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl ParameterPoint {
    pub fn dim(&self) -> usize {
        match self {
            ParameterPoint::Torus(t) => t.len(),
            ParameterPoint::Complex(z) => z.len(),
        }
    }

    pub fn as_torus(&self) -> Option<&[f64]> {
        match self {
            ParameterPoint::Torus(t) => Some(t),
            ParameterPoint::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            ParameterPoint::Torus(t) => t.iter().map(|&x| cis_turns(x)).collect(),
            ParameterPoint::Complex(z) => z.clone(),
        }
    }

    /// The monomial `z^k`; negative exponents are allowed.
    pub fn monomial(&self, k: &[i64]) -> Complex64 {
        match self {
            ParameterPoint::Torus(t) => cis_turns(phase(k, t)),
            ParameterPoint::Complex(z) => z
                .iter()
                .zip(k)
                .map(|(zi, &ki)| zi.powi(ki as i32))
                .product(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ParameterPoint::Torus(t) => {
                if let Some(x) = t.iter().find(|x| !(0.0..1.0).contains(*x)) {
                    return Err(Error::InvalidModel(format!(
                        "torus coordinate {x} is outside [0, 1)"
                    )));
                }
            }
            ParameterPoint::Complex(z) => {
                if let Some(x) = z.iter().find(|x| !(x.norm() > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "complex coordinate {x} must be finite and nonzero"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub param: ParameterPoint,
}

impl Term {
    pub fn torus(coeff: impl Into<Complex64>, t: Vec<f64>) -> Self {
        Term {
            coeff: coeff.into(),
            param: ParameterPoint::Torus(t),
        }
    }
}

/// `f(k) = Σ_j c_j z_j^k` with nonzero coefficients and pairwise distinct
/// parameters.
///
/// The zero function (no terms) is only constructible through
/// [`ExponentialSum::zero`]; it is what a reconstruction of all-zero data
/// returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::wire::ModelFile", into = "crate::wire::ModelFile")]
pub struct ExponentialSum {
    dim: usize,
    terms: Vec<Term>,
}

impl ExponentialSum {
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidModel("at least one term is required".into()));
        }
        for (j, term) in terms.iter().enumerate() {
            if term.param.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: term.param.dim(),
                });
            }
            if !(term.coeff.norm() > 0.0) || !term.coeff.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "coefficient {j} must be finite and nonzero"
                )));
            }
            term.param.validate()?;
        }
        for (i, a) in terms.iter().enumerate() {
            if terms[i + 1..].iter().any(|b| b.param == a.param) {
                return Err(Error::InvalidModel(format!(
                    "parameter {i} appears more than once"
                )));
            }
        }
        Ok(ExponentialSum { dim, terms })
    }

    /// Convenience constructor for torus models.
    pub fn from_torus(dim: usize, coeffs: &[Complex64], params: &[Vec<f64>]) -> Result<Self> {
        if coeffs.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} parameters",
                coeffs.len(),
                params.len()
            )));
        }
        let terms = coeffs
            .iter()
            .zip(params)
            .map(|(&c, t)| Term::torus(c, t.clone()))
            .collect();
        Self::new(dim, terms)
    }

    pub fn zero(dim: usize) -> Self {
        ExponentialSum {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of terms `M`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.coeff).collect()
    }

    /// Torus parameters, or `None` if any term uses a general complex point.
    pub fn torus_params(&self) -> Option<Vec<Vec<f64>>> {
        self.terms
            .iter()
            .map(|t| t.param.as_torus().map(<[f64]>::to_vec))
            .collect()
    }

    /// The moment `f(k) = Σ_j c_j z_j^k`.
    pub fn moment(&self, k: &[i64]) -> Complex64 {
        debug_assert_eq!(k.len(), self.dim);
        self.terms
            .iter()
            .map(|t| t.coeff * t.param.monomial(k))
            .sum()
    }
}

/// Anything that can answer moment queries `f(k)`.
pub trait MomentSource {
    fn dim(&self) -> usize;
    /// `None` when the sample at `k` is not available.
    fn moment(&self, k: &[i64]) -> Option<Complex64>;
}

impl MomentSource for ExponentialSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn moment(&self, k: &[i64]) -> Option<Complex64> {
        Some(ExponentialSum::moment(self, k))
    }
}

/// Complete set of samples `f(k)`, `k ∈ {-n, …, n}^d`.
///
/// Values are stored densely with coordinate 1 varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::wire::GridFile", into = "crate::wire::GridFile")]
pub struct MomentGrid {
    dim: usize,
    order: usize,
    values: Vec<Complex64>,
}

impl MomentGrid {
    /// Builds a grid by evaluating `f` at every multi-index.
    pub fn from_fn(dim: usize, order: usize, f: impl Fn(&[i64]) -> Complex64) -> Self {
        let side = 2 * order + 1;
        let len = side.pow(dim as u32);
        let mut k = vec![0i64; dim];
        let values = (0..len)
            .map(|pos| {
                Self::decode_into(dim, order, pos, &mut k);
                f(&k)
            })
            .collect();
        MomentGrid { dim, order, values }
    }

    /// Builds a grid from explicit `(k, f(k))` pairs; every index of the
    /// grid must appear exactly once.
    pub fn from_entries(
        dim: usize,
        order: usize,
        entries: impl IntoIterator<Item = (Vec<i64>, Complex64)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::IncompleteGrid("dimension must be positive".into()));
        }
        let side = 2 * order + 1;
        let len = side.pow(dim as u32);
        let mut values: Vec<Option<Complex64>> = vec![None; len];
        for (k, v) in entries {
            if k.len() != dim {
                return Err(Error::IncompleteGrid(format!(
                    "index {k:?} has length {}, expected {dim}",
                    k.len()
                )));
            }
            let pos = Self::encode(dim, order, &k).ok_or_else(|| {
                Error::IncompleteGrid(format!("index {k:?} is outside order {order}"))
            })?;
            if values[pos].replace(v).is_some() {
                return Err(Error::IncompleteGrid(format!("index {k:?} appears twice")));
            }
        }
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            return Err(Error::IncompleteGrid(format!(
                "{missing} of {len} indices are missing"
            )));
        }
        Ok(MomentGrid {
            dim,
            order,
            values: values.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The order `n`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `(2n + 1)^d`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        Self::encode(self.dim, self.order, k).map(|p| self.values[p])
    }

    /// Multi-index of the `pos`-th stored value.
    pub fn index(&self, pos: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim];
        Self::decode_into(self.dim, self.order, pos, &mut k);
        k
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(p, &v)| (self.index(p), v))
    }

    /// Euclidean norm of all samples.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn encode(dim: usize, order: usize, k: &[i64]) -> Option<usize> {
        if k.len() != dim {
            return None;
        }
        let n = order as i64;
        let side = 2 * order + 1;
        let mut pos = 0usize;
        for &ki in k.iter().rev() {
            if ki < -n || ki > n {
                return None;
            }
            pos = pos * side + (ki + n) as usize;
        }
        Some(pos)
    }

    fn decode_into(dim: usize, order: usize, mut pos: usize, k: &mut [i64]) {
        let side = 2 * order + 1;
        for ki in k.iter_mut().take(dim) {
            *ki = (pos % side) as i64 - order as i64;
            pos /= side;
        }
    }
}

impl MomentSource for MomentGrid {
    fn dim(&self) -> usize {
        self.dim
    }

    fn moment(&self, k: &[i64]) -> Option<Complex64> {
        self.get(k)
    }
}

/// Arbitrary sample sets, e.g. `f` on the nonnegative orthant for the
/// Hankel variant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMoments {
    dim: usize,
    values: BTreeMap<Vec<i64>, Complex64>,
}

impl SparseMoments {
    pub fn new(dim: usize) -> Self {
        SparseMoments {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, k: Vec<i64>, value: Complex64) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: k.len(),
            });
        }
        self.values.insert(k, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl MomentSource for SparseMoments {
    fn dim(&self) -> usize {
        self.dim
    }

    fn moment(&self, k: &[i64]) -> Option<Complex64> {
        self.values.get(k).copied()
    }
}

/// Samples `f(k)` for every `k ∈ {-n, …, n}^d`.
pub fn sample_moments(model: &ExponentialSum, order: usize) -> MomentGrid {
    sample_moments_with(model, order, Execution::default())
}

pub fn sample_moments_with(model: &ExponentialSum, order: usize, exec: Execution) -> MomentGrid {
    let dim = model.dim();
    let side = 2 * order + 1;
    let len = side.pow(dim as u32);
    let values = par::map_indices(exec, len, |pos| {
        let mut k = vec![0i64; dim];
        MomentGrid::decode_into(dim, order, pos, &mut k);
        model.moment(&k)
    });
    MomentGrid { dim, order, values }
}

/// Minimum pairwise wrap-around `ℓ∞` distance of torus points.
pub fn separation<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::NeedTwoPoints(points.len()));
    }
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(torus_distance(a.as_ref(), b.as_ref()));
        }
    }
    Ok(best)
}

/// Distribution of generated coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffLaw {
    /// Modulus uniform in `[0.5, 1.5]`, phase uniform.
    #[default]
    Default,
    /// Real, uniform in `[0.5, 1.5]`.
    Positive,
    /// All coefficients equal to one.
    Unit,
}

impl std::str::FromStr for CoeffLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(CoeffLaw::Default),
            "positive" => Ok(CoeffLaw::Positive),
            "unit" | "ones" => Ok(CoeffLaw::Unit),
            other => Err(Error::InvalidArgument(format!(
                "unknown coefficient law {other:?} (expected default, positive or unit)"
            ))),
        }
    }
}

/// Draws `count` torus points uniformly until the configuration is
/// `separation`-separated, then draws coefficients from `law`.
///
/// Deterministic in `seed` (ChaCha8).
pub fn random_separated_model(
    dim: usize,
    count: usize,
    separation_target: f64,
    law: CoeffLaw,
    seed: u64,
) -> Result<ExponentialSum> {
    if dim == 0 || count == 0 {
        return Err(Error::InvalidArgument(
            "dimension and term count must be positive".into(),
        ));
    }
    if !(separation_target >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "separation target {separation_target} must be nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = None;
    for _ in 0..GENERATION_ATTEMPTS {
        let points: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ok = count < 2 || separation(&points)? > separation_target;
        if ok {
            accepted = Some(points);
            break;
        }
    }
    let points = accepted.ok_or(Error::GenerationFailed {
        dim,
        count,
        separation: separation_target,
        attempts: GENERATION_ATTEMPTS,
    })?;
    let coeffs: Vec<Complex64> = (0..count)
        .map(|_| match law {
            CoeffLaw::Default => {
                let modulus = rng.random_range(0.5..=1.5);
                let turns: f64 = rng.random();
                Complex64::from_polar(modulus, TAU * turns)
            }
            CoeffLaw::Positive => Complex64::new(rng.random_range(0.5..=1.5), 0.0),
            CoeffLaw::Unit => Complex64::new(1.0, 0.0),
        })
        .collect();
    ExponentialSum::from_torus(dim, &coeffs, &points)
}
