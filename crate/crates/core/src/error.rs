use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::variety::TorusCandidate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "no {separation}-separated configuration of {count} points in dimension {dim} \
         found after {attempts} attempts"
    )]
    GenerationFailed {
        dim: usize,
        count: usize,
        separation: f64,
        attempts: usize,
    },

    #[error("separation needs at least two points, got {0}")]
    NeedTwoPoints(usize),

    #[error("incomplete moment data: {0}")]
    IncompleteGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel is empty: the moment matrix has full rank {0}")]
    EmptyKernel(usize),

    #[error("condition bound requires positive coefficients, got minimum {0}")]
    InvalidCoefficients(f64),

    #[error("weighted matrix is rank deficient: singular value {rank} is {value:e}")]
    RankDeficient { rank: usize, value: f64 },

    #[error("root refinement did not converge after {iterations} iterations")]
    DidNotConverge {
        iterations: usize,
        best: Box<TorusCandidate>,
    },

    #[error("found {found} isolated torus roots below the energy cap, expected {expected}")]
    TooFewRoots { found: usize, expected: usize },

    #[error("polynomial is constant and has no roots")]
    DegenerateDegree,

    #[error("coefficient system is ill-conditioned (condition number {0:e})")]
    IllConditionedSystem(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

/// Non-fatal diagnostics attached to decompositions and reconstructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// `σ_r / σ_{r+1}` is below 10 and the rank was not fixed by the caller.
    NoSpectralGap { rank: usize, gap: f64 },
    /// More low-energy clusters than expected, or roots that are not isolated
    /// minima. Typical when the order is below the number of parameters.
    SpuriousRoots {
        expected: usize,
        strict_clusters: usize,
        non_isolated: usize,
    },
    /// The moment matrix is numerically zero.
    ZeroSignal,
    /// A univariate root was found off the unit circle.
    OffTorusRoot { index: usize, modulus: f64 },
    /// Only the leading singular values were computed.
    TruncatedSpectrum { computed: usize, size: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NoSpectralGap { rank, gap } => {
                write!(f, "no clear spectral gap at rank {rank} (ratio {gap:.3e})")
            }
            Warning::SpuriousRoots {
                expected,
                strict_clusters,
                non_isolated,
            } => write!(
                f,
                "possible spurious roots: {strict_clusters} clusters at machine-precision energy \
                 for {expected} parameters, {non_isolated} non-isolated"
            ),
            Warning::ZeroSignal => write!(f, "moment data is numerically zero"),
            Warning::OffTorusRoot { index, modulus } => {
                write!(f, "root {index} lies off the unit circle (|z| = {modulus})")
            }
            Warning::TruncatedSpectrum { computed, size } => {
                write!(f, "{computed} of {size} singular values computed")
            }
        }
    }
}
