//! Multivariate Prony method.
//!
//! Recovers an `M`-sparse `d`-variate exponential sum
//! `f(k) = Σ_j c_j z_j^k` from its moments on the grid `{-n, …, n}^d`:
//!
//! 1. assemble the multilevel Toeplitz matrix `T_n = (f(k - l))_{k,l ∈ {0..n}^d}`
//!    ([`structure`]);
//! 2. compute its numerical rank and the polynomial kernel ([`kernel`]);
//! 3. locate the common roots of the kernel polynomials on the torus
//!    ([`variety`]);
//! 4. solve the overdetermined Vandermonde system for the coefficients
//!    ([`recover`]).
//!
//! Data-parallel inner loops (moment sampling, matrix assembly, grid scans,
//! candidate refinement) run on rayon when the `parallel` feature is enabled
//! and fall back to plain iterators otherwise; see [`Execution`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernel;
pub mod model;
pub mod par;
pub mod presets;
pub mod recover;
pub mod structure;
pub mod variety;
mod wire;

pub use error::{Error, Result, Warning};
pub use kernel::{
    condition_bound, decompose, empirical_condition, empirical_condition_with, kernel_basis,
    signal_basis, BasisRole, DecomposeOptions, PolynomialBasis, SpectralDecomposition, SvdStrategy,
};
pub use model::{
    random_separated_model, sample_moments, sample_moments_with, separation, torus_distance,
    wrap_unit, CoeffLaw, ExponentialSum, MomentGrid, MomentSource, ParameterPoint, SparseMoments,
    Term,
};
pub use par::Execution;
pub use recover::{
    match_models, prony_polynomial_1d, prony_reconstruct, recommended_order, recover_coefficients,
    recover_coefficients_with, CoefficientFit, MatchReport, MatchedPair, ReconstructOptions,
    ReconstructionResult, RootMethod,
};
pub use structure::{
    build_hankel, build_toeplitz, build_toeplitz_from, build_toeplitz_with, build_vandermonde,
    index_set_box, index_set_simplex, triangular_weights, BoxIndexSet, IndexSet, IndexShape,
    MatrixKind, MomentMatrix, SimplexIndexSet,
};
pub use variety::{
    certificate, companion_roots_1d, energy_grid, eval_poly, extract_parameters, grid_scan,
    grid_scan_with, kernel_energy, refine, Energy, ExtractOptions, Extraction, PolyValue,
    RefineOptions, TorusCandidate,
};

pub use num_complex::Complex64;
