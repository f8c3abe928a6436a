//! Cumulants, right limits and central limit predictions for linear
//! statistics of orthogonal and biorthogonal polynomial ensembles.
//!
//! The crate is organised around the reduction of the cumulants of a linear
//! statistic `X_f = Σ f(x_i)` to traces of banded recurrence matrices:
//!
//! - [`banded`]: lazily generated semi-infinite banded matrices, two-sided
//!   windows, polynomial functional calculus and exact traces.
//! - [`symbols`]: Laurent symbols, Fourier coefficients of `f ∘ s` and the
//!   limiting variance `Σ k f̂_k f̂_{-k}`.
//! - [`cumulants`]: finite-n cumulants `C_m^(n)`, their two-sided
//!   counterparts `D_m`, a priori bounds and the Fredholm generating function.
//! - [`right_limits`]: coefficient sequences, subsequence schemes and the
//!   classification of right limits.
//! - [`ensembles`]: a catalog of concrete ensembles (Chebyshev, sparse and
//!   block examples, Hahn, periodic, two-matrix symbols) and a Lanczos
//!   recurrence oracle for discrete measures.
//! - [`dpp`]: projection kernels, exact moments and exact sampling of
//!   discrete orthogonal polynomial ensembles.
//! - [`fredholm`]: finite-section checks of the Szegő-type determinant limit.
//! - [`cli`]: the command layer behind the `spectral-clt` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod cli;
pub mod cumulants;
pub mod dense;
pub mod dpp;
pub mod ensembles;
pub mod error;
pub mod fredholm;
pub mod functions;
pub mod poly;
pub mod right_limits;
pub mod symbols;

pub use banded::{BandedMatrix, Projection, Window};
pub use cumulants::CumulantReport;
pub use error::{Error, Result};
pub use functions::TestFunction;
pub use poly::Polynomial;
pub use right_limits::{CoefficientSequence, RightLimitClass, SubsequenceScheme};
pub use symbols::{FourierCoefficients, LaurentSymbol};

/// Schema tag written into every JSON report.
pub const SCHEMA: &str = "spectral-clt/1";
