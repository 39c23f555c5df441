//! Strong approximation of 1-D SDEs whose drift is a distribution.
//!
//! The pipeline implemented here builds a rough drift as a truncated Haar
//! series from a fractional Brownian sample path, smooths it in closed form
//! with the killed heat semigroup, integrates the resulting SDE with an
//! Euler-Maruyama scheme coupled across step resolutions, and estimates
//! strong L1 convergence rates by Monte Carlo.
//!
//! Modules follow the pipeline stages:
//!
//! - [`wavelet`]: Haar and Faber systems on (0,1), coefficients from dyadic
//!   samples, series evaluation and multi-resolution refinement.
//! - [`fbm`]: exact Gaussian simulation of fractional Brownian motion via
//!   dense Cholesky factorization, with mesh-doubling refinement.
//! - [`mollifier`]: closed-form heat-semigroup smoothing of a Haar expansion
//!   through normal CDFs.
//! - [`scheme`]: Euler-Maruyama integration with shared Brownian increments
//!   across coarse/fine resolutions.
//! - [`experiment`]: rate schedules, Monte-Carlo error curves, log-log rate
//!   fits and the convergence-rate table.
//! - [`plot`]: deterministic SVG rendering of error curves.

// Parameter checks are written as `!(x > 0.0)` on purpose: the negation
// rejects NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fbm;
pub mod mollifier;
pub mod plot;
pub mod scheme;
pub mod wavelet;

pub use error::{Error, Result};
pub use experiment::{ErrorCurve, EtaRule, RateFit, RateParams, StudyConfig, TableRow};
pub use fbm::{CholeskyFactor, FbmPath, Grid};
pub use mollifier::MollifiedDrift;
pub use scheme::{BrownianGrid, SamplePath, SchemeConfig};
pub use wavelet::{DyadicIndex, FaberCoefficients, HaarExpansion};
