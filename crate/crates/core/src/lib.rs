//! Posteriors under randomized misfits and random forward models, with
//! empirical checks of the Hellinger error bounds they satisfy.
//!
//! Everything lives on a tensor quadrature grid. A [`problem::InverseProblem`]
//! holds the prior and true posterior; a [`models::RandomMisfitFamily`]
//! produces realizations `Φ_N(ω, ·)`; [`bounds`] compares both sides of each
//! bound over a sweep of `N`; [`harness`] drives config-file experiments.

// `!(x > y)` is used deliberately so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod grid;
pub mod harness;
pub mod measure;
pub mod models;
pub mod norms;
pub mod posterior;
pub mod problem;
pub mod stream;

pub use error::{Error, Result};
pub use grid::{build_grid, GridSpace, Interval, QuadratureRule};
pub use measure::{hellinger, hellinger_wrt_prior, DensityMeasure, PriorDensity};
pub use norms::{jackknife, lq_norm, mixed_norm, mixed_norm_estimate, Estimate, MixedNormSpec, SampleTable};
pub use problem::{problems, InverseProblem, PriorKind};
pub use stream::{derive_stream, Label, Stream, StreamRoot};
