//! Probabilistic range and rounding-error analysis for expressions evaluated
//! in low-precision floating-point formats.
// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cheb;
pub mod density;
pub mod error;
pub mod errordist;
mod json;
pub mod lang;
pub mod minifloat;
pub mod spec;

pub use analysis::{analyze, Analysis, AnalysisReport, McReport};
pub use density::{ApproxOptions, Density};
pub use error::{Error, Result};
pub use errordist::{ErrorDistribution, ErrorMode};
pub use lang::{interpret_term, parse, parse_term, ProbContext, Term};
pub use minifloat::{ArithOp, FloatFormat, MiniFloat, OverflowRule};
pub use spec::{AnalysisSpec, DistributionSpec, FormatSpec};

// The guide's code blocks run as doc tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/error-densities.md")]
    mod error_densities {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/terms.md")]
    mod terms {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
