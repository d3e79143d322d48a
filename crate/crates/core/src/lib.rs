//! Least-squares estimation of convex probability mass functions on the
//! nonnegative integers.
//!
//! * [`pmf`]: convex pmfs, knots, triangular mixtures and the integrated cdf.
//! * [`projection`]: exact projection onto one convexity cone and Dykstra's
//!   algorithm for several.
//! * [`lse`]: the estimator with its optimality certificate.
//! * [`limit`]: draws from the weak limit of the estimator.
//! * [`harness`]: the pmf catalog, seeded Monte Carlo studies and output files.
//!
//! The guide under `book/` walks through each of these with examples that
//! are compiled as doctests.

pub mod error;
pub mod harness;
pub mod limit;
pub mod lse;
pub mod pmf;
pub mod projection;
pub mod seed;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pmfs.md")]
    mod pmfs {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/limit.md")]
    mod limit {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
