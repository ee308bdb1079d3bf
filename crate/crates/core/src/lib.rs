//! Local projection impulse responses with high-dimensional controls.
//!
//! The estimator orders candidate controls with an orthogonal greedy
//! algorithm, truncates the ordering with a high-dimensional AIC, and runs
//! the selection twice (outcome and shock equations). The union of the two
//! selected sets enters a final least-squares regression whose shock
//! coefficient is reported with Newey–West standard errors.
//!
//! Modules:
//! - [`linalg`]: least-squares kernels
//! - [`oga`]: greedy ordering and the stopping criterion
//! - [`hac`]: long-run variance
//! - [`lp`]: per-horizon datasets and the estimator
//! - [`dgp`]: simulation designs and the true impulse responses
//! - [`montecarlo`]: coverage / width experiments
//! - [`lpdid`]: local-projection difference-in-differences on panels

pub mod dgp;
pub mod error;
pub mod hac;
pub mod linalg;
pub mod lp;
pub mod lpdid;
pub mod montecarlo;
pub mod oga;

pub use error::{Error, Result};
