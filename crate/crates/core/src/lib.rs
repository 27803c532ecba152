//! Conservative two-stage group testing in the linear prevalence regime.
//!
//! Stage one runs a fixed nonadaptive pooling design; every item that is
//! not cleared by a negative pool is then tested individually in stage two.
//! The crate provides:
//!
//! - [`design`]: stage-one pooling designs (Dorfman, Bernoulli, constant
//!   tests-per-item, doubly constant, hypercube).
//! - [`decode`]: test outcomes and DND/DD classification.
//! - [`theory`]: large-`n` expected test counts, rates and parameter optimizers.
//! - [`bounds`]: counting, Ungar and two-stage lower bounds.
//! - [`simulate`]: seeded Monte Carlo harness and the `p = 0.027` preset.
//! - [`curves`]: p-grids and curve tables used for plotting.

pub mod bounds;
pub mod curves;
pub mod decode;
pub mod design;
pub mod error;
pub mod format;
pub mod optimize;
pub mod simulate;
pub mod theory;

pub use error::{Error, Result};
