//! Building thermal simulation with distributed primal-dual airflow control.
//!
//! - [`thermal`]: RC zone network, plant integration, equilibria.
//! - [`problems`]: steady-state allocation problems and their auditors.
//! - [`oracle`]: independent reference solver.
//! - [`control`]: the two distributed controllers.
//! - [`sim`]: scenarios, closed-loop runs, audits, sweeps.

// `!(x < y)` is how NaN gets rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod oracle;
pub mod problems;
pub mod schedule;
pub mod sim;
pub mod thermal;

pub use error::{Error, Result};
