//! Open-system dynamics of molecular aggregates driven by a phonon bath and blackbody
//! radiation, via a non-secular Redfield master equation solved in the damping basis.

pub mod analytic;
pub mod bath;
pub mod config;
pub mod error;
pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod output;
pub mod redfield;
pub mod scenarios;
pub mod units;

pub use error::{Error, FieldIssue, Result};
pub use faer::c64;
pub use linalg::{CMat, RMat};
