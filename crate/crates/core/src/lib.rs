//! Weyl-harmonic map calculus on periodic grids: tension fields, the heat
//! flow, Bochner-type residuals and symmetric-space Lie algebra checks.

pub mod analytic;
pub mod bochner;
pub mod complex;
pub mod config;
pub mod equivariance;
pub mod error;
pub mod flow;
pub mod grid;
pub mod harness;
pub mod homotopy;
pub mod lie;
pub mod map;
pub mod metric;
pub mod parallel;
pub mod sampson;
pub mod stencil;
pub mod target;
pub mod weyl;

pub use error::{Error, Result};
