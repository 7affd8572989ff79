//! Numerical laboratory for pluriclosed flow and its reductions.

pub mod chart;
pub mod cone;
pub mod conventions;
pub mod error;
pub mod experiment;
pub mod field;
pub mod genkahler;
pub mod geometry;
pub mod grid;
pub mod homogeneous;
pub mod io;
pub mod ode;
pub mod oracle;
pub mod potential;
pub mod grf;
pub mod riemann;
pub mod verify;

pub use error::{Error, Result};
