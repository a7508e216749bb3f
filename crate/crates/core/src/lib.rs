//! Frame-constrained total-variation estimation for periodic signals in the
//! Gaussian white-noise model.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod frames;
pub mod grid;
pub mod io;
pub mod noise;
pub mod solver;
pub mod truth;
pub mod wavelet;

pub use error::{Error, Result};
