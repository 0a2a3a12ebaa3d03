//! Numerical core for a dual-function radar/communication UAV.
//!
//! The UAV carries a square planar array and serves one ground base station
//! (GBS) while illuminating a fixed ground target. This crate holds the pure
//! math: array geometry and steering, the THz air-to-ground channel, pattern
//! synthesis with Chebyshev tapering and null steering, trajectory and
//! association logic, and a small feedforward network with ADAM.
//!
//! Everything here is `no_std` with `alloc`; file formats, orchestration and
//! the command-line tool live in the `isac-sim` crate.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beampattern;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod neuralnet;
pub mod scenario;

pub use num_complex::Complex64;

pub use error::{Error, Result};

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    10f64.powf(db / 10.0)
}
