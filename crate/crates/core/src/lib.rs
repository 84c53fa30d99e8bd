//! Dobrushin–Shlosman uniqueness certificates for the ferromagnetic
//! nearest-neighbour Ising model on finite boxes.
//!
//! The crate is layered bottom-up:
//!
//! * [`lattice`]: box geometry, spin encodings and exact finite-volume
//!   computations (Gray-code enumeration and a 2D transfer matrix).
//! * [`transport`]: Kantorovich distance between configuration measures,
//!   both via an exact transportation simplex and the monotone-coupling
//!   shortcut available for stochastically ordered pairs.
//! * [`certifier`]: dependence coefficients, the `C_V` check and the
//!   bracketing of the threshold inverse temperature `β_V`.
//! * [`inequality`]: executable checks of the covariance inequality and the
//!   balancing-field identity that link `k_{V,y}` to correlation decay.
//! * [`report`]: run configuration, manifests and the CLI command bodies.

pub mod certifier;
pub mod error;
pub mod inequality;
pub mod lattice;
pub mod report;
pub mod transport;

pub use error::{Error, Result};

/// Inverse critical temperature of the square-lattice Ising model,
/// `ln(1 + √2) / 2`.
pub fn onsager_beta() -> f64 {
    (1.0 + std::f64::consts::SQRT_2).ln() / 2.0
}
