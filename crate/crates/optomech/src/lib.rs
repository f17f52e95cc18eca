//! Nonlinear cavity optomechanics in the decoupled (Lie-algebra) picture.
//!
//! All core routines are dimensionless: time is `tau = omega_m t` and
//! frequencies are in units of the mechanical frequency. Physical units
//! only appear in [`params::PhysicalSetup`] and the gravimetry helpers.

pub mod coefficients;
pub mod error;
pub mod mechanics;
pub mod metrology;
pub mod moments;
pub mod nongaussianity;
pub mod ode;
pub mod oracle;
pub mod params;

pub use error::{Error, Result};
pub use num_complex::Complex64;
