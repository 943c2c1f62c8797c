//! Numerical toolkit for the arrow-of-time operator of free and scattering
//! quantum systems.

pub mod arrow;
pub mod error;
pub mod galapon;
pub mod hardy;
pub mod mtransform;
pub mod scattering;
pub mod spectral;
pub mod states;
mod quadrature;
mod toeplitz;

pub use error::{Error, Result};
