//! Nonlinear thermalizing master equation for finite-dimensional quantum
//! systems, with a linear stability analysis of its thermal fixed point.

pub mod dynamics;
mod error;
pub mod gellmann;
pub mod presets;
pub mod quadrature;
pub mod random;
pub mod selftest;
pub mod specmat;
pub mod stability;

pub use error::{Error, Result};
