//! Nonlinear thermalizing master equation: right-hand side, thermal fixed point,
//! free-energy observables and time integration.

pub mod equation;
pub mod integrate;
mod state;
mod system;
pub mod thermo;

pub use equation::{boltzmann_weights, fixed_point, theta, theta_a, theta_b, theta_b_linear, theta_u, DampingMode};
pub use integrate::{diagnose_limit_cycle, integrate, IntegratorOptions, LimitCycleDiagnostic, Method, Trajectory};
pub use state::DensityMatrix;
pub use system::SystemSpec;
pub use thermo::{c_operator, free_energy, free_energy_rate, helmholtz_operator, observables, Observables};
