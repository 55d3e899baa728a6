//! Linearization of the master equation at its thermal fixed point.
//!
//! The Jacobian is assembled in the Gell-Mann basis of the energy
//! eigenbasis by three routes: analytic perturbation theory, central finite
//! differences of Θ, and closed-form expressions for its diagonal.

pub mod analytic;
pub mod closed_form;
pub mod context;
pub mod fd;
mod report;
pub mod special;

pub use analytic::{d_a_rho_d_eps, d_a_rho_direction, jacobian_analytic, perturbation_generator, AnalyticBlocks};
pub use closed_form::{closed_form_diagonal, closed_form_diagonals};
pub use context::{LinearizationContext, DEGENERACY_TOL};
pub use fd::{default_fd_step, jacobian_fd, FdJacobian};
pub use report::{
    real_eigenvalues, stability_report, DiagonalCriterion, JacobianReport, RouteDiscrepancies, StabilityOptions,
    Verdict, DEFAULT_TOL_MARGIN,
};
pub use special::{g_func, g_func_difference_form, upsilon, zeta};
