//! Free-energy bookkeeping: the Helmholtz operator `U_H = H + β⁻¹ ln rho`,
//! the dissipation operator `C = i [Q, U_H]`, and per-state observables.

use num_complex::Complex64;

use crate::dynamics::{DensityMatrix, SystemSpec};
use crate::error::{Error, Result};
use crate::specmat::{a_rho, comm, frobenius, CMatrix, HermitianMatrix};

/// Eigenvalues below this are floored before taking `ln` in [`helmholtz_operator`].
pub const LOG_FLOOR: f64 = 1e-300;
/// `c_operator` refuses states whose smallest eigenvalue is below this.
pub const SINGULAR_TOL: f64 = 1e-14;

fn helmholtz_with_floor(rho: &DensityMatrix, spec: &SystemSpec, floor: f64) -> Result<CMatrix> {
    let spectrum = rho.spectrum()?;
    let beta = spec.beta();
    let log_rho = spectrum.map(|w| w.max(floor).ln() / beta);
    Ok(spec.hamiltonian().as_matrix() + log_rho)
}

/// `H + β⁻¹ ln rho`, with eigenvalues floored at [`LOG_FLOOR`].
pub fn helmholtz_operator(rho: &DensityMatrix, spec: &SystemSpec) -> Result<HermitianMatrix> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho.dim() });
    }
    helmholtz_with_floor(rho, spec, LOG_FLOOR).map(HermitianMatrix::symmetrized)
}

/// `i [Q, U_H]`. Errors with `SingularState` when the state is (numerically)
/// rank deficient.
pub fn c_operator(rho: &DensityMatrix, spec: &SystemSpec) -> Result<HermitianMatrix> {
    let min_eig = rho.min_eigenvalue()?;
    if min_eig < SINGULAR_TOL {
        return Err(Error::SingularState { min_eig });
    }
    let u = helmholtz_operator(rho, spec)?;
    Ok(c_from_helmholtz(&u, spec))
}

fn c_from_helmholtz(u: &HermitianMatrix, spec: &SystemSpec) -> HermitianMatrix {
    let c = comm(spec.coupling().as_matrix(), u.as_matrix()) * Complex64::new(0.0, 1.0);
    HermitianMatrix::symmetrized(c)
}

/// `‖C‖_F` using the floored Helmholtz operator; finite for every state.
pub fn c_norm(rho: &DensityMatrix, spec: &SystemSpec) -> Result<f64> {
    let u = helmholtz_operator(rho, spec)?;
    Ok(frobenius(c_from_helmholtz(&u, spec).as_matrix()))
}

/// `⟨U_H⟩ = Tr(H rho) + β⁻¹ Σ w ln w` with `0 ln 0 = 0`.
pub fn free_energy(rho: &DensityMatrix, spec: &SystemSpec) -> Result<f64> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho.dim() });
    }
    let energy = (spec.hamiltonian().as_matrix() * rho.as_matrix()).trace().re;
    Ok(energy - von_neumann_entropy(&rho.weights()?) / spec.beta())
}

/// Predicted `d⟨U_H⟩/dt = -β γ_E Tr(C_rho C)` for the nonlinear equation.
pub fn free_energy_rate(rho: &DensityMatrix, spec: &SystemSpec) -> Result<f64> {
    let c = c_operator(rho, spec)?;
    let c_rho = a_rho(c.as_matrix(), rho)?;
    let tr = (c_rho * c.as_matrix()).trace().re;
    Ok(-spec.beta() * spec.gamma_e() * tr)
}

/// `-Σ w ln w` over clamped weights.
pub fn von_neumann_entropy(weights: &[f64]) -> f64 {
    -weights.iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub purity: f64,
    pub entropy: f64,
    pub free_energy: f64,
    pub c_norm: f64,
    pub trace_error: f64,
    pub min_eig: f64,
}

pub fn observables(rho: &DensityMatrix, spec: &SystemSpec) -> Result<Observables> {
    let m = rho.as_matrix();
    let purity = (m * m).trace().re;
    let weights = rho.weights()?;
    Ok(Observables {
        purity,
        entropy: von_neumann_entropy(&weights),
        free_energy: free_energy(rho, spec)?,
        c_norm: c_norm(rho, spec)?,
        trace_error: (rho.trace() - 1.0).abs(),
        min_eig: rho.min_eigenvalue()?,
    })
}
