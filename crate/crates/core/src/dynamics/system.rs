use crate::error::{Error, Result};
use crate::specmat::{eig_hermitian, HermitianMatrix, SpectralDecomposition};

/// A closed problem instance: Hamiltonian, coupling operator, inverse
/// temperature, damping rate and `hbar`.
///
/// Units follow `k_B = 1`; with the default `hbar = 1` times are measured
/// in inverse energy units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    hamiltonian: HermitianMatrix,
    coupling: HermitianMatrix,
    beta: f64,
    gamma_e: f64,
    hbar: f64,
}

impl SystemSpec {
    /// `gamma_e = 0` is accepted (it switches damping off); `beta` and
    /// `hbar` must be strictly positive.
    pub fn new(hamiltonian: HermitianMatrix, coupling: HermitianMatrix, beta: f64, gamma_e: f64) -> Result<Self> {
        Self::with_hbar(hamiltonian, coupling, beta, gamma_e, 1.0)
    }

    pub fn with_hbar(
        hamiltonian: HermitianMatrix,
        coupling: HermitianMatrix,
        beta: f64,
        gamma_e: f64,
        hbar: f64,
    ) -> Result<Self> {
        if hamiltonian.dim() != coupling.dim() {
            return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: coupling.dim() });
        }
        if hamiltonian.dim() == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidSpec(format!("beta must be positive, got {beta}")));
        }
        if !(gamma_e >= 0.0 && gamma_e.is_finite()) {
            return Err(Error::InvalidSpec(format!("gamma_e must be non-negative, got {gamma_e}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidSpec(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hamiltonian, coupling, beta, gamma_e, hbar })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    pub fn coupling(&self) -> &HermitianMatrix {
        &self.coupling
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_gamma_e(&self, gamma_e: f64) -> Result<Self> {
        Self::with_hbar(self.hamiltonian.clone(), self.coupling.clone(), self.beta, gamma_e, self.hbar)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::with_hbar(self.hamiltonian.clone(), self.coupling.clone(), beta, self.gamma_e, self.hbar)
    }

    /// The same system written in the eigenbasis of `H` (energies
    /// ascending), together with the decomposition used.
    pub fn to_energy_basis(&self) -> Result<(Self, SpectralDecomposition)> {
        let eig = eig_hermitian(&self.hamiltonian)?;
        let h = HermitianMatrix::from_real_diagonal(&eig.eigenvalues);
        let q = HermitianMatrix::symmetrized(eig.to_eigenbasis(self.coupling.as_matrix()));
        let spec = Self::with_hbar(h, q, self.beta, self.gamma_e, self.hbar)?;
        Ok((spec, eig))
    }

    /// Spectral norm of `H` (largest |E_n|).
    pub fn hamiltonian_norm(&self) -> Result<f64> {
        let eig = eig_hermitian(&self.hamiltonian)?;
        Ok(eig.eigenvalues.iter().fold(0.0_f64, |a, &e| a.max(e.abs())))
    }
}
