use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specmat::{eig_hermitian_matrix, hermiticity_defect, CMatrix, HermitianMatrix, SpectralDecomposition};

pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive-semidefinite matrix with a lazily
/// cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl DensityMatrix {
    /// Validates Hermiticity (relative 1e-12, then symmetrizes), unit trace
    /// and `min eig >= -1e-8`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        let tr = h.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let state = Self::from_hermitian(h.into_inner());
        let min = state.spectrum()?.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(state)
    }

    /// Wraps a matrix that is already exactly Hermitian without checking
    /// trace or positivity. Used for intermediate integrator stages and
    /// finite-difference probes.
    pub(crate) fn from_hermitian(matrix: CMatrix) -> Self {
        Self { matrix, spectrum: OnceLock::new() }
    }

    /// Hermitian part of `m`, trace and positivity unchecked.
    pub(crate) fn symmetrized_unchecked(m: CMatrix) -> Self {
        Self::from_hermitian(HermitianMatrix::symmetrized(m).into_inner())
    }

    /// State with prescribed eigen-decomposition `U diag(w) U†`.
    pub(crate) fn from_spectrum(spectrum: SpectralDecomposition) -> Self {
        let matrix = HermitianMatrix::symmetrized(spectrum.reconstruct()).into_inner();
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Self { matrix, spectrum: cell }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_hermitian(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// `|k)(k|` in the computational basis (0-based `k`).
    pub fn pure(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidState(format!("level {k} out of range for dimension {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(Self::from_hermitian(m))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = eig_hermitian_matrix(&self.matrix)?;
        let _ = self.spectrum.set(s);
        Ok(self.spectrum.get().expect("spectrum just set"))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectrum()?.min_eigenvalue())
    }

    /// Eigenvalues clamped at zero.
    pub fn weights(&self) -> Result<Vec<f64>> {
        Ok(self.spectrum()?.eigenvalues.iter().map(|&w| w.max(0.0)).collect())
    }
}
