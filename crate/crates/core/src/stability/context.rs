use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dynamics::{boltzmann_weights, DensityMatrix, SystemSpec};
use crate::error::Result;
use crate::gellmann::{build_basis, GellMannBasis};
use crate::specmat::{f_d_prime, kernel_matrix, CMatrix, HermitianMatrix, KernelMatrix, SpectralDecomposition};

/// Relative gap below which two thermal weights count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Everything the linearization at the thermal state needs, expressed in
/// the energy eigenbasis (energies ascending, so weights descend).
///
/// Pairwise quantities are stored with 0-based indices:
/// `η_nm = (ρ_n - ρ_m)/(ρ_n + ρ_m)`, `α_nm = (ρ_n + ρ_m)/2`,
/// `F_nm = f_D(η_nm)`, `F'_nm = f_D'(η_nm)` and the kernel `𝓕_nm = α_nm F_nm`.
#[derive(Debug, Clone)]
pub struct LinearizationContext {
    pub spec: SystemSpec,
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub basis: Arc<GellMannBasis>,
    pub kernel: KernelMatrix,
    pub eta: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub f_prime: DMatrix<f64>,
    /// `1 - η_nm² = ρ_n ρ_m / α_nm²`, kept separately because `η` itself
    /// rounds to ±1 for widely separated weights.
    pub one_minus_eta_sq: DMatrix<f64>,
    /// Rotation taking the original basis to the energy basis.
    pub energy_eigenvectors: CMatrix,
}

impl LinearizationContext {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        let (energy_spec, eig) = spec.to_energy_basis()?;
        Self::from_energy_basis(energy_spec, eig)
    }

    fn from_energy_basis(spec: SystemSpec, eig: SpectralDecomposition) -> Result<Self> {
        let d = spec.dim();
        let basis = build_basis(d)?;
        let energies = eig.eigenvalues.clone();
        let weights = boltzmann_weights(&energies, spec.beta());
        let kernel = kernel_matrix(&weights)?;
        let alpha = DMatrix::from_fn(d, d, |n, m| 0.5 * (weights[n] + weights[m]));
        let eta = DMatrix::from_fn(d, d, |n, m| (weights[n] - weights[m]) / (weights[n] + weights[m]));
        let f = DMatrix::from_fn(d, d, |n, m| if n == m { 1.0 } else { kernel.get(n, m) / alpha[(n, m)] });
        let one_minus_eta_sq =
            DMatrix::from_fn(d, d, |n, m| weights[n] * weights[m] / (alpha[(n, m)] * alpha[(n, m)]));
        let mut f_prime = DMatrix::zeros(d, d);
        for n in 0..d {
            for m in 0..d {
                if n == m {
                    continue;
                }
                let e = eta[(n, m)];
                f_prime[(n, m)] = if e.abs() < 0.5 {
                    f_d_prime(e)?
                } else {
                    // f' = (f/η)(1 - f/(1 - η²)), finite even when η rounds to ±1
                    let fv = f[(n, m)];
                    (fv / e) * (1.0 - fv / one_minus_eta_sq[(n, m)])
                };
            }
        }
        Ok(Self {
            spec,
            energies,
            weights,
            basis,
            kernel,
            eta,
            alpha,
            f,
            f_prime,
            one_minus_eta_sq,
            energy_eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `e_nm = β (E_n - E_m)`.
    pub fn e(&self, n: usize, m: usize) -> f64 {
        self.spec.beta() * (self.energies[n] - self.energies[m])
    }

    /// Coupling matrix element `q_nm` in the energy basis.
    pub fn q(&self, n: usize, m: usize) -> num_complex::Complex64 {
        self.spec.coupling().as_matrix()[(n, m)]
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_degenerate(&self, n: usize, m: usize) -> bool {
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        (self.weights[n] - self.weights[m]).abs() < DEGENERACY_TOL * max
    }

    /// Thermal state in the energy basis, `diag(ρ_1, …, ρ_d)`.
    pub fn thermal_state(&self) -> DensityMatrix {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]));
        let d = self.dim();
        let eigenvectors = CMatrix::from_fn(d, d, |r, c| {
            if r == order[c] {
                num_complex::Complex64::new(1.0, 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        });
        let eigenvalues = order.iter().map(|&i| self.weights[i]).collect();
        DensityMatrix::from_spectrum(SpectralDecomposition { eigenvalues, eigenvectors })
    }

    /// `[Q, H]` in the energy basis.
    pub fn coupling_commutator(&self) -> CMatrix {
        let q = self.spec.coupling().as_matrix();
        let h = self.spec.hamiltonian().as_matrix();
        q * h - h * q
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        self.spec.hamiltonian()
    }
}
