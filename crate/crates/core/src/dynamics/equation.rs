//! Right-hand side of the nonlinear master equation
//!
//! ```text
//! d rho / dt = Θ_u(rho) - Θ_A(rho) - Θ_B(rho)
//! Θ_u = (i / hbar) [rho, H]
//! Θ_A = γ_E [Q, [Q, rho]]
//! Θ_B = β γ_E [Q, [Q, H]_rho]
//! ```
//!
//! where `[Q, H]_rho` is the map of [`crate::specmat::a_rho`].

use num_complex::Complex64;

use crate::dynamics::{DensityMatrix, SystemSpec};
use crate::error::{Error, Result};
use crate::specmat::{a_rho, comm, eig_hermitian, CMatrix, SpectralDecomposition};

/// Which damping term enters Θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingMode {
    /// State-dependent `Θ_B`.
    Nonlinear,
    /// `Θ_B` replaced by the constant `(β' / hbar) γ_E [Q, [Q, H]]`.
    Linear { beta_prime: f64 },
}

fn check_dim(rho: &DensityMatrix, spec: &SystemSpec) -> Result<()> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho.dim() });
    }
    Ok(())
}

pub fn theta_u(rho: &DensityMatrix, spec: &SystemSpec) -> Result<CMatrix> {
    check_dim(rho, spec)?;
    let c = comm(rho.as_matrix(), spec.hamiltonian().as_matrix());
    Ok(c * Complex64::new(0.0, 1.0 / spec.hbar()))
}

pub fn theta_a(rho: &DensityMatrix, spec: &SystemSpec) -> Result<CMatrix> {
    check_dim(rho, spec)?;
    let q = spec.coupling().as_matrix();
    Ok(comm(q, &comm(q, rho.as_matrix())).scale(spec.gamma_e()))
}

pub fn theta_b(rho: &DensityMatrix, spec: &SystemSpec) -> Result<CMatrix> {
    check_dim(rho, spec)?;
    let q = spec.coupling().as_matrix();
    let qh = comm(q, spec.hamiltonian().as_matrix());
    let qh_rho = a_rho(&qh, rho)?;
    Ok(comm(q, &qh_rho).scale(spec.beta() * spec.gamma_e()))
}

/// Constant replacement for `Θ_B` in the linear master equation.
pub fn theta_b_linear(spec: &SystemSpec, beta_prime: f64) -> Result<CMatrix> {
    if !(beta_prime > 0.0 && beta_prime.is_finite()) {
        return Err(Error::Domain(format!("beta_prime must be positive, got {beta_prime}")));
    }
    let q = spec.coupling().as_matrix();
    let h = spec.hamiltonian().as_matrix();
    Ok(comm(q, &comm(q, h)).scale(beta_prime * spec.gamma_e() / spec.hbar()))
}

pub fn theta(rho: &DensityMatrix, spec: &SystemSpec, mode: DampingMode) -> Result<CMatrix> {
    let unitary = theta_u(rho, spec)?;
    if spec.gamma_e() == 0.0 {
        return Ok(unitary);
    }
    let a = theta_a(rho, spec)?;
    let b = match mode {
        DampingMode::Nonlinear => theta_b(rho, spec)?,
        DampingMode::Linear { beta_prime } => theta_b_linear(spec, beta_prime)?,
    };
    Ok(unitary - a - b)
}

/// Thermal fixed point `e^{-βH} / Tr e^{-βH}`, built in the eigenbasis of
/// `H` with energies shifted by `E_min` so the exponentials cannot overflow.
pub fn fixed_point(spec: &SystemSpec) -> Result<DensityMatrix> {
    let eig = eig_hermitian(spec.hamiltonian())?;
    let weights = boltzmann_weights(&eig.eigenvalues, spec.beta());
    // Energies ascend, so weights descend; flip to keep the cached
    // spectrum ascending.
    let d = weights.len();
    let eigenvalues: Vec<f64> = weights.iter().rev().copied().collect();
    let eigenvectors = CMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, d - 1 - c)]);
    Ok(DensityMatrix::from_spectrum(SpectralDecomposition { eigenvalues, eigenvectors }))
}

/// Normalized Boltzmann weights `e^{-β(E_n - E_min)} / Z`.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// `ln Tr e^{-βH}` evaluated with the same shift as [`boltzmann_weights`].
pub fn log_partition_function(energies: &[f64], beta: f64) -> f64 {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).sum();
    z.ln() - beta * e_min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gue, random_density};
    use crate::specmat::{frobenius, HermitianMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])).unwrap()
    }

    fn random_spec(seed: u64, d: usize) -> SystemSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = gue(&mut rng, d, 1.0);
        let q = gue(&mut rng, d, 1.0);
        SystemSpec::new(h, q, 1.0, 0.3).unwrap()
    }

    fn state(entries: &[Complex64]) -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_row_slice(2, 2, entries)).unwrap()
    }

    #[test]
    fn fixed_point_two_level() {
        let (e, beta) = (1.3, 0.7);
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, e]), sigma_x(), beta, 0.1).unwrap();
        let rho = fixed_point(&spec).unwrap();
        let z = 1.0 + (-beta * e).exp();
        assert!((rho.as_matrix()[(0, 0)].re - 1.0 / z).abs() < 1e-15);
        assert!((rho.as_matrix()[(1, 1)].re - (-beta * e).exp() / z).abs() < 1e-15);
        assert!(rho.as_matrix()[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn fixed_point_infinite_temperature() {
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 2.0]), HermitianMatrix::zeros(3), 1e-10, 0.1)
            .unwrap();
        let rho = fixed_point(&spec).unwrap();
        let diff = rho.as_matrix() - CMatrix::identity(3, 3).unscale(3.0);
        assert!(frobenius(&diff) < 1e-8);
    }

    #[test]
    fn fixed_point_is_stationary_for_random_spec() {
        let spec = random_spec(11, 4);
        let rho0 = fixed_point(&spec).unwrap();
        let r = frobenius(&theta(&rho0, &spec, DampingMode::Nonlinear).unwrap());
        assert!(r < 1e-11, "{r}");
        let ab = theta_a(&rho0, &spec).unwrap() + theta_b(&rho0, &spec).unwrap();
        assert!(frobenius(&ab) < 1e-10);
        assert!(frobenius(&theta_u(&rho0, &spec).unwrap()) < 1e-12);
    }

    #[test]
    fn theta_u_commuting_state_vanishes() {
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, 2.0]), sigma_x(), 1.0, 0.1).unwrap();
        let rho = state(&[c(0.3, 0.), c(0., 0.), c(0., 0.), c(0.7, 0.)]);
        assert_eq!(frobenius(&theta_u(&rho, &spec).unwrap()), 0.0);
    }

    #[test]
    fn theta_u_rotates_coherence() {
        // d r_{01}/dt = (i/hbar)(rho H - H rho)_{01} = (i omega) r_{01}
        let omega = 1.7;
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, omega]), sigma_x(), 1.0, 0.0).unwrap();
        let rho = state(&[c(0.5, 0.), c(0.2, 0.1), c(0.2, -0.1), c(0.5, 0.)]);
        let t = theta_u(&rho, &spec).unwrap();
        let want = c(0.0, omega) * c(0.2, 0.1);
        assert!((t[(0, 1)] - want).norm() < 1e-15);
        assert!(t[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn theta_a_two_level_expansion() {
        // Q = σx, rho = diag(p, 1-p): [σx,[σx, σz]] = 4 σz, rho = 1/2 + (p - 1/2) σz
        let p = 0.8;
        let gamma = 0.35;
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, 1.0]), sigma_x(), 1.0, gamma).unwrap();
        let rho = state(&[c(p, 0.), c(0., 0.), c(0., 0.), c(1. - p, 0.)]);
        let t = theta_a(&rho, &spec).unwrap();
        let amp = gamma * 4.0 * (p - 0.5);
        assert!((t[(0, 0)].re - amp).abs() < 1e-15);
        assert!((t[(1, 1)].re + amp).abs() < 1e-15);
        assert!(t[(0, 1)].norm() < 1e-15);
        assert!((t[(0, 0)].re - gamma * 2.0 * (2.0 * p - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn theta_a_is_linear() {
        let spec = random_spec(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let r1 = random_density(&mut rng, 3, 0.1);
        let r2 = random_density(&mut rng, 3, 0.1);
        let alpha = 0.3;
        let mix = DensityMatrix::new(r1.as_matrix().scale(alpha) + r2.as_matrix().scale(1.0 - alpha)).unwrap();
        let lhs = theta_a(&mix, &spec).unwrap();
        let rhs = theta_a(&r1, &spec).unwrap().scale(alpha) + theta_a(&r2, &spec).unwrap().scale(1.0 - alpha);
        assert!(frobenius(&(lhs - rhs)) < 1e-13);
    }

    #[test]
    fn theta_b_limits() {
        // [Q, H] = 0
        let h = HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 3.0]);
        let q = HermitianMatrix::from_real_diagonal(&[1.0, -1.0, 0.5]);
        let spec = SystemSpec::new(h, q, 1.0, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density(&mut rng, 3, 0.1);
        assert!(frobenius(&theta_b(&rho, &spec).unwrap()) < 1e-15);

        // rho = I/d
        let spec = random_spec(9, 3);
        let mixed = DensityMatrix::maximally_mixed(3);
        let q = spec.coupling().as_matrix();
        let want = comm(q, &comm(q, spec.hamiltonian().as_matrix())).scale(spec.beta() * spec.gamma_e() / 3.0);
        assert!(frobenius(&(theta_b(&mixed, &spec).unwrap() - want)) < 1e-13);
    }

    #[test]
    fn theta_b_linear_two_level() {
        // Q = σx, H = diag(0, w) = w/2 (1 - σz): [σx,[σx,σz]] = 4σz
        let w = 2.0;
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, w]), sigma_x(), 1.0, 0.5).unwrap();
        let bp = 0.4;
        let t = theta_b_linear(&spec, bp).unwrap();
        let amp = bp * 0.5 * (-w / 2.0) * 4.0;
        assert!((t[(0, 0)].re - amp).abs() < 1e-15);
        assert!((t[(1, 1)].re + amp).abs() < 1e-15);
        assert!(theta_b_linear(&spec, 0.0).is_err());
    }

    #[test]
    fn theta_is_traceless_and_hermitian() {
        let spec = random_spec(12, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(&mut rng, 4, 0.05);
        for mode in [DampingMode::Nonlinear, DampingMode::Linear { beta_prime: 0.7 }] {
            let t = theta(&rho, &spec, mode).unwrap();
            assert!(t.trace().norm() < 1e-12);
            assert!(crate::specmat::hermiticity_defect(&t) < 1e-12);
        }
        let frozen = spec.with_gamma_e(0.0).unwrap();
        assert_eq!(
            theta(&rho, &frozen, DampingMode::Nonlinear).unwrap(),
            theta_u(&rho, &frozen).unwrap()
        );
    }
}
