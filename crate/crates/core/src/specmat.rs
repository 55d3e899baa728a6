//! Dense Hermitian spectral calculus.
//!
//! Everything the master equation needs from linear algebra lives here:
//! eigendecomposition of Hermitian matrices, commutators, Hadamard
//! products, the logarithmic-mean kernel `F(x, y) = (x - y) / (ln x - ln y)`
//! together with its normalized form `f_D(eta) = eta / artanh(eta)`, and the
//! state-dependent operator map
//!
//! ```text
//! A_rho = ∫_0^1 rho^eta A rho^(1 - eta) d eta
//! ```
//!
//! which in the eigenbasis of `rho` is a Hadamard product with the kernel
//! matrix `F(w_n, w_m)`. A Gauss-Legendre evaluation of the defining
//! integral is kept alongside as an independent check.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for accepting an input as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues of a state above this (negative) level are clamped to zero.
pub const KERNEL_CLAMP: f64 = 1e-12;

/// Eigenvalues of a state below this level are rejected by [`a_rho`].
pub const STATE_NEGATIVITY_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Below this |eta| `f_d` switches to its even Taylor series.
const FD_SERIES_CUTOFF: f64 = 1e-4;
/// Below this |eta| `f_d_prime` uses the series (the closed form cancels).
const FD_PRIME_SERIES_CUTOFF: f64 = 0.1;

/// Coefficients of `eta / artanh(eta) = Σ c_k eta^(2k)`.
const FD_SERIES: [f64; 11] = [
    1.0,
    -1.0 / 3.0,
    -4.0 / 45.0,
    -44.0 / 945.0,
    -428.0 / 14175.0,
    -10196.0 / 467775.0,
    -10719068.0 / 638512875.0,
    -25865068.0 / 1915538625.0,
    -5472607916.0 / 488462349375.0,
    -74185965772.0 / 7795859096025.0,
    -264698472181028.0 / 32157918771103125.0,
];

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes `(M + M†) / 2`, so the stored entries are
/// exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates that `m` is square, finite and Hermitian to within
    /// [`HERMITIAN_TOL`] (relative to its largest entry), then symmetrizes.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let mut worst = (0, 0, 0.0_f64);
        for r in 0..m.nrows() {
            for c in r..m.ncols() {
                let dev = (m[(r, c)] - m[(c, r)].conj()).norm();
                if dev > worst.2 {
                    worst = (r, c, dev);
                }
            }
        }
        if worst.2 > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part `(M + M†) / 2` without any tolerance check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self((m + adj).scale(0.5))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigenvalues (ascending) and the unitary whose columns are eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(g(w)) U†`.
    pub fn map<F: Fn(f64) -> f64>(&self, g: F) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &w) in self.eigenvalues.iter().enumerate() {
            let gw = g(w);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= gw);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|w| w)
    }

    /// `U† A U`: the matrix `A` expressed in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// `U A U†`: inverse of [`Self::to_eigenbasis`].
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.eigenvectors * a * self.eigenvectors.adjoint()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

fn check_square_finite(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn eig_hermitian(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    eig_hermitian_matrix(a.as_matrix())
}

/// Eigendecomposition of a matrix assumed Hermitian (only finiteness is
/// checked). Eigenvalues are returned in ascending order.
pub(crate) fn eig_hermitian_matrix(a: &CMatrix) -> Result<SpectralDecomposition> {
    check_square_finite(a)?;
    let dim = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure { dim })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

fn check_dims(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(())
}

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dims(a, b)?;
    Ok(a * b - b * a)
}

/// Infallible commutator for internal use where shapes are already known.
pub(crate) fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Entrywise product.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dims(a, b)?;
    Ok(a.component_mul(b))
}

fn fd_series(eta: f64) -> f64 {
    let s = eta * eta;
    FD_SERIES.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn fd_prime_series(eta: f64) -> f64 {
    // d/d eta Σ c_k eta^(2k) = Σ_{k≥1} 2k c_k eta^(2k-1)
    let s = eta * eta;
    let mut acc = 0.0;
    for (k, &c) in FD_SERIES.iter().enumerate().skip(1).rev() {
        acc = acc * s + 2.0 * k as f64 * c;
    }
    acc * eta
}

/// `f_D(eta) = eta / artanh(eta)` on `[-1, 1]`, with `f_D(±1) = 0`.
pub fn f_d(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta.abs() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("f_d requires |eta| <= 1, got {eta}")));
    }
    let a = eta.abs().min(1.0);
    if a >= 1.0 {
        return Ok(0.0);
    }
    if a < FD_SERIES_CUTOFF {
        return Ok(fd_series(a));
    }
    // 2 eta / ln((1 + eta)/(1 - eta)), with the log split through ln_1p.
    Ok(2.0 * a / (a.ln_1p() - (-a).ln_1p()))
}

/// Derivative of [`f_d`] on the open interval `(-1, 1)`.
pub fn f_d_prime(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta.abs() >= 1.0 {
        return Err(Error::Domain(format!("f_d_prime requires |eta| < 1, got {eta}")));
    }
    if eta.abs() < FD_PRIME_SERIES_CUTOFF {
        return Ok(fd_prime_series(eta));
    }
    // odd function: evaluate on |eta| so the symmetry is exact
    let a = eta.abs();
    let at = a.atanh();
    Ok(eta.signum() * (at - a / (1.0 - a * a)) / (at * at))
}

/// Logarithmic mean `(x - y) / (ln x - ln y)` with the limits
/// `cal_f(x, x) = x` and `cal_f(x, 0) = 0`.
pub fn cal_f(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("cal_f requires finite x, y >= 0, got ({x}, {y})")));
    }
    Ok(log_mean(x, y))
}

/// Unchecked logarithmic mean for non-negative finite arguments.
pub(crate) fn log_mean(x: f64, y: f64) -> f64 {
    if x == y {
        return x;
    }
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    if lo < hi / 3.0 {
        // eta > 1/2: the ratio carries information that eta itself would
        // round away once lo/hi drops below machine epsilon.
        return (hi - lo) / (hi.ln() - lo.ln());
    }
    let eta = (hi - lo) / (hi + lo);
    0.5 * (hi + lo) * f_d(eta).expect("eta in [0, 1/2]")
}

/// Real symmetric matrix `F_nm = cal_f(w_n, w_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(DMatrix<f64>);

impl KernelMatrix {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.0[(n, m)]
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `F ∘ A`.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] * self.0[(r, c)])
    }
}

pub fn kernel_matrix(w: &[f64]) -> Result<KernelMatrix> {
    let mut clamped = Vec::with_capacity(w.len());
    for &x in w {
        if !x.is_finite() || x < -KERNEL_CLAMP {
            return Err(Error::Domain(format!("kernel weight {x} is negative")));
        }
        clamped.push(x.max(0.0));
    }
    let d = clamped.len();
    Ok(KernelMatrix(DMatrix::from_fn(d, d, |n, m| {
        if n == m {
            clamped[n]
        } else {
            log_mean(clamped[n], clamped[m])
        }
    })))
}

fn clamped_weights(spectrum: &SpectralDecomposition) -> Result<Vec<f64>> {
    let min = spectrum.min_eigenvalue();
    if min < -STATE_NEGATIVITY_TOL {
        return Err(Error::Domain(format!("state has eigenvalue {min:e} < 0")));
    }
    Ok(spectrum.eigenvalues.iter().map(|&w| w.max(0.0)).collect())
}

/// `A_rho` through the eigenbasis of `rho`: `U (F ∘ (U† A U)) U†`.
///
/// Linear in `A`; maps Hermitian to Hermitian and anti-Hermitian to
/// anti-Hermitian.
pub fn a_rho(a: &CMatrix, rho: &DensityMatrix) -> Result<CMatrix> {
    if a.nrows() != rho.dim() || a.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: a.nrows() });
    }
    let spectrum = rho.spectrum()?;
    let kernel = kernel_matrix(&clamped_weights(spectrum)?)?;
    Ok(a_rho_with(a, spectrum, &kernel))
}

pub(crate) fn a_rho_with(a: &CMatrix, spectrum: &SpectralDecomposition, kernel: &KernelMatrix) -> CMatrix {
    spectrum.from_eigenbasis(&kernel.apply(&spectrum.to_eigenbasis(a)))
}

/// Hermitian-typed convenience wrapper around [`a_rho`].
pub fn a_rho_hermitian(a: &HermitianMatrix, rho: &DensityMatrix) -> Result<HermitianMatrix> {
    a_rho(a.as_matrix(), rho).map(HermitianMatrix::symmetrized)
}

/// Default node count for [`quadrature_a_rho`].
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Gauss-Legendre evaluation of `∫_0^1 rho^eta A rho^(1-eta) d eta` using
/// explicit matrix powers. Restricted to strictly positive states.
pub fn quadrature_a_rho(a: &CMatrix, rho: &DensityMatrix, nodes: usize) -> Result<CMatrix> {
    if a.nrows() != rho.dim() || a.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: a.nrows() });
    }
    if nodes == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    let spectrum = rho.spectrum()?;
    let min = spectrum.min_eigenvalue();
    if min <= 0.0 {
        return Err(Error::Domain(format!(
            "quadrature oracle needs a strictly positive state, min eigenvalue {min:e}"
        )));
    }
    let rule = GaussLegendre::new(nodes).on_interval(0.0, 1.0);
    let d = rho.dim();
    let mut acc = CMatrix::zeros(d, d);
    for (&eta, &weight) in rule.nodes.iter().zip(&rule.weights) {
        let left = spectrum.map(|w| w.powf(eta));
        let right = spectrum.map(|w| w.powf(1.0 - eta));
        acc += (left * a * right).scale(weight);
    }
    Ok(acc)
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|A_ij - A_ji*|`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..a.nrows() {
        for c in r..a.ncols() {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}
