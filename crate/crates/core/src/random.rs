//! Random Hermitian matrices and states for ensembles and tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::DensityMatrix;
use crate::specmat::{CMatrix, HermitianMatrix};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Gaussian unitary ensemble draw: real N(0, 1) diagonal, complex
/// off-diagonal entries with `E|z|^2 = 1`, all multiplied by `scale`.
pub fn gue<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> HermitianMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m[(r, r)] = Complex64::new(d * scale, 0.0);
        for c in r + 1..dim {
            let z = complex_gaussian(rng) * scale;
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    HermitianMatrix::symmetrized(m)
}

/// Full-rank random state `(1 - mix) W / Tr W + mix I / d` with `W = G G†`
/// a complex Wishart draw. `mix` bounds the smallest eigenvalue below by
/// `mix / d`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, mix: f64) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let mixed = w.unscale(tr).scale(1.0 - mix) + CMatrix::identity(dim, dim).scale(mix / dim as f64);
    DensityMatrix::new(mixed).expect("Wishart draw is a valid state")
}

/// GUE draw rescaled to unit spectral norm, so that `β` alone sets the
/// spread of the thermal weights.
pub fn gue_unit_norm<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let m = gue(rng, dim, 1.0);
    let norm = crate::specmat::eig_hermitian(&m)
        .map(|e| e.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs())))
        .unwrap_or(1.0);
    if norm > 0.0 {
        HermitianMatrix::symmetrized(m.into_inner().unscale(norm))
    } else {
        m
    }
}
