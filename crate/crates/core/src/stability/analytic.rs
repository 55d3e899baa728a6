//! First-order perturbation theory of `A_rho` around the thermal state and
//! the analytic Jacobian blocks built from it.
//!
//! For `rho = rho_0 + ε V` the eigenvectors rotate as `1 + i ε F` with
//! `F_kl = i V_kl / (ρ_k - ρ_l)` (`k ≠ l`), and
//!
//! ```text
//! dA_rho/dε = (dF/dε) ∘ A + i ([F, F ∘ A] - F ∘ [F, A])
//! ```
//!
//! where the bare `F` is the generator and `F ∘` the kernel Hadamard product.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::DampingMode;
use crate::error::{Error, Result};
use crate::gellmann::{generator, trace_product, Label};
use crate::specmat::{comm, CMatrix, HermitianMatrix};
use crate::stability::context::LinearizationContext;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gap `ρ_n - ρ_m` for a 1-based pair, or `DegenerateSpectrum`.
fn pair_gap(n: usize, m: usize, ctx: &LinearizationContext) -> Result<f64> {
    if ctx.is_degenerate(n - 1, m - 1) {
        return Err(Error::DegenerateSpectrum { n, m });
    }
    Ok(ctx.weights[n - 1] - ctx.weights[m - 1])
}

/// Rotation generator `F` for a basis perturbation.
pub fn perturbation_generator(label: Label, ctx: &LinearizationContext) -> Result<HermitianMatrix> {
    let d = ctx.dim();
    Ok(HermitianMatrix::symmetrized(match label {
        Label::X { n, m } => generator(d, Label::Y { n, m }).unscale(pair_gap(n, m, ctx)?),
        Label::Y { n, m } => generator(d, Label::X { n, m }).unscale(-pair_gap(n, m, ctx)?),
        Label::Z { .. } => CMatrix::zeros(d, d),
    }))
}

/// Rotation generator for an arbitrary trace-less Hermitian perturbation.
pub fn perturbation_generator_general(v: &CMatrix, ctx: &LinearizationContext) -> Result<CMatrix> {
    let d = ctx.dim();
    let mut f = CMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            if k == l || v[(k, l)] == Complex64::new(0.0, 0.0) {
                continue;
            }
            if ctx.is_degenerate(k, l) {
                return Err(Error::DegenerateSpectrum { n: k.max(l) + 1, m: k.min(l) + 1 });
            }
            f[(k, l)] = I * v[(k, l)] / (ctx.weights[k] - ctx.weights[l]);
        }
    }
    Ok(f)
}

/// Kernel derivative `d_nm` for a diagonal perturbation `diag(ν)`.
pub fn kernel_derivative(nu: &[f64], ctx: &LinearizationContext) -> DMatrix<f64> {
    let d = ctx.dim();
    DMatrix::from_fn(d, d, |n, m| {
        let sum = 0.5 * (nu[n] + nu[m]);
        let diff = 0.5 * (nu[n] - nu[m]);
        let (f, fp, eta) = (ctx.f[(n, m)], ctx.f_prime[(n, m)], ctx.eta[(n, m)]);
        sum * (f - eta * fp) + diff * fp
    })
}

fn hadamard_real(k: &DMatrix<f64>, a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] * k[(r, c)])
}

/// `dA_rho/dε` at the thermal state for `V` a basis generator.
pub fn d_a_rho_d_eps(a: &CMatrix, label: Label, ctx: &LinearizationContext) -> Result<CMatrix> {
    let d = ctx.dim();
    let fa = ctx.kernel.apply(a);
    match label {
        Label::X { n, m } => {
            let gap = pair_gap(n, m, ctx)?;
            let y = generator(d, Label::Y { n, m });
            Ok((comm(&fa, &y) - ctx.kernel.apply(&comm(a, &y))) / (I * gap))
        }
        Label::Y { n, m } => {
            let gap = pair_gap(n, m, ctx)?;
            let x = generator(d, Label::X { n, m });
            Ok((comm(&fa, &x) - ctx.kernel.apply(&comm(a, &x))) / (-I * gap))
        }
        Label::Z { l } => Ok(hadamard_real(&kernel_derivative(&crate::gellmann::z_diagonal(d, l), ctx), a)),
    }
}

/// `dA_rho/dε` at the thermal state along an arbitrary trace-less Hermitian `V`.
pub fn d_a_rho_direction(a: &CMatrix, v: &CMatrix, ctx: &LinearizationContext) -> Result<CMatrix> {
    let f = perturbation_generator_general(v, ctx)?;
    let nu: Vec<f64> = (0..ctx.dim()).map(|k| v[(k, k)].re).collect();
    let rotation = (comm(&f, &ctx.kernel.apply(a)) - ctx.kernel.apply(&comm(&f, a))) * I;
    Ok(hadamard_real(&kernel_derivative(&nu, ctx), a) + rotation)
}

/// Analytic blocks with their largest discarded imaginary parts.
#[derive(Debug, Clone)]
pub struct AnalyticBlocks {
    pub j_u: DMatrix<f64>,
    pub j_a: DMatrix<f64>,
    pub j_b: DMatrix<f64>,
    /// Columns of `J_B` that could not be formed analytically (degenerate
    /// pairs); they are left at zero here.
    pub degenerate: Vec<usize>,
    pub max_imag_residue: f64,
}

fn real_part(z: Complex64, residue: &mut f64) -> f64 {
    *residue = residue.max(z.im.abs());
    z.re
}

/// `J_u`, `J_A`, `J_B` in the Gell-Mann basis of the energy eigenbasis.
pub fn jacobian_analytic(ctx: &LinearizationContext, mode: DampingMode) -> Result<AnalyticBlocks> {
    let basis = &ctx.basis;
    let len = basis.len();
    let h = ctx.spec.hamiltonian().as_matrix();
    let q = ctx.spec.coupling().as_matrix();
    let gamma = ctx.spec.gamma_e();
    let beta = ctx.spec.beta();
    let hbar = ctx.spec.hbar();
    let mut residue = 0.0_f64;

    let q_comm: Vec<CMatrix> = basis.matrices().iter().map(|l| comm(q, l)).collect();
    let mut j_u = DMatrix::zeros(len, len);
    let mut j_a = DMatrix::zeros(len, len);
    for a in 0..len {
        for b in 0..len {
            let lab = comm(basis.matrix(a), basis.matrix(b));
            j_u[(a, b)] = real_part(I * trace_product(h, &lab) / (2.0 * hbar), &mut residue);
            j_a[(a, b)] = real_part(-0.5 * gamma * trace_product(&q_comm[b], &q_comm[a]), &mut residue);
        }
    }

    let mut j_b = DMatrix::zeros(len, len);
    let mut degenerate = Vec::new();
    if matches!(mode, DampingMode::Nonlinear) && gamma != 0.0 {
        let k = ctx.coupling_commutator();
        for b in 0..len {
            let da = match d_a_rho_d_eps(&k, basis.label(b), ctx) {
                Ok(da) => da,
                Err(Error::DegenerateSpectrum { .. }) => {
                    degenerate.push(b);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let col = comm(q, &da);
            for a in 0..len {
                j_b[(a, b)] = real_part(0.5 * beta * gamma * trace_product(&col, basis.matrix(a)), &mut residue);
            }
        }
    }
    Ok(AnalyticBlocks { j_u, j_a, j_b, degenerate, max_imag_residue: residue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DensityMatrix, SystemSpec};
    use crate::random::gue;
    use crate::specmat::{a_rho, frobenius};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(seed: u64, d: usize, beta: f64) -> LinearizationContext {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = SystemSpec::new(gue(&mut rng, d, 0.5), gue(&mut rng, d, 0.5), beta, 0.3).unwrap();
        LinearizationContext::new(&spec).unwrap()
    }

    fn fd_derivative(a: &CMatrix, v: &CMatrix, ctx: &LinearizationContext, h: f64) -> CMatrix {
        let rho = ctx.thermal_state();
        let plus = DensityMatrix::new(rho.as_matrix() + v.scale(h)).unwrap();
        let minus = DensityMatrix::new(rho.as_matrix() - v.scale(h)).unwrap();
        (a_rho(a, &plus).unwrap() - a_rho(a, &minus).unwrap()).unscale(2.0 * h)
    }

    #[test]
    fn generator_two_level() {
        let spec = SystemSpec::new(
            HermitianMatrix::from_real_diagonal(&[0.0, 1.0]),
            HermitianMatrix::identity(2),
            1.0,
            0.1,
        )
        .unwrap();
        let c = LinearizationContext::new(&spec).unwrap();
        let f = perturbation_generator(Label::X { n: 2, m: 1 }, &c).unwrap();
        let gap = c.weights[1] - c.weights[0];
        let want = generator(2, Label::Y { n: 2, m: 1 }).unscale(gap);
        assert!(frobenius(&(f.as_matrix() - want)) < 1e-14);
        let z = perturbation_generator(Label::Z { l: 1 }, &c).unwrap();
        assert_eq!(frobenius(z.as_matrix()), 0.0);
        let general = perturbation_generator_general(&generator(2, Label::X { n: 2, m: 1 }), &c).unwrap();
        assert!(frobenius(&(general - f.as_matrix())) < 1e-14);
    }

    #[test]
    fn degenerate_pair_is_reported() {
        let spec = SystemSpec::new(
            HermitianMatrix::from_real_diagonal(&[0.0, 1.0, 1.0]),
            HermitianMatrix::identity(3),
            1.0,
            0.1,
        )
        .unwrap();
        let c = LinearizationContext::new(&spec).unwrap();
        let err = perturbation_generator(Label::Y { n: 3, m: 2 }, &c).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { n: 3, m: 2 }));
        assert!(perturbation_generator(Label::X { n: 2, m: 1 }, &c).is_ok());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = ctx(11, 3, 1.2);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = gue(&mut rng, 3, 1.0).into_inner();
        let h = 1e-6;
        for (i, label) in c.basis.labels().iter().enumerate() {
            let v = c.basis.matrix(i);
            let got = d_a_rho_d_eps(&a, *label, &c).unwrap();
            let want = fd_derivative(&a, v, &c, h);
            assert!(frobenius(&(&got - &want)) < 1e-7, "{label}: {}", frobenius(&(&got - &want)));
            let general = d_a_rho_direction(&a, v, &c).unwrap();
            assert!(frobenius(&(general - got)) < 1e-12);
        }
    }

    #[test]
    fn diagonal_derivative_identities() {
        let c = ctx(13, 4, 0.7);
        for l in 1..4 {
            let nu = crate::gellmann::z_diagonal(4, l);
            let dk = kernel_derivative(&nu, &c);
            for n in 0..4 {
                assert!((dk[(n, n)] - nu[n]).abs() < 1e-15);
                for m in 0..4 {
                    assert!((dk[(n, m)] - dk[(m, n)]).abs() < 1e-14);
                }
            }
            assert!(dk.trace().abs() < 1e-14);
        }
        // commuting A: the derivative is d(A rho)/dε
        let a = HermitianMatrix::from_real_diagonal(&[1.0, -2.0, 0.5, 3.0]).into_inner();
        let nu = crate::gellmann::z_diagonal(4, 2);
        let got = d_a_rho_d_eps(&a, Label::Z { l: 2 }, &c).unwrap();
        for n in 0..4 {
            assert!((got[(n, n)].re - nu[n] * a[(n, n)].re).abs() < 1e-15);
        }
    }

    #[test]
    fn unitary_block_is_antisymmetric() {
        let c = ctx(14, 4, 1.0);
        let blocks = jacobian_analytic(&c, DampingMode::Nonlinear).unwrap();
        assert!((&blocks.j_u + blocks.j_u.transpose()).amax() < 1e-12);
        assert!(blocks.max_imag_residue < 1e-10);
        assert!(blocks.j_a.diagonal().iter().all(|&x| x > 0.0));
        assert!(blocks.degenerate.is_empty());
    }
}
