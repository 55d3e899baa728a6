//! Closed-form diagonal elements of `J_A + J_B`.
//!
//! ```text
//! Z(l):   j_l = γ Σ_{n<m} ζ_nm ν_nm² |q_nm|²
//! X(n,m): j/γ = q_d² + 4υ (Im q)² + Σ_k [G_1k |q_1k|² + G_2k |q_2k|²]
//! Y(n,m): j/γ = q_d² + 4υ (Re q)² + (same sum)
//! ```
//!
//! Off-diagonal labels are evaluated with the pair relabeled as levels
//! (1, 2); `k` runs over the remaining levels.

use crate::error::Result;
use crate::gellmann::{z_diagonal, Label};
use crate::stability::context::LinearizationContext;
use crate::stability::special::g_func;

/// One value per basis label, in basis order.
pub fn closed_form_diagonals(ctx: &LinearizationContext) -> Result<Vec<f64>> {
    ctx.basis.labels().iter().map(|&label| closed_form_diagonal(ctx, label)).collect()
}

pub fn closed_form_diagonal(ctx: &LinearizationContext, label: Label) -> Result<f64> {
    let gamma = ctx.spec.gamma_e();
    match label {
        Label::Z { l } => Ok(gamma * z_sum(ctx, &z_diagonal(ctx.dim(), l))),
        Label::X { n, m } => pair_value(ctx, m - 1, n - 1, true).map(|v| gamma * v),
        Label::Y { n, m } => pair_value(ctx, m - 1, n - 1, false).map(|v| gamma * v),
    }
}

fn z_sum(ctx: &LinearizationContext, nu: &[f64]) -> f64 {
    let d = ctx.dim();
    let mut acc = 0.0;
    for n in 0..d {
        for m in n + 1..d {
            let dnu = nu[n] - nu[m];
            if dnu == 0.0 {
                continue;
            }
            // ζ ν² in the expanded form, finite when ν_n + ν_m = 0
            let weight = ctx.f[(n, m)] / ctx.one_minus_eta_sq[(n, m)];
            let zeta_nu2 = weight * (dnu * dnu - ctx.eta[(n, m)] * dnu * (nu[n] + nu[m]));
            acc += zeta_nu2 * ctx.q(n, m).norm_sqr();
        }
    }
    acc
}

/// `j/γ` for the pair whose levels play the roles 1 (`one`) and 2 (`two`).
fn pair_value(ctx: &LinearizationContext, one: usize, two: usize, symmetric: bool) -> Result<f64> {
    let q_d = ctx.q(one, one).re - ctx.q(two, two).re;
    let q12 = ctx.q(one, two);
    let cross = if symmetric { q12.im } else { q12.re };
    // υ = 1/f_D(η_12)
    let upsilon = 1.0 / ctx.f[(one, two)];
    let mut acc = q_d * q_d + 4.0 * upsilon * cross * cross;
    let (r1, r2) = (ctx.weights[one], ctx.weights[two]);
    for k in 0..ctx.dim() {
        if k == one || k == two {
            continue;
        }
        let rk = ctx.weights[k];
        acc += g_func(r1 / rk, r2 / rk)? * ctx.q(one, k).norm_sqr();
        acc += g_func(r2 / rk, r1 / rk)? * ctx.q(two, k).norm_sqr();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DampingMode, SystemSpec};
    use crate::random::gue;
    use crate::specmat::{f_d, HermitianMatrix};
    use crate::stability::fd::jacobian_fd;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sigma_x() -> HermitianMatrix {
        let mut m = crate::specmat::CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        HermitianMatrix::new(m).unwrap()
    }

    #[test]
    fn two_level_sigma_x() {
        let gamma = 0.3;
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[0.0, 1.0]), sigma_x(), 1.5, gamma).unwrap();
        let ctx = LinearizationContext::new(&spec).unwrap();
        let j = closed_form_diagonals(&ctx).unwrap();
        let eta = ctx.eta[(1, 0)];
        let f = f_d(eta).unwrap();
        assert_eq!(j[0], 0.0);
        assert!((j[1] - 4.0 * gamma / f).abs() < 1e-14);
        assert!((j[2] - 4.0 * gamma * f / (1.0 - eta * eta)).abs() < 1e-13);

        let fd = jacobian_fd(&ctx, None, DampingMode::Nonlinear).unwrap();
        for a in 0..3 {
            assert!((-fd.j[(a, a)] - j[a]).abs() < 1e-5, "{a}: {} vs {}", -fd.j[(a, a)], j[a]);
        }
    }

    #[test]
    fn infinite_temperature_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let spec = SystemSpec::new(gue(&mut rng, 3, 0.5), gue(&mut rng, 3, 0.5), 1e-9, 0.2).unwrap();
        let ctx = LinearizationContext::new(&spec).unwrap();
        let j = closed_form_diagonals(&ctx).unwrap();
        let an = crate::stability::analytic::jacobian_analytic(&ctx, DampingMode::Nonlinear).unwrap();
        for a in 0..j.len() {
            assert!((j[a] - an.j_a[(a, a)]).abs() < 1e-7);
        }
    }

    #[test]
    fn random_three_level_matches_fd() {
        for seed in 32..36 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = SystemSpec::new(gue(&mut rng, 3, 0.5), gue(&mut rng, 3, 0.5), 1.0, 0.4).unwrap();
            let ctx = LinearizationContext::new(&spec).unwrap();
            let j = closed_form_diagonals(&ctx).unwrap();
            let fd = jacobian_fd(&ctx, None, DampingMode::Nonlinear).unwrap();
            for a in 0..j.len() {
                assert!(j[a] >= -1e-12);
                assert!((-fd.j[(a, a)] - j[a]).abs() < 1e-5, "seed {seed} {}: {} vs {}", ctx.basis.label(a), -fd.j[(a, a)], j[a]);
            }
        }
    }
}
