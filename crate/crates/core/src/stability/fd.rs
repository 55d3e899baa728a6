//! Central finite-difference Jacobian of Θ at the thermal state.

use nalgebra::DMatrix;

use crate::dynamics::{theta, DampingMode, DensityMatrix};
use crate::error::{Error, Result};
use crate::gellmann::trace_product;
use crate::stability::context::LinearizationContext;

/// Default step `min(1e-6, min ρ / 10)`.
pub fn default_fd_step(ctx: &LinearizationContext) -> f64 {
    1e-6_f64.min(ctx.min_weight() / 10.0)
}

/// Finite-difference Jacobian and its largest discarded imaginary part.
#[derive(Debug, Clone)]
pub struct FdJacobian {
    pub j: DMatrix<f64>,
    pub step: f64,
    pub max_imag_residue: f64,
}

/// `J_ab = [Tr(Θ(ρ₀ + h λ_b) λ_a) - Tr(Θ(ρ₀ - h λ_b) λ_a)] / (4h)`.
pub fn jacobian_fd(ctx: &LinearizationContext, h: Option<f64>, mode: DampingMode) -> Result<FdJacobian> {
    let h = h.unwrap_or_else(|| default_fd_step(ctx));
    let min_weight = ctx.min_weight();
    if h.is_nan() || h <= 0.0 || h > min_weight / 10.0 {
        return Err(Error::StepTooLarge { h, min_weight });
    }
    let columns: Vec<Vec<f64>> = (0..ctx.basis.len())
        .map(|b| column(ctx, b, h, mode))
        .collect::<Result<_>>()?;
    let len = ctx.basis.len();
    let mut j = DMatrix::zeros(len, len);
    let mut residue = 0.0_f64;
    for (b, col) in columns.iter().enumerate() {
        for a in 0..len {
            j[(a, b)] = col[2 * a];
            residue = residue.max(col[2 * a + 1].abs());
        }
    }
    Ok(FdJacobian { j, step: h, max_imag_residue: residue })
}

/// Column `b` as interleaved (re, im) pairs.
fn column(ctx: &LinearizationContext, b: usize, h: f64, mode: DampingMode) -> Result<Vec<f64>> {
    let rho0 = ctx.thermal_state();
    let v = ctx.basis.matrix(b);
    let min_weight = ctx.min_weight();
    let perturbed = |sign: f64| {
        DensityMatrix::new(rho0.as_matrix() + v.scale(sign * h)).map_err(|_| Error::StepTooLarge { h, min_weight })
    };
    let diff = theta(&perturbed(1.0)?, &ctx.spec, mode)? - theta(&perturbed(-1.0)?, &ctx.spec, mode)?;
    Ok(ctx
        .basis
        .matrices()
        .iter()
        .flat_map(|l| {
            let z = trace_product(&diff, l) / (4.0 * h);
            [z.re, z.im]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SystemSpec;
    use crate::random::gue;
    use crate::stability::analytic::jacobian_analytic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(seed: u64, d: usize, gamma: f64) -> LinearizationContext {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = SystemSpec::new(gue(&mut rng, d, 0.5), gue(&mut rng, d, 0.5), 1.0, gamma).unwrap();
        LinearizationContext::new(&spec).unwrap()
    }

    #[test]
    fn closed_system_recovers_unitary_block() {
        let c = ctx(21, 3, 0.0);
        let fd = jacobian_fd(&c, None, DampingMode::Nonlinear).unwrap();
        let an = jacobian_analytic(&c, DampingMode::Nonlinear).unwrap();
        assert!((fd.j - an.j_u).amax() < 1e-9);
    }

    #[test]
    fn linear_mode_is_exact() {
        let c = ctx(22, 3, 0.4);
        let mode = DampingMode::Linear { beta_prime: 0.8 };
        let fd = jacobian_fd(&c, None, mode).unwrap();
        let an = jacobian_analytic(&c, mode).unwrap();
        assert!((fd.j - (an.j_u - an.j_a)).amax() < 1e-9);
    }

    #[test]
    fn nonlinear_routes_agree() {
        for (seed, d) in [(23, 2), (24, 3), (25, 4)] {
            let c = ctx(seed, d, 0.5);
            let fd = jacobian_fd(&c, None, DampingMode::Nonlinear).unwrap();
            let an = jacobian_analytic(&c, DampingMode::Nonlinear).unwrap();
            let diff = (fd.j - (an.j_u - an.j_a - an.j_b)).amax();
            assert!(diff < 1e-5, "d={d}: {diff}");
            assert!(fd.max_imag_residue < 1e-10);
        }
    }

    #[test]
    fn oversized_step_rejected() {
        let c = ctx(26, 2, 0.5);
        let err = jacobian_fd(&c, Some(0.5), DampingMode::Nonlinear).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }
}
