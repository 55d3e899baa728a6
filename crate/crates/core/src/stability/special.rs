//! Scalar functions entering the closed-form Jacobian diagonals.

use crate::error::{Error, Result};
use crate::specmat::{f_d, log_mean};

/// `ζ(η, ϰ) = (f_D(η) / (1 - η²)) (1 - η / ϰ)`, parametrized by `1/ϰ` so
/// that `ϰ = ∞` is representable.
pub fn zeta(eta: f64, inv_kappa: f64) -> Result<f64> {
    if eta.is_nan() || eta.abs() >= 1.0 {
        return Err(Error::Domain(format!("zeta requires |eta| < 1, got {eta}")));
    }
    Ok(f_d(eta)? / (1.0 - eta * eta) * (1.0 - eta * inv_kappa))
}

/// `υ = 1 / f_D(η)`.
pub fn upsilon(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta.abs() >= 1.0 {
        return Err(Error::Domain(format!("upsilon requires |eta| < 1, got {eta}")));
    }
    Ok(1.0 / f_d(eta)?)
}

/// `(x - 1) / ln x`, continuous at `x = 1`.
fn log_ratio_mean(x: f64) -> f64 {
    log_mean(x, 1.0)
}

fn check_positive(r1: f64, r2: f64) -> Result<()> {
    if !(r1 > 0.0 && r2 > 0.0) || !r1.is_finite() || !r2.is_finite() {
        return Err(Error::Domain(format!("G requires positive arguments, got ({r1}, {r2})")));
    }
    Ok(())
}

/// `G(r1, r2) = [(r2 - 1) / (r2 ln r2)] · [ln(r1/r2) / (r1/r2 - 1)]`.
///
/// Both factors are evaluated through the logarithmic mean, so the
/// removable singularities at `r2 = 1` and `r1 = r2` cost nothing.
pub fn g_func(r1: f64, r2: f64) -> Result<f64> {
    check_positive(r1, r2)?;
    Ok(log_ratio_mean(r2) / (r2 * log_ratio_mean(r1 / r2)))
}

/// The difference form `1 - [(h(r1) - h(r2)) / (r1 - r2)] ln r1` with
/// `h(x) = (x - 1) / ln x`. Kept as an independent check on [`g_func`].
pub fn g_func_difference_form(r1: f64, r2: f64) -> Result<f64> {
    check_positive(r1, r2)?;
    let gap = r1 - r2;
    let slope = if gap.abs() <= 1e-6 * r1.max(r2) {
        log_ratio_mean_derivative(0.5 * (r1 + r2))
    } else {
        (log_ratio_mean(r1) - log_ratio_mean(r2)) / gap
    };
    Ok(1.0 - slope * r1.ln())
}

/// `h'(x)` for `h(x) = (x - 1)/ln x`.
fn log_ratio_mean_derivative(x: f64) -> f64 {
    let t = x - 1.0;
    if t.abs() < 1e-3 {
        // h(1 + t) = 1 + t/2 - t²/12 + t³/24 - 19 t⁴/720 + ...
        return 0.5 - t / 6.0 + t * t / 8.0 - 19.0 * t * t * t / 180.0;
    }
    let l = x.ln();
    (l - t / x) / (l * l)
}
