use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{DampingMode, SystemSpec};
use crate::error::{Error, Result};
use crate::gellmann::Label;
use crate::stability::analytic::jacobian_analytic;
use crate::stability::closed_form::closed_form_diagonals;
use crate::stability::context::LinearizationContext;
use crate::stability::fd::{jacobian_fd, FdJacobian};

pub const DEFAULT_TOL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn from_max_real_part(max_re: f64, tol: f64) -> Self {
        if max_re < -tol {
            Verdict::Stable
        } else if max_re <= tol {
            Verdict::Marginal
        } else {
            Verdict::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict of the sufficient criterion "every diagonal of `J_A + J_B` is
/// positive".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalCriterion {
    /// All diagonals exceed the margin.
    Strict,
    /// Some diagonal lies within the margin of zero.
    Marginal,
    /// Some diagonal is negative beyond the margin.
    Violated,
}

impl DiagonalCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagonalCriterion::Strict => "strict",
            DiagonalCriterion::Marginal => "marginal",
            DiagonalCriterion::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub tol_margin: f64,
    /// `None` selects `min(1e-6, min ρ / 10)`.
    pub fd_step: Option<f64>,
    /// Also build the finite-difference Jacobian and compare routes.
    pub compute_fd: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { tol_margin: DEFAULT_TOL_MARGIN, fd_step: None, compute_fd: true }
    }
}

/// Largest absolute differences between the routes (`NaN` when a route
/// was not computed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteDiscrepancies {
    pub analytic_vs_fd: f64,
    pub closed_form_vs_fd: f64,
    pub closed_form_vs_analytic: f64,
}

#[derive(Debug, Clone)]
pub struct JacobianReport {
    pub labels: Vec<Label>,
    pub weights: Vec<f64>,
    pub j_u: DMatrix<f64>,
    pub j_a: DMatrix<f64>,
    pub j_b: DMatrix<f64>,
    pub j_total: DMatrix<f64>,
    pub j_fd: Option<DMatrix<f64>>,
    pub fd_step: Option<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub diag_closed_form: Vec<f64>,
    /// `diag(J_A + J_B)` read off the finite-difference Jacobian.
    pub diag_fd: Option<Vec<f64>>,
    pub max_real_part: f64,
    pub verdict: Verdict,
    pub diagonal_criterion: DiagonalCriterion,
    pub discrepancies: RouteDiscrepancies,
    /// Basis labels whose `J_B` column was filled from finite differences.
    pub degenerate_labels: Vec<Label>,
    pub max_imag_residue: f64,
}

impl JacobianReport {
    pub fn min_diagonal(&self) -> f64 {
        self.diag_closed_form.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Eigenvalues of a real square matrix via the real Schur form, sorted by
/// real part (descending) and then imaginary part.
pub fn real_eigenvalues(j: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if j.iter().any(|x| !x.is_finite()) {
        let pos = j.iter().position(|x| !x.is_finite()).unwrap_or(0);
        return Err(Error::NonFinite { row: pos % j.nrows(), col: pos / j.nrows() });
    }
    let schur = nalgebra::linalg::Schur::try_new(j.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::ConvergenceFailure { dim: j.nrows() })?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

fn max_abs_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Linearize the nonlinear equation at the thermal state and classify it.
pub fn stability_report(spec: &SystemSpec, options: &StabilityOptions) -> Result<JacobianReport> {
    let ctx = LinearizationContext::new(spec)?;
    let mode = DampingMode::Nonlinear;
    let blocks = jacobian_analytic(&ctx, mode)?;
    let need_fd = options.compute_fd || !blocks.degenerate.is_empty();
    let fd: Option<FdJacobian> = if need_fd { Some(jacobian_fd(&ctx, options.fd_step, mode)?) } else { None };

    let mut j_b = blocks.j_b.clone();
    if let Some(fd) = &fd {
        // J_fd = J_u - J_A - J_B, so a missing J_B column is J_u - J_A - J_fd.
        for &b in &blocks.degenerate {
            let col = blocks.j_u.column(b) - blocks.j_a.column(b) - fd.j.column(b);
            j_b.set_column(b, &col);
        }
    }
    let j_total = &blocks.j_u - &blocks.j_a - &j_b;
    let eigenvalues = real_eigenvalues(&j_total)?;
    let max_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let diag_closed_form = closed_form_diagonals(&ctx)?;
    let diag_analytic: Vec<f64> = (0..ctx.basis.len()).map(|a| blocks.j_a[(a, a)] + j_b[(a, a)]).collect();
    // J_u has a vanishing diagonal, so -diag(J_fd) = diag(J_A + J_B).
    let diag_fd = fd.as_ref().map(|f| f.j.diagonal().iter().map(|x| -x).collect::<Vec<_>>());

    let tol = options.tol_margin;
    let min_diag = diag_closed_form.iter().chain(diag_analytic.iter()).copied().fold(f64::INFINITY, f64::min);
    let diagonal_criterion = if min_diag < -tol {
        DiagonalCriterion::Violated
    } else if min_diag <= tol {
        DiagonalCriterion::Marginal
    } else {
        DiagonalCriterion::Strict
    };

    let discrepancies = RouteDiscrepancies {
        analytic_vs_fd: fd.as_ref().map_or(f64::NAN, |f| (&j_total - &f.j).amax()),
        closed_form_vs_fd: diag_fd
            .as_ref()
            .map_or(f64::NAN, |d| max_abs_diff(diag_closed_form.iter().copied(), d.iter().copied())),
        closed_form_vs_analytic: max_abs_diff(diag_closed_form.iter().copied(), diag_analytic.iter().copied()),
    };
    let max_imag_residue = blocks.max_imag_residue.max(fd.as_ref().map_or(0.0, |f| f.max_imag_residue));

    Ok(JacobianReport {
        labels: ctx.basis.labels().to_vec(),
        weights: ctx.weights.clone(),
        degenerate_labels: blocks.degenerate.iter().map(|&b| ctx.basis.label(b)).collect(),
        j_u: blocks.j_u,
        j_a: blocks.j_a,
        j_b,
        j_total,
        fd_step: fd.as_ref().map(|f| f.step),
        j_fd: fd.map(|f| f.j),
        eigenvalues,
        diag_closed_form,
        diag_fd,
        max_real_part,
        verdict: Verdict::from_max_real_part(max_real_part, tol),
        diagonal_criterion,
        discrepancies,
        max_imag_residue,
    })
}
