//! Built-in verification suite.
//!
//! Each check draws a deterministic ensemble from a seed, compares the
//! library against an independent route or a mathematical property, and
//! reports a one-line outcome.

use std::cell::OnceCell;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    boltzmann_weights, fixed_point, free_energy_rate, integrate, theta, DampingMode, DensityMatrix,
    IntegratorOptions, SystemSpec, Trajectory,
};
use crate::error::Result;
use crate::gellmann::{build_basis, trace_product, CoefficientVector};
use crate::presets::{ladder, pauli_x};
use crate::random::{gue, gue_unit_norm, random_density};
use crate::specmat::{a_rho, eig_hermitian, f_d, frobenius, quadrature_a_rho, HermitianMatrix, DEFAULT_QUADRATURE_NODES};
use crate::stability::{
    closed_form_diagonals, g_func, g_func_difference_form, jacobian_analytic, jacobian_fd, stability_report, upsilon,
    zeta, DiagonalCriterion, LinearizationContext, StabilityOptions,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Identifier, short name and wall-clock budget in seconds (`None` when
/// the check has no budget of its own).
pub const CRITERIA: [(usize, &str, Option<f64>); 10] = [
    (1, "fixed-point residual", Some(10.0)),
    (2, "kernel map vs quadrature", Some(5.0)),
    (3, "jacobian route agreement", Some(30.0)),
    (4, "closed-form diagonals", Some(30.0)),
    (5, "spectral stability", None),
    (6, "free-energy monotonicity and rate", Some(60.0)),
    (7, "conservation and positivity", None),
    (8, "convergence to equilibrium", None),
    (9, "basis correctness", None),
    (10, "special-function properties", None),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} ({}; {:.2}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

struct Check {
    passed: bool,
    detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

/// One trajectory plus what it was started from.
struct Run {
    spec: SystemSpec,
    trajectory: Trajectory,
    dt: f64,
}

/// Shares the trajectory ensembles between the checks that need them.
pub struct Suite {
    seed: u64,
    free_energy_runs: OnceCell<std::result::Result<Vec<Run>, String>>,
    convergence_runs: OnceCell<std::result::Result<Vec<Run>, String>>,
}

impl Suite {
    pub fn new(seed: u64) -> Self {
        Self { seed, free_energy_runs: OnceCell::new(), convergence_runs: OnceCell::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn run(&self, id: usize) -> Option<CriterionOutcome> {
        let &(_, name, budget) = CRITERIA.iter().find(|c| c.0 == id)?;
        let start = Instant::now();
        let result = match id {
            1 => self.fixed_point_residual(),
            2 => self.kernel_oracle(),
            3 => self.route_agreement(),
            4 => self.closed_form(),
            5 => self.spectral_stability(),
            6 => self.free_energy(),
            7 => self.conservation(),
            8 => self.convergence(),
            9 => basis_correctness(),
            10 => special_functions(),
            _ => return None,
        };
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match result {
            Ok(c) => (c.passed, c.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(limit) = budget {
            if elapsed.as_secs_f64() > limit {
                passed = false;
                detail.push_str(&format!("; over the {limit}s budget"));
            }
        }
        Some(CriterionOutcome { id, name, passed, detail, elapsed })
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        CRITERIA.iter().filter_map(|c| self.run(c.0)).collect()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// The shared random ensemble: `d ∈ {2..6}`, unit-norm GUE `H` and `Q`,
    /// `β ∈ [0.1, 5]`, `γ_E ∈ [0.01, 1]`.
    fn generic_ensemble(&self) -> Result<Vec<SystemSpec>> {
        let mut rng = self.rng(1);
        (0..100).map(|i| random_spec(&mut rng, 2 + i % 5, (0.1, 5.0), (0.01, 1.0))).collect()
    }

    /// 50 non-degenerate specs with `d ∈ {2, 3, 4}`, `β ∈ [0.1, beta_max]`
    /// and every thermal weight at least `min_weight`; returns the number of
    /// redrawn specs as well.
    fn route_ensemble(&self, stream: u64, beta_max: f64, min_weight: f64) -> Result<(Vec<SystemSpec>, usize)> {
        let mut rng = self.rng(stream);
        let mut specs = Vec::new();
        let mut rejected = 0;
        while specs.len() < 50 {
            let spec = random_spec(&mut rng, 2 + specs.len() % 3, (0.1, beta_max), (0.01, 1.0))?;
            let e = eig_hermitian(spec.hamiltonian())?.eigenvalues;
            let w = boltzmann_weights(&e, spec.beta());
            let min = w.iter().copied().fold(f64::INFINITY, f64::min);
            let max = w.iter().copied().fold(0.0, f64::max);
            let gap = w.windows(2).map(|p| (p[0] - p[1]).abs()).fold(f64::INFINITY, f64::min);
            if min < min_weight || gap < 1e-6 * max {
                rejected += 1;
                continue;
            }
            specs.push(spec);
        }
        Ok((specs, rejected))
    }

    /// Plain central differences at `h = 1e-6` on moderate specs, where
    /// their `O(h²/ρ_min²)` truncation error stays below the tolerance.
    fn moderate_ensemble(&self) -> Result<(Vec<SystemSpec>, usize)> {
        self.route_ensemble(3, 2.0, 1e-3)
    }

    /// Colder specs down to `ρ_min = 1e-4`, compared against the
    /// Richardson-extrapolated difference quotient.
    fn cold_ensemble(&self) -> Result<(Vec<SystemSpec>, usize)> {
        self.route_ensemble(4, 5.0, 1e-4)
    }

    fn fixed_point_residual(&self) -> Result<Check> {
        let mut worst = 0.0_f64;
        for spec in self.generic_ensemble()? {
            let rho0 = fixed_point(&spec)?;
            let residual = frobenius(&theta(&rho0, &spec, DampingMode::Nonlinear)?);
            worst = worst.max(residual / residual_scale(&spec));
        }
        Ok(Check::new(worst <= 1e-10, format!("max ‖Θ(ρ₀)‖/scale = {worst:.3e} over 100 specs")))
    }

    fn kernel_oracle(&self) -> Result<Check> {
        let mut rng = self.rng(2);
        let mut worst = 0.0_f64;
        for i in 0..100 {
            let d = 2 + i % 5;
            let mix = 10f64.powf(rng.random_range(-3.0..(0.5f64).log10()));
            let rho = random_density(&mut rng, d, mix);
            let mut a = gue(&mut rng, d, 1.0).into_inner();
            if i % 2 == 1 {
                a *= num_complex::Complex64::new(0.0, 1.0);
            }
            let closed = a_rho(&a, &rho)?;
            let quad = quadrature_a_rho(&a, &rho, DEFAULT_QUADRATURE_NODES)?;
            worst = worst.max(frobenius(&(closed - quad)));
        }
        Ok(Check::new(worst <= 1e-9, format!("max Frobenius gap {worst:.3e} over 100 pairs")))
    }

    fn route_agreement(&self) -> Result<Check> {
        let mut worst = [0.0_f64; 2];
        let mut imag = 0.0_f64;
        let mut redrawn = 0;
        for (which, (specs, rejected)) in [self.moderate_ensemble()?, self.cold_ensemble()?].into_iter().enumerate() {
            redrawn += rejected;
            for spec in &specs {
                let ctx = LinearizationContext::new(spec)?;
                let blocks = jacobian_analytic(&ctx, DampingMode::Nonlinear)?;
                let analytic = &blocks.j_u - &blocks.j_a - &blocks.j_b;
                let (fd, residue) = fd_jacobian(&ctx, which == 1)?;
                worst[which] = worst[which].max((analytic - fd).amax());
                imag = imag.max(blocks.max_imag_residue).max(residue);
            }
        }
        Ok(Check::new(
            worst[0] <= 1e-5 && worst[1] <= 1e-5 && imag <= 1e-10,
            format!(
                "max |J_analytic - J_fd| = {:.3e} (h = 1e-6, ρ_min ≥ 1e-3), {:.3e} (extrapolated, ρ_min ≥ 1e-4), max |Im J| = {imag:.1e}, 2×50 specs ({redrawn} redrawn)",
                worst[0], worst[1]
            ),
        ))
    }

    fn closed_form(&self) -> Result<Check> {
        let mut worst = [0.0_f64; 2];
        let mut min_value = f64::INFINITY;
        for (which, (specs, _)) in [self.moderate_ensemble()?, self.cold_ensemble()?].into_iter().enumerate() {
            for spec in &specs {
                let ctx = LinearizationContext::new(spec)?;
                let closed = closed_form_diagonals(&ctx)?;
                let (fd, _) = fd_jacobian(&ctx, which == 1)?;
                for (a, &c) in closed.iter().enumerate() {
                    worst[which] = worst[which].max((c + fd[(a, a)]).abs());
                    min_value = min_value.min(c);
                }
            }
        }
        Ok(Check::new(
            worst[0] <= 1e-5 && worst[1] <= 1e-5 && min_value >= -1e-12,
            format!(
                "max |j - diag(J_A+J_B)| = {:.3e} (h = 1e-6), {:.3e} (extrapolated), min j = {min_value:.3e}",
                worst[0], worst[1]
            ),
        ))
    }

    fn spectral_stability(&self) -> Result<Check> {
        let options = StabilityOptions { compute_fd: false, ..Default::default() };
        let mut worst = f64::NEG_INFINITY;
        for spec in self.generic_ensemble()? {
            worst = worst.max(stability_report(&spec, &options)?.max_real_part);
        }
        // two-level benchmark: Q = σx in the energy basis, so j_X vanishes
        let spec = SystemSpec::new(HermitianMatrix::from_real_diagonal(&[-0.5, 0.5]), pauli_x(), 1.0, 0.2)?;
        let two = stability_report(&spec, &StabilityOptions::default())?;
        let zero_diag = two.diag_closed_form[0].abs() <= 1e-12;
        let marginal = two.diagonal_criterion == DiagonalCriterion::Marginal;
        Ok(Check::new(
            worst <= 1e-9 && zero_diag && marginal,
            format!(
                "max Re ξ = {worst:.3e} over 100 specs; two-level σx: j_X = {:.1e}, diagonal criterion {}, spectrum {} (max Re ξ = {:.3e})",
                two.diag_closed_form[0],
                two.diagonal_criterion.as_str(),
                two.verdict,
                two.max_real_part
            ),
        ))
    }

    fn free_energy_runs(&self) -> std::result::Result<&Vec<Run>, String> {
        self.free_energy_runs
            .get_or_init(|| {
                let mut rng = self.rng(6);
                (0..20)
                    .map(|i| {
                        let spec = random_spec(&mut rng, 2 + i % 3, (0.2, 2.0), (0.2, 1.0))?;
                        let rho = random_density(&mut rng, spec.dim(), 0.2);
                        simulate(spec, &rho, 20.0)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn convergence_runs(&self) -> std::result::Result<&Vec<Run>, String> {
        self.convergence_runs
            .get_or_init(|| {
                let mut rng = self.rng(8);
                (0..10)
                    .map(|i| {
                        let spec = ladder_spec(&mut rng, 2 + i % 3)?;
                        let rho = random_density(&mut rng, spec.dim(), 0.2);
                        simulate(spec, &rho, 50.0)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn free_energy(&self) -> Result<Check> {
        let runs = match self.free_energy_runs() {
            Ok(r) => r,
            Err(e) => return Ok(Check::new(false, format!("integration failed: {e}"))),
        };
        let mut rise = f64::NEG_INFINITY;
        let mut worst_rel = 0.0_f64;
        let mut samples = 0;
        for run in runs {
            rise = rise.max(run.trajectory.max_free_energy_increase());
            let f: Vec<f64> = run.trajectory.free_energy().collect();
            let n = f.len();
            for k in (1..=8).map(|j| j * n / 40) {
                if k < 3 || k + 3 >= n {
                    continue;
                }
                let predicted = free_energy_rate(&run.trajectory.states[k], &run.spec)?;
                if predicted.abs() < 1e-6 {
                    continue;
                }
                // seven-point central stencil, O(dt⁶)
                let numeric = (-f[k - 3] + 9.0 * f[k - 2] - 45.0 * f[k - 1] + 45.0 * f[k + 1] - 9.0 * f[k + 2]
                    + f[k + 3])
                    / (60.0 * run.dt);
                worst_rel = worst_rel.max(((numeric - predicted) / predicted).abs());
                samples += 1;
            }
        }
        Ok(Check::new(
            rise <= 1e-10 && worst_rel <= 1e-6 && samples >= 20,
            format!("max step increase {rise:.2e}, max relative rate error {worst_rel:.2e} at {samples} points, 20 runs"),
        ))
    }

    fn conservation(&self) -> Result<Check> {
        let mut runs: Vec<&Run> = Vec::new();
        for ensemble in [self.free_energy_runs(), self.convergence_runs()] {
            match ensemble {
                Ok(r) => runs.extend(r.iter()),
                Err(e) => return Ok(Check::new(false, format!("integration failed: {e}"))),
            }
        }
        let (mut trace, mut drift, mut purity, mut min_eig) = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
        for run in &runs {
            let t = &run.trajectory;
            for o in &t.observables {
                trace = trace.max(o.trace_error);
                purity = purity.max(o.purity);
                min_eig = min_eig.min(o.min_eig);
            }
            drift = t.hermiticity_drift.iter().copied().fold(drift, f64::max);
        }
        Ok(Check::new(
            trace <= 1e-9 && drift <= 1e-11 && purity <= 1.0 + 1e-9 && min_eig >= -1e-6,
            format!(
                "trace error {trace:.1e}, Hermiticity drift {drift:.1e}, max purity {purity:.6}, min eigenvalue {min_eig:.2e} over {} runs",
                runs.len()
            ),
        ))
    }

    fn convergence(&self) -> Result<Check> {
        let runs = match self.convergence_runs() {
            Ok(r) => r,
            Err(e) => return Ok(Check::new(false, format!("integration failed: {e}"))),
        };
        let mut distance = 0.0_f64;
        let mut c_norm = 0.0_f64;
        let mut flagged = 0;
        for run in runs {
            let rho0 = fixed_point(&run.spec)?;
            distance = distance.max(frobenius(&(run.trajectory.last_state().as_matrix() - rho0.as_matrix())));
            let diag = crate::dynamics::diagnose_limit_cycle(&run.trajectory, 0.2, 1e-6, 1e-12);
            c_norm = c_norm.max(run.trajectory.observables.last().map_or(f64::NAN, |o| o.c_norm));
            flagged += usize::from(diag.flagged);
        }
        Ok(Check::new(
            distance < 1e-6 && c_norm < 1e-5 && flagged == 0,
            format!("max ‖ρ(T) - ρ₀‖ = {distance:.2e}, max final ‖C‖ = {c_norm:.2e}, limit-cycle flags {flagged}, 10 runs"),
        ))
    }
}

/// Central differences at `h = 1e-6`, or their Richardson extrapolation
/// `(4 J(h/2) - J(h)) / 3` when `extrapolate` is set.
fn fd_jacobian(ctx: &LinearizationContext, extrapolate: bool) -> Result<(nalgebra::DMatrix<f64>, f64)> {
    let coarse = jacobian_fd(ctx, Some(1e-6), DampingMode::Nonlinear)?;
    if !extrapolate {
        return Ok((coarse.j, coarse.max_imag_residue));
    }
    let fine = jacobian_fd(ctx, Some(5e-7), DampingMode::Nonlinear)?;
    let residue = coarse.max_imag_residue.max(fine.max_imag_residue);
    Ok(((fine.j * 4.0 - coarse.j) / 3.0, residue))
}

fn random_spec<R: Rng>(rng: &mut R, d: usize, beta: (f64, f64), gamma: (f64, f64)) -> Result<SystemSpec> {
    let h = gue_unit_norm(rng, d);
    let q = gue_unit_norm(rng, d);
    let b = rng.random_range(beta.0..beta.1);
    let g = rng.random_range(gamma.0..gamma.1);
    SystemSpec::new(h, q, b, g)
}

/// Ladder coupling with level spacings drawn from `[0.4, 1.0]`, kept
/// well above `γ_E` so no Bohr frequency is slow against the damping.
fn ladder_spec<R: Rng>(rng: &mut R, d: usize) -> Result<SystemSpec> {
    let mut energies = vec![0.0];
    for _ in 1..d {
        let last = energies[energies.len() - 1];
        energies.push(last + rng.random_range(0.4..1.0));
    }
    SystemSpec::new(HermitianMatrix::from_real_diagonal(&energies), ladder(d)?, 1.0, 0.2)
}

/// Magnitude of the individual terms of Θ, used to normalize the residual.
fn residual_scale(spec: &SystemSpec) -> f64 {
    let h = frobenius(spec.hamiltonian().as_matrix());
    let q = frobenius(spec.coupling().as_matrix());
    h / spec.hbar() + spec.gamma_e() * q * q * (1.0 + spec.beta() * h)
}

/// Integrates to `periods / γ_E` with rk4 at the default step.
fn simulate(spec: SystemSpec, rho: &DensityMatrix, periods: f64) -> Result<Run> {
    let dt = crate::dynamics::integrate::default_dt(&spec)?;
    let opts = IntegratorOptions::new(periods / spec.gamma_e()).dt(dt);
    let trajectory = integrate(rho, &spec, &opts)?;
    Ok(Run { spec, trajectory, dt })
}

fn basis_correctness() -> Result<Check> {
    let mut ortho = 0.0_f64;
    let mut round_trip = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in 2..=8 {
        let basis = build_basis(d)?;
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let g = 0.5 * trace_product(basis.matrix(a), basis.matrix(b));
                let want = if a == b { 1.0 } else { 0.0 };
                ortho = ortho.max((g.re - want).abs()).max(g.im.abs());
            }
        }
        let kappa = CoefficientVector((0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let m = basis.reconstruct(&kappa)?;
        let back = basis.expand(m.as_matrix())?;
        let err = kappa.0.iter().zip(&back.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        round_trip = round_trip.max(err);
    }
    Ok(Check::new(
        ortho <= 1e-14 && round_trip <= 1e-12,
        format!("orthonormality defect {ortho:.1e}, round-trip error {round_trip:.1e}, d = 2..8"),
    ))
}

fn special_functions() -> Result<Check> {
    let mut failures = Vec::new();
    if f_d(0.0)? != 1.0 || f_d(1.0)? != 0.0 || f_d(-1.0)? != 0.0 {
        failures.push("endpoint values".to_string());
    }
    let n = 10_000;
    let mut even = 0.0_f64;
    let mut range_ok = true;
    let mut upsilon_min = f64::INFINITY;
    for k in 0..=n {
        let eta = -1.0 + 2.0 * k as f64 / n as f64;
        let v = f_d(eta)?;
        even = even.max((v - f_d(-eta)?).abs());
        range_ok &= (0.0..=1.0).contains(&v);
        if eta.abs() < 1.0 {
            upsilon_min = upsilon_min.min(upsilon(eta)?);
        }
    }
    if even > 0.0 {
        failures.push(format!("f_D not even ({even:.1e})"));
    }
    if !range_ok {
        failures.push("f_D outside [0, 1]".into());
    }
    if upsilon_min < 1.0 {
        failures.push(format!("υ below 1 ({upsilon_min})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut zeta_min = f64::INFINITY;
    let mut g_min = f64::INFINITY;
    let mut g_gap = 0.0_f64;
    for _ in 0..n {
        let eta: f64 = rng.random_range(-0.999_999..0.999_999);
        let inv_kappa: f64 = -rng.random_range(0.0..=1.0);
        zeta_min = zeta_min.min(zeta(eta, inv_kappa)?);
        let r1 = 10f64.powf(rng.random_range(-3.0..3.0));
        let r2 = 10f64.powf(rng.random_range(-3.0..3.0));
        let g = g_func(r1, r2)?;
        g_min = g_min.min(g);
        g_gap = g_gap.max((g - g_func_difference_form(r1, r2)?).abs());
    }
    if zeta_min < 0.0 {
        failures.push(format!("ζ negative ({zeta_min:.2e})"));
    }
    if g_min < 0.0 {
        failures.push(format!("G negative ({g_min:.2e})"));
    }
    if g_gap > 1e-10 {
        failures.push(format!("G forms differ by {g_gap:.2e}"));
    }
    let detail = format!(
        "min υ = {upsilon_min:.6}, min ζ = {zeta_min:.3e}, min G = {g_min:.3e}, G form gap {g_gap:.1e}{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
    );
    Ok(Check::new(failures.is_empty(), detail))
}
