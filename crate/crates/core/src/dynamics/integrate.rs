//! Time integration of `d rho / dt = Θ(rho)`.

use crate::dynamics::equation::{theta, DampingMode};
use crate::dynamics::thermo::{observables, Observables};
use crate::dynamics::{DensityMatrix, SystemSpec};
use crate::error::{Error, Result};
use crate::specmat::{hermiticity_defect, CMatrix, STATE_NEGATIVITY_TOL};

/// States whose smallest eigenvalue drops below this abort the run.
pub const POSITIVITY_BREACH: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    /// Dormand-Prince 5(4) with absolute error control.
    Rk45,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub t_final: f64,
    /// Fixed step for `Rk4`, initial step for `Rk45`. `None` selects
    /// [`default_dt`].
    pub dt: Option<f64>,
    pub method: Method,
    pub mode: DampingMode,
    /// Rescale to unit trace after each step.
    pub renormalize: bool,
    /// Record every `stride`-th step (the final step is always recorded).
    pub stride: usize,
    /// Absolute tolerance for `Rk45`.
    pub abs_tol: f64,
    /// Smallest step `Rk45` may take before giving up.
    pub dt_min: f64,
}

impl IntegratorOptions {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            dt: None,
            method: Method::Rk4,
            mode: DampingMode::Nonlinear,
            renormalize: false,
            stride: 1,
            abs_tol: 1e-9,
            dt_min: 1e-10,
        }
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn mode(mut self, mode: DampingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

/// `0.01 · min(1/γ_E, hbar/‖H‖)`, ignoring whichever scale is absent.
pub fn default_dt(spec: &SystemSpec) -> Result<f64> {
    let mut scale = f64::INFINITY;
    if spec.gamma_e() > 0.0 {
        scale = scale.min(1.0 / spec.gamma_e());
    }
    let norm = spec.hamiltonian_norm()?;
    if norm > 0.0 {
        scale = scale.min(spec.hbar() / norm);
    }
    Ok(if scale.is_finite() { 0.01 * scale } else { 0.01 })
}

/// A recorded run. All per-step vectors share the length of `times`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<Observables>,
    /// Largest `|rho_ij - rho_ji*|` of the raw update before it was
    /// re-Hermitized.
    pub hermiticity_drift: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn free_energy(&self) -> impl Iterator<Item = f64> + '_ {
        self.observables.iter().map(|o| o.free_energy)
    }

    /// Largest step-to-step increase of `⟨U_H⟩` (non-positive when the
    /// free energy never rises).
    pub fn max_free_energy_increase(&self) -> f64 {
        self.observables
            .windows(2)
            .map(|w| w[1].free_energy - w[0].free_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn push(&mut self, t: f64, state: DensityMatrix, obs: Observables, drift: f64) {
        self.times.push(t);
        self.states.push(state);
        self.observables.push(obs);
        self.hermiticity_drift.push(drift);
    }
}

/// Outcome of the limit-cycle diagnostic on the tail of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycleDiagnostic {
    /// Smallest `‖C‖_F` over the tail.
    pub tail_c_norm: f64,
    /// `max - min` of the free energy over the tail.
    pub tail_free_energy_span: f64,
    /// Free energy has plateaued while `C` stays away from zero.
    pub flagged: bool,
}

/// Inspects the last `tail_fraction` of the run. A plateau (span below
/// `plateau_tol`) with `‖C‖_F` above `c_tol` is flagged; this only marks a
/// candidate periodic orbit, it proves nothing.
pub fn diagnose_limit_cycle(traj: &Trajectory, tail_fraction: f64, c_tol: f64, plateau_tol: f64) -> LimitCycleDiagnostic {
    let n = traj.len();
    let start = ((1.0 - tail_fraction.clamp(0.0, 1.0)) * n as f64).floor() as usize;
    let tail = &traj.observables[start.min(n.saturating_sub(1))..];
    let tail_c_norm = tail.iter().map(|o| o.c_norm).fold(f64::INFINITY, f64::min);
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o.free_energy), hi.max(o.free_energy)));
    let span = hi - lo;
    LimitCycleDiagnostic {
        tail_c_norm,
        tail_free_energy_span: span,
        flagged: span <= plateau_tol && tail_c_norm > c_tol,
    }
}

struct Rhs<'a> {
    spec: &'a SystemSpec,
    mode: DampingMode,
}

impl Rhs<'_> {
    /// An intermediate stage outside the positive cone is reported as a
    /// breach at `t`, the start of the step; the kernel is undefined there.
    fn eval(&self, rho: &CMatrix, t: f64) -> Result<CMatrix> {
        let state = DensityMatrix::symmetrized_unchecked(rho.clone());
        let min_eig = state.min_eigenvalue()?;
        if min_eig < -STATE_NEGATIVITY_TOL || min_eig.is_nan() {
            return Err(Error::PositivityBreach { time: t, min_eig });
        }
        theta(&state, self.spec, self.mode)
    }
}

fn finalize(raw: CMatrix, renormalize: bool) -> (DensityMatrix, f64) {
    let drift = hermiticity_defect(&raw);
    let mut state = DensityMatrix::symmetrized_unchecked(raw);
    if renormalize {
        let tr = state.trace();
        state = DensityMatrix::symmetrized_unchecked(state.into_matrix().unscale(tr));
    }
    (state, drift)
}

fn check_positivity(t: f64, obs: &Observables) -> Result<()> {
    if obs.min_eig < POSITIVITY_BREACH || obs.min_eig.is_nan() {
        return Err(Error::PositivityBreach { time: t, min_eig: obs.min_eig });
    }
    Ok(())
}

pub fn integrate(rho0: &DensityMatrix, spec: &SystemSpec, opts: &IntegratorOptions) -> Result<Trajectory> {
    if rho0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: rho0.dim() });
    }
    if !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
        return Err(Error::Domain(format!("t_final must be positive, got {}", opts.t_final)));
    }
    let dt = match opts.dt {
        Some(dt) => dt,
        None => default_dt(spec)?,
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if let DampingMode::Linear { beta_prime } = opts.mode {
        if beta_prime.is_nan() || beta_prime <= 0.0 {
            return Err(Error::Domain(format!("beta_prime must be positive, got {beta_prime}")));
        }
    }
    let mut traj = Trajectory { times: vec![], states: vec![], observables: vec![], hermiticity_drift: vec![] };
    let obs0 = observables(rho0, spec)?;
    traj.push(0.0, rho0.clone(), obs0, rho0.hermiticity_defect());
    let rhs = Rhs { spec, mode: opts.mode };
    match opts.method {
        Method::Rk4 => run_rk4(&rhs, rho0, dt, opts, &mut traj)?,
        Method::Rk45 => run_rk45(&rhs, rho0, dt, opts, &mut traj)?,
    }
    Ok(traj)
}

fn rk4_step(rhs: &Rhs, rho: &CMatrix, t: f64, dt: f64) -> Result<CMatrix> {
    let k1 = rhs.eval(rho, t)?;
    let k2 = rhs.eval(&(rho + k1.scale(0.5 * dt)), t)?;
    let k3 = rhs.eval(&(rho + k2.scale(0.5 * dt)), t)?;
    let k4 = rhs.eval(&(rho + k3.scale(dt)), t)?;
    Ok(rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0))
}

fn run_rk4(rhs: &Rhs, rho0: &DensityMatrix, dt: f64, opts: &IntegratorOptions, traj: &mut Trajectory) -> Result<()> {
    let steps = (opts.t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let mut rho = rho0.as_matrix().clone();
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { opts.t_final } else { k as f64 * dt };
        let raw = rk4_step(rhs, &rho, t, t_next - t)?;
        let (state, drift) = finalize(raw, opts.renormalize);
        t = t_next;
        let record = k.is_multiple_of(opts.stride) || k == steps;
        let obs = observables(&state, rhs.spec)?;
        check_positivity(t, &obs)?;
        rho = state.as_matrix().clone();
        if record {
            traj.push(t, state, obs, drift);
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau (autonomous system, so the nodes c_i are unused).
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(rhs: &Rhs, rho: &CMatrix, t: f64, dt: f64) -> Result<(CMatrix, f64)> {
    let mut k: Vec<CMatrix> = Vec::with_capacity(7);
    for (i, row) in DP_A.iter().enumerate() {
        let mut stage = rho.clone();
        for (j, &a) in row.iter().enumerate().take(i) {
            if a != 0.0 {
                stage += k[j].scale(a * dt);
            }
        }
        k.push(rhs.eval(&stage, t)?);
    }
    let mut high = rho.clone();
    let mut err = CMatrix::zeros(rho.nrows(), rho.ncols());
    for i in 0..7 {
        high += k[i].scale(DP_B5[i] * dt);
        err += k[i].scale((DP_B5[i] - DP_B4[i]) * dt);
    }
    let err_max = err.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((high, err_max))
}

fn run_rk45(rhs: &Rhs, rho0: &DensityMatrix, dt0: f64, opts: &IntegratorOptions, traj: &mut Trajectory) -> Result<()> {
    let mut rho = rho0.as_matrix().clone();
    let mut t = 0.0;
    let mut dt = dt0.min(opts.t_final);
    let mut accepted = 0usize;
    while t < opts.t_final {
        let last = t + dt >= opts.t_final * (1.0 - 1e-14);
        let h = if last { opts.t_final - t } else { dt };
        let (raw, err) = match dp_step(rhs, &rho, t, h) {
            // A stage left the positive cone: retry with a smaller step.
            Err(Error::PositivityBreach { .. }) if h > opts.dt_min => {
                dt = (0.25 * h).max(opts.dt_min);
                continue;
            }
            other => other?,
        };
        if err <= opts.abs_tol || h <= opts.dt_min {
            if err > opts.abs_tol {
                return Err(Error::StepSize { time: t, dt: h });
            }
            let (state, drift) = finalize(raw, opts.renormalize);
            t = if last { opts.t_final } else { t + h };
            accepted += 1;
            let obs = observables(&state, rhs.spec)?;
            check_positivity(t, &obs)?;
            rho = state.as_matrix().clone();
            if accepted.is_multiple_of(opts.stride) || last {
                traj.push(t, state, obs, drift);
            }
            if last {
                break;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (opts.abs_tol / err).powf(0.2)).clamp(0.2, 5.0) };
        dt = (h * factor).max(opts.dt_min);
    }
    Ok(())
}
