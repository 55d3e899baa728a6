//! JSON scenario and sweep configs.
//!
//! Decoding happens in two passes: serde turns the document into the raw
//! structs below (type errors carry their field path), then `resolve`
//! checks the physics constraints and builds the library objects.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use gme::dynamics::{fixed_point, DampingMode, DensityMatrix, IntegratorOptions, Method, SystemSpec};
use gme::presets::{ladder, pauli_x, pauli_y, pauli_z};
use gme::random::{gue, random_density};
use gme::specmat::{CMatrix, HermitianMatrix};
use gme::stability::{StabilityOptions, DEFAULT_TOL_MARGIN};

use crate::error::{CliError, FieldError};

/// Default tolerance on the largest disagreement between Jacobian routes.
pub const DEFAULT_ROUTE_TOL: f64 = 1e-5;

/// Mixing parameter of `random:<seed>` initial states (smallest
/// eigenvalue at least `mix / d`).
pub const RANDOM_STATE_MIX: f64 = 0.1;

// RNG streams, so one seed gives independent draws per field.
const STREAM_HAMILTONIAN: u64 = 0;
const STREAM_COUPLING: u64 = 1;
const STREAM_STATE: u64 = 2;

type Dense = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub preset: Option<String>,
    pub values: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub scale: Option<f64>,
    pub matrix: Option<Dense>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StateSpec {
    /// `thermal`, `maximally_mixed`, `pure:<k>` or `random:<seed>`.
    Preset(String),
    Dense { matrix: Dense },
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Preset("maximally_mixed".into())
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// `rk4` (default) or `rk45`.
    pub method: Option<String>,
    pub dt: Option<f64>,
    /// Defaults to `20 / γ_E`.
    pub t_final: Option<f64>,
    #[serde(default)]
    pub renormalize: bool,
    pub stride: Option<usize>,
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub tol_margin: Option<f64>,
    pub route_tol: Option<f64>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Subset of the trajectory columns; `t` is always written.
    pub observables: Option<Vec<String>>,
    #[serde(default)]
    pub dump_states: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dimension: usize,
    pub hamiltonian: MatrixSpec,
    pub coupling_q: MatrixSpec,
    pub beta: f64,
    pub gamma_e: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub mode: ModeName,
    pub beta_prime: Option<f64>,
    #[serde(default)]
    pub initial_state: StateSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Beta,
    GammaE,
    Dimension,
    Seed,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[default]
    Stability,
    Simulate,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(ScenarioConfig),
    Sweep(SweepConfig),
}

pub const OBSERVABLE_COLUMNS: [&str; 6] = ["purity", "entropy", "free_energy", "c_norm", "trace_error", "min_eig"];

/// Everything a command needs, built and checked.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: SystemSpec,
    pub mode: DampingMode,
    pub initial: DensityMatrix,
    pub integrator: IntegratorOptions,
    pub stability: StabilityOptions,
    pub route_tol: f64,
    pub observables: Vec<&'static str>,
    pub dump_states: bool,
}

/// Decode and fully validate a config document.
pub fn parse_config(text: &[u8]) -> Result<Config, CliError> {
    let text = std::str::from_utf8(text).map_err(|e| {
        let (line, column) = line_column(text, e.valid_up_to());
        CliError::Parse { line, column, message: "invalid UTF-8".into() }
    })?;
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => CliError::field("$", e.to_string()),
        _ => CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() },
    })?;
    let config = if value.get("base").is_some() {
        Config::Sweep(decode(value)?)
    } else {
        Config::Scenario(decode(value)?)
    };
    match &config {
        Config::Scenario(s) => {
            s.resolve("")?;
        }
        Config::Sweep(s) => {
            s.points()?;
        }
    }
    Ok(config)
}

fn decode<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::field(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
    })
}

fn line_column(text: &[u8], offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: String, reason: impl Into<String>) {
        self.0.push(FieldError { path, reason: reason.into() });
    }

    fn positive(&mut self, path: String, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(path, format!("must be positive and finite, got {x}"));
        }
    }
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn dense_matrix(rows: &Dense, dim: usize, path: &str, errors: &mut Errors) -> Option<CMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        errors.push(path.to_string(), format!("expected a {dim}x{dim} array of [re, im] pairs"));
        return None;
    }
    let m = CMatrix::from_fn(dim, dim, |r, c| Complex64::new(rows[r][c][0], rows[r][c][1]));
    if let Some(pos) = m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        errors.push(format!("{path}[{}][{}]", pos % dim, pos / dim), "entry is not finite");
        return None;
    }
    Some(m)
}

fn hermitian(m: CMatrix, path: &str, errors: &mut Errors) -> Option<HermitianMatrix> {
    match HermitianMatrix::new(m) {
        Ok(h) => Some(h),
        Err(gme::Error::NotHermitian { row, col, deviation }) => {
            errors.push(
                path.to_string(),
                format!("entries [{row}][{col}] and [{col}][{row}] are not complex conjugates (differ by {deviation:e})"),
            );
            None
        }
        Err(e) => {
            errors.push(path.to_string(), e.to_string());
            None
        }
    }
}

impl MatrixSpec {
    fn build(&self, dim: usize, stream: u64, path: &str, errors: &mut Errors) -> Option<HermitianMatrix> {
        let scale = self.scale.unwrap_or(1.0);
        if !scale.is_finite() {
            errors.push(join(path, "scale"), "must be finite");
            return None;
        }
        let base = match (&self.preset, &self.matrix) {
            (Some(_), Some(_)) => {
                errors.push(path.to_string(), "give either `preset` or `matrix`, not both");
                return None;
            }
            (None, None) => {
                errors.push(path.to_string(), "missing `preset` or `matrix`");
                return None;
            }
            (None, Some(rows)) => {
                let m = dense_matrix(rows, dim, &join(path, "matrix"), errors)?;
                hermitian(m, &join(path, "matrix"), errors)?
            }
            (Some(name), None) => self.preset(name, dim, stream, path, errors)?,
        };
        Some(if scale == 1.0 { base } else { HermitianMatrix::symmetrized(base.into_inner().scale(scale)) })
    }

    fn preset(&self, name: &str, dim: usize, stream: u64, path: &str, errors: &mut Errors) -> Option<HermitianMatrix> {
        let preset_path = join(path, "preset");
        let (kind, suffix) = match name.split_once(':') {
            Some((k, s)) => (k, Some(s)),
            None => (name, None),
        };
        let two_level = |errors: &mut Errors| {
            if dim != 2 {
                errors.push(preset_path.clone(), format!("`{kind}` needs dimension 2, got {dim}"));
                false
            } else {
                true
            }
        };
        match kind {
            "diag" => match &self.values {
                Some(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => Some(HermitianMatrix::from_real_diagonal(v)),
                Some(v) => {
                    errors.push(join(path, "values"), format!("expected {dim} finite numbers, got {}", v.len()));
                    None
                }
                None => {
                    errors.push(join(path, "values"), "`diag` needs a `values` list");
                    None
                }
            },
            "pauli_x" => two_level(errors).then(pauli_x),
            "pauli_y" => two_level(errors).then(pauli_y),
            "pauli_z" => two_level(errors).then(pauli_z),
            "ladder_q" => ladder(dim).map_err(|e| errors.push(preset_path.clone(), e.to_string())).ok(),
            "random_gue" => {
                let seed = match suffix {
                    Some(s) => match s.parse::<u64>() {
                        Ok(seed) => seed,
                        Err(_) => {
                            errors.push(preset_path.clone(), format!("seed `{s}` is not an unsigned integer"));
                            return None;
                        }
                    },
                    None => self.seed.unwrap_or(0),
                };
                Some(gue(&mut seeded(seed, stream), dim, 1.0))
            }
            _ => {
                errors.push(
                    preset_path,
                    format!("unknown preset `{name}` (expected diag, pauli_x, pauli_y, pauli_z, random_gue[:seed], ladder_q)"),
                );
                None
            }
        }
    }

    fn set_seed(&mut self, seed: u64) {
        if let Some(name) = &self.preset {
            if name == "random_gue" || name.starts_with("random_gue:") {
                self.preset = Some("random_gue".into());
                self.seed = Some(seed);
            }
        }
    }
}

impl StateSpec {
    fn build(&self, spec: Option<&SystemSpec>, dim: usize, path: &str, errors: &mut Errors) -> Option<DensityMatrix> {
        match self {
            StateSpec::Dense { matrix } => {
                let m = dense_matrix(matrix, dim, &join(path, "matrix"), errors)?;
                hermitian(m.clone(), &join(path, "matrix"), errors)?;
                DensityMatrix::new(m).map_err(|e| errors.push(join(path, "matrix"), e.to_string())).ok()
            }
            StateSpec::Preset(name) => {
                let (kind, arg) = match name.split_once(':') {
                    Some((k, a)) => (k, Some(a)),
                    None => (name.as_str(), None),
                };
                let parse_arg = |errors: &mut Errors| match arg.map(str::parse::<u64>) {
                    Some(Ok(v)) => Some(v),
                    _ => {
                        errors.push(path.to_string(), format!("`{kind}` needs an integer argument, e.g. `{kind}:0`"));
                        None
                    }
                };
                match kind {
                    "thermal" => fixed_point(spec?).map_err(|e| errors.push(path.to_string(), e.to_string())).ok(),
                    "maximally_mixed" => Some(DensityMatrix::maximally_mixed(dim)),
                    "pure" => {
                        let k = parse_arg(errors)? as usize;
                        DensityMatrix::pure(dim, k).map_err(|e| errors.push(path.to_string(), e.to_string())).ok()
                    }
                    "random" => {
                        let seed = parse_arg(errors)?;
                        Some(random_density(&mut seeded(seed, STREAM_STATE), dim, RANDOM_STATE_MIX))
                    }
                    _ => {
                        errors.push(
                            path.to_string(),
                            format!("unknown initial state `{name}` (expected thermal, maximally_mixed, pure:k, random:seed)"),
                        );
                        None
                    }
                }
            }
        }
    }

    fn set_seed(&mut self, seed: u64) {
        if let StateSpec::Preset(name) = self {
            if name.starts_with("random:") {
                *name = format!("random:{seed}");
            }
        }
    }
}

impl ScenarioConfig {
    /// Replace the seed of every random preset.
    pub fn override_seed(&mut self, seed: u64) {
        self.hamiltonian.set_seed(seed);
        self.coupling_q.set_seed(seed);
        self.initial_state.set_seed(seed);
    }

    pub fn output_directory(&self) -> Option<&PathBuf> {
        self.outputs.directory.as_ref()
    }

    /// Check every field and build the library objects. `prefix` is
    /// prepended to field paths in error messages.
    pub fn resolve(&self, prefix: &str) -> Result<Scenario, CliError> {
        let mut errors = Errors(Vec::new());
        let dim = self.dimension;
        if !(gme::gellmann::MIN_DIM..=gme::gellmann::MAX_DIM).contains(&dim) {
            errors.push(join(prefix, "dimension"), format!("must lie in 2..=64, got {dim}"));
            return Err(CliError::Validation(errors.0));
        }
        errors.positive(join(prefix, "beta"), self.beta);
        errors.positive(join(prefix, "gamma_e"), self.gamma_e);
        errors.positive(join(prefix, "hbar"), self.hbar);
        let h = self.hamiltonian.build(dim, STREAM_HAMILTONIAN, &join(prefix, "hamiltonian"), &mut errors);
        let q = self.coupling_q.build(dim, STREAM_COUPLING, &join(prefix, "coupling_q"), &mut errors);

        let mode = match (self.mode, self.beta_prime) {
            (ModeName::Nonlinear, None) => DampingMode::Nonlinear,
            (ModeName::Nonlinear, Some(_)) => {
                errors.push(join(prefix, "beta_prime"), "only used with \"mode\": \"linear\"");
                DampingMode::Nonlinear
            }
            (ModeName::Linear, Some(beta_prime)) => {
                errors.positive(join(prefix, "beta_prime"), beta_prime);
                DampingMode::Linear { beta_prime }
            }
            (ModeName::Linear, None) => {
                errors.push(join(prefix, "beta_prime"), "linear mode needs `beta_prime`");
                DampingMode::Nonlinear
            }
        };

        let integ = &self.integrator;
        let ipath = join(prefix, "integrator");
        let method = match integ.method.as_deref() {
            None | Some("rk4") => Method::Rk4,
            Some("rk45") => Method::Rk45,
            Some(other) => {
                errors.push(join(&ipath, "method"), format!("unknown method `{other}` (expected rk4 or rk45)"));
                Method::Rk4
            }
        };
        let t_final = integ.t_final.unwrap_or(20.0 / self.gamma_e);
        errors.positive(join(&ipath, "t_final"), t_final);
        if let Some(dt) = integ.dt {
            errors.positive(join(&ipath, "dt"), dt);
        }
        if let Some(tol) = integ.abs_tol {
            errors.positive(join(&ipath, "abs_tol"), tol);
        }
        if integ.stride == Some(0) {
            errors.push(join(&ipath, "stride"), "must be at least 1");
        }

        let spath = join(prefix, "stability");
        let tol_margin = self.stability.tol_margin.unwrap_or(DEFAULT_TOL_MARGIN);
        errors.positive(join(&spath, "tol_margin"), tol_margin);
        let route_tol = self.stability.route_tol.unwrap_or(DEFAULT_ROUTE_TOL);
        errors.positive(join(&spath, "route_tol"), route_tol);
        if let Some(h) = self.stability.fd_step {
            errors.positive(join(&spath, "fd_step"), h);
        }

        let mut observables = Vec::new();
        match &self.outputs.observables {
            None => observables.extend(OBSERVABLE_COLUMNS),
            Some(list) => {
                for (i, name) in list.iter().enumerate() {
                    match OBSERVABLE_COLUMNS.iter().find(|c| *c == name) {
                        Some(c) if !observables.contains(c) => observables.push(*c),
                        Some(_) => {}
                        None => errors.push(
                            format!("{}[{i}]", join(prefix, "outputs.observables")),
                            format!("unknown observable `{name}` (expected one of {})", OBSERVABLE_COLUMNS.join(", ")),
                        ),
                    }
                }
            }
        }

        let spec = match (h, q) {
            (Some(h), Some(q)) if errors.0.is_empty() => {
                match SystemSpec::with_hbar(h, q, self.beta, self.gamma_e, self.hbar) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        errors.push(if prefix.is_empty() { "$".into() } else { prefix.into() }, e.to_string());
                        None
                    }
                }
            }
            _ => None,
        };
        let initial = self.initial_state.build(spec.as_ref(), dim, &join(prefix, "initial_state"), &mut errors);
        match (spec, initial) {
            (Some(spec), Some(initial)) if errors.0.is_empty() => {
                let mut integrator = IntegratorOptions::new(t_final).method(method).mode(mode).renormalize(integ.renormalize);
                integrator = integrator.stride(integ.stride.unwrap_or(1));
                if let Some(dt) = integ.dt {
                    integrator = integrator.dt(dt);
                }
                if let Some(tol) = integ.abs_tol {
                    integrator.abs_tol = tol;
                }
                Ok(Scenario {
                    spec,
                    mode,
                    initial,
                    integrator,
                    stability: StabilityOptions { tol_margin, fd_step: self.stability.fd_step, compute_fd: true },
                    route_tol,
                    observables,
                    dump_states: self.outputs.dump_states,
                })
            }
            _ => Err(CliError::Validation(errors.0)),
        }
    }
}

/// One sweep point: the axis value and the config it produces.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub label: String,
    pub config: ScenarioConfig,
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<SweepPoint>, CliError> {
        if self.values.is_empty() {
            return Err(CliError::field("values", "must not be empty"));
        }
        let mut errors = Vec::new();
        let mut points = Vec::new();
        for (i, &value) in self.values.iter().enumerate() {
            let mut config = self.base.clone();
            let integral = value >= 0.0 && value.fract() == 0.0 && value < 9.007_199_254_740_992e15;
            let label = match self.axis {
                Axis::Beta | Axis::GammaE => format!("{value:?}"),
                Axis::Dimension | Axis::Seed if integral => format!("{}", value as u64),
                _ => {
                    errors.push(FieldError {
                        path: format!("values[{i}]"),
                        reason: format!("{value} is not a non-negative integer"),
                    });
                    continue;
                }
            };
            match self.axis {
                Axis::Beta => config.beta = value,
                Axis::GammaE => config.gamma_e = value,
                Axis::Dimension => config.dimension = value as usize,
                Axis::Seed => config.override_seed(value as u64),
            }
            match config.resolve("base") {
                Ok(_) => points.push(SweepPoint { value, label, config }),
                Err(CliError::Validation(errs)) => errors.extend(errs.into_iter().map(|e| FieldError {
                    path: format!("values[{i}] → {}", e.path),
                    reason: e.reason,
                })),
                Err(e) => return Err(e),
            }
        }
        if errors.is_empty() {
            Ok(points)
        } else {
            Err(CliError::Validation(errors))
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.base.override_seed(seed);
    }
}
