//! Experiment configuration files.

use crate::error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use svelab::grid::TimeGrid;
use svelab::kernel::Kernel;
use svelab::limitdist::Reference;
use svelab::simulator::{Scheme, SveProblem};
use svelab::spectral::ForcingSpec;
use svelab::volterra1d::{Rho, TailModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    MlTables,
    ResolventSolve,
    Conditions,
    Simulate,
    Converge,
    Dichotomy,
    RestartCheck,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::MlTables,
        Kind::ResolventSolve,
        Kind::Conditions,
        Kind::Simulate,
        Kind::Converge,
        Kind::Dichotomy,
        Kind::RestartCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::MlTables => "ml_tables",
            Kind::ResolventSolve => "resolvent_solve",
            Kind::Conditions => "conditions",
            Kind::Simulate => "simulate",
            Kind::Converge => "converge",
            Kind::Dichotomy => "dichotomy",
            Kind::RestartCheck => "restart_check",
        }
    }

    pub fn parse(s: &str) -> CliResult<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| CliError::invalid(unknown_kind(s)))
    }

    pub fn stochastic(self) -> bool {
        matches!(self, Kind::Simulate | Kind::Converge | Kind::Dichotomy | Kind::RestartCheck)
    }

    pub fn needs_problem(self) -> bool {
        !matches!(self, Kind::MlTables | Kind::ResolventSolve)
    }
}

pub fn unknown_kind(s: &str) -> String {
    let valid: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
    format!("unknown experiment kind '{s}'; valid kinds: {}", valid.join(", "))
}

/// Grid for the deterministic solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform { horizon: f64, n: usize },
    Graded { horizon: f64, n: usize, gamma: f64 },
    GradedGeometric { t_switch: f64, n_graded: usize, gamma: f64, horizon: f64, per_decade: usize },
}

impl GridSpec {
    pub fn build(&self) -> svelab::Result<TimeGrid> {
        match *self {
            GridSpec::Uniform { horizon, n } => TimeGrid::uniform(horizon, n),
            GridSpec::Graded { horizon, n, gamma } => TimeGrid::graded(horizon, n, gamma),
            GridSpec::GradedGeometric { t_switch, n_graded, gamma, horizon, per_decade } => {
                TimeGrid::graded_geometric(t_switch, n_graded, gamma, horizon, per_decade)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Step of the uniform simulation grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Grid of the resolvent solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Relative tolerance of `c_q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    /// `0` uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlTablesParams {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    #[serde(default = "default_qs")]
    pub qs: Vec<f64>,
    /// Compare `c_2` with the frequency-domain formula for every admissible pair.
    #[serde(default = "yes")]
    pub plancherel: bool,
}

fn default_qs() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventParams {
    pub kernel: Kernel,
    pub rho: Rho,
    pub mu: f64,
    /// Defaults to the tail model matching the kernel and `rho`.
    #[serde(default)]
    pub tail: Option<TailModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsParams {
    /// Regularity index of `V = H^δ`.
    #[serde(default)]
    pub delta: f64,
    /// Forcing exponent for the region check; defaults to the power forcing's.
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    /// Defaults to the horizon.
    #[serde(default)]
    pub record_times: Option<Vec<f64>>,
    /// Write every sample, not only the moments.
    #[serde(default = "yes")]
    pub write_samples: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    pub times: Vec<f64>,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyParams {
    pub other_forcing: ForcingSpec,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartParams {
    pub tau: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    MlTables(MlTablesParams),
    ResolventSolve(ResolventParams),
    Conditions(ConditionsParams),
    Simulate(SimulateParams),
    Converge(ConvergeParams),
    Dichotomy(DichotomyParams),
    RestartCheck(RestartParams),
}

/// Top-level layout before the blocks are interpreted.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(default)]
    problem: Option<Value>,
    #[serde(default)]
    numerics: Option<Value>,
    #[serde(default)]
    output: Option<Value>,
    #[serde(default)]
    params: Option<Value>,
}

/// A parsed and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<SveProblem>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: Output,
    pub params: Value,
}

fn block<T: DeserializeOwned>(name: &str, v: Option<Value>, errs: &mut Vec<String>) -> Option<T> {
    let v = v.unwrap_or_else(|| Value::Object(Default::default()));
    match serde_json::from_value(v) {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("{name}: {e}"));
            None
        }
    }
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// Parses `text`, applies `ov` and validates everything, reporting all
    /// problems at once.
    pub fn parse(text: &str, ov: &Overrides) -> CliResult<(Self, Params)> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))?;
        let mut errs = Vec::new();
        let kind = match Kind::parse(&raw.kind) {
            Ok(k) => Some(k),
            Err(_) => {
                errs.push(unknown_kind(&raw.kind));
                None
            }
        };
        let problem: Option<SveProblem> = match raw.problem {
            Some(v) => block("problem", Some(v), &mut errs),
            None => None,
        };
        let mut numerics: Numerics = block("numerics", raw.numerics, &mut errs).unwrap_or_default();
        let mut output: Output = block("output", raw.output, &mut errs).unwrap_or_default();
        if let Some(s) = ov.seed {
            numerics.master_seed = Some(s);
        }
        if let Some(w) = ov.workers {
            numerics.workers = w;
        }
        if let Some(o) = &ov.out {
            output.dir = o.clone();
        }
        let params_value = raw.params.unwrap_or_else(|| Value::Object(Default::default()));
        let params = kind.and_then(|k| parse_params(k, params_value.clone(), &mut errs));
        if let Some(p) = &problem {
            if let Err(e) = p.validate() {
                match e {
                    svelab::Error::Validation(list) => errs.extend(list.into_iter().map(|m| format!("problem: {m}"))),
                    other => errs.push(format!("problem: {other}")),
                }
            }
        }
        if let (Some(kind), Some(params)) = (kind, &params) {
            check_kind(kind, problem.as_ref(), &numerics, params, &mut errs);
        }
        if output.formats.is_empty() {
            errs.push("output: formats must list csv and/or json".into());
        }
        match (kind, params) {
            (Some(kind), Some(params)) if errs.is_empty() => {
                Ok((Self { kind, problem, numerics, output, params: params_value }, params))
            }
            _ => Err(CliError::Validation(errs)),
        }
    }
}

fn parse_params(kind: Kind, v: Value, errs: &mut Vec<String>) -> Option<Params> {
    let name = "params";
    Some(match kind {
        Kind::MlTables => Params::MlTables(block(name, Some(v), errs)?),
        Kind::ResolventSolve => Params::ResolventSolve(block(name, Some(v), errs)?),
        Kind::Conditions => Params::Conditions(block(name, Some(v), errs)?),
        Kind::Simulate => Params::Simulate(block(name, Some(v), errs)?),
        Kind::Converge => Params::Converge(block(name, Some(v), errs)?),
        Kind::Dichotomy => Params::Dichotomy(block(name, Some(v), errs)?),
        Kind::RestartCheck => Params::RestartCheck(block(name, Some(v), errs)?),
    })
}

fn check_kind(kind: Kind, problem: Option<&SveProblem>, n: &Numerics, params: &Params, errs: &mut Vec<String>) {
    if kind.needs_problem() && problem.is_none() {
        errs.push(format!("problem: required for {}", kind.name()));
    }
    if kind.stochastic() {
        if n.master_seed.is_none() {
            errs.push(format!("numerics.master_seed: required for the stochastic experiment {}", kind.name()));
        }
        match n.n_paths {
            None => errs.push("numerics.n_paths: required".into()),
            Some(0) => errs.push("numerics.n_paths: must be positive".into()),
            _ => {}
        }
        let exact = problem.is_some_and(|p| p.scheme == Scheme::ExactGaussian);
        match n.step {
            None if !exact => errs.push("numerics.step: required for the euler_left scheme".into()),
            Some(h) if !(h > 0.0 && h.is_finite()) => errs.push(format!("numerics.step: must be positive, got {h}")),
            _ => {}
        }
    }
    if let Some(tol) = n.tolerance {
        if !(tol > 0.0 && tol < 1.0) {
            errs.push(format!("numerics.tolerance: must lie in (0, 1), got {tol}"));
        }
    }
    let positive_increasing = |name: &str, ts: &[f64], errs: &mut Vec<String>| {
        if ts.is_empty() {
            errs.push(format!("params.{name}: must not be empty"));
        }
        if ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            errs.push(format!("params.{name}: times must be positive and finite"));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            errs.push(format!("params.{name}: times must be increasing"));
        }
    };
    match params {
        Params::MlTables(p) => {
            if p.alphas.is_empty() || p.betas.is_empty() || p.qs.is_empty() {
                errs.push("params: alphas, betas and qs must not be empty".into());
            }
            if p.alphas.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
                errs.push("params.alphas: every alpha must lie in (0, 2)".into());
            }
            if p.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                errs.push("params.betas: every beta must be positive".into());
            }
            if p.qs.iter().any(|q| !(*q >= 1.0 && q.is_finite())) {
                errs.push("params.qs: every q must be at least 1".into());
            }
        }
        Params::ResolventSolve(p) => {
            if n.grid.is_none() {
                errs.push("numerics.grid: required for resolvent_solve".into());
            }
            if let Err(e) = p.kernel.validate() {
                errs.push(format!("params.kernel: {e}"));
            }
            if !(p.mu > 0.0 && p.mu.is_finite()) {
                errs.push(format!("params.mu: must be positive, got {}", p.mu));
            }
        }
        Params::Conditions(p) => {
            if !(p.delta >= 0.0) {
                errs.push(format!("params.delta: must be non-negative, got {}", p.delta));
            }
        }
        Params::Simulate(p) => {
            if let (Some(ts), Some(pr)) = (&p.record_times, problem) {
                positive_increasing("record_times", ts, errs);
                if ts.iter().any(|t| *t > pr.horizon * (1.0 + 1e-12)) {
                    errs.push("params.record_times: times beyond the horizon".into());
                }
            }
        }
        Params::Converge(p) => positive_increasing("times", &p.times, errs),
        Params::Dichotomy(p) => {
            if !(p.horizon > 0.0 && p.horizon.is_finite()) {
                errs.push(format!("params.horizon: must be positive, got {}", p.horizon));
            }
            if let Some(pr) = problem {
                if let Err(e) = p.other_forcing.validate(&pr.operator, &pr.kernels.k) {
                    errs.push(format!("params.other_forcing: {e}"));
                }
            }
        }
        Params::RestartCheck(p) => {
            if !(p.tau > 0.0 && p.t > 0.0) {
                errs.push("params: tau and t must be positive".into());
            }
            if let Some(pr) = problem {
                if p.t + p.tau > pr.horizon * (1.0 + 1e-12) {
                    errs.push(format!("params: t + tau = {} exceeds the horizon {}", p.t + p.tau, pr.horizon));
                }
                if pr.scheme == Scheme::ExactGaussian {
                    errs.push("restart_check simulates paths; use the euler_left scheme".into());
                }
            }
        }
    }
}
