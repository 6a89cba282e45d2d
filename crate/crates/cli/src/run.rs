//! Dispatch of a validated experiment to the library.

use crate::config::{
    ConditionsParams, ConvergeParams, DichotomyParams, ExperimentConfig, Format, Kind, MlTablesParams, Params, ResolventParams,
    RestartParams, SimulateParams,
};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use svelab::conditions::{
    check_1d_theorem, check_additive, check_general_limit, check_heat_multiplicative_printed, check_heat_region, ConditionReport,
    GeneralVariant,
};
use svelab::kernel::Kernel;
use svelab::limitdist::{
    convergence_experiment, initial_dependence_experiment, wasserstein_1d, ConvergenceReport, DependenceReport, ExperimentSettings,
};
use svelab::mlf::{c_q, in_integrability_window, plancherel_phase_verdict, CqRequest, PlancherelVerdict};
use svelab::simulator::{run_ensemble, Diffusion, EmpiricalDistribution, Scheme, Simulator, SveProblem};
use svelab::spectral::{ForcingSpec, Spectrum};
use svelab::stats::{ks_critical_5pct, ks_statistic};
use svelab::volterra1d::{solve_e_rho, MassEstimate, TailModel};
use svelab::grid::TimeGrid;

/// One file of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub contents: String,
}

/// Files plus the lines of the summary table.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<(String, String)>,
}

impl RunOutput {
    fn csv(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact { name: name.into(), format: Format::Csv, contents });
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut contents = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(svelab::Error::Parse(e.to_string())))?;
        contents.push('\n');
        self.artifacts.push(Artifact { name: name.into(), format: Format::Json, contents });
        Ok(())
    }

    fn row(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    /// The summary as an aligned two-column table.
    pub fn table(&self) -> String {
        let w = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k:<w$}  {v}");
        }
        s
    }
}

/// Runs the experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig, params: &Params) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    out.row("kind", cfg.kind.name());
    if let Some(seed) = cfg.numerics.master_seed.filter(|_| cfg.kind.stochastic()) {
        out.row("master_seed", seed);
    }
    let problem = || cfg.problem.as_ref().expect("validated");
    match params {
        Params::MlTables(p) => ml_tables(cfg, p, &mut out)?,
        Params::ResolventSolve(p) => resolvent(cfg, p, &mut out)?,
        Params::Conditions(p) => conditions(problem(), p, &mut out)?,
        Params::Simulate(p) => simulate(cfg, problem(), p, &mut out)?,
        Params::Converge(p) => converge(cfg, problem(), p, &mut out)?,
        Params::Dichotomy(p) => dichotomy(cfg, problem(), p, &mut out)?,
        Params::RestartCheck(p) => restart(cfg, problem(), p, &mut out)?,
    }
    out.artifacts.retain(|a| cfg.output.formats.contains(&a.format));
    let manifest = Manifest {
        kind: cfg.kind,
        master_seed: cfg.numerics.master_seed.filter(|_| cfg.kind.stochastic()),
        artifacts: out.artifacts.iter().map(|a| a.name.clone()).collect(),
        config: normalized(cfg),
    };
    if cfg.output.formats.contains(&Format::Json) {
        out.json("manifest.json", &manifest)?;
    }
    Ok(out)
}

/// Index of a run. The worker count is not recorded since it does not
/// affect any result, and the output directory is recorded as `.`, the
/// manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: Kind,
    pub master_seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub config: ExperimentConfig,
}

fn normalized(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.numerics.workers = 0;
    c.output.dir = ".".into();
    c
}

/// Writes every artifact below `dir`.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> CliResult<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for a in &out.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn cq_tolerance(cfg: &ExperimentConfig) -> f64 {
    cfg.numerics.tolerance.unwrap_or(1e-10)
}

fn ml_tables(cfg: &ExperimentConfig, p: &MlTablesParams, out: &mut RunOutput) -> CliResult<()> {
    let mut csv = String::from("alpha,beta,q,c_q\n");
    let mut finite = 0;
    for &alpha in &p.alphas {
        for &beta in &p.betas {
            for &q in &p.qs {
                let value = if in_integrability_window(alpha, beta, q) {
                    let mut req = CqRequest::new(alpha, beta, q)?;
                    req.tol = cq_tolerance(cfg);
                    finite += 1;
                    c_q(req)?
                } else {
                    f64::INFINITY
                };
                let _ = writeln!(csv, "{alpha},{beta},{q},{value}");
            }
        }
    }
    out.csv("cq.csv", csv);
    out.row("c_q values", finite);
    if p.plancherel {
        let mut verdicts: Vec<PlancherelVerdict> = Vec::new();
        for &alpha in &p.alphas {
            for &beta in &p.betas {
                if alpha <= 1.0 && in_integrability_window(alpha, beta, 2.0) {
                    verdicts.push(plancherel_phase_verdict(alpha, beta)?);
                }
            }
        }
        let half = verdicts.iter().filter(|v| v.verdict.starts_with("phase cos(alpha*pi/2) matches")).count();
        out.row("plancherel pairs", verdicts.len());
        out.row("half-angle phase confirmed", half);
        out.json("plancherel.json", &verdicts)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventArtifact {
    pub mu: f64,
    pub tail: TailModel,
    pub mass: MassEstimate,
    pub nodes: usize,
}

fn resolvent(cfg: &ExperimentConfig, p: &ResolventParams, out: &mut RunOutput) -> CliResult<()> {
    let grid = cfg.numerics.grid.as_ref().expect("validated").build()?;
    let sol = solve_e_rho(&p.kernel, &p.rho, p.mu, &grid)?;
    let mut csv = String::from("t,e_rho,partial_integral\n");
    for ((t, e), m) in grid.nodes().iter().zip(sol.values()).zip(sol.partial_integrals()) {
        let _ = writeln!(csv, "{t},{e},{m}");
    }
    out.csv("e_rho.csv", csv);
    let tail = p.tail.unwrap_or_else(|| TailModel::for_problem(&p.kernel, &p.rho));
    let mass = sol.mass_estimate(tail)?;
    out.row("grid mass", mass.grid_mass);
    out.row("tail", mass.tail);
    out.row("total mass", mass.total);
    out.json("resolvent.json", &ResolventArtifact { mu: p.mu, tail, mass, nodes: grid.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skipped {
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsArtifact {
    pub reports: Vec<ConditionReport>,
    pub skipped: Vec<Skipped>,
}

fn conditions(problem: &SveProblem, p: &ConditionsParams, out: &mut RunOutput) -> CliResult<()> {
    let consts = problem.constants();
    let op = &problem.operator;
    let pair = &problem.kernels;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut attempt = |name: &str, r: svelab::Result<Vec<ConditionReport>>, skipped: &mut Vec<Skipped>| match r {
        Ok(list) => reports.extend(list),
        Err(e) => skipped.push(Skipped { check: name.into(), reason: e.to_string() }),
    };
    let fractional = match (&pair.k, &pair.h) {
        (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => Some((*alpha, *beta)),
        _ => None,
    };
    if let (Spectrum::Explicit { eigenvalues }, Some((alpha, beta))) = (op.spectrum(), fractional) {
        if eigenvalues.len() == 1 {
            attempt("scalar_theorem", check_1d_theorem(-eigenvalues[0], alpha, beta, &consts).map(|(a, b)| vec![a, b]), &mut skipped);
        }
    }
    for variant in [GeneralVariant::Limit, GeneralVariant::Stability] {
        attempt("general", check_general_limit(op, pair, &consts, p.delta, variant).map(|r| vec![r]), &mut skipped);
    }
    let additive = matches!(problem.diffusion, Diffusion::Zero | Diffusion::Additive { .. });
    if additive {
        attempt("additive", check_additive(op, &pair.k, consts.c_f_lin, p.delta).map(|r| vec![r]), &mut skipped);
    }
    if let (Spectrum::DirichletLaplacian { dim, modes_per_axis }, Some((alpha, beta))) = (op.spectrum(), fractional) {
        let gamma = p.gamma.or(match &problem.forcing {
            ForcingSpec::Power { gamma, .. } => Some(*gamma),
            _ => None,
        });
        match gamma {
            Some(g) => attempt("heat_region", check_heat_region(*dim, alpha, beta, p.delta, g, !additive).map(|r| vec![r]), &mut skipped),
            None => skipped.push(Skipped { check: "heat_region".into(), reason: "no forcing exponent gamma given".into() }),
        }
        if !additive {
            let c = consts.c_sigma_lin;
            attempt(
                "heat_multiplicative_printed",
                check_heat_multiplicative_printed(*dim, *modes_per_axis, alpha, beta, p.delta, c).map(|r| vec![r]),
                &mut skipped,
            );
        }
    }
    for r in &reports {
        out.row(r.name.clone(), format!("{} (lhs {}, threshold {})", format!("{:?}", r.verdict).to_lowercase(), r.lhs, r.threshold));
    }
    for s in &skipped {
        out.row(format!("{} skipped", s.check), &s.reason);
    }
    out.json("conditions.json", &ConditionsArtifact { reports, skipped })
}

fn settings(cfg: &ExperimentConfig) -> ExperimentSettings {
    let n = &cfg.numerics;
    let mut s = ExperimentSettings::new(n.n_paths.expect("validated"), n.step.unwrap_or(1.0), n.master_seed.expect("validated"));
    s.workers = n.workers;
    if let Some(p) = n.p {
        s.p = p;
    }
    if let Some(b) = n.bootstrap {
        s.bootstrap = b;
    }
    if let Some(m) = n.permutations {
        s.permutations = m;
    }
    s
}

fn uniform_grid(horizon: f64, step: f64) -> CliResult<TimeGrid> {
    let n = (horizon / step).round().max(1.0) as usize;
    if ((n as f64) * step - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(CliError::invalid(format!("horizon {horizon} is not a multiple of numerics.step {step}")));
    }
    Ok(TimeGrid::uniform(horizon, n)?)
}

fn moments_csv(laws: &[EmpiricalDistribution]) -> String {
    let mut s = String::from("time,mode,mean,var,stderr\n");
    for l in laws {
        l.summary_rows(&mut s);
    }
    s
}

fn simulate(cfg: &ExperimentConfig, problem: &SveProblem, p: &SimulateParams, out: &mut RunOutput) -> CliResult<()> {
    let s = settings(cfg);
    let times = p.record_times.clone().unwrap_or_else(|| vec![problem.horizon]);
    let grid = match problem.scheme {
        Scheme::EulerLeft => uniform_grid(problem.horizon, s.step)?,
        Scheme::ExactGaussian => TimeGrid::uniform(problem.horizon, 1)?,
    };
    let laws = run_ensemble(problem, &grid, s.n_paths, &times, s.master_seed, s.workers)?;
    if p.write_samples {
        let mut csv = String::from("time,path_index,mode_index,value\n");
        for l in &laws {
            l.to_csv_rows(&mut csv);
        }
        out.csv("samples.csv", csv);
    }
    out.csv("moments.csv", moments_csv(&laws));
    out.row("paths", s.n_paths);
    if let Some(last) = laws.last() {
        out.row(format!("mean u_0({})", last.time), last.mean(0));
        out.row(format!("var u_0({})", last.time), last.variance(0));
    }
    Ok(())
}

fn converge(cfg: &ExperimentConfig, problem: &SveProblem, p: &ConvergeParams, out: &mut RunOutput) -> CliResult<()> {
    let report: ConvergenceReport = convergence_experiment(problem, &p.times, &p.reference, &settings(cfg))?;
    out.csv("convergence.csv", report.to_csv());
    for pt in &report.points {
        out.row(format!("W_hat at t = {}", pt.t), format!("{} +- {}", pt.w, pt.stderr));
    }
    out.row("noise floor", report.noise_floor);
    for w in &report.warnings {
        out.row("warning", w);
    }
    out.json("convergence.json", &report)
}

fn dichotomy(cfg: &ExperimentConfig, problem: &SveProblem, p: &DichotomyParams, out: &mut RunOutput) -> CliResult<()> {
    let report: DependenceReport = initial_dependence_experiment(problem, &p.other_forcing, p.horizon, &settings(cfg))?;
    out.row("W_hat", format!("{} +- {}", report.w, report.stderr));
    out.row("noise floor", report.noise_floor);
    out.row("mean difference (mode 0)", report.mean_difference[0]);
    out.row("verdict", serde_json::to_value(report.verdict).map(|v| v.as_str().unwrap_or_default().to_string()).unwrap_or_default());
    out.json("dichotomy.json", &report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartArtifact {
    pub tau: f64,
    pub t: f64,
    pub n_paths: usize,
    /// Largest KS statistic over the modes.
    pub ks: f64,
    pub ks_critical_5pct: f64,
    /// Mode-wise `Ŵ_2`, combined in quadrature.
    pub w2: f64,
    pub consistent: bool,
}

fn restart(cfg: &ExperimentConfig, problem: &SveProblem, p: &RestartParams, out: &mut RunOutput) -> CliResult<()> {
    let s = settings(cfg);
    let grid = uniform_grid(problem.horizon, s.step)?;
    let sim = Simulator::new(problem, &grid)?;
    let (direct, restarted) = sim.restart_experiment(p.tau, p.t, s.n_paths, s.master_seed, s.workers)?;
    let mut ks = 0.0f64;
    let mut w2sq = 0.0;
    for n in 0..direct.modes() {
        ks = ks.max(ks_statistic(direct.mode(n), restarted.mode(n)));
        w2sq += wasserstein_1d(2.0, direct.mode(n), restarted.mode(n))?.powi(2);
    }
    let crit = ks_critical_5pct(direct.len(), restarted.len());
    let art = RestartArtifact { tau: p.tau, t: p.t, n_paths: s.n_paths, ks, ks_critical_5pct: crit, w2: w2sq.sqrt(), consistent: ks < crit };
    let mut csv = String::from("time,mode,mean,var,stderr\n");
    direct.summary_rows(&mut csv);
    restarted.summary_rows(&mut csv);
    out.csv("restart_moments.csv", csv);
    out.row("KS", art.ks);
    out.row("KS 5% critical", art.ks_critical_5pct);
    out.row("W_hat", art.w2);
    out.row("laws consistent", art.consistent);
    out.json("restart.json", &art)
}
