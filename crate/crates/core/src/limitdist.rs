//! Wasserstein estimators, convergence and dichotomy experiments, and the
//! rate envelope.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, TimeGrid};
use crate::par::map_indexed;
use crate::simulator::{
    sample_exact_gaussian_in, EmpiricalDistribution, Scheme, Simulator, SveProblem, NS_PATHS, NS_REFERENCE, NS_SECOND,
};
use crate::spectral::{gg_limit, ForcingSpec};
use crate::stats::{mean, pairwise_sum, sorted, variance};
use crate::volterra1d::{paley_wiener_check, resolvent_second_kind, PaleyWienerVerdict};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("order p must be finite and at least 1, got {p}")));
    }
    Ok(())
}

/// Exact `W_p` between two empirical measures on the line, by integrating
/// `|F^{-1}(u) - G^{-1}(u)|^p` over the merged quantile breakpoints. Equal
/// sizes reduce to sorted pairing.
pub fn wasserstein_1d(p: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_p(p)?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::Domain("wasserstein distance of an empty sample".into()));
    }
    let (xs, ys) = (sorted(x), sorted(y));
    let terms: Vec<f64> = if xs.len() == ys.len() {
        let w = 1.0 / xs.len() as f64;
        xs.iter().zip(&ys).map(|(a, b)| w * (a - b).abs().powf(p)).collect()
    } else {
        let (n, m) = (xs.len(), ys.len());
        let (mut i, mut j) = (0usize, 0usize);
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(n + m);
        // breakpoints (i+1)/n and (j+1)/m compared exactly in integers
        while i < n && j < m {
            let (ai, bj) = ((i + 1) * m, (j + 1) * n);
            let next = ai.min(bj) as f64 / (n * m) as f64;
            out.push((next - prev) * (xs[i] - ys[j]).abs().powf(p));
            prev = next;
            if ai <= bj {
                i += 1;
            }
            if bj <= ai {
                j += 1;
            }
        }
        out
    };
    Ok(pairwise_sum(&terms).max(0.0).powf(1.0 / p))
}

/// `W_p` between a sample and `N(mean, sd²)`, pairing order statistics
/// with the quantiles at `(i - 1/2)/N`.
pub fn wasserstein_to_normal(p: f64, x: &[f64], mean: f64, sd: f64) -> Result<f64> {
    check_p(p)?;
    if x.is_empty() {
        return Err(Error::Domain("wasserstein distance of an empty sample".into()));
    }
    let xs = sorted(x);
    let n = xs.len() as f64;
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let terms: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let q = if sd > 0.0 { mean + sd * std.inverse_cdf((i as f64 + 0.5) / n) } else { mean };
            (v - q).abs().powf(p) / n
        })
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / p))
}

/// `(Σ_n W_2(mode n)²)^{1/2}`; exact for product laws.
pub fn wasserstein_modewise(x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> Result<f64> {
    if x.modes() != y.modes() {
        return Err(Error::DimensionMismatch { expected: x.modes(), got: y.modes() });
    }
    let sq: Vec<f64> = (0..x.modes())
        .map(|n| wasserstein_1d(2.0, x.mode(n), y.mode(n)).map(|w| w * w))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&sq).sqrt())
}

/// Sliced `W_2`: root mean square of 1D distances of projections onto
/// random unit directions.
pub fn sliced_wasserstein(x: &EmpiricalDistribution, y: &EmpiricalDistribution, directions: usize, seed: u64) -> Result<f64> {
    if x.modes() != y.modes() {
        return Err(Error::DimensionMismatch { expected: x.modes(), got: y.modes() });
    }
    if directions == 0 {
        return Err(Error::Domain("need at least one direction".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..directions)
        .map(|_| {
            let v: Vec<f64> = (0..x.modes()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / norm).collect()
        })
        .collect();
    let project = |e: &EmpiricalDistribution, d: &[f64]| -> Vec<f64> {
        (0..e.len()).map(|s| (0..e.modes()).map(|n| d[n] * e.values[n][s]).sum()).collect()
    };
    let sq: Vec<f64> = dirs
        .iter()
        .map(|d| wasserstein_1d(2.0, &project(x, d), &project(y, d)).map(|w| w * w))
        .collect::<Result<_>>()?;
    Ok((pairwise_sum(&sq) / directions as f64).sqrt())
}

/// `W_p` for scalar laws, the modewise `W_2` otherwise.
pub fn distance(p: f64, x: &EmpiricalDistribution, y: &EmpiricalDistribution) -> Result<f64> {
    if x.modes() == 1 && y.modes() == 1 {
        wasserstein_1d(p, x.mode(0), y.mode(0))
    } else if p == 2.0 {
        wasserstein_modewise(x, y)
    } else {
        Err(Error::Domain("mode-vector laws support p = 2 only".into()))
    }
}

/// Target law of a convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// Independent Gaussian modes.
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
    Samples { law: EmpiricalDistribution },
    /// Independent ensemble at `factor` times the largest comparison time.
    LateTime { factor: f64 },
}

fn distance_to_gaussian(p: f64, x: &EmpiricalDistribution, mean: &[f64], var: &[f64]) -> Result<f64> {
    if mean.len() != x.modes() || var.len() != x.modes() {
        return Err(Error::DimensionMismatch { expected: x.modes(), got: mean.len() });
    }
    if x.modes() == 1 {
        return wasserstein_to_normal(p, x.mode(0), mean[0], var[0].sqrt());
    }
    if p != 2.0 {
        return Err(Error::Domain("mode-vector laws support p = 2 only".into()));
    }
    let sq: Vec<f64> = (0..x.modes())
        .map(|n| wasserstein_to_normal(2.0, x.mode(n), mean[n], var[n].sqrt()).map(|w| w * w))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&sq).sqrt())
}

fn resample(x: &EmpiricalDistribution, rng: &mut ChaCha8Rng) -> EmpiricalDistribution {
    let n = x.len();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    EmpiricalDistribution {
        time: x.time,
        values: x.values.iter().map(|v| idx.iter().map(|&i| v[i]).collect()).collect(),
        lineage: x.lineage,
    }
}

/// Bootstrap standard error of `distance(p, x, y)`; `y = None` measures to
/// the Gaussian `(mean, var)` instead.
fn bootstrap_se(
    p: f64,
    x: &EmpiricalDistribution,
    y: Option<&EmpiricalDistribution>,
    gaussian: Option<(&[f64], &[f64])>,
    n_boot: usize,
    seed: u64,
) -> Result<f64> {
    if n_boot < 2 {
        return Ok(f64::NAN);
    }
    let stats: Vec<Result<f64>> = map_indexed(n_boot, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let xb = resample(x, &mut rng);
        match (y, gaussian) {
            (Some(y), _) => distance(p, &xb, &resample(y, &mut rng)),
            (None, Some((m, v))) => distance_to_gaussian(p, &xb, m, v),
            _ => unreachable!(),
        }
    });
    let stats: Vec<f64> = stats.into_iter().collect::<Result<_>>()?;
    Ok(variance(&stats).sqrt())
}

/// Bootstrap standard error of the two-sample distance.
pub fn bootstrap_stderr(p: f64, x: &EmpiricalDistribution, y: &EmpiricalDistribution, n_boot: usize, seed: u64) -> Result<f64> {
    bootstrap_se(p, x, Some(y), None, n_boot, seed)
}

/// 95 % quantile of the distance between random splits of the pooled
/// samples: the distance two equal laws show at these sample sizes.
pub fn noise_floor(p: f64, x: &EmpiricalDistribution, y: &EmpiricalDistribution, n_perm: usize, seed: u64) -> Result<f64> {
    if x.modes() != y.modes() {
        return Err(Error::DimensionMismatch { expected: x.modes(), got: y.modes() });
    }
    let (nx, ny) = (x.len(), y.len());
    let stats: Vec<Result<f64>> = map_indexed(n_perm.max(1), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut idx: Vec<usize> = (0..nx + ny).collect();
        idx.shuffle(&mut rng);
        let pick = |range: &[usize]| EmpiricalDistribution {
            time: x.time,
            values: (0..x.modes())
                .map(|n| range.iter().map(|&i| if i < nx { x.values[n][i] } else { y.values[n][i - nx] }).collect())
                .collect(),
            lineage: None,
        };
        distance(p, &pick(&idx[..nx]), &pick(&idx[nx..]))
    });
    let stats: Vec<f64> = stats.into_iter().collect::<Result<_>>()?;
    Ok(quantile(&stats, 0.95))
}

/// 95 % quantile of the distance between `n` exact Gaussian draws and the
/// Gaussian law itself.
pub fn gaussian_noise_floor(p: f64, n: usize, mean: &[f64], var: &[f64], reps: usize, seed: u64) -> Result<f64> {
    let stats: Vec<Result<f64>> = map_indexed(reps.max(1), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let values = mean
            .iter()
            .zip(var)
            .map(|(m, v)| (0..n).map(|_| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        distance_to_gaussian(p, &EmpiricalDistribution::new(0.0, values)?, mean, var)
    });
    let stats: Vec<f64> = stats.into_iter().collect::<Result<_>>()?;
    Ok(quantile(&stats, 0.95))
}

fn quantile(xs: &[f64], q: f64) -> f64 {
    let s = sorted(xs);
    let pos = q * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    pub n_paths: usize,
    /// Time step of the uniform simulation grid.
    pub step: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_boot")]
    pub bootstrap: usize,
    #[serde(default = "default_perm")]
    pub permutations: usize,
}

fn default_p() -> f64 {
    2.0
}
fn default_boot() -> usize {
    100
}
fn default_perm() -> usize {
    100
}

impl ExperimentSettings {
    pub fn new(n_paths: usize, step: f64, master_seed: u64) -> Self {
        Self { n_paths, step, master_seed, workers: 0, p: 2.0, bootstrap: 100, permutations: 100 }
    }

    fn grid(&self, horizon: f64) -> Result<TimeGrid> {
        if !(self.step > 0.0) {
            return Err(Error::Domain(format!("step must be positive, got {}", self.step)));
        }
        let n = (horizon / self.step).round().max(1.0) as usize;
        if ((n as f64) * self.step - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::Domain(format!("horizon {horizon} is not a multiple of the step {}", self.step)));
        }
        TimeGrid::uniform(horizon, n)
    }
}

/// Samples of `problem` at `times` with its scheme; `namespace` separates
/// independent ensembles.
fn marginals(problem: &SveProblem, times: &[f64], s: &ExperimentSettings, namespace: u8) -> Result<Vec<EmpiricalDistribution>> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    match problem.scheme {
        Scheme::ExactGaussian => sample_exact_gaussian_in(problem, times, s.n_paths, s.master_seed, namespace),
        Scheme::EulerLeft => {
            let mut p = problem.clone();
            p.horizon = horizon;
            let grid = s.grid(horizon)?;
            Simulator::new(&p, &grid)?.ensemble(s.n_paths, times, s.master_seed, namespace, s.workers)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub t: f64,
    #[serde(with = "crate::jsonf64")]
    pub w: f64,
    #[serde(with = "crate::jsonf64")]
    pub stderr: f64,
    #[serde(default)]
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Distance two samples of the same law show at this sample size.
    #[serde(with = "crate::jsonf64")]
    pub noise_floor: f64,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    /// Rows `t,W_hat,stderr,bound_envelope`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,W_hat,stderr,bound_envelope\n");
        for p in &self.points {
            let env = p.envelope.map(|e| e.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", p.t, p.w, p.stderr, env));
        }
        s
    }
}

/// `Ŵ_p(law of u(t), reference)` for each `t`.
pub fn convergence_experiment(problem: &SveProblem, times: &[f64], reference: &Reference, s: &ExperimentSettings) -> Result<ConvergenceReport> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("comparison times must be increasing".into()));
    }
    let laws = marginals(problem, times, s, NS_PATHS)?;
    let mut warnings = Vec::new();
    let (points, floor) = match reference {
        Reference::Gaussian { mean, variance } => {
            let pts = laws
                .iter()
                .map(|law| {
                    Ok(ConvergencePoint {
                        t: law.time,
                        w: distance_to_gaussian(s.p, law, mean, variance)?,
                        stderr: bootstrap_se(s.p, law, None, Some((mean, variance)), s.bootstrap, s.master_seed ^ 0xB0)?,
                        envelope: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let floor = gaussian_noise_floor(s.p, s.n_paths, mean, variance, s.permutations, s.master_seed ^ 0xF1)?;
            (pts, floor)
        }
        Reference::Samples { law: r } => two_sample_points(&laws, r, s)?,
        Reference::LateTime { factor } => {
            let t_ref = times[times.len() - 1] * factor;
            if !(*factor > 1.0) {
                return Err(Error::Domain("reference factor must exceed 1".into()));
            }
            let r = marginals(problem, &[t_ref], s, NS_REFERENCE)?.remove(0);
            two_sample_points(&laws, &r, s)?
        }
    };
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        if first.w <= floor {
            warnings.push(format!(
                "the law at t = {} is already indistinguishable from the reference; the horizon may be too short",
                first.t
            ));
        }
        if last.w > floor + 3.0 * last.stderr {
            warnings.push(format!("the law at t = {} has not reached the noise floor", last.t));
        }
    }
    Ok(ConvergenceReport { points, noise_floor: floor, warnings })
}

fn two_sample_points(laws: &[EmpiricalDistribution], r: &EmpiricalDistribution, s: &ExperimentSettings) -> Result<(Vec<ConvergencePoint>, f64)> {
    let pts = laws
        .iter()
        .map(|law| {
            Ok(ConvergencePoint {
                t: law.time,
                w: distance(s.p, law, r)?,
                stderr: bootstrap_stderr(s.p, law, r, s.bootstrap, s.master_seed ^ 0xB0)?,
                envelope: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = noise_floor(s.p, &laws[laws.len() - 1], r, s.permutations, s.master_seed ^ 0xF1)?;
    Ok((pts, floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitVerdict {
    SameLimit,
    DifferentLimits,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub horizon: f64,
    #[serde(with = "crate::jsonf64")]
    pub w: f64,
    #[serde(with = "crate::jsonf64")]
    pub stderr: f64,
    #[serde(with = "crate::jsonf64")]
    pub noise_floor: f64,
    /// Mean of the second law minus mean of the first, per mode.
    pub mean_difference: Vec<f64>,
    pub mean_difference_stderr: Vec<f64>,
    /// `Gg(∞)` difference where the limit statements supply it.
    pub predicted_mean_difference: Option<Vec<f64>>,
    pub verdict: LimitVerdict,
}

/// Minimum ensemble size for a verdict.
pub const MIN_PATHS_FOR_VERDICT: usize = 200;

/// Compares the laws at `horizon` of the problem driven by `problem.forcing`
/// and by `other`.
pub fn initial_dependence_experiment(problem: &SveProblem, other: &ForcingSpec, horizon: f64, s: &ExperimentSettings) -> Result<DependenceReport> {
    let mut second = problem.clone();
    second.forcing = other.clone();
    second.validate()?;
    let a = marginals(problem, &[horizon], s, NS_PATHS)?.remove(0);
    let b = marginals(&second, &[horizon], s, NS_SECOND)?.remove(0);
    let w = distance(s.p, &a, &b)?;
    let stderr = bootstrap_stderr(s.p, &a, &b, s.bootstrap, s.master_seed ^ 0xB0)?;
    let floor = noise_floor(s.p, &a, &b, s.permutations, s.master_seed ^ 0xF1)?;
    let mean_difference = (0..a.modes()).map(|n| b.mean(n) - a.mean(n)).collect();
    let mean_difference_stderr = (0..a.modes())
        .map(|n| (a.stderr_mean(n).powi(2) + b.stderr_mean(n).powi(2)).sqrt())
        .collect();
    let k = &problem.kernels.k;
    let predicted_mean_difference = match (gg_limit(&problem.operator, &problem.forcing, k), gg_limit(&second.operator, other, k)) {
        (Ok(x), Ok(y)) => Some(y.iter().zip(&x).map(|(b, a)| b - a).collect()),
        _ => None,
    };
    let verdict = if s.n_paths < MIN_PATHS_FOR_VERDICT {
        LimitVerdict::Inconclusive
    } else if w <= floor {
        LimitVerdict::SameLimit
    } else if w > 3.0 * floor {
        LimitVerdict::DifferentLimits
    } else {
        LimitVerdict::Inconclusive
    };
    Ok(DependenceReport {
        horizon,
        w,
        stderr,
        noise_floor: floor,
        mean_difference,
        mean_difference_stderr,
        predicted_mean_difference,
        verdict,
    })
}

/// Nonnegative nonincreasing profile of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Decay {
    Zero,
    /// `amplitude·e^{-rate t}`
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude·(1 + t)^{-exponent}`
    PowerLaw { amplitude: f64, exponent: f64 },
    /// Tabulated; holds the last value beyond the grid.
    Tabulated { function: GridFunction },
}

impl Decay {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Decay::Zero => 0.0,
            Decay::Exponential { amplitude, rate } => amplitude * (-rate * t).exp(),
            Decay::PowerLaw { amplitude, exponent } => amplitude * (1.0 + t).powf(-exponent),
            Decay::Tabulated { function } => function.eval(t).max(0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = match self {
            Decay::Zero => false,
            Decay::Exponential { amplitude, rate } => !(*amplitude >= 0.0 && *rate >= 0.0),
            Decay::PowerLaw { amplitude, exponent } => !(*amplitude >= 0.0 && *exponent >= 0.0),
            Decay::Tabulated { function } => {
                function.values.iter().any(|v| !(*v >= 0.0)) || function.values.windows(2).any(|w| w[1] > w[0] + 1e-12 * w[0].abs())
            }
        };
        if bad {
            return Err(Error::Domain(format!("{name} must be non-negative and nonincreasing")));
        }
        Ok(())
    }
}

/// Ingredients of `C (D(t/2) + (∫_{t/2}^∞ r)^{1/p})` with
/// `D(t) = ‖ξ(t) - ξ(∞)‖ + ∫_t^∞ ‖E_k‖ + (∫_t^∞ K_lin²)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBoundInputs {
    pub xi_decay: Decay,
    pub ek_tail: Decay,
    /// `∫_t^∞ K_lin(s)² ds`
    pub k_lin_tail_sq: Decay,
    /// `∫_t^∞ r(s) ds`
    pub r_tail: Decay,
    pub p: f64,
}

impl RateBoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        self.xi_decay.validate("xi decay")?;
        self.ek_tail.validate("E_k tail")?;
        self.k_lin_tail_sq.validate("K_lin tail")?;
        self.r_tail.validate("r tail")
    }

    pub fn d(&self, t: f64) -> f64 {
        self.xi_decay.eval(t) + self.ek_tail.eval(t) + self.k_lin_tail_sq.eval(t).sqrt()
    }

    /// Envelope with unit constant.
    pub fn shape(&self, t: f64) -> f64 {
        self.d(0.5 * t) + self.r_tail.eval(0.5 * t).powf(1.0 / self.p)
    }
}

/// `C (D(t/2) + (∫_{t/2}^∞ r)^{1/p})`.
pub fn rate_bound(inputs: &RateBoundInputs, c: f64, t: f64) -> Result<f64> {
    inputs.validate()?;
    Ok(c * inputs.shape(t))
}

/// `∫_t^∞ r` for the resolvent of the second kind of `ρ ≥ 0`; refuses when
/// `r` is not integrable. The total mass is `m/(1 - m)` with `m = ∫ρ`.
pub fn r_tail_from_rho(rho: &GridFunction, rho_tail_mass: f64) -> Result<Decay> {
    let report = paley_wiener_check(rho, rho_tail_mass)?;
    if report.verdict != PaleyWienerVerdict::Integrable {
        return Err(Error::NotIntegrable(format!(
            "resolvent of the second kind is not integrable: mass of rho = {} (band {})",
            report.mass, report.band
        )));
    }
    let r = resolvent_second_kind(rho)?;
    let total = report.mass / (1.0 - report.mass);
    let partial = r.partial_integrals();
    let values: Vec<f64> = partial.iter().map(|c| (total - c).max(0.0)).collect();
    let mut mono = values.clone();
    for i in 1..mono.len() {
        mono[i] = mono[i].min(mono[i - 1]);
    }
    Ok(Decay::Tabulated { function: GridFunction::new(r.grid.clone(), mono, Default::default())? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Least squares of `log Ŵ - log shape`.
    pub least_squares: f64,
    /// Smallest `C` with the envelope above every measured point.
    pub dominating: f64,
}

pub fn fit_rate_constant(inputs: &RateBoundInputs, points: &[ConvergencePoint]) -> Result<RateFit> {
    inputs.validate()?;
    let used: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.w, inputs.shape(p.t)))
        .filter(|(w, s)| *w > 0.0 && *s > 0.0)
        .collect();
    if used.is_empty() {
        return Err(Error::Domain("no positive points to fit".into()));
    }
    let logs: Vec<f64> = used.iter().map(|(w, s)| w.ln() - s.ln()).collect();
    let dominating = used.iter().map(|(w, s)| w / s).fold(0.0, f64::max);
    Ok(RateFit { least_squares: mean(&logs).exp(), dominating })
}
