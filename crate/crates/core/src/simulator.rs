//! Monte Carlo sampling of mild solutions on uniform grids.
//!
//! The scheme is a left-point product integration of
//! `u = Gg + E_k * F(u) + E_h * σ(u) dW`, mode by mode:
//! `u_n(t_i) = Gg_n(t_i) + Σ_{j<i} w^k_{i-j} F_n(u_j) + Σ_{j<i} w^h_{i-j} (σ(u_j) ΔW_j)_n`.
//! `w^k` are exact increments of `∫ e_k`; `w^h` are either the left-point
//! values `e_h(t_i - t_j)` or the signed root mean square of `e_h` over the
//! lag cell, which reproduces the variance of the stochastic convolution
//! exactly for additive noise.

use crate::conditions::CoefficientConstants;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interpolation, TimeGrid};
use crate::kernel::Kernel;
use crate::mlf::{cumulative_e_k, e_h_closed, lq_mass, MLParams};
use crate::par::{install, map_indexed};
use crate::quad::{adaptive, gauss_legendre8};
use crate::spectral::{compute_gg, gg_limit, DiagonalOperator, ForcingSpec, KernelPair, ModeSource, Spectrum};
use crate::stats::{mean, pairwise_sum, variance};
use crate::volterra1d::{solve_e_rho, Rho};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Scalar nonlinearities used for drift and diffusion coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarMap {
    /// `slope·x + offset`
    Affine { slope: f64, offset: f64 },
    /// `amplitude·sin(frequency·x + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude·tanh(scale·x)`
    Tanh { amplitude: f64, scale: f64 },
    /// `min(max(x, lo), hi)`
    Clamp { lo: f64, hi: f64 },
}

impl ScalarMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ScalarMap::Affine { slope, offset } => slope * x + offset,
            ScalarMap::Sine { amplitude, frequency, phase } => amplitude * (frequency * x + phase).sin(),
            ScalarMap::Tanh { amplitude, scale } => amplitude * (scale * x).tanh(),
            ScalarMap::Clamp { lo, hi } => x.max(lo).min(hi),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            ScalarMap::Affine { slope, .. } => slope.abs(),
            ScalarMap::Sine { amplitude, frequency, .. } => (amplitude * frequency).abs(),
            ScalarMap::Tanh { amplitude, scale } => (amplitude * scale).abs(),
            ScalarMap::Clamp { .. } => 1.0,
        }
    }

    pub fn sup(&self) -> Option<f64> {
        match *self {
            ScalarMap::Affine { slope, offset } if slope == 0.0 => Some(offset.abs()),
            ScalarMap::Affine { .. } => None,
            ScalarMap::Sine { amplitude, .. } | ScalarMap::Tanh { amplitude, .. } => Some(amplitude.abs()),
            ScalarMap::Clamp { lo, hi } => Some(lo.abs().max(hi.abs())),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let ok = match *self {
            ScalarMap::Affine { slope, offset } => slope.is_finite() && offset.is_finite(),
            ScalarMap::Sine { amplitude, frequency, phase } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
            ScalarMap::Tanh { amplitude, scale } => amplitude.is_finite() && scale.is_finite(),
            ScalarMap::Clamp { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid scalar map {self:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drift {
    #[default]
    Zero,
    /// `F(u) = slope·u`.
    Linear { slope: f64 },
    /// `F(u)_n = f(u_n)`.
    Modewise { map: ScalarMap },
    /// `F(u)(x) = f(u(x))`, one-dimensional Dirichlet Laplacian only.
    Pointwise { map: ScalarMap },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffusion {
    #[default]
    Zero,
    /// `σ(u) dW = σ_0 dW`, `σ_0` diagonal with one entry per mode.
    Additive { sigma0: Vec<f64> },
    /// `(σ(u) dW)_n = f(u_n) dW_n`.
    DiagonalMultiplicative { map: ScalarMap },
    /// `(σ(u) dW)(x) = f(u(x)) dW(x)`, one-dimensional Dirichlet Laplacian only.
    Pointwise { map: ScalarMap },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EulerLeft,
    ExactGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseWeights {
    LeftPoint,
    #[default]
    MomentMatched,
}

/// A spectrally truncated (or scalar) stochastic Volterra equation. A scalar
/// equation with `A < 0` is the one-mode operator with eigenvalue `|A|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SveProblem {
    pub operator: DiagonalOperator,
    pub kernels: KernelPair,
    #[serde(default)]
    pub drift: Drift,
    #[serde(default)]
    pub diffusion: Diffusion,
    pub forcing: ForcingSpec,
    pub horizon: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub noise_weights: NoiseWeights,
}

impl SveProblem {
    /// `u = t^γ/Γ(1+γ) x_0 + ...` for `A < 0` with fractional kernels and
    /// additive noise `σ`.
    pub fn scalar_additive(a: f64, alpha: f64, beta: f64, sigma: f64, gamma: f64, x0: f64, horizon: f64) -> Result<Self> {
        if !(a < 0.0) {
            return Err(Error::Domain(format!("need A < 0, got {a}")));
        }
        let p = Self {
            operator: DiagonalOperator::explicit(vec![-a])?,
            kernels: KernelPair::fractional(alpha, beta),
            drift: Drift::Zero,
            diffusion: Diffusion::Additive { sigma0: vec![sigma] },
            forcing: ForcingSpec::Power { gamma, state: vec![x0] },
            horizon,
            scheme: Scheme::EulerLeft,
            noise_weights: NoiseWeights::MomentMatched,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn modes(&self) -> usize {
        self.operator.len()
    }

    /// Every precondition, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            errs.push(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        for (name, k) in [("k", &self.kernels.k), ("h", &self.kernels.h)] {
            if let Err(e) = k.validate() {
                errs.push(format!("kernel {name}: {e}"));
            }
        }
        match &self.kernels.h {
            Kernel::Fractional { alpha: beta } if !(*beta > 0.5) => {
                errs.push(format!("beta > 1/2 is required so that h is locally square integrable, got beta = {beta}"))
            }
            Kernel::Tabulated { delta, .. } if !(*delta < 0.5) => {
                errs.push(format!("h must be locally square integrable: singularity exponent {delta} must be below 1/2"))
            }
            _ => {}
        }
        if let Err(e) = self.forcing.validate(&self.operator, &self.kernels.k) {
            errs.push(format!("forcing: {e}"));
        }
        let pointwise_ok = matches!(self.operator.spectrum(), Spectrum::DirichletLaplacian { dim: 1, .. });
        match &self.drift {
            Drift::Zero => {}
            Drift::Linear { slope } if !slope.is_finite() => errs.push("drift slope must be finite".into()),
            Drift::Linear { .. } => {}
            Drift::Modewise { map } => errs.extend(map.validate().err()),
            Drift::Pointwise { map } => {
                errs.extend(map.validate().err());
                if !pointwise_ok {
                    errs.push("pointwise drift needs the one-dimensional Dirichlet Laplacian".into());
                }
            }
        }
        match &self.diffusion {
            Diffusion::Zero => {}
            Diffusion::Additive { sigma0 } => {
                if sigma0.len() != self.modes() {
                    errs.push(format!("sigma0 has {} entries for {} modes", sigma0.len(), self.modes()));
                }
                if sigma0.iter().any(|s| !s.is_finite()) {
                    errs.push("sigma0 must be finite".into());
                }
            }
            Diffusion::DiagonalMultiplicative { map } => errs.extend(map.validate().err()),
            Diffusion::Pointwise { map } => {
                errs.extend(map.validate().err());
                if !pointwise_ok {
                    errs.push("pointwise diffusion needs the one-dimensional Dirichlet Laplacian".into());
                }
            }
        }
        if self.scheme == Scheme::ExactGaussian {
            errs.extend(self.exact_gaussian_issues());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn exact_gaussian_issues(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let slope = match self.drift {
            Drift::Zero => 0.0,
            Drift::Linear { slope } => slope,
            _ => {
                errs.push("exact_gaussian needs zero or linear drift".into());
                0.0
            }
        };
        if !matches!(self.diffusion, Diffusion::Zero | Diffusion::Additive { .. }) {
            errs.push("exact_gaussian needs additive (or zero) diffusion".into());
        }
        if !matches!((&self.kernels.k, &self.kernels.h), (Kernel::Fractional { .. }, Kernel::Fractional { .. })) {
            errs.push("exact_gaussian needs fractional kernels k and h".into());
        }
        match &self.forcing {
            ForcingSpec::Tabulated { .. } => errs.push("exact_gaussian needs a forcing with closed-form Gg".into()),
            ForcingSpec::KernelConvolved { g0: ModeSource::Tabulated { .. }, .. } => {
                errs.push("exact_gaussian needs a constant g0".into())
            }
            _ => {}
        }
        if self.operator.eigenvalues().iter().any(|m| !(m - slope > 0.0)) {
            errs.push(format!("linear drift slope {slope} must stay below every eigenvalue"));
        }
        errs
    }

    /// Lipschitz and growth constants implied by the coefficients.
    pub fn constants(&self) -> CoefficientConstants {
        let l2_one = PI.sqrt();
        let (c_f_lip, c_f_lin, sup_f) = match &self.drift {
            Drift::Zero => (0.0, 0.0, Some(0.0)),
            Drift::Linear { slope } => (slope.abs(), slope.abs(), None),
            Drift::Modewise { map } => (map.lipschitz(), map.lipschitz().max(map.apply(0.0).abs()), None),
            Drift::Pointwise { map } => {
                (map.lipschitz(), map.lipschitz().max(map.apply(0.0).abs() * l2_one), map.sup().map(|s| s * l2_one))
            }
        };
        let (c_sigma_lip, c_sigma_lin) = match &self.diffusion {
            Diffusion::Zero => (0.0, 0.0),
            Diffusion::Additive { sigma0 } => (0.0, sigma0.iter().fold(0.0f64, |m, s| m.max(s.abs()))),
            Diffusion::DiagonalMultiplicative { map } | Diffusion::Pointwise { map } => {
                (map.lipschitz(), map.lipschitz().max(map.apply(0.0).abs()))
            }
        };
        CoefficientConstants { c_f_lip, c_f_lin, c_sigma_lip, c_sigma_lin, sup_f }
    }

    fn linear_slope(&self) -> f64 {
        match self.drift {
            Drift::Linear { slope } => slope,
            _ => 0.0,
        }
    }

    fn state_independent_noise(&self) -> bool {
        matches!(self.drift, Drift::Zero) && matches!(self.diffusion, Diffusion::Zero | Diffusion::Additive { .. })
    }
}

/// RNG stream namespaces.
pub const NS_PATHS: u8 = 0;
pub const NS_RESTART_PAST: u8 = 1;
pub const NS_RESTART_FUTURE: u8 = 2;
pub const NS_EXACT: u8 = 3;
pub const NS_REFERENCE: u8 = 4;
pub const NS_SECOND: u8 = 5;

/// Identifies the random stream of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub master_seed: u64,
    pub path_index: u64,
    #[serde(default)]
    pub namespace: u8,
}

impl Lineage {
    pub fn new(master_seed: u64, path_index: u64, namespace: u8) -> Self {
        Self { master_seed, path_index, namespace }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(((self.namespace as u64) << 56) ^ self.path_index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: TimeGrid,
    /// `states[i][n]`, mode `n` at node `i`.
    pub states: Vec<Vec<f64>>,
    pub lineage: Option<Lineage>,
    /// Brownian increments `ΔW_j` per mode.
    pub increments: Vec<Vec<f64>>,
    /// `F(u_j)` in mode coordinates.
    pub drift_terms: Vec<Vec<f64>>,
    /// `σ(u_j) ΔW_j` in mode coordinates.
    pub noise_terms: Vec<Vec<f64>>,
}

impl PathSample {
    pub fn mode(&self, n: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[n]).collect()
    }
}

/// Samples of the state at one time; `values[n][s]` is mode `n` of sample `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalDistribution {
    pub time: f64,
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub lineage: Option<(u64, u8)>,
}

impl EmpiricalDistribution {
    pub fn new(time: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.first().map(|v| v.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::Domain("empirical distribution needs at least one sample and one mode".into()));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        Ok(Self { time, values, lineage: None })
    }

    pub fn scalar(time: f64, samples: Vec<f64>) -> Result<Self> {
        Self::new(time, vec![samples])
    }

    pub fn modes(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty() || self.values[0].is_empty()
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    pub fn sample(&self, s: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[s]).collect()
    }

    pub fn mean(&self, n: usize) -> f64 {
        mean(&self.values[n])
    }

    pub fn variance(&self, n: usize) -> f64 {
        variance(&self.values[n])
    }

    pub fn stderr_mean(&self, n: usize) -> f64 {
        (self.variance(n) / self.len() as f64).sqrt()
    }

    /// Standard error of the sample variance, `sqrt((m_4 - s^4)/N)`.
    pub fn stderr_variance(&self, n: usize) -> f64 {
        let xs = &self.values[n];
        let m = mean(xs);
        let q: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
        let m4 = pairwise_sum(&q) / xs.len() as f64;
        let v = self.variance(n);
        ((m4 - v * v).max(0.0) / xs.len() as f64).sqrt()
    }

    /// Rows `time,path_index,mode_index,value`.
    pub fn to_csv_rows(&self, out: &mut String) {
        for s in 0..self.len() {
            for (n, v) in self.values.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", self.time, s, n, v[s]));
            }
        }
    }

    /// Rows `time,mode,mean,var,stderr`.
    pub fn summary_rows(&self, out: &mut String) {
        for n in 0..self.modes() {
            out.push_str(&format!("{},{},{},{},{}\n", self.time, n, self.mean(n), self.variance(n), self.stderr_mean(n)));
        }
    }
}

/// Sine collocation on `(0, π)` with as many points as modes.
#[derive(Debug, Clone)]
struct Collocation {
    /// `basis[j][n] = sqrt(2/π) sin((n+1) x_j)`, `x_j = π (j+1)/(N+1)`.
    basis: Vec<Vec<f64>>,
    weight: f64,
}

impl Collocation {
    fn new(n: usize) -> Self {
        let norm = (2.0 / PI).sqrt();
        let basis = (0..n)
            .map(|j| {
                let x = PI * (j + 1) as f64 / (n + 1) as f64;
                (0..n).map(|m| norm * ((m + 1) as f64 * x).sin()).collect()
            })
            .collect();
        Self { basis, weight: PI / (n + 1) as f64 }
    }

    fn to_physical(&self, c: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|row| row.iter().zip(c).map(|(b, x)| b * x).sum()).collect()
    }

    fn to_modes(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n).map(|m| self.weight * (0..n).map(|j| self.basis[j][m] * v[j]).sum::<f64>()).collect()
    }
}

/// Noise input of a run.
enum Draws<'a> {
    Stream(Lineage),
    Given(&'a [Vec<f64>]),
}

struct RunOutput {
    states: Vec<Vec<f64>>,
    increments: Vec<Vec<f64>>,
    drift_terms: Vec<Vec<f64>>,
    noise_terms: Vec<Vec<f64>>,
}

/// Precomputed weights and `Gg` for one problem on one uniform grid.
#[derive(Debug, Clone)]
pub struct Simulator {
    problem: SveProblem,
    grid: TimeGrid,
    h: f64,
    /// `wk[n][l]`, `l = 0..=steps`, `wk[n][0] = 0`.
    wk: Vec<Vec<f64>>,
    wh: Vec<Vec<f64>>,
    gg: Vec<Vec<f64>>,
    colloc: Option<Collocation>,
}

impl Simulator {
    pub fn new(problem: &SveProblem, grid: &TimeGrid) -> Result<Self> {
        problem.validate()?;
        let h = grid
            .uniform_step()
            .ok_or_else(|| Error::Domain("the simulator needs a uniform grid".into()))?;
        if (grid.horizon() - problem.horizon).abs() > 1e-9 * problem.horizon {
            return Err(Error::Domain(format!(
                "grid horizon {} does not match problem horizon {}",
                grid.horizon(),
                problem.horizon
            )));
        }
        let steps = grid.steps();
        let mu = problem.operator.eigenvalues().to_vec();
        let KernelPair { k, h: hk } = &problem.kernels;
        let need_wk = !matches!(problem.drift, Drift::Zero);
        let need_wh = !matches!(problem.diffusion, Diffusion::Zero);
        let wk: Vec<Vec<f64>> = if need_wk {
            map_indexed(mu.len(), |n| drift_weights(k, mu[n], grid, h, steps)).into_iter().collect::<Result<_>>()?
        } else {
            vec![Vec::new(); mu.len()]
        };
        let wh: Vec<Vec<f64>> = if need_wh {
            map_indexed(mu.len(), |n| noise_weights(k, hk, mu[n], grid, h, steps, problem.noise_weights))
                .into_iter()
                .collect::<Result<_>>()?
        } else {
            vec![Vec::new(); mu.len()]
        };
        let gg = compute_gg(&problem.operator, &problem.forcing, k, grid)?.values;
        let colloc = match (&problem.drift, &problem.diffusion) {
            (Drift::Pointwise { .. }, _) | (_, Diffusion::Pointwise { .. }) => Some(Collocation::new(mu.len())),
            _ => None,
        };
        Ok(Self { problem: problem.clone(), grid: grid.clone(), h, wk, wh, gg, colloc })
    }

    pub fn problem(&self) -> &SveProblem {
        &self.problem
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `Gg` at the nodes, `[n][i]`.
    pub fn forced_term(&self) -> &[Vec<f64>] {
        &self.gg
    }

    pub fn path(&self, lineage: Lineage) -> Result<PathSample> {
        let out = self.run(&self.gg, self.grid.steps(), Draws::Stream(lineage), None, lineage.path_index)?;
        Ok(self.sample(out, Some(lineage)))
    }

    /// Path driven by given Brownian increments `increments[j][n]`.
    pub fn path_with_increments(&self, increments: &[Vec<f64>]) -> Result<PathSample> {
        if increments.len() != self.grid.steps() {
            return Err(Error::DimensionMismatch { expected: self.grid.steps(), got: increments.len() });
        }
        if let Some(bad) = increments.iter().find(|d| d.len() != self.problem.modes()) {
            return Err(Error::DimensionMismatch { expected: self.problem.modes(), got: bad.len() });
        }
        let out = self.run(&self.gg, self.grid.steps(), Draws::Given(increments), None, 0)?;
        Ok(self.sample(out, None))
    }

    fn sample(&self, out: RunOutput, lineage: Option<Lineage>) -> PathSample {
        PathSample {
            grid: self.grid.clone(),
            states: out.states,
            lineage,
            increments: out.increments,
            drift_terms: out.drift_terms,
            noise_terms: out.noise_terms,
        }
    }

    fn record_indices(&self, times: &[f64]) -> Result<Vec<usize>> {
        times
            .iter()
            .map(|&t| {
                let i = self.grid.nearest(t);
                if (self.grid.nodes()[i] - t).abs() > 1e-9 * self.grid.horizon().max(1.0) {
                    Err(Error::Domain(format!("record time {t} is not a grid node")))
                } else {
                    Ok(i)
                }
            })
            .collect()
    }

    /// Core recursion up to node `until` with forced term `gg[n][i]`. With
    /// `record`, only those nodes are returned in `states` when the noise does
    /// not feed back (identical arithmetic to the full recursion).
    fn run(&self, gg: &[Vec<f64>], until: usize, draws: Draws, record: Option<&[usize]>, path: u64) -> Result<RunOutput> {
        let m = self.problem.modes();
        let sqrt_h = self.h.sqrt();
        let mut rng = match draws {
            Draws::Stream(l) => Some(l.rng()),
            Draws::Given(_) => None,
        };
        let given = match draws {
            Draws::Given(d) => Some(d),
            Draws::Stream(_) => None,
        };
        let mut draw = |j: usize| -> Vec<f64> {
            match (&mut rng, given) {
                (Some(r), _) => (0..m).map(|_| sqrt_h * r.sample::<f64, _>(StandardNormal)).collect(),
                (None, Some(d)) => d[j].clone(),
                (None, None) => unreachable!(),
            }
        };
        let has_drift = !matches!(self.problem.drift, Drift::Zero);
        let has_noise = !matches!(self.problem.diffusion, Diffusion::Zero);
        let mut increments = Vec::with_capacity(until);
        let mut drift_terms: Vec<Vec<f64>> = Vec::with_capacity(until);
        let mut noise_terms: Vec<Vec<f64>> = Vec::with_capacity(until);

        let node_value = |i: usize, n: usize, drift_terms: &[Vec<f64>], noise_terms: &[Vec<f64>]| {
            let mut acc = gg[n][i];
            if has_drift {
                let w = &self.wk[n];
                for (j, f) in drift_terms[..i].iter().enumerate() {
                    acc += w[i - j] * f[n];
                }
            }
            if has_noise {
                let w = &self.wh[n];
                for (j, s) in noise_terms[..i].iter().enumerate() {
                    acc += w[i - j] * s[n];
                }
            }
            acc
        };

        if let (Some(rec), true) = (record, self.problem.state_independent_noise()) {
            let last = rec.iter().copied().max().unwrap_or(0).min(until);
            for j in 0..last {
                let dw = draw(j);
                noise_terms.push(self.noise_term(&[], &dw));
                increments.push(dw);
            }
            let mut states = Vec::with_capacity(rec.len());
            for &i in rec {
                let s: Vec<f64> = (0..m).map(|n| node_value(i, n, &drift_terms, &noise_terms)).collect();
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { path, node: i });
                }
                states.push(s);
            }
            return Ok(RunOutput { states, increments, drift_terms, noise_terms });
        }

        let mut states = Vec::with_capacity(until + 1);
        for i in 0..=until {
            let s: Vec<f64> = (0..m).map(|n| node_value(i, n, &drift_terms, &noise_terms)).collect();
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { path, node: i });
            }
            if i < until {
                let dw = draw(i);
                if has_drift {
                    drift_terms.push(self.drift_term(&s));
                }
                noise_terms.push(if has_noise { self.noise_term(&s, &dw) } else { Vec::new() });
                increments.push(dw);
            }
            states.push(s);
        }
        if let Some(rec) = record {
            states = rec.iter().map(|&i| states[i].clone()).collect();
        }
        Ok(RunOutput { states, increments, drift_terms, noise_terms })
    }

    fn drift_term(&self, u: &[f64]) -> Vec<f64> {
        match &self.problem.drift {
            Drift::Zero => vec![0.0; u.len()],
            Drift::Linear { slope } => u.iter().map(|x| slope * x).collect(),
            Drift::Modewise { map } => u.iter().map(|x| map.apply(*x)).collect(),
            Drift::Pointwise { map } => {
                let c = self.colloc.as_ref().expect("collocation prepared");
                let v: Vec<f64> = c.to_physical(u).into_iter().map(|x| map.apply(x)).collect();
                c.to_modes(&v)
            }
        }
    }

    fn noise_term(&self, u: &[f64], dw: &[f64]) -> Vec<f64> {
        match &self.problem.diffusion {
            Diffusion::Zero => vec![0.0; dw.len()],
            Diffusion::Additive { sigma0 } => sigma0.iter().zip(dw).map(|(s, w)| s * w).collect(),
            Diffusion::DiagonalMultiplicative { map } => u.iter().zip(dw).map(|(x, w)| map.apply(*x) * w).collect(),
            Diffusion::Pointwise { map } => {
                let c = self.colloc.as_ref().expect("collocation prepared");
                let field = c.to_physical(dw);
                let v: Vec<f64> = c.to_physical(u).into_iter().zip(field).map(|(x, w)| map.apply(x) * w).collect();
                c.to_modes(&v)
            }
        }
    }

    /// Marginal samples at `record_times` over `n_paths` independent paths.
    pub fn ensemble(&self, n_paths: usize, record_times: &[f64], master_seed: u64, namespace: u8, workers: usize) -> Result<Vec<EmpiricalDistribution>> {
        if n_paths == 0 {
            return Err(Error::Domain("n_paths must be at least 1".into()));
        }
        let rec = self.record_indices(record_times)?;
        let steps = self.grid.steps();
        let runs = install(workers, || {
            map_indexed(n_paths, |p| {
                let lineage = Lineage::new(master_seed, p as u64, namespace);
                self.run(&self.gg, steps, Draws::Stream(lineage), Some(&rec), p as u64).map(|o| o.states)
            })
        })?;
        let runs: Vec<Vec<Vec<f64>>> = collect_paths(runs)?;
        Ok(assemble(record_times, &runs, self.problem.modes(), master_seed, namespace))
    }

    /// Forcing `ξ_τ` that restarts `path` at `τ`, tabulated on `[0, T - τ]`.
    pub fn restart_forcing(&self, path: &PathSample, tau: f64) -> Result<ForcingSpec> {
        let (m, values) = self.restart_values(path, tau)?;
        let grid = TimeGrid::uniform(self.grid.horizon() - self.grid.nodes()[m], self.grid.steps() - m)?;
        let modes = values
            .into_iter()
            .map(|v| GridFunction::new(grid.clone(), v, Interpolation::Linear))
            .collect::<Result<Vec<_>>>()?;
        let limit = gg_limit(&self.problem.operator, &self.problem.forcing, &self.problem.kernels.k).ok();
        Ok(ForcingSpec::Resolved { modes, limit })
    }

    fn restart_values(&self, path: &PathSample, tau: f64) -> Result<(usize, Vec<Vec<f64>>)> {
        let realized = path.states.len().saturating_sub(1);
        if !(tau >= 0.0) || tau > self.grid.nodes()[realized.min(self.grid.steps())] + 1e-12 {
            return Err(Error::Domain(format!("restart time {tau} lies beyond the realized horizon")));
        }
        let m = self.record_indices(&[tau])?[0];
        let steps = self.grid.steps();
        if m >= steps {
            return Err(Error::Domain("restart time must leave at least one step".into()));
        }
        let has_drift = !path.drift_terms.is_empty() && !matches!(self.problem.drift, Drift::Zero);
        let has_noise = !matches!(self.problem.diffusion, Diffusion::Zero);
        let values = (0..self.problem.modes())
            .map(|n| {
                (0..=steps - m)
                    .map(|i| {
                        let mut acc = self.gg[n][i + m];
                        for j in 0..m {
                            if has_drift {
                                acc += self.wk[n][i + m - j] * path.drift_terms[j][n];
                            }
                            if has_noise {
                                acc += self.wh[n][i + m - j] * path.noise_terms[j][n];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok((m, values))
    }

    /// Samples of `u(t + τ)` and of the restarted `ũ_τ(t)`; the restarted
    /// paths use independent past and future noise streams.
    pub fn restart_experiment(&self, tau: f64, t: f64, n_paths: usize, master_seed: u64, workers: usize) -> Result<(EmpiricalDistribution, EmpiricalDistribution)> {
        let direct = self.ensemble(n_paths, &[t + tau], master_seed, NS_PATHS, workers)?.remove(0);
        let m = self.record_indices(&[tau])?[0];
        let ti = self.record_indices(&[t])?[0];
        if ti + m > self.grid.steps() {
            return Err(Error::Domain("t + tau exceeds the horizon".into()));
        }
        let runs = install(workers, || {
            map_indexed(n_paths, |p| -> Result<Vec<Vec<f64>>> {
                let past = Lineage::new(master_seed, p as u64, NS_RESTART_PAST);
                let out = self.run(&self.gg, m, Draws::Stream(past), None, p as u64)?;
                let sample = self.sample(out, Some(past));
                let (_, xi) = self.restart_values(&sample, tau)?;
                let future = Lineage::new(master_seed, p as u64, NS_RESTART_FUTURE);
                Ok(self.run(&xi, ti, Draws::Stream(future), Some(&[ti]), p as u64)?.states)
            })
        })?;
        let runs = collect_paths(runs)?;
        let restarted = assemble(&[t], &runs, self.problem.modes(), master_seed, NS_RESTART_FUTURE).remove(0);
        Ok((direct, restarted))
    }
}

fn collect_paths(runs: Vec<Result<Vec<Vec<f64>>>>) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut failed = Vec::new();
    let mut ok = Vec::with_capacity(runs.len());
    for (p, r) in runs.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(format!("path {p}: {e}")),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Validation(failed))
    }
}

fn assemble(times: &[f64], runs: &[Vec<Vec<f64>>], modes: usize, master_seed: u64, namespace: u8) -> Vec<EmpiricalDistribution> {
    times
        .iter()
        .enumerate()
        .map(|(r, &t)| EmpiricalDistribution {
            time: t,
            values: (0..modes).map(|n| runs.iter().map(|run| run[r][n]).collect()).collect(),
            lineage: Some((master_seed, namespace)),
        })
        .collect()
}

fn drift_weights(k: &Kernel, mu: f64, grid: &TimeGrid, h: f64, steps: usize) -> Result<Vec<f64>> {
    let cum: Vec<f64> = match k {
        Kernel::Fractional { alpha } => (0..=steps).map(|l| cumulative_e_k(l as f64 * h, mu, *alpha)).collect::<Result<_>>()?,
        _ => solve_e_rho(k, &Rho::kernel(k.clone()), mu, grid)?.partial_integrals(),
    };
    let mut w = vec![0.0; steps + 1];
    for l in 1..=steps {
        w[l] = cum[l] - cum[l - 1];
    }
    Ok(w)
}

fn noise_weights(k: &Kernel, hk: &Kernel, mu: f64, grid: &TimeGrid, h: f64, steps: usize, mode: NoiseWeights) -> Result<Vec<f64>> {
    let mut w = vec![0.0; steps + 1];
    match (k, hk) {
        (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => {
            let (alpha, beta) = (*alpha, *beta);
            let e = |t: f64| e_h_closed(t, mu, alpha, beta).unwrap_or(f64::NAN);
            for l in 1..=steps {
                let (a, b) = ((l - 1) as f64 * h, l as f64 * h);
                w[l] = match mode {
                    NoiseWeights::LeftPoint => e(b),
                    NoiseWeights::MomentMatched if l == 1 => {
                        let scale = mu.powf(-(2.0 * beta - 1.0) / alpha);
                        let sq = scale * lq_mass(MLParams::new(alpha, beta)?, 2.0, h * mu.powf(1.0 / alpha), 1e-12)?;
                        (sq / h).sqrt()
                    }
                    NoiseWeights::MomentMatched => {
                        let sq = gauss_legendre8(|t| e(t).powi(2), a, b);
                        e(0.5 * (a + b)).signum() * (sq / h).sqrt()
                    }
                };
            }
        }
        _ => {
            let sol = solve_e_rho(k, &Rho::kernel(hk.clone()), mu, grid)?;
            for l in 1..=steps {
                let (a, b) = ((l - 1) as f64 * h, l as f64 * h);
                w[l] = match mode {
                    NoiseWeights::LeftPoint => sol.value(l),
                    NoiseWeights::MomentMatched => {
                        let sq = if l == 1 {
                            adaptive(|t| sol.eval(t).powi(2), a, b, 1e-14, 1e-10).value
                        } else {
                            gauss_legendre8(|t| sol.eval(t).powi(2), a, b)
                        };
                        sol.eval(0.5 * (a + b)).signum() * (sq / h).sqrt()
                    }
                };
            }
        }
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("noise weights are not finite for mu = {mu}")));
    }
    Ok(w)
}

/// One path of `problem` on `grid`.
pub fn simulate_path(problem: &SveProblem, grid: &TimeGrid, path_index: u64, master_seed: u64) -> Result<PathSample> {
    Simulator::new(problem, grid)?.path(Lineage::new(master_seed, path_index, NS_PATHS))
}

/// Marginals at `record_times`; dispatches on the problem's scheme.
pub fn run_ensemble(
    problem: &SveProblem,
    grid: &TimeGrid,
    n_paths: usize,
    record_times: &[f64],
    master_seed: u64,
    workers: usize,
) -> Result<Vec<EmpiricalDistribution>> {
    match problem.scheme {
        Scheme::ExactGaussian => sample_exact_gaussian(problem, record_times, n_paths, master_seed),
        Scheme::EulerLeft => Simulator::new(problem, grid)?.ensemble(n_paths, record_times, master_seed, NS_PATHS, workers),
    }
}

/// Restart forcing for a realized path.
pub fn restart_forcing(problem: &SveProblem, path: &PathSample, tau: f64) -> Result<ForcingSpec> {
    Simulator::new(problem, &path.grid)?.restart_forcing(path, tau)
}

/// Mean `Gg(t)` and per-mode variance `σ_n² ∫_0^t e_h(s; μ_n)² ds` of the
/// Gaussian marginals of a linear additive problem.
pub fn exact_gaussian_moments(problem: &SveProblem, times: &[f64]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut checked = problem.clone();
    checked.scheme = Scheme::ExactGaussian;
    checked.validate()?;
    let (alpha, beta) = match (&problem.kernels.k, &problem.kernels.h) {
        (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => (*alpha, *beta),
        _ => unreachable!("validated"),
    };
    let slope = problem.linear_slope();
    let mu: Vec<f64> = problem.operator.eigenvalues().iter().map(|m| m - slope).collect();
    let op = if slope == 0.0 { problem.operator.clone() } else { DiagonalOperator::explicit(mu.clone())? };
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Domain("times must be finite and non-negative".into()));
    }
    let mut nodes: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied().filter(|t| *t > 0.0)).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let means: Vec<Vec<f64>> = if nodes.len() >= 2 {
        let grid = TimeGrid::from_nodes(nodes.clone())?;
        compute_gg(&op, &problem.forcing, &problem.kernels.k, &grid)?.values
    } else {
        let grid = TimeGrid::uniform(1.0, 1)?;
        compute_gg(&op, &problem.forcing, &problem.kernels.k, &grid)?.values
    };
    let sigma0: Vec<f64> = match &problem.diffusion {
        Diffusion::Additive { sigma0 } => sigma0.clone(),
        _ => vec![0.0; mu.len()],
    };
    let params = MLParams::new(alpha, beta)?;
    times
        .iter()
        .map(|&t| {
            let i = nodes.iter().position(|x| *x == t).unwrap_or(0);
            let m: Vec<f64> = means.iter().map(|g| g[i]).collect();
            let v = mu
                .iter()
                .zip(&sigma0)
                .map(|(&mu, &s)| {
                    if t == 0.0 || s == 0.0 {
                        return Ok(0.0);
                    }
                    let scale = mu.powf(-(2.0 * beta - 1.0) / alpha);
                    Ok(s * s * scale * lq_mass(params, 2.0, t * mu.powf(1.0 / alpha), 1e-12)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((m, v))
        })
        .collect()
}

/// Exact marginal draws for linear additive problems.
pub fn sample_exact_gaussian(problem: &SveProblem, times: &[f64], n_samples: usize, master_seed: u64) -> Result<Vec<EmpiricalDistribution>> {
    sample_exact_gaussian_in(problem, times, n_samples, master_seed, NS_EXACT)
}

/// As [`sample_exact_gaussian`] with an explicit stream namespace.
pub fn sample_exact_gaussian_in(
    problem: &SveProblem,
    times: &[f64],
    n_samples: usize,
    master_seed: u64,
    namespace: u8,
) -> Result<Vec<EmpiricalDistribution>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let moments = exact_gaussian_moments(problem, times)?;
    let modes = problem.modes();
    let draws: Vec<Vec<Vec<f64>>> = map_indexed(n_samples, |s| {
        let mut rng = Lineage::new(master_seed, s as u64, namespace).rng();
        moments
            .iter()
            .map(|(m, v)| (0..modes).map(|n| m[n] + v[n].sqrt() * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    });
    Ok(assemble(times, &draws, modes, master_seed, namespace))
}
