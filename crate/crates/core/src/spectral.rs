//! Diagonal operators `A e_n = -μ_n e_n` and the mode-wise resolvent
//! families built on them.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interpolation, TimeGrid};
use crate::kernel::{Kernel, SingularityBound};
use crate::mlf::{c_q, e_h_closed, in_integrability_window, CqRequest};
use crate::par::map_indexed;
use crate::stats::pairwise_sum;
use crate::volterra1d::{cm_prerequisites, solve_e_rho, Rho};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;

/// How the spectrum was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spectrum {
    Explicit { eigenvalues: Vec<f64> },
    /// `μ = n_1² + … + n_d²` on `[0, π]^d`, `1 ≤ n_i ≤ modes_per_axis`.
    DirichletLaplacian { dim: usize, modes_per_axis: usize },
}

/// A truncated nondecreasing positive spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Spectrum", into = "Spectrum")]
pub struct DiagonalOperator {
    spectrum: Spectrum,
    mu: Vec<f64>,
    indices: Vec<Vec<usize>>,
}

impl TryFrom<Spectrum> for DiagonalOperator {
    type Error = Error;
    fn try_from(s: Spectrum) -> Result<Self> {
        match s {
            Spectrum::Explicit { eigenvalues } => Self::explicit(eigenvalues),
            Spectrum::DirichletLaplacian { dim, modes_per_axis } => Self::dirichlet_laplacian(dim, modes_per_axis),
        }
    }
}

impl From<DiagonalOperator> for Spectrum {
    fn from(op: DiagonalOperator) -> Self {
        op.spectrum
    }
}

impl DiagonalOperator {
    pub fn explicit(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Domain("spectrum must contain at least one eigenvalue".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::Domain(format!("eigenvalues must be positive and finite, got {bad}")));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { spectrum: Spectrum::Explicit { eigenvalues: eigenvalues.clone() }, mu: eigenvalues, indices: Vec::new() })
    }

    pub fn dirichlet_laplacian(dim: usize, modes_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if modes_per_axis == 0 {
            return Err(Error::Domain("need at least one mode per axis".into()));
        }
        let total = modes_per_axis.pow(dim as u32);
        let mut idx: Vec<Vec<usize>> = (0..total)
            .map(|mut c| {
                let mut v = vec![0; dim];
                for slot in v.iter_mut().rev() {
                    *slot = c % modes_per_axis + 1;
                    c /= modes_per_axis;
                }
                v
            })
            .collect();
        // lexicographic order is the enumeration order; the sort is stable
        idx.sort_by_key(|n| n.iter().map(|&x| x * x).sum::<usize>());
        let mu = idx.iter().map(|n| n.iter().map(|&x| (x * x) as f64).sum()).collect();
        Ok(Self { spectrum: Spectrum::DirichletLaplacian { dim, modes_per_axis }, mu, indices: idx })
    }

    /// One eigenvalue per row, optional header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut mu = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = rec.get(0).unwrap_or("");
            match field.parse::<f64>() {
                Ok(v) => mu.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => return Err(Error::Parse(format!("row {}: cannot read eigenvalue {field:?}", i + 1))),
            }
        }
        Self::explicit(mu)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu\n");
        for m in &self.mu {
            s.push_str(&format!("{m}\n"));
        }
        s
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu1(&self) -> f64 {
        self.mu[0]
    }

    /// Multi-indices `(n_1, …, n_d)` for the Laplacian, empty otherwise.
    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// `‖i‖_{L(H^δ, H)} = μ_1^{-δ}`.
    pub fn inclusion_norm(&self, delta: f64) -> f64 {
        self.mu1().powf(-delta)
    }

    /// `‖x‖_λ = (Σ μ_n^{2λ} x_n²)^{1/2}`.
    pub fn norm(&self, x: &[f64], lambda: f64) -> Result<f64> {
        self.check_len(x.len())?;
        let terms: Vec<f64> = self.mu.iter().zip(x).map(|(m, v)| m.powf(2.0 * lambda) * v * v).collect();
        Ok(pairwise_sum(&terms).sqrt())
    }

    pub fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got });
        }
        Ok(())
    }

    /// `Σ_n μ_n^p` over the retained modes with a tail bound for the
    /// remaining Laplacian modes (`None` for explicit lists).
    pub fn power_sum(&self, p: f64) -> Result<(f64, Option<f64>)> {
        let terms: Vec<f64> = self.mu.iter().map(|m| m.powf(p)).collect();
        let sum = pairwise_sum(&terms);
        let tail = match self.spectrum {
            Spectrum::Explicit { .. } => None,
            Spectrum::DirichletLaplacian { dim, modes_per_axis } => {
                let d = dim as f64;
                if 2.0 * p + d >= 0.0 {
                    return Err(Error::Divergent { exponent: p, critical: -d / 2.0 });
                }
                // every dropped mode has some n_i > M, so its unit cell lies
                // outside the ball of radius M
                let m = modes_per_axis as f64;
                Some(orthant_sphere(dim) * m.powf(2.0 * p + d) / -(2.0 * p + d))
            }
        };
        Ok((sum, tail))
    }
}

/// Surface measure of the unit sphere within the positive orthant.
fn orthant_sphere(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => PI / 2.0,
        _ => PI / 2.0,
    }
}

/// The two kernels of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPair {
    pub k: Kernel,
    pub h: Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRole {
    K,
    H,
}

impl KernelPair {
    pub fn fractional(alpha: f64, beta: f64) -> Self {
        Self { k: Kernel::Fractional { alpha }, h: Kernel::Fractional { alpha: beta } }
    }

    pub fn get(&self, role: KernelRole) -> &Kernel {
        match role {
            KernelRole::K => &self.k,
            KernelRole::H => &self.h,
        }
    }
}

/// `e_ρ(t; μ_n)` for every mode.
pub fn resolvent_values(op: &DiagonalOperator, pair: &KernelPair, role: KernelRole, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and non-negative, got {t}")));
    }
    let rho = pair.get(role);
    match (&pair.k, rho) {
        (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => {
            map_indexed(op.len(), |i| e_h_closed(t, op.mu[i], *alpha, *beta)).into_iter().collect()
        }
        _ => {
            if t == 0.0 {
                return Ok(vec![rho.eval(0.0); op.len()]);
            }
            let grid = TimeGrid::graded(t, 400, 0.5)?;
            let r = Rho::kernel(rho.clone());
            map_indexed(op.len(), |i| solve_e_rho(&pair.k, &r, op.mu[i], &grid).map(|s| s.value(grid.len() - 1)))
                .into_iter()
                .collect()
        }
    }
}

/// `E_ρ(t) x`, mode by mode.
pub fn apply_resolvent(op: &DiagonalOperator, pair: &KernelPair, role: KernelRole, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    op.check_len(x.len())?;
    let e = resolvent_values(op, pair, role, t)?;
    Ok(e.iter().zip(x).map(|(a, b)| a * b).collect())
}

/// Which norm of `E_h` is integrated in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormCase {
    /// `∫‖E_h‖_{L(H^λ,H^ρ)}^q`, bounded by the mode sum.
    Operator,
    /// `∫‖E_h‖_{L_2(H^λ,H^ρ)}^2`, an identity.
    HilbertSchmidt,
    /// `∫‖E_h‖_{L(H^λ,H^ρ)}^q` for `ρ ≤ λ` via the first mode.
    FirstMode,
}

/// A truncated series value with a bound on the dropped modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub value: f64,
    pub tail_bound: Option<f64>,
    /// Exponent `p` of the mode sum `Σ μ_n^p`.
    pub exponent: f64,
    /// Prefactor multiplying the mode sum.
    pub constant: f64,
}

impl SeriesBound {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound.unwrap_or(0.0)
    }
}

/// Time-integrated norms of `E_h` for fractional `k = t^{α-1}/Γ(α)`,
/// `h = t^{β-1}/Γ(β)`.
pub fn operator_norm_series(
    op: &DiagonalOperator,
    alpha: f64,
    beta: f64,
    q: f64,
    lambda: f64,
    rho: f64,
    case: NormCase,
) -> Result<SeriesBound> {
    let q = if case == NormCase::HilbertSchmidt { 2.0 } else { q };
    match case {
        NormCase::Operator => {
            if !in_integrability_window(alpha, beta, q) {
                return Err(Error::Hypothesis(format!(
                    "need 1 - 1/q < beta < alpha + 1 - 1/q (or beta = alpha with 1 < alpha + 1/q); got alpha = {alpha}, beta = {beta}, q = {q}"
                )));
            }
        }
        NormCase::HilbertSchmidt => {
            if !(beta > 0.5 && beta <= alpha + 0.5) {
                return Err(Error::Hypothesis(format!("need 1/2 < beta <= alpha + 1/2; got alpha = {alpha}, beta = {beta}")));
            }
        }
        NormCase::FirstMode => {
            if !(alpha > 0.0 && alpha <= 1.0 && beta >= alpha && 1.0 < beta + 1.0 / q) {
                return Err(Error::Hypothesis(format!(
                    "need alpha in (0,1], beta >= alpha, 1 < beta + 1/q; got alpha = {alpha}, beta = {beta}, q = {q}"
                )));
            }
            if rho > lambda {
                return Err(Error::Hypothesis(format!("first-mode identity needs rho <= lambda, got rho = {rho}, lambda = {lambda}")));
            }
        }
    }
    let cq = c_q(CqRequest::new(alpha, beta, q)?)?;
    let exponent = -q * (lambda + beta / alpha) + q * rho + (q - 1.0) / alpha;
    if case == NormCase::FirstMode {
        return Ok(SeriesBound { value: cq * op.mu1().powf(exponent), tail_bound: Some(0.0), exponent, constant: cq });
    }
    let (sum, tail) = op.power_sum(exponent)?;
    Ok(SeriesBound { value: cq * sum, tail_bound: tail.map(|t| cq * t), exponent, constant: cq })
}

/// What the completely monotone bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CmTarget {
    /// `∫‖E_h‖_{L(H)}^q`, carried by the first mode.
    OperatorH,
    /// `∫‖E_h‖_{L(H^λ,H^ρ)}^q`, bounded by a mode sum.
    Series { lambda: f64, rho: f64 },
}

/// Bounds on `∫‖E_h‖^q` for completely monotone type `k` and
/// `h = k * ν` with total mass `nu_mass` (`ν = δ_0` gives `h = k`).
/// For `q > 1` the singularity bound `k ≤ C_δ t^{-δ}` is needed.
pub fn operator_norm_series_cm(
    op: &DiagonalOperator,
    k: &Kernel,
    q: f64,
    target: CmTarget,
    nu_mass: f64,
    singularity: Option<SingularityBound>,
) -> Result<SeriesBound> {
    let report = cm_prerequisites(k)?;
    if !report.applies {
        return Err(Error::Hypothesis(format!("kernel fails the monotonicity prerequisites: {}", report.notes.join("; "))));
    }
    if !(nu_mass >= 0.0) || !nu_mass.is_finite() {
        return Err(Error::Domain(format!("measure mass must be finite and non-negative, got {nu_mass}")));
    }
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("need q >= 1, got {q}")));
    }
    if q == 1.0 {
        return Ok(match target {
            CmTarget::OperatorH => {
                SeriesBound { value: nu_mass / op.mu1(), tail_bound: Some(0.0), exponent: -1.0, constant: nu_mass }
            }
            CmTarget::Series { lambda, rho } => {
                let p = -(1.0 + lambda) + rho;
                let (sum, tail) = op.power_sum(p)?;
                SeriesBound { value: nu_mass * sum, tail_bound: tail.map(|t| nu_mass * t), exponent: p, constant: nu_mass }
            }
        });
    }
    let sb = singularity.ok_or_else(|| Error::Hypothesis("q > 1 needs a bound k(t) <= C t^-delta on (0,1]".into()))?;
    let (delta, c) = (sb.delta, sb.c_delta);
    if !(delta > 0.0 && delta < 1.0) || !(c > 0.0) {
        return Err(Error::Hypothesis(format!("need delta in (0,1) and C > 0, got delta = {delta}, C = {c}")));
    }
    if q * delta >= 1.0 {
        return Err(Error::Hypothesis(format!("need q < 1/delta = {}, got q = {q}", 1.0 / delta)));
    }
    if let Some(t) = (0..=400).map(|i| 10f64.powf(-12.0 * i as f64 / 400.0)).find(|&t| k.eval(t) > c * t.powf(-delta) * (1.0 + 1e-12)) {
        return Err(Error::Hypothesis(format!("k({t:e}) exceeds the declared bound {c} t^-{delta}")));
    }
    let lead = nu_mass.powf(q) * (c.powf(q) / (1.0 - q * delta)).max(c.powf(q - 1.0));
    let decay = -(1.0 - q * delta) / (1.0 - delta);
    Ok(match target {
        CmTarget::OperatorH => {
            SeriesBound { value: lead * op.mu1().max(1.0).powf(decay), tail_bound: Some(0.0), exponent: decay, constant: lead }
        }
        CmTarget::Series { lambda, rho } => {
            let p = q * (rho - lambda) + decay;
            let terms: Vec<f64> = op.mu.iter().map(|&m| m.powf(q * (rho - lambda)) * m.max(1.0).powf(decay)).collect();
            let (_, tail) = op.power_sum(p)?;
            SeriesBound { value: lead * pairwise_sum(&terms), tail_bound: tail.map(|t| lead * t), exponent: p, constant: lead }
        }
    })
}

/// Per-mode scalar functions of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSource {
    Constant { values: Vec<f64> },
    /// Tabulated per mode with a declared limit at infinity.
    Tabulated { modes: Vec<GridFunction>, limit: Vec<f64> },
}

impl ModeSource {
    fn len(&self) -> usize {
        match self {
            ModeSource::Constant { values } => values.len(),
            ModeSource::Tabulated { modes, .. } => modes.len(),
        }
    }

    fn limit(&self) -> &[f64] {
        match self {
            ModeSource::Constant { values } => values,
            ModeSource::Tabulated { limit, .. } => limit,
        }
    }
}

/// The deterministic forcing `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    /// `g(t) = t^γ/Γ(1+γ) x`.
    Power { gamma: f64, state: Vec<f64> },
    /// `g = c * g_0` for a kernel `c`.
    KernelConvolved { kernel: Kernel, g0: ModeSource },
    /// `g` tabulated per mode; `Gg` is solved for.
    Tabulated { modes: Vec<GridFunction> },
    /// `Gg` itself tabulated per mode, with an optional limit.
    Resolved { modes: Vec<GridFunction>, limit: Option<Vec<f64>> },
}

impl ForcingSpec {
    pub fn validate(&self, op: &DiagonalOperator, k: &Kernel) -> Result<()> {
        match self {
            ForcingSpec::Power { gamma, state } => {
                op.check_len(state.len())?;
                if !(*gamma >= 0.0) {
                    return Err(Error::Domain(format!("power forcing needs gamma >= 0, got {gamma}")));
                }
                if let Kernel::Fractional { alpha } = k {
                    if *gamma > *alpha {
                        return Err(Error::Domain(format!("power forcing needs 0 <= gamma <= alpha = {alpha}, got {gamma}")));
                    }
                }
                Ok(())
            }
            ForcingSpec::KernelConvolved { kernel, g0 } => {
                kernel.validate()?;
                op.check_len(g0.len())?;
                if let ModeSource::Tabulated { limit, .. } = g0 {
                    op.check_len(limit.len())?;
                }
                Ok(())
            }
            ForcingSpec::Tabulated { modes } => op.check_len(modes.len()),
            ForcingSpec::Resolved { modes, limit } => {
                op.check_len(modes.len())?;
                if let Some(l) = limit {
                    op.check_len(l.len())?;
                }
                Ok(())
            }
        }
    }
}

/// Mode-vector valued function on a common grid; `values[n][i]` is mode `n`
/// at node `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
}

impl ModeTrajectory {
    pub fn modes(&self) -> usize {
        self.values.len()
    }

    pub fn mode(&self, n: usize) -> GridFunction {
        GridFunction { grid: self.grid.clone(), values: self.values[n].clone(), interpolation: Interpolation::Linear }
    }

    /// Mode vector at node `i`.
    pub fn at(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    /// Mode vector at time `t` (linear interpolation).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        (0..self.modes()).map(|n| self.mode(n).eval(t)).collect()
    }

    pub fn last(&self) -> Vec<f64> {
        self.at(self.grid.len() - 1)
    }
}

/// `Gg` on `grid`, mode by mode: `Gg_n = e_g(·; μ_n)`.
pub fn compute_gg(op: &DiagonalOperator, forcing: &ForcingSpec, k: &Kernel, grid: &TimeGrid) -> Result<ModeTrajectory> {
    k.validate()?;
    forcing.validate(op, k)?;
    let nodes = grid.nodes();
    let values: Result<Vec<Vec<f64>>> = match forcing {
        ForcingSpec::Power { gamma, state } => map_indexed(op.len(), |n| {
            let mu = op.mu[n];
            let e: Vec<f64> = match k {
                Kernel::Fractional { alpha } => {
                    nodes.iter().map(|&t| e_h_closed(t, mu, *alpha, gamma + 1.0)).collect::<Result<_>>()?
                }
                _ => solve_e_rho(k, &Rho::Power { gamma: *gamma }, mu, grid)?.values(),
            };
            Ok(e.into_iter().map(|v| v * state[n]).collect())
        })
        .into_iter()
        .collect(),
        ForcingSpec::KernelConvolved { kernel, g0 } => map_indexed(op.len(), |n| {
            let mu = op.mu[n];
            // ∫_0^t e_c(s; μ) ds at the nodes
            let cum: Vec<f64> = match (k, kernel) {
                (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: c }) => {
                    nodes.iter().map(|&t| e_h_closed(t, mu, *alpha, c + 1.0)).collect::<Result<_>>()?
                }
                _ => solve_e_rho(k, &Rho::kernel(kernel.clone()), mu, grid)?.partial_integrals(),
            };
            Ok(match g0 {
                ModeSource::Constant { values } => cum.iter().map(|c| c * values[n]).collect(),
                ModeSource::Tabulated { modes, .. } => {
                    let f = &modes[n];
                    (0..nodes.len())
                        .map(|i| {
                            let ti = nodes[i];
                            let terms: Vec<f64> = (0..i)
                                .map(|j| (cum[j + 1] - cum[j]) * f.eval(ti - 0.5 * (nodes[j] + nodes[j + 1])))
                                .collect();
                            pairwise_sum(&terms)
                        })
                        .collect()
                }
            })
        })
        .into_iter()
        .collect(),
        ForcingSpec::Tabulated { modes } => map_indexed(op.len(), |n| {
            let rho = Rho::Grid { function: modes[n].clone() };
            Ok(solve_e_rho(k, &rho, op.mu[n], grid)?.values())
        })
        .into_iter()
        .collect(),
        ForcingSpec::Resolved { modes, .. } => Ok(modes.iter().map(|f| nodes.iter().map(|&t| f.eval(t)).collect()).collect()),
    };
    Ok(ModeTrajectory { grid: grid.clone(), values: values? })
}

/// `lim_{t→∞} Gg(t)` where the propositions supply it.
pub fn gg_limit(op: &DiagonalOperator, forcing: &ForcingSpec, k: &Kernel) -> Result<Vec<f64>> {
    forcing.validate(op, k)?;
    match forcing {
        ForcingSpec::Power { gamma, state } => match k {
            Kernel::Fractional { alpha } => {
                if *gamma == 0.0 {
                    Ok(e1_infinity(op, k).iter().zip(state).map(|(e, x)| e * x).collect())
                } else if gamma < alpha {
                    Ok(vec![0.0; op.len()])
                } else {
                    Ok(state.iter().zip(&op.mu).map(|(x, m)| x / m).collect())
                }
            }
            _ if *gamma == 0.0 => Ok(e1_infinity(op, k).iter().zip(state).map(|(e, x)| e * x).collect()),
            _ => Err(Error::Hypothesis(format!(
                "no limit statement for power forcing with gamma = {gamma} and a non-fractional kernel"
            ))),
        },
        ForcingSpec::KernelConvolved { kernel, g0 } => {
            let lim = g0.limit();
            if let ModeSource::Tabulated { modes, limit } = g0 {
                for (f, l) in modes.iter().zip(limit) {
                    if f.values.iter().any(|v| !v.is_finite()) || !l.is_finite() {
                        return Err(Error::Hypothesis("g0 must be bounded with a finite declared limit".into()));
                    }
                }
            }
            match (k, kernel) {
                (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: c }) if c < alpha => Ok(vec![0.0; op.len()]),
                (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: c }) if c > alpha => Err(Error::Hypothesis(format!(
                    "convolving index {c} exceeds alpha = {alpha}; no limit statement"
                ))),
                _ if kernel == k => {
                    let report = cm_prerequisites(k)?;
                    if !report.applies && !matches!(k, Kernel::Fractional { .. }) {
                        return Err(Error::Hypothesis(format!("kernel fails the monotonicity prerequisites: {}", report.notes.join("; "))));
                    }
                    let inv_mass = 1.0 / k.total_mass();
                    Ok(lim.iter().zip(&op.mu).map(|(l, m)| l / (inv_mass + m)).collect())
                }
                _ => Err(Error::Hypothesis("convolving kernel must equal k (or be fractional of index <= alpha)".into())),
            }
        }
        ForcingSpec::Tabulated { .. } => Err(Error::Hypothesis("no limit statement for tabulated g".into())),
        ForcingSpec::Resolved { limit, .. } => limit.clone().ok_or_else(|| Error::Hypothesis("resolved forcing carries no declared limit".into())),
    }
}

/// `lim_{t→∞} e_1(t; μ_n) = 1/(1 + k̂(0) μ_n)`, zero when `k ∉ L¹`.
pub fn e1_infinity(op: &DiagonalOperator, k: &Kernel) -> Vec<f64> {
    let mass = k.total_mass();
    op.mu.iter().map(|m| if mass.is_finite() { 1.0 / (1.0 + mass * m) } else { 0.0 }).collect()
}
