//! Scalar Volterra equations of the second kind on time grids.
//!
//! `solve_e_rho` computes `e_ρ(·; μ)`, the solution of `e + μ k * e = ρ`, by
//! product integration: the unknown is piecewise linear between nodes and the
//! kernel moments over each cell are exact (closed-form primitives near the
//! singularity, eight-point Gauss–Legendre elsewhere). When `ρ` is singular
//! at the origin the leading terms of the Neumann series are split off and
//! carried analytically, so node values stay accurate next to `t = 0`.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interpolation, TimeGrid};
use crate::kernel::Kernel;
use crate::quad::{adaptive, adaptive_breaks};
use crate::special::recip_gamma;
use serde::{Deserialize, Serialize};

/// Right-hand side `ρ` of `e + μ k * e = ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rho {
    Kernel { kernel: Kernel },
    /// `t^γ / Γ(1+γ)`, `γ ≥ 0`.
    Power { gamma: f64 },
    Grid { function: GridFunction },
}

impl Rho {
    pub fn kernel(k: Kernel) -> Self {
        Rho::Kernel { kernel: k }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Rho::Kernel { kernel } => kernel.eval(t),
            Rho::Power { gamma } => {
                if *gamma == 0.0 {
                    1.0
                } else {
                    t.powf(*gamma) * recip_gamma(1.0 + gamma)
                }
            }
            Rho::Grid { function } => function.eval(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum SingularPart {
    None,
    /// `Σ_{j<terms} (-μ)^j t^{jα+β-1}/Γ(jα+β)`.
    Fractional { alpha: f64, beta: f64, mu: f64, terms: usize },
    Kernel(Kernel),
}

impl SingularPart {
    fn eval(&self, t: f64) -> f64 {
        match self {
            SingularPart::None => 0.0,
            SingularPart::Fractional { alpha, beta, mu, terms } => {
                let mut s = 0.0;
                for j in 0..*terms {
                    let e = j as f64 * alpha + beta;
                    s += (-mu).powi(j as i32) * t.powf(e - 1.0) * recip_gamma(e);
                }
                s
            }
            SingularPart::Kernel(k) => k.eval(t),
        }
    }

    fn integral(&self, t: f64) -> f64 {
        match self {
            SingularPart::None => 0.0,
            SingularPart::Fractional { alpha, beta, mu, terms } => {
                let mut s = 0.0;
                for j in 0..*terms {
                    let e = j as f64 * alpha + beta;
                    s += (-mu).powi(j as i32) * t.powf(e) * recip_gamma(e + 1.0);
                }
                s
            }
            SingularPart::Kernel(k) => k.cumulative(t),
        }
    }
}

/// `e_ρ` on a grid: up to node `split` an analytic singular part plus a
/// piecewise-linear regular part, beyond it the plain piecewise-linear value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSolution {
    pub grid: TimeGrid,
    pub mu: f64,
    regular: Vec<f64>,
    singular: SingularPart,
    split: usize,
}

impl ResolventSolution {
    /// Node value; may be infinite at `t = 0` when `ρ` is singular.
    pub fn value(&self, i: usize) -> f64 {
        if i > self.split {
            return self.regular[i];
        }
        let t = self.grid.nodes()[i];
        self.regular[i] + self.singular.eval(t)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.value(i)).collect()
    }

    fn split_time(&self) -> f64 {
        self.grid.nodes()[self.split]
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.split_time() {
            let reg = GridFunction { grid: self.grid.clone(), values: self.regular.clone(), interpolation: Interpolation::Linear };
            reg.eval(t) + self.singular.eval(t)
        } else {
            self.to_grid_function().eval(t)
        }
    }

    /// `∫_0^{t_i} e_ρ` at every node.
    pub fn partial_integrals(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut out = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..nodes.len() {
            let h = nodes[i] - nodes[i - 1];
            if i <= self.split {
                acc += 0.5 * h * (self.regular[i - 1] + self.regular[i]);
                out.push(acc + self.singular.integral(nodes[i]));
            } else {
                if i == self.split + 1 {
                    acc += self.singular.integral(nodes[self.split]);
                }
                acc += 0.5 * h * (self.value(i - 1) + self.value(i));
                out.push(acc);
            }
        }
        out
    }

    pub fn integral(&self) -> f64 {
        *self.partial_integrals().last().unwrap()
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction { grid: self.grid.clone(), values: self.values(), interpolation: Interpolation::Linear }
    }

    /// Grid mass plus an extrapolated tail.
    pub fn mass_estimate(&self, model: TailModel) -> Result<MassEstimate> {
        let partial = self.partial_integrals();
        let grid_mass = *partial.last().unwrap();
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let big_t = nodes[n - 1];
        let tail = match model {
            TailModel::None => 0.0,
            TailModel::PowerLaw { exponent, spacing } => {
                if !(exponent < -1.0) {
                    return Err(Error::Domain(format!("power-law tail needs exponent < -1, got {exponent}")));
                }
                let exps: Vec<f64> = match spacing {
                    Some(d) if d > 0.0 => (0..3).map(|j| exponent - d * j as f64).collect(),
                    _ => vec![exponent],
                };
                let decades = if exps.len() > 1 { 0.01 } else { 0.1 };
                let idx: Vec<usize> = (1..n).filter(|&i| nodes[i] >= decades * big_t).collect();
                if idx.len() < 2 * exps.len() {
                    return Err(Error::Domain("power-law tail fit needs more nodes near the horizon".into()));
                }
                let rows: Vec<(Vec<f64>, f64)> = idx
                    .iter()
                    .map(|&i| {
                        let x = nodes[i] / big_t;
                        let w = x.powf(-exponent);
                        (exps.iter().map(|p| x.powf(*p) * w).collect(), self.value(i) * w)
                    })
                    .collect();
                let amps = least_squares(&rows)?;
                exps.iter().zip(&amps).map(|(p, a)| a * big_t / -(p + 1.0)).sum()
            }
            TailModel::Exponential => {
                let e_end = self.value(n - 1);
                let j = self.grid.nearest(0.9 * big_t).min(n - 2);
                let e_mid = self.value(j);
                if e_end <= 0.0 || e_mid <= e_end {
                    0.0
                } else {
                    let rate = (e_mid / e_end).ln() / (big_t - nodes[j]);
                    e_end / rate
                }
            }
            TailModel::InverseLog => {
                let (limit, _, _) = fit_inverse_log(nodes, &partial)?;
                limit - grid_mass
            }
        };
        Ok(MassEstimate { grid_mass, tail, total: grid_mass + tail })
    }
}

/// How to extrapolate `∫_T^∞ e_ρ` beyond the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailModel {
    None,
    /// `e_ρ(t) ≈ Σ_j A_j t^{p - j d}` with `p` and the spacing `d` known and the
    /// amplitudes fitted near the horizon. Without a spacing a single term is
    /// fitted on the last decade.
    PowerLaw {
        exponent: f64,
        #[serde(default)]
        spacing: Option<f64>,
    },
    Exponential,
    /// Partial masses `M(t) ≈ M_∞ - a/(ln t + b)`, fitted on the last decades.
    InverseLog,
}

impl TailModel {
    /// Default tail for `e_ρ` given the kernel and `ρ`.
    pub fn for_problem(k: &Kernel, rho: &Rho) -> Self {
        match k {
            Kernel::Fractional { alpha } => {
                if *alpha == 1.0 {
                    return TailModel::Exponential;
                }
                let beta = match rho {
                    Rho::Kernel { kernel: Kernel::Fractional { alpha: b } } => *b,
                    Rho::Power { gamma } => gamma + 1.0,
                    _ => return TailModel::PowerLaw { exponent: -1.0 - alpha, spacing: Some(*alpha) },
                };
                // first non-vanishing term of the Poincaré expansion
                let mut m = 1;
                while recip_gamma(beta - alpha * m as f64).abs() < 1e-14 && m < 6 {
                    m += 1;
                }
                TailModel::PowerLaw { exponent: beta - 1.0 - alpha * m as f64, spacing: Some(*alpha) }
            }
            Kernel::Log1pInverse => TailModel::InverseLog,
            Kernel::ExponentialMixture { .. } => TailModel::Exponential,
            Kernel::Tabulated { .. } => {
                if k.is_integrable() {
                    TailModel::Exponential
                } else {
                    TailModel::InverseLog
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub grid_mass: f64,
    pub tail: f64,
    pub total: f64,
}

/// Normal-equation least squares for a handful of columns, amplitudes in
/// units of the (rescaled) rows.
fn least_squares(rows: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let k = rows[0].0.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (x, y) in rows {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += x[i] * x[j];
            }
            a[i][k] += x[i] * y;
        }
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        if a[c][c].abs() < 1e-300 {
            return Err(Error::Domain("singular least-squares system".into()));
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    Ok((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Least-squares fit of `M(t) = M_∞ - a/(ln t + b)` over nodes in the last
/// four decades of the grid. Returns `(M_∞, a, b)`.
fn fit_inverse_log(nodes: &[f64], partial: &[f64]) -> Result<(f64, f64, f64)> {
    let big_t = *nodes.last().unwrap();
    let lo = (big_t.ln() - 4.0 * std::f64::consts::LN_10).max(1.0f64.ln());
    let pts: Vec<(f64, f64)> = nodes
        .iter()
        .zip(partial)
        .filter(|(t, _)| **t > 1.0 && t.ln() >= lo)
        .map(|(t, m)| (t.ln(), *m))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Domain("inverse-log tail fit needs at least five nodes beyond t = 1".into()));
    }
    let l_min = pts[0].0;
    let solve = |b: f64| -> (f64, f64, f64) {
        // M = c0 + c1 x with x = -1/(l + b)
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(l, m) in &pts {
            let x = -1.0 / (l + b);
            sx += x;
            sy += m;
            sxx += x * x;
            sxy += x * m;
        }
        let det = n * sxx - sx * sx;
        let c1 = (n * sxy - sx * sy) / det;
        let c0 = (sy - c1 * sx) / n;
        let res: f64 = pts.iter().map(|&(l, m)| (m - c0 + c1 / (l + b)).powi(2)).sum();
        (c0, c1, res)
    };
    // golden-section search over b
    let (mut a, mut c) = (-l_min + 0.05, 200.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = c - g * (c - a);
    let mut x2 = a + g * (c - a);
    let mut f1 = solve(x1).2;
    let mut f2 = solve(x2).2;
    for _ in 0..200 {
        if f1 < f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - g * (c - a);
            f1 = solve(x1).2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (c - a);
            f2 = solve(x2).2;
        }
    }
    let b = 0.5 * (a + c);
    let (m_inf, amp, _) = solve(b);
    Ok((m_inf, amp, b))
}

/// Solve `e + μ k * e = ρ` on `grid`.
pub fn solve_e_rho(k: &Kernel, rho: &Rho, mu: f64, grid: &TimeGrid) -> Result<ResolventSolution> {
    k.validate()?;
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("rate mu must be finite and non-negative, got {mu}")));
    }
    let nodes = grid.nodes();
    let (singular, forcing): (SingularPart, Vec<f64>) = match rho {
        Rho::Kernel { kernel } if kernel.is_singular() => {
            kernel.validate()?;
            match (k, kernel) {
                (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => {
                    let mut m = 1;
                    while m as f64 * alpha + beta - 1.0 < 0.0 {
                        m += 1;
                    }
                    let e = m as f64 * alpha + beta;
                    let c = (-mu).powi(m as i32) * recip_gamma(e);
                    let f = nodes.iter().map(|&t| if e == 1.0 { c } else { c * t.powf(e - 1.0) }).collect();
                    (SingularPart::Fractional { alpha: *alpha, beta: *beta, mu, terms: m }, f)
                }
                _ => {
                    let f = nodes.iter().map(|&t| -mu * convolve(k, kernel, t)).collect();
                    (SingularPart::Kernel(kernel.clone()), f)
                }
            }
        }
        Rho::Grid { function } => {
            if function.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("tabulated rho must be finite at every node".into()));
            }
            (SingularPart::None, nodes.iter().map(|&t| function.eval(t)).collect())
        }
        Rho::Power { gamma } if *gamma < 0.0 => {
            return Err(Error::Domain(format!("power forcing needs gamma >= 0, got {gamma}")));
        }
        Rho::Power { gamma } => match k {
            Kernel::Fractional { alpha } => {
                let beta = gamma + 1.0;
                let mut m = 1;
                while (m as f64) * alpha + gamma < 1.0 {
                    m += 1;
                }
                let e = m as f64 * alpha + beta;
                let c = (-mu).powi(m as i32) * recip_gamma(e);
                let f = nodes.iter().map(|&t| c * t.powf(e - 1.0)).collect();
                (SingularPart::Fractional { alpha: *alpha, beta, mu, terms: m }, f)
            }
            _ => (SingularPart::None, nodes.iter().map(|&t| rho.eval(t)).collect()),
        },
        _ => (SingularPart::None, nodes.iter().map(|&t| rho.eval(t)).collect()),
    };
    let mut forcing = forcing;
    let split = match &singular {
        SingularPart::Fractional { alpha, .. } => {
            // keep the split where the Neumann terms are still of moderate size
            let tc = (1.0 / mu.max(1e-300)).powf(1.0 / alpha).min(1.0);
            let split = nodes.iter().rposition(|&t| t <= tc).unwrap_or(0).max(1).min(nodes.len() - 1);
            let t_split = nodes[split];
            let s_split = singular.eval(t_split);
            for i in split + 1..nodes.len() {
                let ti = nodes[i];
                let h = nodes[split + 1] - t_split;
                let (m0, m1) = k.moments(ti - nodes[split + 1], ti - t_split);
                let left = m0 - m1 / h;
                forcing[i] = rho.eval(ti) - mu * (history(k, &singular, t_split, ti) + s_split * left);
            }
            split
        }
        _ => nodes.len() - 1,
    };
    let regular = product_solve(k, mu, grid, &forcing)?;
    Ok(ResolventSolution { grid: grid.clone(), mu, regular, singular, split })
}

/// `∫_0^{tc} k(t-s) S(s) ds` for `t > tc`, with `S` singular at the origin.
fn history(k: &Kernel, sp: &SingularPart, tc: f64, t: f64) -> f64 {
    let floor = 1e-14 * tc;
    let mut breaks = vec![floor];
    let mut x = 0.25 * tc;
    while x > floor {
        breaks.push(x);
        x *= 0.25;
    }
    breaks.push(0.5 * tc);
    let gap = t - tc;
    let mut q = 0.125 * tc;
    while q > 0.25 * gap {
        breaks.push(tc - q);
        q *= 0.25;
    }
    breaks.push(tc);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let body = adaptive_breaks(|s| k.eval(t - s) * sp.eval(s), &breaks, 1e-300, 1e-12, 4000).value;
    body + k.eval(t) * sp.integral(floor)
}

/// `(k * r)(t) = ∫_0^t k(t-s) r(s) ds` for kernels that may both be singular.
pub fn convolve(k: &Kernel, r: &Kernel, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    half_conv(r, k, t) + half_conv(k, r, t)
}

/// `∫_0^{t/2} f(s) g(t-s) ds` with `f` possibly singular at the origin.
fn half_conv(f: &Kernel, g: &Kernel, t: f64) -> f64 {
    let mut hi = 0.5 * t;
    let floor = 1e-13 * t;
    let mut acc = 0.0;
    while hi > floor {
        let lo = 0.25 * hi;
        acc += adaptive(|s| f.eval(s) * g.eval(t - s), lo, hi, 1e-300, 1e-13).value;
        hi = lo;
    }
    acc + g.eval(t) * f.cumulative(hi)
}

/// Product-trapezoidal solve of `y + μ k * y = f` with `y` piecewise linear.
fn product_solve(k: &Kernel, mu: f64, grid: &TimeGrid, f: &[f64]) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut y = vec![0.0; n];
    y[0] = f[0];
    if mu == 0.0 {
        return Ok(f.to_vec());
    }
    // per-lag weights on uniform grids
    let lag = grid.uniform_step().map(|h| {
        (0..n)
            .map(|d| {
                if d == 0 {
                    return (0.0, 0.0);
                }
                let (m0, m1) = k.moments((d - 1) as f64 * h, d as f64 * h);
                (m0 - m1 / h, m1 / h)
            })
            .collect::<Vec<_>>()
    });
    for i in 1..n {
        let ti = nodes[i];
        let mut acc = 0.0;
        let mut diag = 0.0;
        for j in 0..i {
            let (a, b) = match &lag {
                Some(w) => w[i - j],
                None => {
                    let h = nodes[j + 1] - nodes[j];
                    let (m0, m1) = k.moments(ti - nodes[j + 1], ti - nodes[j]);
                    (m0 - m1 / h, m1 / h)
                }
            };
            acc += a * y[j];
            if j + 1 == i {
                diag = b;
            } else {
                acc += b * y[j + 1];
            }
        }
        let denom = 1.0 + mu * diag;
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::Convergence { node: i });
        }
        y[i] = (f[i] - mu * acc) / denom;
        if !y[i].is_finite() {
            return Err(Error::Convergence { node: i });
        }
    }
    Ok(y)
}

/// Resolvent of the second kind: `r = ρ + ρ * r` (trapezoidal rule, `ρ`
/// interpolated at the needed lags).
pub fn resolvent_second_kind(rho: &GridFunction) -> Result<GridFunction> {
    let nodes = rho.nodes();
    let n = nodes.len();
    let mut r = vec![0.0; n];
    r[0] = rho.values[0];
    for i in 1..n {
        let ti = nodes[i];
        let mut acc = 0.0;
        for j in 0..i {
            let h = nodes[j + 1] - nodes[j];
            acc += 0.5 * h * rho.eval(ti - nodes[j]) * r[j];
            if j + 1 < i {
                acc += 0.5 * h * rho.eval(ti - nodes[j + 1]) * r[j + 1];
            }
        }
        let h_last = nodes[i] - nodes[i - 1];
        let denom = 1.0 - 0.5 * h_last * rho.values[0];
        if !(denom > 0.0) {
            return Err(Error::Convergence { node: i });
        }
        r[i] = (rho.values[i] + acc) / denom;
    }
    GridFunction::new(rho.grid.clone(), r, Interpolation::Linear)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaleyWienerVerdict {
    Integrable,
    Inconclusive,
    NotIntegrable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaleyWienerReport {
    pub mass: f64,
    pub band: f64,
    pub verdict: PaleyWienerVerdict,
}

/// For non-negative `ρ`, the resolvent is integrable iff `∫ρ < 1`. The grid
/// mass is Richardson-extrapolated; `band` is the error allowance.
pub fn paley_wiener_check(rho: &GridFunction, tail_mass: f64) -> Result<PaleyWienerReport> {
    if rho.values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Hypothesis("paley-wiener check requires a finite non-negative rho".into()));
    }
    let nodes = rho.nodes();
    let fine = rho.integral();
    let mut coarse = 0.0;
    let mut j = 0;
    while j + 2 < nodes.len() {
        coarse += 0.5 * (nodes[j + 2] - nodes[j]) * (rho.values[j] + rho.values[j + 2]);
        j += 2;
    }
    if j + 1 < nodes.len() {
        coarse += 0.5 * (nodes[j + 1] - nodes[j]) * (rho.values[j] + rho.values[j + 1]);
    }
    let mass = fine + (fine - coarse) / 3.0 + tail_mass;
    let band = (fine - coarse).abs() + 1e-9 + 1e-6 * tail_mass.abs();
    let verdict = if mass < 1.0 - band {
        PaleyWienerVerdict::Integrable
    } else if mass > 1.0 + band {
        PaleyWienerVerdict::NotIntegrable
    } else {
        PaleyWienerVerdict::Inconclusive
    };
    Ok(PaleyWienerReport { mass, band, verdict })
}

/// Gronwall majorant `f + μ (r * f)`.
pub fn gronwall_majorant(f: &GridFunction, r: &GridFunction, mu: f64) -> Result<GridFunction> {
    if f.grid.len() != r.grid.len() {
        return Err(Error::DimensionMismatch { expected: f.grid.len(), got: r.grid.len() });
    }
    let nodes = f.nodes();
    let out = (0..nodes.len())
        .map(|i| {
            let ti = nodes[i];
            let mut acc = 0.0;
            for j in 0..i {
                let h = nodes[j + 1] - nodes[j];
                acc += 0.5 * h * (r.eval(ti - nodes[j]) * f.values[j] + r.eval(ti - nodes[j + 1]) * f.values[j + 1]);
            }
            f.values[i] + mu * acc
        })
        .collect();
    GridFunction::new(f.grid.clone(), out, Interpolation::Linear)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Degenerate,
}

/// Numerical prerequisites for complete monotonicity of `k` on a log-spaced
/// sample of `[1e-6, 1e4]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub positive: CheckOutcome,
    pub nonincreasing: CheckOutcome,
    pub log_convex: CheckOutcome,
    pub derivative_log_convex: CheckOutcome,
    /// All four prerequisites hold and none is degenerate.
    pub applies: bool,
    pub notes: Vec<String>,
}

pub fn cm_prerequisites(k: &Kernel) -> Result<CmReport> {
    k.validate()?;
    let ts: Vec<f64> = (0..=200).map(|i| 10f64.powf(-6.0 + 10.0 * i as f64 / 200.0)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| k.eval(t)).collect();
    let ders: Vec<f64> = ts.iter().map(|&t| k.derivative(t)).collect();
    let mut notes = Vec::new();
    let usable: Vec<usize> = (0..ts.len()).filter(|&i| vals[i] > 1e-280).collect();
    let positive = if vals.iter().all(|&v| v >= 0.0) && !usable.is_empty() {
        CheckOutcome::Pass
    } else {
        CheckOutcome::Fail
    };
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nonincreasing = if ders.iter().all(|&d| d <= 1e-12 * scale) {
        CheckOutcome::Pass
    } else {
        CheckOutcome::Fail
    };
    let convex = |xs: &[f64], ys: &[f64]| -> bool {
        xs.windows(3).zip(ys.windows(3)).all(|(t, y)| {
            let s1 = (y[1] - y[0]) / (t[1] - t[0]);
            let s2 = (y[2] - y[1]) / (t[2] - t[1]);
            s2 - s1 >= -1e-7 * (s1.abs() + s2.abs()) - 1e-12
        })
    };
    let xs: Vec<f64> = usable.iter().map(|&i| ts[i]).collect();
    let ly: Vec<f64> = usable.iter().map(|&i| vals[i].ln()).collect();
    let log_convex = if convex(&xs, &ly) { CheckOutcome::Pass } else { CheckOutcome::Fail };
    let dmax = ders.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let derivative_log_convex = if dmax == 0.0 {
        notes.push("k is constant: -k' vanishes identically, the criterion is degenerate".into());
        CheckOutcome::Degenerate
    } else {
        let idx: Vec<usize> = usable.iter().copied().filter(|&i| -ders[i] > 1e-280).collect();
        if idx.len() < usable.len() {
            CheckOutcome::Fail
        } else {
            let x: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| (-ders[i]).ln()).collect();
            if convex(&x, &y) {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            }
        }
    };
    let applies = [positive, nonincreasing, log_convex, derivative_log_convex].iter().all(|c| *c == CheckOutcome::Pass);
    Ok(CmReport { positive, nonincreasing, log_convex, derivative_log_convex, applies, notes })
}

/// `∫_0^∞ |(ν * e_k)(t)|^q dt ≤ ν^q max{C^q/(1-qδ), C^{q-1}} (1 ∨ μ)^{-(1-qδ)/(1-δ)}`
/// for `q ∈ [1, 1/δ)`, where `ν` is the total mass of the convolving measure.
pub fn lq_bound_convolved(delta: f64, c_delta: f64, nu_mass: f64, mu: f64, q: f64) -> Result<f64> {
    if !(delta >= 0.0 && delta < 1.0) || !(c_delta > 0.0) || !(nu_mass >= 0.0) || !(mu > 0.0) || !(q >= 1.0) {
        return Err(Error::Domain("need delta in [0,1), c_delta > 0, nu >= 0, mu > 0, q >= 1".into()));
    }
    if q * delta >= 1.0 {
        return Err(Error::Hypothesis(format!("q = {q} must be below 1/delta = {}", 1.0 / delta)));
    }
    let lead = (c_delta.powf(q) / (1.0 - q * delta)).max(c_delta.powf(q - 1.0));
    Ok(nu_mass.powf(q) * lead * mu.max(1.0).powf(-(1.0 - q * delta) / (1.0 - delta)))
}
