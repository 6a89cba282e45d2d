//! Scalar kernels `k: (0, ∞) → [0, ∞)` with their primitives.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre8;
use crate::special::{gamma, recip_gamma};
use serde::{Deserialize, Serialize};
use std::io::Read;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// `t^{α-1}/Γ(α)`.
    Fractional { alpha: f64 },
    /// `log(1 + 1/t)`.
    Log1pInverse,
    /// `Σ θ_i e^{-λ_i t}` with `(θ_i, λ_i)` pairs.
    ExponentialMixture { components: Vec<(f64, f64)> },
    /// Node values joined log-linearly; below the first node `k` follows
    /// `k(t_1)(t/t_1)^{-δ}`, beyond the last node the last exponential rate
    /// continues (capped at zero growth).
    Tabulated { times: Vec<f64>, values: Vec<f64>, delta: f64, c_delta: f64 },
}

/// Bound `k(t) ≤ C_δ t^{-δ}` on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityBound {
    pub delta: f64,
    pub c_delta: f64,
}

impl Kernel {
    pub fn fractional(alpha: f64) -> Result<Self> {
        let k = Kernel::Fractional { alpha };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Fractional { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::Domain(format!("fractional order must lie in (0, 2), got {alpha}")));
                }
            }
            Kernel::Log1pInverse => {}
            Kernel::ExponentialMixture { components } => {
                if components.is_empty() {
                    return Err(Error::Domain("exponential mixture needs at least one component".into()));
                }
                if components.iter().any(|&(w, r)| !(w >= 0.0) || !(r >= 0.0) || !w.is_finite() || !r.is_finite()) {
                    return Err(Error::Domain("mixture weights and rates must be finite and non-negative".into()));
                }
            }
            Kernel::Tabulated { times, values, delta, c_delta } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::Domain("tabulated kernel needs matching time/value columns of length >= 2".into()));
                }
                if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Domain("tabulated times must be positive and strictly increasing".into()));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Domain("tabulated values must be positive and finite".into()));
                }
                if !(*delta >= 0.0 && *delta < 1.0) || !(*c_delta > 0.0) {
                    return Err(Error::Domain("tabulated kernel needs delta in [0, 1) and c_delta > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Two-column CSV `time,value`; a header row is optional.
    pub fn tabulated_from_csv<R: Read>(reader: R, delta: f64, c_delta: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 columns, found {}", i + 1, rec.len())));
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) => {
                    times.push(v[0]);
                    values.push(v[1]);
                }
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
            }
        }
        let k = Kernel::Tabulated { times, values, delta, c_delta };
        k.validate()?;
        Ok(k)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Fractional { alpha } => {
                if t <= 0.0 {
                    return if *alpha < 1.0 { f64::INFINITY } else if *alpha == 1.0 { 1.0 } else { 0.0 };
                }
                t.powf(alpha - 1.0) * recip_gamma(*alpha)
            }
            Kernel::Log1pInverse => {
                if t <= 0.0 {
                    f64::INFINITY
                } else if t < 1.0 {
                    t.ln_1p() - t.ln()
                } else {
                    (1.0 / t).ln_1p()
                }
            }
            Kernel::ExponentialMixture { components } => components.iter().map(|&(w, r)| w * (-r * t).exp()).sum(),
            Kernel::Tabulated { times, values, delta, .. } => {
                if t <= 0.0 {
                    return if *delta > 0.0 { f64::INFINITY } else { values[0] };
                }
                if t <= times[0] {
                    return values[0] * (t / times[0]).powf(-delta);
                }
                let (j, b) = tab_segment(times, values, t);
                values[j] * (b * (t - times[j])).exp()
            }
        }
    }

    /// `k'(t)` for `t > 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Kernel::Fractional { alpha } => (alpha - 1.0) * t.powf(alpha - 2.0) * recip_gamma(*alpha),
            Kernel::Log1pInverse => -1.0 / (t * (1.0 + t)),
            Kernel::ExponentialMixture { components } => {
                components.iter().map(|&(w, r)| -w * r * (-r * t).exp()).sum()
            }
            Kernel::Tabulated { times, values, delta, .. } => {
                if t <= times[0] {
                    return -delta / t * self.eval(t);
                }
                let (_, b) = tab_segment(times, values, t);
                b * self.eval(t)
            }
        }
    }

    /// `K_1(t) = ∫_0^t k`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Kernel::Fractional { alpha } => t.powf(*alpha) * recip_gamma(alpha + 1.0),
            Kernel::Log1pInverse => (1.0 + t) * t.ln_1p() - t * t.ln(),
            Kernel::ExponentialMixture { components } => components
                .iter()
                .map(|&(w, r)| if r * t < 1e-8 { w * t * (1.0 - 0.5 * r * t) } else { -w * (-r * t).exp_m1() / r })
                .sum(),
            Kernel::Tabulated { times, values, delta, .. } => {
                let head = |s: f64| values[0] * times[0].powf(*delta) * s.powf(1.0 - delta) / (1.0 - delta);
                if t <= times[0] {
                    return head(t);
                }
                let mut acc = head(times[0]);
                let n = times.len();
                for j in 0..n {
                    let a = times[j];
                    if t <= a {
                        break;
                    }
                    let b_end = if j + 1 < n { times[j + 1].min(t) } else { t };
                    let rate = if j + 1 < n {
                        (values[j + 1] / values[j]).ln() / (times[j + 1] - times[j])
                    } else {
                        tail_rate(times, values)
                    };
                    let h = b_end - a;
                    acc += if (rate * h).abs() < 1e-10 { values[j] * h } else { values[j] * (rate * h).exp_m1() / rate };
                }
                acc
            }
        }
    }

    /// `K_2(t) = ∫_0^t K_1 = ∫_0^t (t - s) k(s) ds`.
    pub fn cumulative2(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Kernel::Fractional { alpha } => t.powf(alpha + 1.0) * recip_gamma(alpha + 2.0),
            Kernel::Log1pInverse => {
                if t < 1e-3 {
                    t * t * (0.75 - 0.5 * t.ln()) + t.powi(3) / 6.0 - t.powi(4) / 24.0
                } else {
                    0.5 * (t + 1.0).powi(2) * t.ln_1p() - 0.5 * t * t * t.ln() - 0.5 * t
                }
            }
            Kernel::ExponentialMixture { components } => components
                .iter()
                .map(|&(w, r)| {
                    let x = r * t;
                    if x < 1e-3 {
                        w * t * t * (0.5 - x / 6.0 + x * x / 24.0)
                    } else {
                        w * (x + (-x).exp_m1()) / (r * r)
                    }
                })
                .sum(),
            Kernel::Tabulated { times, .. } => {
                // pieces: dyadic towards the origin, then between nodes
                let first = times[0].min(t);
                let mut acc = 0.0;
                let mut hi = first;
                while hi > 1e-14 * first {
                    let lo = 0.5 * hi;
                    acc += gauss_legendre8(|s| self.cumulative(s), lo, hi);
                    hi = lo;
                }
                let mut a = first;
                for &b in times.iter().skip(1).chain(std::iter::once(&t)) {
                    let b = b.min(t);
                    if b > a {
                        acc += gauss_legendre8(|s| self.cumulative(s), a, b);
                        a = b;
                    }
                }
                acc
            }
        }
    }

    /// `(∫_lo^hi k(u) du, ∫_lo^hi k(u)(hi - u) du)` for `0 ≤ lo < hi`.
    pub fn moments(&self, lo: f64, hi: f64) -> (f64, f64) {
        let h = hi - lo;
        if lo >= h {
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            let c = 0.5 * (lo + hi);
            for i in 0..4 {
                for sgn in [-1.0, 1.0] {
                    let u = c + sgn * 0.5 * h * crate::quad::GL8_X[i];
                    let w = 0.5 * h * crate::quad::GL8_W[i] * self.eval(u);
                    m0 += w;
                    m1 += w * (hi - u);
                }
            }
            return (m0, m1);
        }
        let k1lo = self.cumulative(lo);
        let m0 = self.cumulative(hi) - k1lo;
        let m1 = match self {
            Kernel::Tabulated { .. } => gauss_legendre8(|u| self.cumulative(u) - k1lo, lo, hi),
            _ => self.cumulative2(hi) - self.cumulative2(lo) - h * k1lo,
        };
        (m0, m1)
    }

    /// `∫_0^∞ k`, possibly infinite.
    pub fn total_mass(&self) -> f64 {
        match self {
            Kernel::Fractional { .. } | Kernel::Log1pInverse => f64::INFINITY,
            Kernel::ExponentialMixture { components } => components
                .iter()
                .map(|&(w, r)| if w == 0.0 { 0.0 } else if r == 0.0 { f64::INFINITY } else { w / r })
                .sum(),
            Kernel::Tabulated { times, values, .. } => {
                if tail_rate(times, values) < 0.0 {
                    let tn = *times.last().unwrap();
                    self.cumulative(tn) + values.last().unwrap() / -tail_rate(times, values)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.total_mass().is_finite()
    }

    /// Whether the kernel is singular at the origin.
    pub fn is_singular(&self) -> bool {
        self.eval(0.0).is_infinite()
    }

    /// Declared complete monotonicity (not a numerical check).
    pub fn declared_completely_monotone(&self) -> bool {
        match self {
            Kernel::Fractional { alpha } => *alpha <= 1.0,
            Kernel::Log1pInverse | Kernel::ExponentialMixture { .. } => true,
            Kernel::Tabulated { .. } => false,
        }
    }

    /// `k(t) ≤ C_δ t^{-δ}` on `(0, 1]`. For the logarithmic kernel any
    /// `δ ∈ (0, 1)` works with `C_δ = 1/δ`; `delta_hint` selects it.
    pub fn singularity_bound(&self, delta_hint: Option<f64>) -> SingularityBound {
        match self {
            Kernel::Fractional { alpha } => {
                if *alpha < 1.0 {
                    SingularityBound { delta: 1.0 - alpha, c_delta: 1.0 / gamma(*alpha) }
                } else {
                    SingularityBound { delta: 0.0, c_delta: 1.0 / gamma(*alpha) }
                }
            }
            Kernel::Log1pInverse => {
                let d = delta_hint.unwrap_or(0.25);
                SingularityBound { delta: d, c_delta: 1.0 / d }
            }
            Kernel::ExponentialMixture { components } => {
                SingularityBound { delta: 0.0, c_delta: components.iter().map(|c| c.0).sum() }
            }
            Kernel::Tabulated { delta, c_delta, .. } => SingularityBound { delta: *delta, c_delta: *c_delta },
        }
    }
}

fn tab_segment(times: &[f64], values: &[f64], t: f64) -> (usize, f64) {
    let n = times.len();
    if t >= times[n - 1] {
        return (n - 1, tail_rate(times, values));
    }
    let j = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(j) => j,
        Err(j) => j - 1,
    };
    (j, (values[j + 1] / values[j]).ln() / (times[j + 1] - times[j]))
}

fn tail_rate(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    ((values[n - 1] / values[n - 2]).ln() / (times[n - 1] - times[n - 2])).min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::tanh_sinh;

    fn check_primitives(k: &Kernel, t: f64) {
        // piecewise over the tabulation nodes so kinks sit on breakpoints
        let mut br = vec![0.0];
        if let Kernel::Tabulated { times, .. } = k {
            br.extend(times.iter().copied().filter(|&x| x < t));
        }
        br.push(t);
        let mut k1 = 0.0;
        let mut k2 = 0.0;
        for w in br.windows(2) {
            k1 += tanh_sinh(|u, _, _| k.eval(u), w[0], w[1], 1e-13).value;
            k2 += tanh_sinh(|u, _, db| (t - w[1] + db) * k.eval(u), w[0], w[1], 1e-13).value;
        }
        assert!((k.cumulative(t) - k1).abs() < 1e-9 * k1.abs().max(1.0), "{k:?} K1({t})");
        assert!((k.cumulative2(t) - k2).abs() < 1e-9 * k2.abs().max(1.0), "{k:?} K2({t})");
    }

    #[test]
    fn primitives_match_quadrature() {
        let ks = [
            Kernel::Fractional { alpha: 0.4 },
            Kernel::Fractional { alpha: 1.5 },
            Kernel::Log1pInverse,
            Kernel::ExponentialMixture { components: vec![(1.0, 2.0), (0.5, 0.1)] },
            Kernel::Tabulated { times: vec![0.5, 1.0, 2.0], values: vec![2.0, 1.0, 0.7], delta: 0.3, c_delta: 2.0 },
        ];
        for k in &ks {
            for &t in &[1e-4, 0.3, 0.75, 3.0] {
                check_primitives(k, t);
            }
        }
    }

    #[test]
    fn csv_ingest_with_and_without_header() {
        let a = Kernel::tabulated_from_csv("time,value\n0.1,3\n1,1\n".as_bytes(), 0.5, 1.0).unwrap();
        let b = Kernel::tabulated_from_csv("0.1,3\n1,1\n".as_bytes(), 0.5, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(Kernel::tabulated_from_csv("0.1,3\n0.05,1\n".as_bytes(), 0.5, 1.0).is_err());
        assert!(Kernel::tabulated_from_csv("0.1,3,4\n".as_bytes(), 0.5, 1.0).is_err());
    }

    #[test]
    fn log_kernel_moments_near_origin() {
        let k = Kernel::Log1pInverse;
        let (m0, m1) = k.moments(0.0, 1e-3);
        let q0 = tanh_sinh(|u, _, _| k.eval(u), 0.0, 1e-3, 1e-14).value;
        let q1 = tanh_sinh(|u, _, _| k.eval(u) * (1e-3 - u), 0.0, 1e-3, 1e-14).value;
        assert!((m0 - q0).abs() < 1e-14 && (m1 - q1).abs() < 1e-16, "{m0} {q0} {m1} {q1}");
    }
}
