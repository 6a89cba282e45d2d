//! The demo's operations as plain Rust, callable natively.

use serde::Serialize;
use svelab::conditions::{check_1d_theorem, CoefficientConstants, ConditionReport};
use svelab::mlf::{c_2_plancherel, c_q, in_integrability_window, mittag_leffler_closed, CqRequest};

/// `E_{α,β}(-x)` on `n + 1` equally spaced points of `[0, x_max]`.
pub fn ml_curve(alpha: f64, beta: f64, x_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(x_max > 0.0 && x_max.is_finite()) || n == 0 || n > 100_000 {
        return Err("need x_max > 0 and 1 <= n <= 100000".into());
    }
    (0..=n)
        .map(|i| mittag_leffler_closed(alpha, beta, -x_max * i as f64 / n as f64).map_err(|e| e.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqSummary {
    pub alpha: f64,
    pub beta: f64,
    /// `None` outside the integrability window.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Frequency-domain value of `c_2`.
    pub c2_frequency: Option<f64>,
}

fn cq(alpha: f64, beta: f64, q: f64) -> Result<Option<f64>, String> {
    if !in_integrability_window(alpha, beta, q) {
        return Ok(None);
    }
    let mut req = CqRequest::new(alpha, beta, q).map_err(|e| e.to_string())?;
    req.tol = 1e-10;
    c_q(req).map(Some).map_err(|e| e.to_string())
}

/// `c_1`, `c_2` and the frequency-domain cross-check of `c_2`.
pub fn cq_summary(alpha: f64, beta: f64) -> Result<CqSummary, String> {
    let c2 = cq(alpha, beta, 2.0)?;
    let c2_frequency = match c2 {
        Some(_) if alpha <= 1.0 => Some(c_2_plancherel(alpha, beta).map_err(|e| e.to_string())?),
        _ => None,
    };
    Ok(CqSummary { alpha, beta, c1: cq(alpha, beta, 1.0)?, c2, c2_frequency })
}

/// Both conditions of the scalar limit theorem for `u' = A u + F(u) + σ(u) Ẇ`
/// with Lipschitz and linear-growth constants `c_f`, `c_sigma`.
pub fn scalar_conditions(a: f64, alpha: f64, beta: f64, c_f: f64, c_sigma: f64) -> Result<Vec<ConditionReport>, String> {
    let consts = CoefficientConstants { c_f_lip: c_f, c_f_lin: c_f, c_sigma_lip: c_sigma, c_sigma_lin: c_sigma, sup_f: None };
    let (first, second) = check_1d_theorem(a, alpha, beta, &consts).map_err(|e| e.to_string())?;
    Ok(vec![first, second])
}
