//! Dissipativity and parameter-region checks with explicit left-hand sides.
//!
//! A check passes when `lhs + error < threshold`, fails when
//! `lhs - error ≥ threshold` and is inconclusive in between. `error` collects
//! quadrature error of the constants and truncation tails of mode series.

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::mlf::{c_q, in_integrability_window, CqRequest};
use crate::spectral::{
    operator_norm_series, operator_norm_series_cm, CmTarget, DiagonalOperator, KernelPair, NormCase, SeriesBound, Spectrum,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative accuracy requested from `c_q` and the error charged per factor.
const CQ_TOL: f64 = 1e-10;
const CQ_ERR: f64 = 1e-9;
/// Floor for the band, in units of the threshold.
const ROUND_ERR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConstants {
    #[serde(default)]
    pub c_f_lip: f64,
    #[serde(default)]
    pub c_f_lin: f64,
    #[serde(default)]
    pub c_sigma_lip: f64,
    #[serde(default)]
    pub c_sigma_lin: f64,
    /// `sup |F|`, if finite.
    #[serde(default)]
    pub sup_f: Option<f64>,
}

impl CoefficientConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c_f_lip, self.c_f_lin, self.c_sigma_lip, self.c_sigma_lin, self.sup_f.unwrap_or(0.0)];
        if all.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::Domain("coefficient constants must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    #[serde(with = "crate::jsonf64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    #[serde(with = "crate::jsonf64")]
    pub lhs: f64,
    #[serde(with = "crate::jsonf64")]
    pub threshold: f64,
    #[serde(with = "crate::jsonf64")]
    pub error: f64,
    pub verdict: Verdict,
    pub terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<ConditionReport>,
}

impl ConditionReport {
    fn new(name: &str, lhs: f64, threshold: f64, error: f64, terms: Vec<Term>) -> Self {
        let error = error.abs() + ROUND_ERR * threshold.abs().max(lhs.abs());
        let verdict = if lhs.is_nan() {
            Verdict::Fail
        } else if lhs + error < threshold {
            Verdict::Pass
        } else if lhs - error >= threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        Self { name: name.into(), lhs, threshold, error, verdict, terms, notes: Vec::new(), variants: Vec::new() }
    }

    fn failed(name: &str, threshold: f64, note: String) -> Self {
        Self {
            name: name.into(),
            lhs: f64::INFINITY,
            threshold,
            error: 0.0,
            verdict: Verdict::Fail,
            terms: Vec::new(),
            notes: vec![note],
            variants: Vec::new(),
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn term(name: &str, value: f64) -> Term {
    Term { name: name.into(), value }
}

fn cq(alpha: f64, beta: f64, q: f64) -> Result<f64> {
    let mut req = CqRequest::new(alpha, beta, q)?;
    req.tol = CQ_TOL;
    c_q(req)
}

/// Both conditions of the scalar theorem for `A < 0` and fractional
/// kernels; `c_1` is `c_1(α, α)`. Condition (b) is evaluated as printed
/// (with `c_2²`); the first-power variant is attached.
pub fn check_1d_theorem(a: f64, alpha: f64, beta: f64, consts: &CoefficientConstants) -> Result<(ConditionReport, ConditionReport)> {
    consts.validate()?;
    if !(a < 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("need A < 0, got {a}")));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("need alpha in (0, 2), got {alpha}")));
    }
    if !(beta > 0.5) {
        return Err(Error::Domain(format!("need beta > 1/2, got {beta}")));
    }
    let abs_a = a.abs();
    let c1 = cq(alpha, alpha, 1.0)?;
    let lhs_a = c1 * consts.c_f_lin;
    let rep_a = ConditionReport::new(
        "1d_additive",
        lhs_a,
        abs_a,
        lhs_a * CQ_ERR,
        vec![term("c1(alpha,alpha)", c1), term("C_F_lin", consts.c_f_lin)],
    );

    if consts.c_sigma_lin > 0.0 && !in_integrability_window(alpha, beta, 2.0) {
        let note = format!("c2({alpha},{beta}) is infinite: t^(beta-1) E(alpha,beta)(-t^alpha) is not square integrable");
        return Ok((rep_a, ConditionReport::failed("1d_general", 1.0, note)));
    }
    let c2 = if consts.c_sigma_lin > 0.0 { cq(alpha, beta, 2.0)? } else { 0.0 };
    let drift = 6.0 * consts.c_f_lin.powi(2) * c1 * c1 * abs_a.powi(-2);
    let decay = abs_a.powf(-(2.0 * beta - 1.0) / alpha);
    let noise_printed = 3.0 * c2 * c2 * consts.c_sigma_lin.powi(2) * decay;
    let noise_first = 3.0 * c2 * consts.c_sigma_lin.powi(2) * decay;
    let terms = |noise: f64| {
        vec![
            term("c1(alpha,alpha)", c1),
            term("c2(alpha,beta)", c2),
            term("drift", drift),
            term("noise", noise),
        ]
    };
    let printed = drift + noise_printed;
    let first = drift + noise_first;
    let mut rep_b = ConditionReport::new("1d_general", printed, 1.0, (2.0 * drift + 2.0 * noise_printed) * CQ_ERR, terms(noise_printed))
        .note("noise term uses c2^2 as printed");
    rep_b.variants.push(
        ConditionReport::new("1d_general_c2_first_power", first, 1.0, (2.0 * drift + noise_first) * CQ_ERR, terms(noise_first))
            .note("noise term uses c2 to the first power, as obtained from the L2 norm of K_lin"),
    );
    Ok((rep_a, rep_b))
}

/// Which dissipativity inequality of the general theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralVariant {
    /// `3‖i‖²(2 C_{F,lin}² ‖E_k‖₁² + ‖K_lin‖₂²) < 1`.
    Limit,
    /// `3‖i‖²(C_{F,lip}² ‖E_k‖₁² + ‖K_lip‖₂²) < 1`.
    Stability,
}

/// `‖E_k‖_{L¹(ℝ₊; L(H, H^δ))}` bounded by the lemma that applies.
fn ek_l1(op: &DiagonalOperator, k: &Kernel, delta: f64) -> Result<(SeriesBound, f64, &'static str)> {
    match k {
        Kernel::Fractional { alpha } if *alpha <= 1.0 && delta == 0.0 => {
            let b = operator_norm_series(op, *alpha, *alpha, 1.0, 0.0, 0.0, NormCase::FirstMode)?;
            Ok((b, CQ_ERR, "first mode, c1(alpha,alpha)/mu_1"))
        }
        Kernel::Fractional { alpha } => {
            let b = operator_norm_series(op, *alpha, *alpha, 1.0, 0.0, delta, NormCase::Operator)?;
            Ok((b, CQ_ERR, "mode sum c1(alpha,alpha) sum mu_n^(delta-1)"))
        }
        _ => {
            let target = if delta == 0.0 { CmTarget::OperatorH } else { CmTarget::Series { lambda: 0.0, rho: delta } };
            Ok((operator_norm_series_cm(op, k, 1.0, target, 1.0, None)?, 0.0, "monotone kernel bound"))
        }
    }
}

/// `∫ Σ_n μ_n^{2δ} e_h(t; μ_n)² dt`, the squared `L²` norm of
/// `t ↦ ‖E_h(t)‖_{L_2(H, H^δ)}`.
fn eh_hs(op: &DiagonalOperator, pair: &KernelPair, delta: f64) -> Result<(SeriesBound, f64)> {
    match (&pair.k, &pair.h) {
        (Kernel::Fractional { alpha }, Kernel::Fractional { alpha: beta }) => {
            Ok((operator_norm_series(op, *alpha, *beta, 2.0, 0.0, delta, NormCase::HilbertSchmidt)?, CQ_ERR))
        }
        (k, h) if k == h => {
            let sb = k.singularity_bound(None);
            Ok((operator_norm_series_cm(op, k, 2.0, CmTarget::Series { lambda: 0.0, rho: delta }, 1.0, Some(sb))?, 0.0))
        }
        _ => Err(Error::Hypothesis("noise norm needs fractional k, h or h = k".into())),
    }
}

/// The general dissipativity condition with `V = H^δ`, `H_F = H` and
/// `K(t) = C_σ ‖E_h(t)‖_{L_2(H, V)}`.
pub fn check_general_limit(
    op: &DiagonalOperator,
    pair: &KernelPair,
    consts: &CoefficientConstants,
    delta: f64,
    variant: GeneralVariant,
) -> Result<ConditionReport> {
    consts.validate()?;
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("need delta >= 0, got {delta}")));
    }
    let name = match variant {
        GeneralVariant::Limit => "general_limit",
        GeneralVariant::Stability => "general_stability",
    };
    let (cf, cs, factor) = match variant {
        GeneralVariant::Limit => (consts.c_f_lin, consts.c_sigma_lin, 2.0),
        GeneralVariant::Stability => (consts.c_f_lip, consts.c_sigma_lip, 1.0),
    };
    let incl = op.inclusion_norm(delta);
    let mut terms = vec![term("|i|", incl)];
    let mut notes = Vec::new();
    let mut err = 0.0;
    let mut body = 0.0;
    if cf > 0.0 {
        match ek_l1(op, &pair.k, delta) {
            Ok((b, rel, how)) => {
                let drift = factor * cf * cf * b.value * b.value;
                let up = factor * cf * cf * b.upper() * b.upper();
                terms.push(term("|E_k|_L1", b.value));
                terms.push(term("drift", drift));
                err += (up - drift) + 2.0 * rel * drift;
                body += drift;
                notes.push(format!("E_k: {how}"));
            }
            Err(Error::Divergent { exponent, critical }) => {
                return Ok(ConditionReport::failed(
                    name,
                    1.0,
                    format!("E_k factor diverges: mode exponent {exponent} not below {critical}"),
                ))
            }
            Err(e) => return Err(e),
        }
    }
    if cs > 0.0 {
        match eh_hs(op, pair, delta) {
            Ok((b, rel)) => {
                let noise = cs * cs * b.value;
                terms.push(term("|E_h|_HS^2", b.value));
                terms.push(term("noise", noise));
                err += cs * cs * b.tail_bound.unwrap_or(0.0) + rel * noise;
                body += noise;
            }
            Err(Error::Divergent { exponent, critical }) => {
                return Ok(ConditionReport::failed(
                    name,
                    1.0,
                    format!("E_h factor diverges: mode exponent {exponent} not below {critical}"),
                ))
            }
            Err(e) => return Err(e),
        }
    }
    let scale = 3.0 * incl * incl;
    let mut rep = ConditionReport::new(name, scale * body, 1.0, scale * err, terms);
    rep.notes = notes;
    Ok(rep)
}

/// Additive-noise condition `‖i‖ C_{F,lin} ‖E_k‖_{L¹(L(H, H^δ))} < 1`. For
/// the one-dimensional Laplacian with `δ > 0` and fractional `k` the
/// printed closed form `C c_1/(1 - 2δ)` is evaluated and the mode sum is
/// attached as a term and variant.
pub fn check_additive(op: &DiagonalOperator, k: &Kernel, c_f_lin: f64, delta: f64) -> Result<ConditionReport> {
    if !(c_f_lin >= 0.0) || !c_f_lin.is_finite() || !(delta >= 0.0) {
        return Err(Error::Domain("need C_F_lin >= 0 and delta >= 0".into()));
    }
    let incl = op.inclusion_norm(delta);
    let (b, rel, how) = match ek_l1(op, k, delta) {
        Ok(v) => v,
        Err(Error::Divergent { exponent, critical }) => {
            return Ok(ConditionReport::failed(
                "additive",
                1.0,
                format!("E_k factor diverges: mode exponent {exponent} not below {critical}"),
            ))
        }
        Err(e) => return Err(e),
    };
    let lhs = incl * c_f_lin * b.value;
    let err = incl * c_f_lin * (b.upper() - b.value) + rel * lhs;
    let terms = vec![term("|i|", incl), term("C_F_lin", c_f_lin), term("|E_k|_L1", b.value)];
    let series = ConditionReport::new("additive", lhs, 1.0, err, terms).note(format!("E_k: {how}"));
    let laplace_1d = matches!(op.spectrum(), Spectrum::DirichletLaplacian { dim: 1, .. });
    match k {
        Kernel::Fractional { alpha } if laplace_1d && delta > 0.0 => {
            if delta >= 0.5 {
                return Ok(ConditionReport::failed("additive_printed", 1.0, format!("C c1/(1 - 2 delta) needs delta < 1/2, got {delta}")));
            }
            let c1 = cq(*alpha, *alpha, 1.0)?;
            let printed = c_f_lin * c1 / (1.0 - 2.0 * delta);
            let mut rep = ConditionReport::new(
                "additive_printed",
                printed,
                1.0,
                printed * CQ_ERR,
                vec![
                    term("C_F_lin", c_f_lin),
                    term("c1(alpha,alpha)", c1),
                    term("1/(1-2delta)", 1.0 / (1.0 - 2.0 * delta)),
                    term("series c1 sum n^(2delta-2)", b.value),
                ],
            )
            .note("printed integral comparison omits the first mode; see the series variant");
            rep.variants.push(series);
            Ok(rep)
        }
        _ => Ok(series),
    }
}

/// Constants `ω_d` exactly as printed for the multiplicative heat example.
pub fn printed_omega(d: usize) -> f64 {
    match d {
        1 => 1.0,
        2 => PI / 2.0,
        _ => PI,
    }
}

/// Printed multiplicative heat-example inequality
/// `3 C² c_2(α,β) ω_d / ((4β-2)/α - 4δ - d) < 1`, with the mode series
/// it stands for attached.
pub fn check_heat_multiplicative_printed(
    d: usize,
    modes_per_axis: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
    c_f_lin: f64,
) -> Result<ConditionReport> {
    let denom = (4.0 * beta - 2.0) / alpha - 4.0 * delta - d as f64;
    if !(denom > 0.0) {
        return Ok(ConditionReport::failed(
            "heat_multiplicative_printed",
            1.0,
            format!("(4 beta - 2)/alpha - 4 delta - d = {denom} is not positive"),
        ));
    }
    let c2 = cq(alpha, beta, 2.0)?;
    let omega = printed_omega(d);
    let lhs = 3.0 * c_f_lin * c_f_lin * c2 * omega / denom;
    let op = DiagonalOperator::dirichlet_laplacian(d, modes_per_axis)?;
    let (sum, tail) = op.power_sum(-(2.0 * beta - 1.0) / alpha + 2.0 * delta)?;
    Ok(ConditionReport::new(
        "heat_multiplicative_printed",
        lhs,
        1.0,
        lhs * CQ_ERR,
        vec![
            term("c2(alpha,beta)", c2),
            term("omega_d", omega),
            term("denominator", denom),
            term("mode series", sum),
            term("mode series tail", tail.unwrap_or(0.0)),
        ],
    ))
}

/// Membership of `(α, β, δ, γ)` in the admissible region of the heat
/// examples. `lhs` is `β`, `threshold` the binding lower end; the full
/// interval is listed in the terms.
pub fn check_heat_region(d: usize, alpha: f64, beta: f64, delta: f64, gamma: f64, multiplicative: bool) -> Result<ConditionReport> {
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let hi = alpha + 0.5;
    let mut notes = Vec::new();
    let mut ok = alpha > 0.0 && alpha < 2.0 && delta >= 0.0;
    let lo = if multiplicative {
        0.5 + (delta + d as f64 / 4.0) * alpha
    } else if alpha <= 1.0 && delta == 0.0 {
        notes.push("additive case (a)".to_string());
        alpha * d as f64 / 4.0 + 0.5
    } else {
        notes.push("additive case (b)".to_string());
        if d != 1 {
            notes.push("case (b) needs d = 1".into());
            ok = false;
        }
        if !(alpha > 2.0 / 3.0 && alpha < 2.0) {
            notes.push("case (b) needs alpha in (2/3, 2)".into());
            ok = false;
        }
        let cap = 0.75 - 0.5 / alpha;
        if !(delta < cap) {
            notes.push(format!("case (b) needs delta < 3/4 - 1/(2 alpha) = {cap}"));
            ok = false;
        }
        (0.5 + 0.25 * alpha).max(0.5 + (delta + 0.25) * alpha)
    };
    if !(lo < beta && beta <= hi) {
        notes.push(format!("beta = {beta} outside ({lo}, {hi}]"));
        ok = false;
    }
    if !(gamma >= 0.0 && gamma <= alpha) {
        notes.push(format!("gamma = {gamma} outside [0, {alpha}]"));
        ok = false;
    }
    let name = if multiplicative { "heat_region_multiplicative" } else { "heat_region_additive" };
    Ok(ConditionReport {
        name: name.into(),
        lhs: beta,
        threshold: lo,
        error: 0.0,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        terms: vec![term("lower", lo), term("upper", hi), term("gamma", gamma)],
        notes,
        variants: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_classification() {
        assert_eq!(ConditionReport::new("x", 0.5, 1.0, 0.1, vec![]).verdict, Verdict::Pass);
        assert_eq!(ConditionReport::new("x", 0.95, 1.0, 0.1, vec![]).verdict, Verdict::Inconclusive);
        assert_eq!(ConditionReport::new("x", 1.2, 1.0, 0.1, vec![]).verdict, Verdict::Fail);
        assert_eq!(ConditionReport::new("x", 1.0, 1.0, 0.0, vec![]).verdict, Verdict::Inconclusive);
    }
}
