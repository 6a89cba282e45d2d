//! Gamma-function helpers on the real line.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `1/Γ(x)` for every real `x`, exactly zero at the poles.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
        let s = (PI * x).sin();
        if 1.0 - x > 170.0 {
            return s.signum() * (s.abs().ln() + ln_gamma(1.0 - x) - PI.ln()).exp();
        }
        return s * gamma(1.0 - x) / PI;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}
