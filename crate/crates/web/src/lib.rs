//! WebAssembly bindings for the static demo page in `www/`.

pub mod ops;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// `E_{α,β}(-x)` sampled on `[0, x_max]`.
#[wasm_bindgen(js_name = mlCurve)]
pub fn ml_curve(alpha: f64, beta: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    ops::ml_curve(alpha, beta, x_max, n).map_err(js)
}

/// JSON with `c1`, `c2` and the frequency-domain `c2`.
#[wasm_bindgen(js_name = cqSummary)]
pub fn cq_summary(alpha: f64, beta: f64) -> Result<String, JsError> {
    let s = ops::cq_summary(alpha, beta).map_err(js)?;
    serde_json::to_string(&s).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON array of the two condition reports of the scalar theorem.
#[wasm_bindgen(js_name = scalarConditions)]
pub fn scalar_conditions(a: f64, alpha: f64, beta: f64, c_f: f64, c_sigma: f64) -> Result<String, JsError> {
    let r = ops::scalar_conditions(a, alpha, beta, c_f, c_sigma).map_err(js)?;
    serde_json::to_string(&r).map_err(|e| JsError::new(&e.to_string()))
}
