//! Time grids and functions sampled on them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// `n` equal steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        check_horizon(horizon, n)?;
        let h = horizon / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        nodes[n] = horizon;
        Ok(Self { nodes })
    }

    /// `t_j = T (j/N)^{1/γ}`, `γ ∈ (0, 1]`; clusters nodes near the origin.
    pub fn graded(horizon: f64, n: usize, gamma: f64) -> Result<Self> {
        check_horizon(horizon, n)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!("grading exponent must lie in (0, 1], got {gamma}")));
        }
        let nodes = (0..=n).map(|j| horizon * (j as f64 / n as f64).powf(1.0 / gamma)).collect();
        Ok(Self { nodes })
    }

    /// Graded grid on `[0, t_switch]` followed by geometric steps with
    /// `per_decade` nodes per factor ten up to `horizon`.
    pub fn graded_geometric(t_switch: f64, n_graded: usize, gamma: f64, horizon: f64, per_decade: usize) -> Result<Self> {
        let base = Self::graded(t_switch, n_graded, gamma)?;
        if !(horizon > t_switch) || per_decade == 0 {
            return Err(Error::Domain("geometric part needs horizon > t_switch and per_decade > 0".into()));
        }
        let mut nodes = base.nodes;
        let ratio = 10f64.powf(1.0 / per_decade as f64);
        // first geometric step no larger than the last graded one
        let last_h = nodes[n_graded] - nodes[n_graded - 1];
        let mut t = t_switch;
        let mut h = last_h;
        while t < horizon {
            h = (h * ratio).min(t * (ratio - 1.0)).max(last_h);
            t = (t + h).min(horizon);
            if horizon - t < 0.25 * h {
                t = horizon;
            }
            nodes.push(t);
        }
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Domain("grid needs at least two nodes starting at 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }
    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Constant step when the grid is uniform up to rounding.
    pub fn uniform_step(&self) -> Option<f64> {
        let h = self.horizon() / self.steps() as f64;
        let ok = self.nodes.iter().enumerate().all(|(j, &t)| (t - j as f64 * h).abs() <= 1e-9 * h.max(t));
        ok.then_some(h)
    }

    /// Index of the interval `[t_j, t_{j+1})` containing `t`, clamped.
    pub fn locate(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(j) => j.min(self.steps() - 1),
            Err(0) => 0,
            Err(j) => (j - 1).min(self.steps() - 1),
        }
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let j = self.locate(t);
        if (t - self.nodes[j]).abs() <= (self.nodes[j + 1] - t).abs() {
            j
        } else {
            j + 1
        }
    }
}

fn check_horizon(horizon: f64, n: usize) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    if n == 0 {
        return Err(Error::Domain("grid needs at least one step".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    PiecewiseConstantLeft,
    #[default]
    Linear,
}

/// Values on a grid together with an interpolation rule. Evaluation beyond
/// the horizon holds the last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFunction {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub interpolation: Interpolation,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values, interpolation })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self { grid, values, interpolation: Interpolation::Linear }
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        if t <= nodes[0] {
            return self.values[0];
        }
        if t >= self.grid.horizon() {
            return *self.values.last().unwrap();
        }
        let j = self.grid.locate(t);
        match self.interpolation {
            Interpolation::PiecewiseConstantLeft => self.values[j],
            Interpolation::Linear => {
                let w = (t - nodes[j]) / (nodes[j + 1] - nodes[j]);
                if w == 0.0 {
                    self.values[j]
                } else {
                    self.values[j] * (1.0 - w) + self.values[j + 1] * w
                }
            }
        }
    }

    /// Integral of the interpolant over the grid.
    pub fn integral(&self) -> f64 {
        self.partial_integrals().last().copied().unwrap_or(0.0)
    }

    /// Running integrals `∫_0^{t_i}` of the interpolant.
    pub fn partial_integrals(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut out = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for j in 0..nodes.len() - 1 {
            let h = nodes[j + 1] - nodes[j];
            acc += match self.interpolation {
                Interpolation::PiecewiseConstantLeft => h * self.values[j],
                Interpolation::Linear => 0.5 * h * (self.values[j] + self.values[j + 1]),
            };
            out.push(acc);
        }
        out
    }

    /// Two-column CSV `time,value` with header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,value\n");
        for (t, v) in self.nodes().iter().zip(&self.values) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}
