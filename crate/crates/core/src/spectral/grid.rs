use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node placement of an [`EnergyGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 2;

/// Discretization of the half-line spectrum `[0, ∞)`.
///
/// Nodes are uniform in the grid coordinate `s`, which is `E` itself for
/// linear spacing and `u = ln E` for logarithmic spacing. Weights implement
/// the composite trapezoid rule in `s`. Logarithmic grids additionally close
/// the gap `[0, E_min]` with a rectangle at the first node, so that they
/// integrate over `[0, E_max]` rather than `[E_min, E_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    spacing: Spacing,
    e_min: f64,
    e_max: f64,
    step: f64,
}

impl EnergyGrid {
    pub fn new(e_min: f64, e_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if !(e_min.is_finite() && e_min > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "E_min must be positive and finite (got {e_min}); the grid must exclude E = 0"
            )));
        }
        if !(e_max.is_finite() && e_max > e_min) {
            return Err(Error::InvalidGrid(format!(
                "E_max must be finite and exceed E_min (got E_min = {e_min}, E_max = {e_max})"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let last = (n - 1) as f64;
        let (nodes, step) = match spacing {
            Spacing::Linear => {
                let h = (e_max - e_min) / last;
                let mut nodes: Vec<f64> = (0..n).map(|i| e_min + h * i as f64).collect();
                nodes[n - 1] = e_max;
                (nodes, h)
            }
            Spacing::Logarithmic => {
                let (u0, u1) = (e_min.ln(), e_max.ln());
                let du = (u1 - u0) / last;
                let mut nodes: Vec<f64> = (0..n).map(|i| (u0 + du * i as f64).exp()).collect();
                nodes[0] = e_min;
                nodes[n - 1] = e_max;
                (nodes, du)
            }
        };
        let weights = match spacing {
            Spacing::Linear => {
                let mut w = vec![step; n];
                w[0] *= 0.5;
                w[n - 1] *= 0.5;
                w
            }
            Spacing::Logarithmic => {
                let mut w: Vec<f64> = nodes.iter().map(|e| step * e).collect();
                w[0] = nodes[0] * (1.0 + 0.5 * step);
                w[n - 1] *= 0.5;
                w
            }
        };
        Ok(Self {
            nodes,
            weights,
            spacing,
            e_min,
            e_max,
            step,
        })
    }

    pub fn linear(e_min: f64, e_max: f64, n: usize) -> Result<Self> {
        Self::new(e_min, e_max, n, Spacing::Linear)
    }

    pub fn logarithmic(e_min: f64, e_max: f64, n: usize) -> Result<Self> {
        Self::new(e_min, e_max, n, Spacing::Logarithmic)
    }

    /// Logarithmic grid on `u ∈ [-half_width, half_width]`, centred on `E = 1`.
    pub fn symmetric_log(n: usize, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Self::logarithmic((-half_width).exp(), half_width.exp(), n)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Node spacing in the grid coordinate (`h` or `Δu`).
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn is_logarithmic(&self) -> bool {
        self.spacing == Spacing::Logarithmic
    }

    /// Grid coordinate of node `i`: `E_i` or `ln E_i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        match self.spacing {
            Spacing::Linear => self.nodes[i],
            Spacing::Logarithmic => self.e_min.ln() + self.step * i as f64,
        }
    }

    /// Jacobian `dE/ds` times the step at every node, without the endpoint
    /// halving or the origin closure.
    pub fn cell_weights(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => vec![self.step; self.len()],
            Spacing::Logarithmic => self.nodes.iter().map(|e| self.step * e).collect(),
        }
    }

    /// Whether node 0 also carries the cell `[0, E_min]`.
    pub fn closes_origin(&self) -> bool {
        self.is_logarithmic()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * f(e))
            .sum()
    }

    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        samples.iter().zip(&self.weights).map(|(s, w)| s * w).sum()
    }

    /// Same rule on every second node (step doubled). Comparing it with
    /// [`integrate_samples`](Self::integrate_samples) exposes under-resolved
    /// integrands.
    pub fn integrate_samples_coarse(&self, samples: &[f64]) -> f64 {
        let n = self.len();
        let last_even = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
        let cells = self.cell_weights();
        let mut sum = 0.0;
        for i in (0..=last_even).step_by(2) {
            let mut w = 2.0 * cells[i];
            if i == 0 || i == last_even {
                w *= 0.5;
            }
            if i == 0 && self.closes_origin() {
                w += self.nodes[0];
            }
            sum += w * samples[i];
        }
        if last_even != n - 1 {
            // odd node count of intervals: finish with a single trapezoid cell
            sum += 0.5 * cells[n - 2] * samples[n - 2] + 0.5 * cells[n - 1] * samples[n - 1];
        }
        sum
    }

    /// Index range of the nodes whose `ln E` lies in the middle half of the
    /// grid's logarithmic span.
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        let (lo, hi) = (self.e_min.ln(), self.e_max.ln());
        let (a, b) = (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo));
        let start = self.nodes.iter().position(|e| e.ln() >= a).unwrap_or(0);
        let end = self
            .nodes
            .iter()
            .rposition(|e| e.ln() <= b)
            .map_or(self.len(), |i| i + 1);
        start..end.max(start)
    }
}
