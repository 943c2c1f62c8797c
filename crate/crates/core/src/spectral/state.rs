use std::sync::Arc;

use num_complex::Complex64;

use super::grid::EnergyGrid;
use crate::error::{invalid, Error, Result};

/// Label of the right-moving (`+p`) channel of a free particle in 1D.
pub const PLUS: &str = "+";
/// Label of the left-moving (`-p`) channel.
pub const MINUS: &str = "-";

/// Tolerance on `norm² = 1` for a state to count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Multi-channel energy-representation amplitudes `ψ_j(E_i)`.
///
/// Every channel is sampled on the same [`EnergyGrid`]; the label set is
/// fixed at construction. Units are natural (`ħ = 1`) with the particle mass
/// carried alongside.
#[derive(Debug, Clone)]
pub struct ChannelState {
    grid: Arc<EnergyGrid>,
    labels: Vec<String>,
    amplitudes: Vec<Vec<Complex64>>,
    mass: f64,
}

impl ChannelState {
    pub fn new(
        grid: Arc<EnergyGrid>,
        labels: Vec<String>,
        amplitudes: Vec<Vec<Complex64>>,
        mass: f64,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("labels", "at least one channel is required"));
        }
        if labels.len() != amplitudes.len() {
            return Err(invalid(
                "amplitudes",
                format!("{} labels but {} channels", labels.len(), amplitudes.len()),
            ));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(invalid("labels", format!("duplicate channel `{label}`")));
            }
        }
        if let Some(bad) = amplitudes.iter().find(|a| a.len() != grid.len()) {
            return Err(invalid(
                "amplitudes",
                format!("channel has {} samples, grid has {}", bad.len(), grid.len()),
            ));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("mass", format!("must be positive, got {mass}")));
        }
        Ok(Self {
            grid,
            labels,
            amplitudes,
            mass,
        })
    }

    pub fn from_fn<F>(grid: Arc<EnergyGrid>, labels: &[&str], mass: f64, f: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> Complex64,
    {
        let amplitudes = (0..labels.len())
            .map(|j| grid.nodes().iter().map(|&e| f(j, e)).collect())
            .collect();
        Self::new(
            grid,
            labels.iter().map(|s| s.to_string()).collect(),
            amplitudes,
            mass,
        )
    }

    pub fn zero(grid: Arc<EnergyGrid>, labels: &[&str], mass: f64) -> Result<Self> {
        Self::from_fn(grid, labels, mass, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn channel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn channel(&self, j: usize) -> &[Complex64] {
        &self.amplitudes[j]
    }

    pub fn channel_by_label(&self, label: &str) -> Option<&[Complex64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.amplitudes[j].as_slice())
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.amplitudes
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn channel_norm_sq(&self, j: usize) -> f64 {
        self.amplitudes[j]
            .iter()
            .zip(self.grid.weights())
            .map(|(a, w)| w * a.norm_sqr())
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        (0..self.channel_count())
            .map(|j| self.channel_norm_sq(j))
            .sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 || !n.is_finite() {
            return Err(invalid("state", "cannot normalize a zero or non-finite state"));
        }
        Ok(self.scaled(1.0 / n.sqrt()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_amplitudes(|_, _, a| a * factor)
    }

    /// Applies `f(channel, node, amplitude)` to every sample.
    pub fn map_amplitudes<F>(&self, f: F) -> Self
    where
        F: Fn(usize, usize, Complex64) -> Complex64,
    {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, ch)| ch.iter().enumerate().map(|(i, &a)| f(j, i, a)).collect())
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            labels: self.labels.clone(),
            amplitudes,
            mass: self.mass,
        }
    }

    /// Keeps channel `j` and zeroes all others.
    pub fn restrict_to_channel(&self, j: usize) -> Self {
        self.map_amplitudes(|k, _, a| if k == j { a } else { Complex64::new(0.0, 0.0) })
    }

    pub(crate) fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        if self.labels != other.labels {
            return Err(Error::ChannelMismatch {
                left: self.labels.clone(),
                right: other.labels.clone(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_grid(&self, grid: &EnergyGrid) -> Result<()> {
        if *self.grid != *grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `Σ_j Σ_i w_i φ_j*(E_i) ψ_j(E_i)`.
pub fn inner_product(phi: &ChannelState, psi: &ChannelState) -> Result<Complex64> {
    phi.ensure_compatible(psi)?;
    let w = phi.grid.weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in phi.amplitudes.iter().zip(&psi.amplitudes) {
        for ((x, y), wi) in a.iter().zip(b).zip(w) {
            acc += x.conj() * y * wi;
        }
    }
    Ok(acc)
}

/// Momentum-representation amplitudes `ψ̃(p)` of a 1D particle.
///
/// The momentum nodes are the images `±p_i`, `p_i = √(2μE_i)`, of an energy
/// grid, so the change of representation to energy is exact node by node.
#[derive(Debug, Clone)]
pub struct MomentumState {
    grid: Arc<EnergyGrid>,
    positive: Vec<Complex64>,
    negative: Vec<Complex64>,
    mass: f64,
}

impl MomentumState {
    pub fn new(
        grid: Arc<EnergyGrid>,
        positive: Vec<Complex64>,
        negative: Vec<Complex64>,
        mass: f64,
    ) -> Result<Self> {
        if positive.len() != grid.len() || negative.len() != grid.len() {
            return Err(invalid("samples", "one sample per energy node is required"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("mass", format!("must be positive, got {mass}")));
        }
        Ok(Self {
            grid,
            positive,
            negative,
            mass,
        })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Arc<EnergyGrid>, mass: f64, f: F) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("mass", format!("must be positive, got {mass}")));
        }
        let p: Vec<f64> = grid.nodes().iter().map(|e| (2.0 * mass * e).sqrt()).collect();
        let positive = p.iter().map(|&p| f(p)).collect();
        let negative = p.iter().map(|&p| f(-p)).collect();
        Self::new(grid, positive, negative, mass)
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `|p|` at every energy node.
    pub fn momenta(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .map(|e| (2.0 * self.mass * e).sqrt())
            .collect()
    }

    /// Samples at `+p_i`.
    pub fn positive(&self) -> &[Complex64] {
        &self.positive
    }

    /// Samples at `-p_i`.
    pub fn negative(&self) -> &[Complex64] {
        &self.negative
    }

    fn momentum_weights(&self) -> Vec<f64> {
        // dp = (μ/p) dE
        self.grid
            .weights()
            .iter()
            .zip(self.momenta())
            .map(|(w, p)| w * self.mass / p)
            .collect()
    }

    /// `∫|ψ̃(p)|² dp`.
    pub fn norm_sq(&self) -> f64 {
        self.momentum_weights()
            .iter()
            .zip(self.positive.iter().zip(&self.negative))
            .map(|(w, (a, b))| w * (a.norm_sqr() + b.norm_sqr()))
            .sum()
    }

    /// Mass carried by negative momenta.
    pub fn negative_mass(&self) -> f64 {
        self.momentum_weights()
            .iter()
            .zip(&self.negative)
            .map(|(w, b)| w * b.norm_sqr())
            .sum()
    }
}

/// Tolerance on norm conservation in [`momentum_to_energy`].
pub const ALIASING_TOLERANCE: f64 = 1e-8;

/// `ψ_±(E) = (μ/p)^{1/2} ψ̃(±p)` with `p = √(2μE)`.
///
/// Fails with [`Error::Aliasing`] when the energy-space norm computed at full
/// and at half resolution differ by more than [`ALIASING_TOLERANCE`].
pub fn momentum_to_energy(state: &MomentumState) -> Result<ChannelState> {
    let p = state.momenta();
    let scale: Vec<f64> = p.iter().map(|p| (state.mass / p).sqrt()).collect();
    let plus: Vec<Complex64> = state.positive.iter().zip(&scale).map(|(a, s)| a * s).collect();
    let minus: Vec<Complex64> = state.negative.iter().zip(&scale).map(|(a, s)| a * s).collect();

    let density: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .collect();
    let full = state.grid.integrate_samples(&density);
    let coarse = state.grid.integrate_samples_coarse(&density);
    let defect = (full - coarse).abs();
    if !(defect <= ALIASING_TOLERANCE) {
        return Err(Error::Aliasing { defect });
    }

    ChannelState::new(
        Arc::clone(&state.grid),
        vec![PLUS.to_string(), MINUS.to_string()],
        vec![plus, minus],
        state.mass,
    )
}

/// Inverse of [`momentum_to_energy`]; requires exactly the channels `{+, -}`.
pub fn energy_to_momentum(state: &ChannelState) -> Result<MomentumState> {
    let (Some(plus), Some(minus)) = (state.channel_by_label(PLUS), state.channel_by_label(MINUS))
    else {
        return Err(Error::ChannelMismatch {
            left: state.labels().to_vec(),
            right: vec![PLUS.to_string(), MINUS.to_string()],
        });
    };
    if state.channel_count() != 2 {
        return Err(Error::ChannelMismatch {
            left: state.labels().to_vec(),
            right: vec![PLUS.to_string(), MINUS.to_string()],
        });
    }
    let mass = state.mass();
    let scale: Vec<f64> = state
        .grid()
        .nodes()
        .iter()
        .map(|e| ((2.0 * mass * e).sqrt() / mass).sqrt())
        .collect();
    MomentumState::new(
        Arc::clone(state.grid()),
        plus.iter().zip(&scale).map(|(a, s)| a * s).collect(),
        minus.iter().zip(&scale).map(|(a, s)| a * s).collect(),
        mass,
    )
}
