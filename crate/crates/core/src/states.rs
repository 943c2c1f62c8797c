//! Concrete states: the free Gaussian wave packet, the exponential energy
//! profile with closed-form arrow expectation, and seeded random states.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::spectral::{momentum_to_energy, ChannelState, EnergyGrid, MomentumState, Spacing};

/// Free Gaussian wave packet in one dimension.
///
/// The momentum amplitude at `t = 0` is
/// `ψ̃(p) = (πξ₀²)^{-1/4} exp(-(p - p₀)² / 2ξ₀²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketParams {
    pub p0: f64,
    pub xi0: f64,
    pub mass: f64,
}

impl Default for GaussianPacketParams {
    fn default() -> Self {
        Self {
            p0: 6.4,
            xi0: 3.0,
            mass: 1.0,
        }
    }
}

/// Half-width, in units of `ξ₀`, of the momentum band a grid must cover.
const COVERAGE_WIDTHS: f64 = 8.0;
/// Largest mass allowed in the gap `|p| < √(2μE_min)`.
const GAP_MASS: f64 = 1e-12;

impl GaussianPacketParams {
    pub fn new(p0: f64, xi0: f64, mass: f64) -> Result<Self> {
        let params = Self { p0, xi0, mass };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p0.is_finite() {
            return Err(invalid("p0", "must be finite"));
        }
        if !(self.xi0.is_finite() && self.xi0 > 0.0) {
            return Err(invalid("xi0", format!("must be positive, got {}", self.xi0)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(invalid("mass", format!("must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    pub fn momentum_amplitude(&self, p: f64) -> f64 {
        let x = (p - self.p0) / self.xi0;
        (PI * self.xi0 * self.xi0).powf(-0.25) * (-0.5 * x * x).exp()
    }

    /// `max(p₀², ξ₀²) / 2μ`.
    pub fn characteristic_energy(&self) -> f64 {
        self.p0.abs().max(self.xi0).powi(2) / (2.0 * self.mass)
    }

    /// Energy bounds `[E_min, E_max]` for a logarithmic grid.
    ///
    /// `E_max` covers `|p₀| + 8ξ₀`. `E_min` is small enough that the momentum
    /// gap around `p = 0` holds less than `1e-12` of the norm.
    pub fn default_bounds(&self) -> (f64, f64) {
        let p_max = self.p0.abs() + COVERAGE_WIDTHS * self.xi0;
        let at_origin = self.momentum_amplitude(0.0).powi(2).max(1e-300);
        let p_ref = (2.0 * self.mass * self.characteristic_energy()).sqrt();
        let p_min = (GAP_MASS / (2.0 * at_origin)).min(1e-3 * p_ref);
        (
            p_min * p_min / (2.0 * self.mass),
            p_max * p_max / (2.0 * self.mass),
        )
    }

    pub fn default_grid(&self, n: usize) -> Result<EnergyGrid> {
        let (lo, hi) = self.default_bounds();
        EnergyGrid::new(lo, hi, n, Spacing::Logarithmic)
    }

    /// Mean position `p₀t/μ` and standard deviation of `|ψ(x, t)|²`.
    pub fn position_moments(&self, t: f64) -> (f64, f64) {
        let a = self.spread(t);
        let variance = 1.0 / (1.0 / a).re;
        (self.p0 * t / self.mass, variance.sqrt())
    }

    fn spread(&self, t: f64) -> Complex64 {
        Complex64::new(0.5 / (self.xi0 * self.xi0), 0.5 * t / self.mass)
    }
}

/// Samples the packet's momentum amplitude at `±√(2μE_i)`.
pub fn gaussian_momentum_state(
    params: &GaussianPacketParams,
    grid: Arc<EnergyGrid>,
) -> Result<MomentumState> {
    params.validate()?;
    let p_top = (2.0 * params.mass * grid.e_max()).sqrt();
    let needed = params.p0.abs() + COVERAGE_WIDTHS * params.xi0;
    if p_top < needed {
        return Err(Error::Coverage(format!(
            "momentum grid reaches |p| = {p_top:.4}, the packet needs {needed:.4}"
        )));
    }
    let p_bottom = (2.0 * params.mass * grid.e_min()).sqrt();
    let gap = 2.0 * p_bottom * params.momentum_amplitude(0.0).powi(2);
    if gap > 1e-10 {
        return Err(Error::Coverage(format!(
            "gap |p| < {p_bottom:.3e} below E_min holds {gap:.3e} of the norm"
        )));
    }
    MomentumState::from_fn(grid, params.mass, |p| {
        Complex64::new(params.momentum_amplitude(p), 0.0)
    })
}

/// The packet in the energy representation, channels `{+, -}`.
pub fn gaussian_packet(params: &GaussianPacketParams, grid: Arc<EnergyGrid>) -> Result<ChannelState> {
    momentum_to_energy(&gaussian_momentum_state(params, grid)?)
}

/// Closed-form `ψ(x, t)` of the freely evolving packet.
pub fn gaussian_position_amplitude(params: &GaussianPacketParams, x: f64, t: f64) -> Complex64 {
    let a = params.spread(t);
    let b = Complex64::new(0.0, x - params.p0 * t / params.mass);
    let phase = Complex64::new(0.0, params.p0 * x - params.p0 * params.p0 * t / (2.0 * params.mass));
    let prefactor = (PI * params.xi0 * params.xi0).powf(-0.25) / (2.0 * PI).sqrt();
    prefactor * (PI / a).sqrt() * (b * b / (4.0 * a) + phase).exp()
}

/// `|ψ(x, t)|²`.
pub fn gaussian_position_density(params: &GaussianPacketParams, x: f64, t: f64) -> f64 {
    let (centre, sigma) = params.position_moments(t);
    let y = (x - centre) / sigma;
    (-0.5 * y * y).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Label of the single channel of [`exponential_profile`].
pub const EXPONENTIAL_CHANNEL: &str = "0";

/// `ψ(E) = √2 e^{-E}` on a single channel.
///
/// Its forward arrow expectation is `1/2 - arctan(t)/π`.
pub fn exponential_profile(grid: Arc<EnergyGrid>) -> Result<ChannelState> {
    if grid.e_min() > 1e-6 || grid.e_max() < 30.0 {
        return Err(Error::Coverage(format!(
            "exponential profile needs E_min <= 1e-6 and E_max >= 30, got [{:e}, {:e}]",
            grid.e_min(),
            grid.e_max()
        )));
    }
    ChannelState::from_fn(grid, &[EXPONENTIAL_CHANNEL], 1.0, |_, e| {
        Complex64::new(2f64.sqrt() * (-e).exp(), 0.0)
    })
}

/// Closed-form `⟨M_F(t)⟩` of [`exponential_profile`].
pub fn exponential_mf(t: f64) -> f64 {
    0.5 - t.atan() / PI
}

/// Grid used with the exponential profile: logarithmic on `[1e-12, 40]`.
pub fn oracle_grid(n: usize) -> Result<EnergyGrid> {
    EnergyGrid::logarithmic(1e-12, 40.0, n)
}

/// `ψ_j(E) ↦ e^{-iEt} ψ_j(E)`.
pub fn evolve(psi: &ChannelState, t: f64) -> ChannelState {
    if t == 0.0 {
        return psi.clone();
    }
    let nodes = psi.grid().nodes();
    let phases: Vec<Complex64> = nodes
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -e * t))
        .collect();
    psi.map_amplitudes(|_, i, a| a * phases[i])
}

/// Grid used with [`random_smooth_state`]: logarithmic on `[1e-12, 40]`.
pub fn random_grid(n: usize) -> Result<EnergyGrid> {
    EnergyGrid::logarithmic(1e-12, 40.0, n)
}

/// Normalized state whose channels are sums of three complex Gaussian bumps
/// in `E` (centres in `[0.5, 4]`, widths in `[0.4, 1.5]`).
pub fn random_smooth_state(grid: Arc<EnergyGrid>, labels: &[&str], seed: u64) -> Result<ChannelState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<Vec<(f64, f64, Complex64)>> = labels
        .iter()
        .map(|_| {
            (0..3)
                .map(|_| {
                    let centre = rng.gen_range(0.5..4.0);
                    let width = rng.gen_range(0.4..1.5);
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (centre, width, c)
                })
                .collect()
        })
        .collect();
    ChannelState::from_fn(grid, labels, 1.0, |j, e| {
        bumps[j]
            .iter()
            .map(|&(c, w, a)| {
                let x = (e - c) / w;
                a * (-0.5 * x * x).exp()
            })
            .sum()
    })?
    .normalized()
}
