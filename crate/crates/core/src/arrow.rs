//! Discrete forward and backward arrow operators.
//!
//! Both kernels are split as `½δ(E - E′) ± (i/2π) P/(E - E′)`. The principal
//! value part is discretized in the symmetrized amplitudes `φ_i = √w_i ψ_i`
//! by the alternating-point rule: only node pairs an odd number of steps
//! apart contribute, each with twice the trapezoid weight. This keeps the
//! generator real, antisymmetric and Toeplitz in the grid coordinate, so that
//!
//! * expectations are real,
//! * forward + backward is the identity exactly,
//! * the generator's symbol is bounded by `π`, so expectations stay in
//!   `[0, ‖ψ‖²]`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::{ChannelState, EnergyGrid, Spacing};
use crate::states::evolve;
use crate::toeplitz::Toeplitz;

/// Largest tolerated imaginary part of an expectation value.
pub const HERMITICITY_TOLERANCE: f64 = 1e-8;
/// Largest tolerated increase of `⟨M_F⟩` between consecutive samples.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `M_F`, non-increasing in time.
    Forward,
    /// `M_B = 𝟙 - M_F`, non-decreasing in time.
    Backward,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Backward => -1.0,
        }
    }
}

/// Generator diagonal `t(k)` for offset `k`: the doubled trapezoid weight of
/// `√(w w′)/(E - E′)` at odd offsets and zero otherwise.
fn generator_entry(spacing: Spacing, step: f64, k: i64) -> f64 {
    if k % 2 == 0 {
        return 0.0;
    }
    match spacing {
        Spacing::Logarithmic => step / (0.5 * k as f64 * step).sinh(),
        Spacing::Linear => 2.0 / k as f64,
    }
}

/// Discretized kernel of `M_F` or `M_B` on one energy grid.
#[derive(Debug, Clone)]
pub struct SingularKernel {
    grid: Arc<EnergyGrid>,
    orientation: Orientation,
    generator: Toeplitz,
    sqrt_weights: Vec<f64>,
}

impl SingularKernel {
    pub fn new(grid: Arc<EnergyGrid>, orientation: Orientation) -> Self {
        let (spacing, step) = (grid.spacing(), grid.step());
        let generator = Toeplitz::new(grid.len(), |k| generator_entry(spacing, step, k));
        let sqrt_weights = grid.weights().iter().map(|w| w.sqrt()).collect();
        Self {
            grid,
            orientation,
            generator,
            sqrt_weights,
        }
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Coefficient of the `δ(E - E′)` term.
    pub fn delta_coefficient(&self) -> f64 {
        0.5
    }

    /// Real antisymmetric principal-value matrix `A` in the symmetrized
    /// amplitudes; the kernel acts on them as `½ + i·A` (forward) or
    /// `½ - i·A` (backward).
    pub fn pv_entry(&self, i: usize, k: usize) -> f64 {
        self.generator.diagonal(i as i64 - k as i64) / (2.0 * PI)
    }

    /// Kernel with the `(+1)` generator diagonal scaled by `factor`, which
    /// breaks antisymmetry. Used to exercise failure paths.
    #[doc(hidden)]
    pub fn with_corrupted_generator(mut self, factor: f64) -> Self {
        if self.grid.len() > 1 {
            let value = self.generator.diagonal(1) * factor;
            self.generator = self.generator.with_diagonal(1, value);
        }
        self
    }

    fn symmetrized(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().zip(&self.sqrt_weights).map(|(a, s)| a * s).collect()
    }

    fn coupling(&self) -> Complex64 {
        Complex64::new(0.0, self.orientation.sign() / (2.0 * PI))
    }

    /// `(K v)_i` for one channel's amplitude vector.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(v)?;
        let phi = self.symmetrized(v);
        let t_phi = self.generator.apply(&phi);
        let c = self.coupling();
        Ok(v.iter()
            .zip(&t_phi)
            .zip(&self.sqrt_weights)
            .map(|((a, y), s)| 0.5 * a + c * y / s)
            .collect())
    }

    /// `⟨v|K|v⟩` including its (ideally vanishing) imaginary part.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Result<Complex64> {
        self.check_len(v)?;
        let phi = self.symmetrized(v);
        let t_phi = self.generator.apply(&phi);
        let diag: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
        let cross: Complex64 = phi.iter().zip(&t_phi).map(|(a, b)| a.conj() * b).sum();
        Ok(0.5 * diag + self.coupling() * cross)
    }

    /// Complex `Σ_j ⟨ψ_j|K|ψ_j⟩`.
    pub fn state_form(&self, psi: &ChannelState) -> Result<Complex64> {
        psi.ensure_grid(&self.grid)?;
        psi.channels().iter().map(|c| self.quadratic_form(c)).sum()
    }

    /// Real expectation value in `psi`.
    pub fn expectation(&self, psi: &ChannelState) -> Result<f64> {
        let value = self.state_form(psi)?;
        let scale = psi.norm_sq().max(1.0);
        if value.im.abs() > HERMITICITY_TOLERANCE * scale {
            return Err(Error::NonHermitian {
                imaginary: value.im,
            });
        }
        Ok(value.re)
    }

    fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// A forward/backward kernel pair on one grid.
#[derive(Debug, Clone)]
pub struct ArrowOperator {
    forward: SingularKernel,
    backward: SingularKernel,
}

/// A step where `⟨M_F⟩` rose by more than [`MONOTONICITY_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    /// Index of the later sample.
    pub index: usize,
    pub increase: f64,
}

/// Samples of `⟨M_F(t)⟩` and `⟨M_B(t)⟩`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LyapunovTrace {
    pub times: Vec<f64>,
    pub mf_values: Vec<f64>,
    pub mb_values: Vec<f64>,
    pub violations: Vec<MonotonicityViolation>,
}

impl LyapunovTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest `⟨M_F⟩` increase between consecutive samples (negative for a
    /// strictly decreasing trace).
    pub fn max_step(&self) -> f64 {
        self.mf_values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ArrowOperator {
    pub fn new(grid: Arc<EnergyGrid>) -> Self {
        Self {
            forward: SingularKernel::new(grid.clone(), Orientation::Forward),
            backward: SingularKernel::new(grid, Orientation::Backward),
        }
    }

    pub fn for_state(psi: &ChannelState) -> Self {
        Self::new(Arc::clone(psi.grid()))
    }

    pub fn forward(&self) -> &SingularKernel {
        &self.forward
    }

    pub fn backward(&self) -> &SingularKernel {
        &self.backward
    }

    /// Operator whose forward kernel has broken antisymmetry.
    #[doc(hidden)]
    pub fn with_corrupted_forward(mut self, factor: f64) -> Self {
        self.forward = self.forward.with_corrupted_generator(factor);
        self
    }

    pub fn mf(&self, psi: &ChannelState, t: f64) -> Result<f64> {
        self.forward.expectation(&evolve(psi, t))
    }

    pub fn mb(&self, psi: &ChannelState, t: f64) -> Result<f64> {
        self.backward.expectation(&evolve(psi, t))
    }

    pub fn trace(&self, psi: &ChannelState, times: &[f64]) -> Result<LyapunovTrace> {
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "times",
                format!("must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        let mut trace = LyapunovTrace {
            times: times.to_vec(),
            ..Default::default()
        };
        for &t in times {
            let state = evolve(psi, t);
            trace.mf_values.push(self.forward.expectation(&state)?);
            trace.mb_values.push(self.backward.expectation(&state)?);
        }
        for (i, w) in trace.mf_values.windows(2).enumerate() {
            let increase = w[1] - w[0];
            if increase > MONOTONICITY_TOLERANCE {
                trace.violations.push(MonotonicityViolation {
                    index: i + 1,
                    increase,
                });
            }
        }
        Ok(trace)
    }

    /// `|⟨M_F⟩ + ⟨M_B⟩ - ‖ψ‖²|` at time `t`, from the complex forms.
    pub fn completeness_defect(&self, psi: &ChannelState, t: f64) -> Result<f64> {
        let state = evolve(psi, t);
        let total = self.forward.state_form(&state)? + self.backward.state_form(&state)?;
        Ok((total - state.norm_sq()).norm())
    }

    /// `⟨ψ|𝒟|ψ⟩` with `𝒟 = -i[H, M_F]`.
    pub fn mpc_rate(&self, psi: &ChannelState) -> Result<f64> {
        psi.ensure_grid(&self.forward.grid)?;
        let energies = self.forward.grid.nodes();
        let mut total = 0.0;
        for channel in psi.channels() {
            let phi = self.forward.symmetrized(channel);
            let e_phi: Vec<Complex64> = phi.iter().zip(energies).map(|(a, e)| a * e).collect();
            let t_e_phi = self.forward.generator.apply(&e_phi);
            // 𝒟 = (ET - TE)/2π is real symmetric; ⟨φ|𝒟|φ⟩ = -Re⟨φ|T E|φ⟩/π
            let z: Complex64 = phi.iter().zip(&t_e_phi).map(|(a, b)| a.conj() * b).sum();
            total -= z.re / PI;
        }
        Ok(total)
    }

    /// Power-iteration estimate of the operator norm of `[M_F, 𝒟]` on the
    /// grid.
    pub fn noncommutativity(&self) -> f64 {
        let n = self.forward.grid.len();
        let energies = self.forward.grid.nodes();
        let t = &self.forward.generator;
        let e = |x: &[f64]| -> Vec<f64> { x.iter().zip(energies).map(|(a, b)| a * b).collect() };
        // [M_F, 𝒟] = i R with R = [T, [E, T]] / 4π² real symmetric
        let apply = |x: &[f64]| -> Vec<f64> {
            let tx = t.apply_real(x);
            let etx = e(&tx);
            let tex = t.apply_real(&e(x));
            let ex_t: Vec<f64> = etx.iter().zip(&tex).map(|(a, b)| a - b).collect();
            let t_comm = t.apply_real(&ex_t);
            let comm_t: Vec<f64> = {
                let ettx = e(&t.apply_real(&tx));
                let tetx = t.apply_real(&etx);
                ettx.iter().zip(&tetx).map(|(a, b)| a - b).collect()
            };
            t_comm
                .iter()
                .zip(&comm_t)
                .map(|(a, b)| (a - b) / (4.0 * PI * PI))
                .collect()
        };
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
        let mut estimate = 0.0;
        for _ in 0..200 {
            let nx = norm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = apply(&x);
            let ny = norm(&y);
            if (ny - estimate).abs() <= 1e-12 * ny {
                return ny;
            }
            estimate = ny;
            x = y;
        }
        estimate
    }
}

/// `⟨ψ(t)|M_F|ψ(t)⟩`.
pub fn mf_expectation(psi: &ChannelState, t: f64) -> Result<f64> {
    ArrowOperator::for_state(psi).mf(psi, t)
}

/// `⟨ψ(t)|M_B|ψ(t)⟩`.
pub fn mb_expectation(psi: &ChannelState, t: f64) -> Result<f64> {
    ArrowOperator::for_state(psi).mb(psi, t)
}

pub fn lyapunov_trace(psi: &ChannelState, times: &[f64]) -> Result<LyapunovTrace> {
    ArrowOperator::for_state(psi).trace(psi, times)
}

pub fn completeness_defect(psi: &ChannelState, t: f64) -> Result<f64> {
    ArrowOperator::for_state(psi).completeness_defect(psi, t)
}

/// `(⟨𝒟⟩, ‖[M_F, 𝒟]‖)` with `𝒟 = -i[H, M_F]`.
pub fn mpc_commutator_defect(psi: &ChannelState) -> Result<(f64, f64)> {
    let op = ArrowOperator::for_state(psi);
    Ok((op.mpc_rate(psi)?, op.noncommutativity()))
}
