//! The eigenbasis of `M_F` and the change to the `m`-representation.
//!
//! The generalized eigenfunctions are
//! `g_m(E) = E^{-iν - 1/2} / (2π √(m(1-m)))` with
//! `ν = ln((1-m)/m) / 2π`, so the transform is a Fourier transform in
//! `u = ln E` of `e^{u/2} ψ(e^u)` at frequency `ν`.
//!
//! Amplitudes are stored as densities in `ν`:
//! `a(ν) = (2π)^{-1/2} ∫ e^{iνu} e^{u/2} ψ(e^u) du`, related to the
//! `m`-amplitude by `ψ(m) = a(ν) / √(2π m(1-m))` and normalized so that
//! `∫|a|² dν = ∫|ψ(m)|² dm`. Working in `ν` avoids the underflow of
//! `m(1-m)` at large `|ν|`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arrow::{Orientation, SingularKernel};
use crate::error::{invalid, Error, Result};
use crate::spectral::{ChannelState, EnergyGrid};
use crate::states::evolve;

/// `ν(m) = ln((1-m)/m) / 2π`.
pub fn nu_of_m(m: f64) -> f64 {
    ((1.0 - m) / m).ln() / (2.0 * PI)
}

/// `m(ν) = 1 / (1 + e^{2πν})`.
pub fn m_of_nu(nu: f64) -> f64 {
    1.0 / (1.0 + (2.0 * PI * nu).exp())
}

/// `1 - m(ν)`, without cancellation.
pub fn one_minus_m_of_nu(nu: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * PI * nu).exp())
}

/// `ln(m(1-m))` at `ν`, finite for every finite `ν`.
pub fn ln_m_one_minus_m(nu: f64) -> f64 {
    let x = 2.0 * PI * nu.abs();
    -(x + 2.0 * (-x).exp().ln_1p())
}

/// `dm = 2π m(1-m) dν` (in magnitude).
pub fn dm_dnu(nu: f64) -> f64 {
    2.0 * PI * ln_m_one_minus_m(nu).exp()
}

/// Generalized eigenfunction `g_m(E)`.
pub fn eigenfunction(m: f64, energy: f64) -> Result<Complex64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(invalid("m", format!("must lie in (0, 1), got {m}")));
    }
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(invalid("energy", format!("must be positive, got {energy}")));
    }
    let nu = nu_of_m(m);
    let u = energy.ln();
    let modulus = (-0.5 * u).exp() / (2.0 * PI * (m * (1.0 - m)).sqrt());
    Ok(Complex64::from_polar(modulus, -nu * u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    /// Conjugate to a logarithmic energy grid with `n` nodes from `u0` in
    /// steps `du`; transforms run through the FFT.
    Fft { n: usize, u0: f64, du: f64 },
    /// Arbitrary uniform `ν` nodes; transforms are direct sums.
    Direct,
}

/// Uniform grid in `ν`, equivalently a grid in `m ∈ (0, 1)` decreasing with
/// `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct MGrid {
    nu: Vec<f64>,
    d_nu: f64,
    layout: Layout,
}

impl MGrid {
    /// The grid conjugate to `grid`: `Δν = 2π/(nΔu)`,
    /// `ν_k = (k - n/2) Δν`, reaching `|ν| = π/Δu`.
    pub fn for_grid(grid: &EnergyGrid) -> Result<Self> {
        if !grid.is_logarithmic() {
            return Err(Error::NotLogarithmic);
        }
        let n = grid.len();
        let du = grid.step();
        let d_nu = 2.0 * PI / (n as f64 * du);
        let half = (n / 2) as f64;
        Ok(Self {
            nu: (0..n).map(|k| (k as f64 - half) * d_nu).collect(),
            d_nu,
            layout: Layout::Fft {
                n,
                u0: grid.e_min().ln(),
                du,
            },
        })
    }

    /// `count` uniform nodes on `[nu_min, nu_max]`.
    pub fn uniform(nu_min: f64, nu_max: f64, count: usize) -> Result<Self> {
        if !(nu_min.is_finite() && nu_max.is_finite() && nu_max > nu_min) {
            return Err(invalid("nu range", format!("[{nu_min}, {nu_max}] is empty")));
        }
        if count < 2 {
            return Err(invalid("count", "need at least two nodes"));
        }
        let d_nu = (nu_max - nu_min) / (count - 1) as f64;
        Ok(Self {
            nu: (0..count).map(|k| nu_min + k as f64 * d_nu).collect(),
            d_nu,
            layout: Layout::Direct,
        })
    }

    /// Uniform grid covering `m ∈ [m_lo, m_hi]`.
    pub fn over_m(m_lo: f64, m_hi: f64, count: usize) -> Result<Self> {
        if !(0.0 < m_lo && m_lo < m_hi && m_hi < 1.0) {
            return Err(invalid("m range", format!("[{m_lo}, {m_hi}] must lie inside (0, 1)")));
        }
        Self::uniform(nu_of_m(m_hi), nu_of_m(m_lo), count)
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn nu_nodes(&self) -> &[f64] {
        &self.nu
    }

    pub fn d_nu(&self) -> f64 {
        self.d_nu
    }

    pub fn m_nodes(&self) -> Vec<f64> {
        self.nu.iter().map(|&v| m_of_nu(v)).collect()
    }

    pub fn one_minus_m_nodes(&self) -> Vec<f64> {
        self.nu.iter().map(|&v| one_minus_m_of_nu(v)).collect()
    }

    /// Weights for `∫₀¹ dm`: `Δν · 2π m(1-m)`.
    pub fn m_weights(&self) -> Vec<f64> {
        self.nu.iter().map(|&v| self.d_nu * dm_dnu(v)).collect()
    }

    /// Whether transforms to and from `grid` run through the FFT.
    pub fn is_conjugate_to(&self, grid: &EnergyGrid) -> bool {
        match self.layout {
            Layout::Fft { n, u0, du } => {
                n == grid.len() && grid.is_logarithmic() && u0 == grid.e_min().ln() && du == grid.step()
            }
            Layout::Direct => false,
        }
    }
}

/// Per-channel `ν`-density amplitudes on an [`MGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MDistribution {
    mgrid: MGrid,
    labels: Vec<String>,
    amplitudes: Vec<Vec<Complex64>>,
    mass: f64,
}

impl MDistribution {
    pub fn mgrid(&self) -> &MGrid {
        &self.mgrid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `a_j(ν_k)`.
    pub fn nu_amplitudes(&self, j: usize) -> &[Complex64] {
        &self.amplitudes[j]
    }

    /// `ψ_j(m_k) = a_j(ν_k) / √(2π m(1-m))`; overflows far in the tails.
    pub fn m_amplitude(&self, j: usize, k: usize) -> Complex64 {
        let scale = (-0.5 * ((2.0 * PI).ln() + ln_m_one_minus_m(self.mgrid.nu[k]))).exp();
        self.amplitudes[j][k] * scale
    }

    /// `|ψ_j(m_k)|²`.
    pub fn m_density(&self, j: usize, k: usize) -> f64 {
        let log = self.amplitudes[j][k].norm_sqr().ln() - (2.0 * PI).ln() - ln_m_one_minus_m(self.mgrid.nu[k]);
        log.exp()
    }

    /// `|Σ_j ψ_j(m_k)|²`.
    pub fn combined_m_density(&self, k: usize) -> f64 {
        let sum: Complex64 = self.amplitudes.iter().map(|a| a[k]).sum();
        (sum.norm_sqr().ln() - (2.0 * PI).ln() - ln_m_one_minus_m(self.mgrid.nu[k])).exp()
    }

    pub fn channel_norm_sq(&self, j: usize) -> f64 {
        self.mgrid.d_nu * self.amplitudes[j].iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `Σ_j ∫|ψ_j(m)|² dm`.
    pub fn norm_sq(&self) -> f64 {
        (0..self.amplitudes.len()).map(|j| self.channel_norm_sq(j)).sum()
    }

    /// `Σ_j ∫ m |ψ_j(m)|² dm`.
    pub fn first_moment(&self) -> f64 {
        let d = self.mgrid.d_nu;
        self.amplitudes
            .iter()
            .map(|a| {
                a.iter()
                    .zip(&self.mgrid.nu)
                    .map(|(x, &v)| d * m_of_nu(v) * x.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// First moment over mass.
    pub fn mean_m(&self) -> f64 {
        self.first_moment() / self.norm_sq()
    }

    /// `Σ_j ∫ φ_j*(m) ψ_j(m) dm`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.mgrid != other.mgrid {
            return Err(Error::GridMismatch);
        }
        if self.labels != other.labels {
            return Err(Error::ChannelMismatch {
                left: self.labels.clone(),
                right: other.labels.clone(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            for (x, y) in a.iter().zip(b) {
                acc += x.conj() * y;
            }
        }
        Ok(acc * self.mgrid.d_nu)
    }

    /// Keeps the nodes with `m ∈ [m_lo, m_hi]` and zeroes the rest.
    pub fn restrict(&self, m_lo: f64, m_hi: f64) -> Self {
        let keep: Vec<bool> = self
            .mgrid
            .nu
            .iter()
            .map(|&v| {
                let m = m_of_nu(v);
                m >= m_lo && m <= m_hi
            })
            .collect();
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|a| {
                a.iter()
                    .zip(&keep)
                    .map(|(x, &k)| if k { *x } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        Self {
            amplitudes,
            ..self.clone()
        }
    }
}

/// `√(w_i/Δu) ψ_i`, which is `e^{u/2} ψ` at interior nodes.
fn log_samples(grid: &EnergyGrid, channel: &[Complex64]) -> Vec<Complex64> {
    let du = grid.step();
    channel
        .iter()
        .zip(grid.weights())
        .map(|(a, w)| a * (w / du).sqrt())
        .collect()
}

fn fft_forward(grid: &EnergyGrid, d_nu: f64, channel: &[Complex64]) -> Vec<Complex64> {
    let n = grid.len();
    let du = grid.step();
    let u0 = grid.e_min().ln();
    let half = (n / 2) as f64;
    let mut buf: Vec<Complex64> = log_samples(grid, channel)
        .into_iter()
        .enumerate()
        .map(|(i, x)| if i % 2 == 1 { -x } else { x })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = du / (2.0 * PI).sqrt();
    buf.iter()
        .enumerate()
        .map(|(k, x)| x * Complex64::from_polar(scale, (k as f64 - half) * d_nu * u0))
        .collect()
}

fn direct_forward(grid: &EnergyGrid, nu: &[f64], channel: &[Complex64]) -> Vec<Complex64> {
    let du = grid.step();
    let u0 = grid.e_min().ln();
    let samples = log_samples(grid, channel);
    let scale = du / (2.0 * PI).sqrt();
    nu.iter()
        .map(|&v| {
            let step = Complex64::from_polar(1.0, v * du);
            let mut phase = Complex64::from_polar(1.0, v * u0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, x) in samples.iter().enumerate() {
                if i % 256 == 0 {
                    // refresh to keep the recurrence from drifting
                    phase = Complex64::from_polar(1.0, v * (u0 + i as f64 * du));
                }
                acc += x * phase;
                phase *= step;
            }
            acc * scale
        })
        .collect()
}

/// `ψ_j(m) = ∫ g_m*(E) ψ_j(E) dE` on `mgrid`.
pub fn to_m_representation(psi: &ChannelState, mgrid: &MGrid) -> Result<MDistribution> {
    let grid = psi.grid();
    if !grid.is_logarithmic() {
        return Err(Error::NotLogarithmic);
    }
    let fft = mgrid.is_conjugate_to(grid);
    let amplitudes = psi
        .channels()
        .iter()
        .map(|c| {
            if fft {
                fft_forward(grid, mgrid.d_nu, c)
            } else {
                direct_forward(grid, &mgrid.nu, c)
            }
        })
        .collect();
    Ok(MDistribution {
        mgrid: mgrid.clone(),
        labels: psi.labels().to_vec(),
        amplitudes,
        mass: psi.mass(),
    })
}

/// Inverse of [`to_m_representation`]; the distribution must live on the
/// grid conjugate to `grid`.
pub fn from_m_representation(phi: &MDistribution, grid: Arc<EnergyGrid>) -> Result<ChannelState> {
    if !phi.mgrid.is_conjugate_to(&grid) {
        return Err(Error::GridMismatch);
    }
    let n = grid.len();
    let du = grid.step();
    let u0 = grid.e_min().ln();
    let half = (n / 2) as f64;
    let d_nu = phi.mgrid.d_nu;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = d_nu / (2.0 * PI).sqrt();
    let unweight: Vec<f64> = grid.weights().iter().map(|w| (du / w).sqrt()).collect();
    let amplitudes = phi
        .amplitudes
        .iter()
        .map(|a| {
            let mut buf: Vec<Complex64> = a
                .iter()
                .enumerate()
                .map(|(k, x)| x * Complex64::from_polar(1.0, -(k as f64 - half) * d_nu * u0))
                .collect();
            fft.process(&mut buf);
            buf.iter()
                .enumerate()
                .map(|(i, x)| {
                    let sign = if i % 2 == 1 { -scale } else { scale };
                    x * sign * unweight[i]
                })
                .collect()
        })
        .collect();
    ChannelState::new(grid, phi.labels.clone(), amplitudes, phi.mass)
}

/// `Σ_j ∫₀¹ m |ψ_j(m, t)|² dm`.
pub fn mf_expectation_via_m(psi: &ChannelState, t: f64) -> Result<f64> {
    let mgrid = MGrid::for_grid(psi.grid())?;
    Ok(to_m_representation(&evolve(psi, t), &mgrid)?.first_moment())
}

/// Logarithmic grid on `u ∈ [-h, h]` with `h = 0.625 √n`, so that refining
/// shrinks the step and widens the range together.
pub fn eigen_grid(n: usize) -> Result<EnergyGrid> {
    EnergyGrid::symmetric_log(n, 0.625 * (n as f64).sqrt())
}

/// `‖K g_m - m g_m‖ / ‖g_m‖` over the middle half of the grid in `ln E`.
pub fn eigen_residual(m: f64, grid: &Arc<EnergyGrid>) -> Result<f64> {
    let g: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&e| eigenfunction(m, e))
        .collect::<Result<_>>()?;
    let kernel = SingularKernel::new(Arc::clone(grid), Orientation::Forward);
    let kg = kernel.apply(&g)?;
    let w = grid.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for i in grid.interior_range() {
        num += w[i] * (kg[i] - m * g[i]).norm_sqr();
        den += w[i] * g[i].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Spectral projection onto `m ∈ [m_lo, m_hi]`.
pub fn project_onto_interval(psi: &ChannelState, m_lo: f64, m_hi: f64) -> Result<ChannelState> {
    let mgrid = MGrid::for_grid(psi.grid())?;
    let restricted = to_m_representation(psi, &mgrid)?.restrict(m_lo, m_hi);
    from_m_representation(&restricted, Arc::clone(psi.grid()))
}

/// Probability that the part of `psi` with `m` in `low` is found with `m` in
/// `high` after time `t`.
pub fn backward_running_probability(
    psi: &ChannelState,
    low: (f64, f64),
    high: (f64, f64),
    t: f64,
) -> Result<f64> {
    if !(low.0 <= low.1 && high.0 <= high.1 && low.1 <= high.0) {
        return Err(invalid(
            "intervals",
            format!("need ordered disjoint intervals, got {low:?} and {high:?}"),
        ));
    }
    let prepared = project_onto_interval(psi, low.0, low.1)?;
    let mass = prepared.norm_sq();
    if !(mass > 1e-300) {
        return Err(Error::EmptyProjection);
    }
    let later = evolve(&prepared, t);
    let mgrid = MGrid::for_grid(psi.grid())?;
    let found = to_m_representation(&later, &mgrid)?.restrict(high.0, high.1);
    Ok(found.norm_sq() / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{MINUS, PLUS};
    use crate::states::{exponential_profile, oracle_grid, random_grid, random_smooth_state};

    fn oracle() -> ChannelState {
        exponential_profile(Arc::new(oracle_grid(4096).unwrap())).unwrap()
    }

    #[test]
    fn eigenfunction_values() {
        assert!((eigenfunction(0.5, 1.0).unwrap() - 1.0 / PI).norm() < 1e-15);
        assert!((eigenfunction(0.5, 4.0).unwrap() - 0.5 / PI).norm() < 1e-15);
        assert!((eigenfunction(0.2, 1.0).unwrap().norm() - 1.0 / (0.8 * PI)).abs() < 1e-15);
        assert!(eigenfunction(0.0, 1.0).is_err());
        assert!(eigenfunction(1.0, 1.0).is_err());
    }

    #[test]
    fn m_nu_bijection() {
        for m in [1e-9, 0.1, 0.5, 0.77, 1.0 - 1e-9] {
            assert!((m_of_nu(nu_of_m(m)) - m).abs() < 1e-12);
        }
        for nu in [-300.0, -1.0, 0.0, 2.0, 300.0] {
            let lhs = ln_m_one_minus_m(nu);
            assert!(lhs.is_finite());
            if nu.abs() < 10.0 {
                assert!((lhs - (m_of_nu(nu) * one_minus_m_of_nu(nu)).ln()).abs() < 1e-12);
            }
        }
        let g = MGrid::over_m(0.1, 0.9, 11).unwrap();
        let m = g.m_nodes();
        assert!(m.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exponential_profile_density() {
        let psi = oracle();
        let mgrid = MGrid::over_m(0.05, 0.95, 181).unwrap();
        let dist = to_m_representation(&psi, &mgrid).unwrap();
        let m = mgrid.m_nodes();
        for k in 0..mgrid.len() {
            let expected = 1.0 / (PI * (m[k] * (1.0 - m[k])).sqrt());
            assert!((dist.m_density(0, k) - expected).abs() < 1e-4, "{}", m[k]);
        }
    }

    #[test]
    fn parseval_and_first_moment() {
        let psi = oracle();
        let dist = to_m_representation(&psi, &MGrid::for_grid(psi.grid()).unwrap()).unwrap();
        assert!((dist.norm_sq() - psi.norm_sq()).abs() < 1e-12);
        assert!((dist.norm_sq() - 1.0).abs() < 1e-6);
        assert!((dist.first_moment() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn fft_matches_direct_sum() {
        let grid = Arc::new(random_grid(512).unwrap());
        let psi = random_smooth_state(grid.clone(), &[PLUS, MINUS], 2).unwrap();
        let fft_grid = MGrid::for_grid(&grid).unwrap();
        let fast = to_m_representation(&psi, &fft_grid).unwrap();
        let direct = MGrid::uniform(fft_grid.nu_nodes()[0], *fft_grid.nu_nodes().last().unwrap(), 512).unwrap();
        let slow = to_m_representation(&psi, &direct).unwrap();
        for j in 0..2 {
            for (a, b) in fast.nu_amplitudes(j).iter().zip(slow.nu_amplitudes(j)) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip() {
        let psi = oracle();
        let mgrid = MGrid::for_grid(psi.grid()).unwrap();
        let back = from_m_representation(&to_m_representation(&psi, &mgrid).unwrap(), psi.grid().clone()).unwrap();
        // roundoff is amplified by 1/√w near E_min, so compare interior nodes
        for i in psi.grid().interior_range() {
            assert!((back.channel(0)[i] - psi.channel(0)[i]).norm() < 1e-10);
        }
        let other = Arc::new(oracle_grid(2048).unwrap());
        let dist = to_m_representation(&psi, &mgrid).unwrap();
        assert!(matches!(from_m_representation(&dist, other), Err(Error::GridMismatch)));
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let grid = Arc::new(oracle_grid(256).unwrap());
        let zero = ChannelState::zero(grid.clone(), &["0"], 1.0).unwrap();
        let dist = to_m_representation(&zero, &MGrid::for_grid(&grid).unwrap()).unwrap();
        assert!(dist.nu_amplitudes(0).iter().all(|a| a.norm() == 0.0));
        assert_eq!(mf_expectation_via_m(&zero, 0.0).unwrap(), 0.0);
        assert_eq!(
            backward_running_probability(&zero, (0.4, 0.6), (0.7, 0.9), 0.05),
            Err(Error::EmptyProjection)
        );
    }

    #[test]
    fn linear_grids_are_rejected() {
        let grid = Arc::new(EnergyGrid::linear(1e-3, 40.0, 64).unwrap());
        let psi = ChannelState::zero(grid.clone(), &["0"], 1.0).unwrap();
        assert_eq!(MGrid::for_grid(&grid), Err(Error::NotLogarithmic));
        let mgrid = MGrid::uniform(-1.0, 1.0, 8).unwrap();
        assert_eq!(to_m_representation(&psi, &mgrid), Err(Error::NotLogarithmic));
    }

    #[test]
    fn projection_is_idempotent() {
        let grid = Arc::new(random_grid(1024).unwrap());
        let psi = random_smooth_state(grid, &[PLUS, MINUS], 4).unwrap();
        let once = project_onto_interval(&psi, 0.4, 0.6).unwrap();
        let twice = project_onto_interval(&once, 0.4, 0.6).unwrap();
        for j in 0..2 {
            for (a, b) in once.channel(j).iter().zip(twice.channel(j)) {
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn eigen_residual_is_small() {
        let grid = Arc::new(eigen_grid(4096).unwrap());
        let r = eigen_residual(0.5, &grid).unwrap();
        assert!(r < 1e-2, "{r}");
    }
}
