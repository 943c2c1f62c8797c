//! A delta-function barrier as a concrete member of the class of
//! Hamiltonians related to the free one by Møller operators.
//!
//! Channel convention: `+` labels waves incident from the left (moving
//! right), `-` labels waves incident from the right. For the free particle
//! these are the plane waves `e^{±ipx}`; the interacting scattering states
//! with the same labels are
//!
//! ```text
//! |p, +⟩_I :  e^{ipx} + r e^{-ipx}  (x < 0),   τ e^{ipx}   (x > 0)
//! |p, -⟩_I :  τ e^{-ipx}            (x < 0),   e^{-ipx} + r e^{ipx}  (x > 0)
//! ```
//!
//! with `τ = p / (p + iμλ)` and `r = -iμλ / (p + iμλ)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arrow::{Orientation, SingularKernel};
use crate::error::{invalid, Error, Result};
use crate::mtransform::{to_m_representation, MGrid};
use crate::spectral::{ChannelState, EnergyGrid, MINUS, PLUS};
use crate::states::evolve;

/// `V(x) = λ δ(x)` for a particle of mass `μ`, restricted to `λ ≥ 0` so that
/// there is no bound state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringModel {
    coupling: f64,
    mass: f64,
}

pub fn delta_model(coupling: f64, mass: f64) -> Result<ScatteringModel> {
    if !(coupling.is_finite() && coupling >= 0.0) {
        return Err(invalid(
            "coupling",
            format!("must be finite and non-negative (no bound state), got {coupling}"),
        ));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(invalid("mass", format!("must be positive, got {mass}")));
    }
    Ok(ScatteringModel { coupling, mass })
}

impl ScatteringModel {
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn denominator(&self, p: f64) -> Complex64 {
        Complex64::new(p, self.mass * self.coupling)
    }

    /// `τ(p)` for `p > 0`.
    pub fn transmission(&self, p: f64) -> Complex64 {
        if self.coupling == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::new(p, 0.0) / self.denominator(p)
    }

    /// `r(p)` for `p > 0`.
    pub fn reflection(&self, p: f64) -> Complex64 {
        if self.coupling == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, -self.mass * self.coupling) / self.denominator(p)
    }

    /// Maps in-channel coefficients `(c₊, c₋)` to out-channel coefficients
    /// (outgoing right, outgoing left).
    pub fn s_matrix(&self, p: f64) -> [[Complex64; 2]; 2] {
        let (t, r) = (self.transmission(p), self.reflection(p));
        [[t, r], [r, t]]
    }

    /// `max |S†S - 𝟙|` at momentum `p`.
    pub fn unitarity_defect(&self, p: f64) -> f64 {
        let s = self.s_matrix(p);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                let entry: Complex64 = (0..2).map(|l| s[l][i].conj() * s[l][k]).sum();
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((entry - target).norm());
            }
        }
        worst
    }
}

/// An interacting state given by its coefficients over the interacting
/// scattering states `Ω₊|E, ±⟩`.
#[derive(Debug, Clone)]
pub struct InteractingState {
    model: ScatteringModel,
    coefficients: ChannelState,
}

impl InteractingState {
    pub fn model(&self) -> &ScatteringModel {
        &self.model
    }

    pub fn coefficients(&self) -> &ChannelState {
        &self.coefficients
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.norm_sq()
    }

    /// Coefficients over the outgoing scattering states, `S` applied per
    /// energy.
    pub fn outgoing(&self) -> Result<ChannelState> {
        let (plus, minus) = channel_indices(&self.coefficients)?;
        let mass = self.coefficients.mass();
        let momenta: Vec<f64> = self
            .coefficients
            .grid()
            .nodes()
            .iter()
            .map(|e| (2.0 * mass * e).sqrt())
            .collect();
        let c = self.coefficients.channels();
        let mut out = vec![Vec::with_capacity(momenta.len()); 2];
        for (i, &p) in momenta.iter().enumerate() {
            let s = self.model.s_matrix(p);
            let (a, b) = (c[plus][i], c[minus][i]);
            out[plus].push(s[0][0] * a + s[0][1] * b);
            out[minus].push(s[1][0] * a + s[1][1] * b);
        }
        ChannelState::new(
            Arc::clone(self.coefficients.grid()),
            self.coefficients.labels().to_vec(),
            out,
            mass,
        )
    }

    /// Inverse of [`outgoing`](Self::outgoing).
    pub fn from_outgoing(model: ScatteringModel, outgoing: &ChannelState) -> Result<Self> {
        let (plus, minus) = channel_indices(outgoing)?;
        let mass = outgoing.mass();
        let d = outgoing.channels();
        let mut c = vec![Vec::with_capacity(d[0].len()); 2];
        for (i, &e) in outgoing.grid().nodes().iter().enumerate() {
            let s = model.s_matrix((2.0 * mass * e).sqrt());
            let (a, b) = (d[plus][i], d[minus][i]);
            c[plus].push(s[0][0].conj() * a + s[1][0].conj() * b);
            c[minus].push(s[0][1].conj() * a + s[1][1].conj() * b);
        }
        Ok(Self {
            model,
            coefficients: ChannelState::new(
                Arc::clone(outgoing.grid()),
                outgoing.labels().to_vec(),
                c,
                mass,
            )?,
        })
    }
}

fn channel_indices(psi: &ChannelState) -> Result<(usize, usize)> {
    let labels = psi.labels();
    let find = |l: &str| labels.iter().position(|x| x == l);
    match (find(PLUS), find(MINUS), labels.len()) {
        (Some(p), Some(m), 2) => Ok((p, m)),
        _ => Err(Error::ChannelMismatch {
            left: labels.to_vec(),
            right: vec![PLUS.to_string(), MINUS.to_string()],
        }),
    }
}

/// The interacting state sharing `psi0`'s expansion coefficients.
pub fn moller_map(psi0: &ChannelState, model: &ScatteringModel) -> Result<InteractingState> {
    channel_indices(psi0)?;
    if psi0.mass() != model.mass {
        return Err(invalid("mass", "state and model masses differ"));
    }
    Ok(InteractingState {
        model: *model,
        coefficients: psi0.clone(),
    })
}

/// Largest differences between free and interacting dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EquivalenceDefect {
    /// `max_t |⟨M_F^{(I)}(t)⟩ - ⟨M_F^{(0)}(t)⟩|`.
    pub mf: f64,
    /// `max_t sup |ψ_I(ν, t) - ψ_0(ν, t)|` over the `ν`-density amplitudes.
    pub m_distribution: f64,
}

impl EquivalenceDefect {
    pub fn max(&self) -> f64 {
        self.mf.max(self.m_distribution)
    }
}

/// Compares the free evolution of `psi0` with the interacting evolution of
/// its Møller image. The interacting state is evolved in the outgoing basis
/// and brought back to the incoming one before `M_F^{(I)}` is applied.
pub fn equivalence_defect(
    psi0: &ChannelState,
    model: &ScatteringModel,
    times: &[f64],
) -> Result<EquivalenceDefect> {
    let interacting = moller_map(psi0, model)?;
    let outgoing = interacting.outgoing()?;
    let kernel = SingularKernel::new(Arc::clone(psi0.grid()), Orientation::Forward);
    let mgrid = MGrid::for_grid(psi0.grid())?;
    let mut defect = EquivalenceDefect::default();
    for &t in times {
        let free = evolve(psi0, t);
        let coupled = InteractingState::from_outgoing(*model, &evolve(&outgoing, t))?;
        let mf_free = kernel.expectation(&free)?;
        let mf_coupled = kernel.expectation(&coupled.coefficients)?;
        defect.mf = defect.mf.max((mf_free - mf_coupled).abs());

        let a = to_m_representation(&free, &mgrid)?;
        let b = to_m_representation(&coupled.coefficients, &mgrid)?;
        for j in 0..a.labels().len() {
            for (x, y) in a.nu_amplitudes(j).iter().zip(b.nu_amplitudes(j)) {
                defect.m_distribution = defect.m_distribution.max((x - y).norm());
            }
        }
    }
    Ok(defect)
}

/// Free mass allowed outside the overlap window.
pub const WINDOW_LEAKAGE: f64 = 1e-6;
/// Half-width of the overlap window in standard deviations.
pub const WINDOW_SIGMAS: f64 = 12.0;

/// Cubic Lagrange interpolation in the grid coordinate; constant below the
/// grid and zero above it.
fn interpolate(grid: &EnergyGrid, values: &[Complex64], energy: f64) -> Complex64 {
    let n = grid.len();
    if energy > grid.e_max() {
        return Complex64::new(0.0, 0.0);
    }
    if energy <= grid.e_min() {
        return values[0];
    }
    let s = if grid.is_logarithmic() { energy.ln() } else { energy };
    let s0 = grid.coordinate(0);
    let x = (s - s0) / grid.step();
    if n < 4 {
        let i = (x.floor() as usize).min(n - 2);
        let f = x - i as f64;
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }
    let i = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let f = x - i as f64;
    let mut out = Complex64::new(0.0, 0.0);
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (f - b as f64) / (a as f64 - b as f64);
            }
        }
        out += values[i + a] * l;
    }
    out
}

/// Free and interacting wave functions on a uniform position grid.
#[derive(Debug, Clone)]
pub struct PositionFrames {
    pub x: Vec<f64>,
    pub free: Vec<Complex64>,
    pub interacting: Vec<Complex64>,
}

/// Reconstructs `ψ₀(x, t)` and `ψ_I(x, t)` from plane waves and the
/// scattering states by FFT over a uniform momentum grid.
pub fn position_frames(psi0: &ChannelState, model: &ScatteringModel, t: f64) -> Result<PositionFrames> {
    let (plus, minus) = channel_indices(psi0)?;
    let grid = psi0.grid();
    let mass = psi0.mass();
    let p_top = (2.0 * mass * grid.e_max()).sqrt();
    // momentum amplitudes ψ̃(±p) = (p/μ)^{1/2} ψ_±(E) at the grid nodes
    let scale: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|e| ((2.0 * mass * e).sqrt() / mass).sqrt())
        .collect();
    let tilde = |j: usize| -> Vec<Complex64> {
        psi0.channel(j).iter().zip(&scale).map(|(a, s)| a * s).collect()
    };
    let (right, left) = (tilde(plus), tilde(minus));

    let dx = PI / (1.25 * p_top);
    let half_width = p_top * t.abs() / mass + 100.0;
    let n = ((2.0 * half_width / dx).ceil() as usize).next_power_of_two();
    let x0 = -0.5 * n as f64 * dx;
    let dp = 2.0 * PI / (n as f64 * dx);
    let half = (n / 2) as f64;

    let mut free = vec![Complex64::new(0.0, 0.0); n];
    let mut scattered_left = vec![Complex64::new(0.0, 0.0); n];
    let mut scattered_right = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let p = (k as f64 - half) * dp;
        let q = p.abs();
        let energy = q * q / (2.0 * mass);
        let a_plus = interpolate(grid, &right, energy);
        let a_minus = interpolate(grid, &left, energy);
        let evolution = Complex64::from_polar(1.0, -energy * t);
        let shift = Complex64::from_polar(1.0, p * x0);
        // trapezoid weight: the scattered integrands stop at p = 0
        let edge = if k as f64 == half { 0.5 } else { 1.0 };
        if p >= 0.0 {
            free[k] = a_plus * evolution * shift;
            if q > 0.0 || edge < 1.0 {
                let (tr, rf) = (model.transmission(q), model.reflection(q));
                scattered_right[k] = edge * (a_plus * (tr - 1.0) + a_minus * rf) * evolution * shift;
            }
        }
        if p <= 0.0 {
            free[k] = a_minus * evolution * shift;
            let (tr, rf) = (model.transmission(q), model.reflection(q));
            scattered_left[k] = edge * (a_plus * rf + a_minus * (tr - 1.0)) * evolution * shift;
        }
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    for buf in [&mut free, &mut scattered_left, &mut scattered_right] {
        ifft.process(buf);
    }
    let norm = dp / (2.0 * PI).sqrt();
    let x: Vec<f64> = (0..n).map(|j| x0 + j as f64 * dx).collect();
    let sign = |j: usize| if j % 2 == 1 { -norm } else { norm };
    let free: Vec<Complex64> = free.iter().enumerate().map(|(j, v)| v * sign(j)).collect();
    let interacting = (0..n)
        .map(|j| {
            let extra = if x[j] < 0.0 { scattered_left[j] } else { scattered_right[j] };
            free[j] + extra * sign(j)
        })
        .collect();
    Ok(PositionFrames { x, free, interacting })
}

/// `|⟨ψ₀(t)|ψ_I(t)⟩|²` over a window of `±12σ` around the free packet,
/// normalized by the window norms of both states.
pub fn asymptotic_overlap(psi0: &ChannelState, model: &ScatteringModel, t: f64) -> Result<f64> {
    let frames = position_frames(psi0, model, t)?;
    let dx = frames.x[1] - frames.x[0];
    let density: Vec<f64> = frames.free.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = density.iter().sum::<f64>() * dx;
    if !(total > 0.0) {
        return Err(invalid("state", "free packet has no mass"));
    }
    let mean = frames.x.iter().zip(&density).map(|(x, d)| x * d).sum::<f64>() * dx / total;
    let var = frames
        .x
        .iter()
        .zip(&density)
        .map(|(x, d)| (x - mean).powi(2) * d)
        .sum::<f64>()
        * dx
        / total;
    let (lo, hi) = (mean - WINDOW_SIGMAS * var.sqrt(), mean + WINDOW_SIGMAS * var.sqrt());
    let (first, last) = (frames.x[0], *frames.x.last().unwrap());
    if lo < first || hi > last {
        return Err(Error::Window(format!(
            "window [{lo:.1}, {hi:.1}] leaves the domain [{first:.1}, {last:.1}]"
        )));
    }
    let mut inside = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    let mut coupled = 0.0;
    for (j, &x) in frames.x.iter().enumerate() {
        if x >= lo && x <= hi {
            inside += density[j];
            cross += frames.free[j].conj() * frames.interacting[j];
            coupled += frames.interacting[j].norm_sqr();
        }
    }
    let leaked = (total - inside * dx) / total;
    if leaked > WINDOW_LEAKAGE {
        return Err(Error::Window(format!(
            "{leaked:.2e} of the free packet lies outside [{lo:.1}, {hi:.1}]"
        )));
    }
    Ok(cross.norm_sqr() / (inside * coupled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gaussian_packet, GaussianPacketParams};

    fn packet(n: usize) -> ChannelState {
        let p = GaussianPacketParams::default();
        gaussian_packet(&p, Arc::new(p.default_grid(n).unwrap())).unwrap()
    }

    /// Transmission of a lattice model `-ψ''/2μ + (λ/h) δ_{j0} ψ`, with the
    /// energy chosen on the lattice dispersion for wavenumber `p`.
    fn lattice_transmission(lambda: f64, mass: f64, p: f64, h: f64) -> Complex64 {
        let e = (1.0 - (p * h).cos()) / (mass * h * h);
        let wave = |j: i64| Complex64::from_polar(1.0, p * h * j as f64);
        let (psi0, psi1) = (wave(0), wave(1));
        // -(ψ₁ - 2ψ₀ + ψ₋₁)/(2μh²) + (λ/h)ψ₀ = Eψ₀
        let psi_m1 = 2.0 * psi0 - psi1 + 2.0 * mass * h * h * (lambda / h - e) * psi0;
        // ψ_j = A e^{ipjh} + B e^{-ipjh} for j ≤ 0
        let (z, zi) = (Complex64::from_polar(1.0, -p * h), Complex64::from_polar(1.0, p * h));
        let a = (psi_m1 - psi0 * zi) / (z - zi);
        1.0 / a
    }

    #[test]
    fn free_case_has_trivial_amplitudes() {
        let m = delta_model(0.0, 1.0).unwrap();
        for p in [0.1, 1.0, 30.0] {
            assert_eq!(m.transmission(p), Complex64::new(1.0, 0.0));
            assert_eq!(m.reflection(p), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_attractive_coupling() {
        assert!(delta_model(-1.0, 1.0).is_err());
        assert!(delta_model(1.0, 0.0).is_err());
    }

    #[test]
    fn transmission_matches_lattice_solve() {
        let m = delta_model(1.0, 1.0).unwrap();
        let exact = m.transmission(1.0).norm_sqr();
        assert!((exact - 0.5).abs() < 1e-15);
        assert!((exact - (1.0 - m.reflection(1.0).norm_sqr())).abs() < 1e-15);
        let lattice = lattice_transmission(1.0, 1.0, 1.0, 1e-5).norm_sqr();
        assert!((lattice - exact).abs() < 1e-4, "{lattice} {exact}");
    }

    #[test]
    fn moller_map_keeps_coefficients() {
        let psi = packet(1024);
        let m = delta_model(2.0, 1.0).unwrap();
        let i = moller_map(&psi, &m).unwrap();
        assert_eq!(i.coefficients().channels(), psi.channels());
        assert_eq!(i.norm_sq(), psi.norm_sq());
        let back = InteractingState::from_outgoing(m, &i.outgoing().unwrap()).unwrap();
        for j in 0..2 {
            for (a, b) in back.coefficients().channel(j).iter().zip(psi.channel(j)) {
                assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn equivalence_holds() {
        let psi = packet(2048);
        let times: Vec<f64> = (0..11).map(|k| -0.3 + 0.06 * k as f64).collect();
        let free = equivalence_defect(&psi, &delta_model(0.0, 1.0).unwrap(), &times).unwrap();
        assert_eq!(free.max(), 0.0);
        let coupled = equivalence_defect(&psi, &delta_model(2.0, 1.0).unwrap(), &times).unwrap();
        assert!(coupled.mf < 1e-10 && coupled.m_distribution < 1e-10, "{coupled:?}");
    }

    #[test]
    fn free_reconstruction_matches_closed_form() {
        let params = GaussianPacketParams::default();
        let psi = packet(4096);
        let frames = position_frames(&psi, &delta_model(0.0, 1.0).unwrap(), -2.0).unwrap();
        let mut worst: f64 = 0.0;
        for (x, v) in frames.x.iter().zip(&frames.free) {
            let exact = crate::states::gaussian_position_amplitude(&params, *x, -2.0);
            worst = worst.max((v - exact).norm());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn overlap_approaches_one() {
        let psi = packet(4096);
        let free = delta_model(0.0, 1.0).unwrap();
        assert!((asymptotic_overlap(&psi, &free, -5.0).unwrap() - 1.0).abs() < 1e-10);
        let m = delta_model(2.0, 1.0).unwrap();
        let near = asymptotic_overlap(&psi, &m, -5.0).unwrap();
        let far = asymptotic_overlap(&psi, &m, -50.0).unwrap();
        assert!(far > 0.99, "{far}");
        assert!(far >= near - 1e-3, "{near} {far}");
    }
}
