//! Independent evaluation of `⟨M_F(t)⟩` through the time transform of the
//! energy amplitudes.
//!
//! With `F_j(τ) = (1/2π) ∫₀^∞ e^{iEτ} ψ_j(E) dE` the forward expectation is
//! `2π Σ_j ∫_{-∞}^{-t} |F_j(τ)|² dτ`, an integral of a nonnegative density
//! over a half-line that shrinks as `t` grows. The forward component
//! `f_j = Θ(-τ) F_j` carries the support restriction.
//!
//! `F_j` is computed by Filon quadrature on the energy grid: the amplitude is
//! interpolated by quadratics on consecutive node triples and the oscillatory
//! factor is integrated exactly, which stays accurate at `|τ|` far beyond the
//! grid's sampling limit.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::adaptive;
use crate::spectral::ChannelState;

/// An octave of the τ-integral counts as negligible below this contribution.
pub const OCTAVE_TOLERANCE: f64 = 1e-8;
/// Number of octaves after which the tail integral gives up.
pub const MAX_OCTAVES: u32 = 90;

const PANEL_TOLERANCE: f64 = 1e-10;
const PANEL_DEPTH: u32 = 24;

/// `M_k = ∫_0^L s^k e^{iτs} ds` for `k = 0, 1, 2`, given `e = e^{iτL}`.
fn moments(tau: f64, len: f64, e: Complex64) -> [Complex64; 3] {
    let x = tau * len;
    if x.abs() < 0.25 {
        // M_k = L^{k+1} Σ_m (ix)^m / (m! (k + m + 1))
        let mut sums = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0);
        for m in 0..24 {
            for (k, slot) in sums.iter_mut().enumerate() {
                *slot += term / (k + m + 1) as f64;
            }
            term *= Complex64::new(0.0, x / (m + 1) as f64);
            if term.norm_sqr() < 1e-36 {
                break;
            }
        }
        [sums[0] * len, sums[1] * len * len, sums[2] * len * len * len]
    } else {
        let inv = Complex64::new(0.0, -1.0 / tau);
        let m0 = (e - 1.0) * inv;
        let m1 = (len * e - m0) * inv;
        let m2 = (len * len * e - 2.0 * m1) * inv;
        [m0, m1, m2]
    }
}

/// `c0 + c1 s + c2 s²` on `[start, start + len]`.
#[derive(Debug, Clone, Copy)]
struct Panel {
    start: f64,
    len: f64,
    coefficients: [Complex64; 3],
}

impl Panel {
    fn quadratic(e: [f64; 3], f: [Complex64; 3]) -> Self {
        let h1 = e[1] - e[0];
        let len = e[2] - e[0];
        let d01 = (f[1] - f[0]) / h1;
        let d12 = (f[2] - f[1]) / (e[2] - e[1]);
        let d012 = (d12 - d01) / len;
        Self {
            start: e[0],
            len,
            coefficients: [f[0], d01 - h1 * d012, d012],
        }
    }

    fn linear(e: [f64; 2], f: [Complex64; 2]) -> Self {
        let len = e[1] - e[0];
        Self {
            start: e[0],
            len,
            coefficients: [f[0], (f[1] - f[0]) / len, Complex64::new(0.0, 0.0)],
        }
    }

    fn constant(start: f64, len: f64, value: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            start,
            len,
            coefficients: [value, zero, zero],
        }
    }

    /// `∫ e^{iτE} q(E) dE` over the panel, given the phases at its ends.
    fn integrate(&self, tau: f64, start_phase: Complex64, end_phase: Complex64) -> Complex64 {
        let m = moments(tau, self.len, end_phase * start_phase.conj());
        let c = &self.coefficients;
        start_phase * (c[0] * m[0] + c[1] * m[1] + c[2] * m[2])
    }
}

/// Time-transform evaluator for one state.
#[derive(Debug, Clone)]
pub struct HardyOracle {
    /// Panel boundaries, shared by all channels.
    breaks: Vec<f64>,
    channels: Vec<Vec<Panel>>,
}

/// Per-channel samples of the forward component `f_j(τ)`; zero for `τ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardComponent {
    pub tau_nodes: Vec<f64>,
    /// `samples[j][k] = f_j(tau_nodes[k])`.
    pub samples: Vec<Vec<Complex64>>,
}

impl HardyOracle {
    pub fn new(psi: &ChannelState) -> Self {
        let grid = psi.grid();
        let e = grid.nodes();
        let n = e.len();
        let channels = psi
            .channels()
            .iter()
            .map(|v| {
                let mut panels = Vec::with_capacity(n / 2 + 2);
                if grid.closes_origin() {
                    panels.push(Panel::constant(0.0, e[0], v[0]));
                }
                let mut i = 0;
                while i + 2 < n {
                    panels.push(Panel::quadratic([e[i], e[i + 1], e[i + 2]], [v[i], v[i + 1], v[i + 2]]));
                    i += 2;
                }
                if i + 1 < n {
                    panels.push(Panel::linear([e[i], e[i + 1]], [v[i], v[i + 1]]));
                }
                panels
            })
            .collect::<Vec<Vec<Panel>>>();
        let breaks = match channels.first() {
            Some(panels) => panels
                .iter()
                .map(|p| p.start)
                .chain(std::iter::once(e[n - 1]))
                .collect(),
            None => Vec::new(),
        };
        Self { breaks, channels }
    }

    /// `F_j(τ)` for every channel, without the support restriction.
    pub fn transform(&self, tau: f64) -> Vec<Complex64> {
        let phases: Vec<Complex64> = self
            .breaks
            .iter()
            .map(|&e| Complex64::from_polar(1.0, tau * e))
            .collect();
        self.channels
            .iter()
            .map(|panels| {
                panels
                    .iter()
                    .zip(phases.windows(2))
                    .map(|(p, w)| p.integrate(tau, w[0], w[1]))
                    .sum::<Complex64>()
                    / (2.0 * PI)
            })
            .collect()
    }

    /// `f_j(τ) = Θ(-τ) F_j(τ)`.
    pub fn forward_component(&self, tau: f64) -> Vec<Complex64> {
        if tau > 0.0 {
            vec![Complex64::new(0.0, 0.0); self.channels.len()]
        } else {
            self.transform(tau)
        }
    }

    /// `2π Σ_j |F_j(τ)|²`.
    pub fn transform_density(&self, tau: f64) -> f64 {
        2.0 * PI * self.transform(tau).iter().map(|f| f.norm_sqr()).sum::<f64>()
    }

    /// `2π Σ_j |f_j(τ)|²`.
    pub fn tail_density(&self, tau: f64) -> f64 {
        if tau > 0.0 {
            0.0
        } else {
            self.transform_density(tau)
        }
    }

    pub fn sample(&self, taus: &[f64]) -> ForwardComponent {
        let mut samples = vec![Vec::with_capacity(taus.len()); self.channels.len()];
        for &tau in taus {
            for (s, f) in samples.iter_mut().zip(self.forward_component(tau)) {
                s.push(f);
            }
        }
        ForwardComponent {
            tau_nodes: taus.to_vec(),
            samples,
        }
    }

    /// `∫_a^b 2πΣ|F_j|² dτ` for finite `a ≤ b`, split at octave boundaries
    /// measured from zero.
    pub fn segment(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return if a == b { 0.0 } else { -self.segment(b, a) };
        }
        let mut cuts = vec![a];
        for x in octave_cuts(a, b) {
            cuts.push(x);
        }
        cuts.push(b);
        let mut f = |tau: f64| self.transform_density(tau);
        cuts.windows(2)
            .map(|w| adaptive(&mut f, w[0], w[1], PANEL_TOLERANCE, PANEL_DEPTH))
            .sum()
    }

    /// `∫_{-∞}^{a} 2πΣ|F_j|² dτ`.
    pub fn tail(&self, a: f64) -> Result<f64> {
        let start = a.min(0.0);
        let mut total = if a > 0.0 { self.segment(0.0, a) } else { 0.0 };
        let mut f = |tau: f64| self.transform_density(tau);
        let mut hi = start;
        let mut lo = if start < 0.0 { 2.0 * start } else { -1.0 };
        let mut quiet = 0;
        let mut piece = 0.0;
        for _ in 0..MAX_OCTAVES {
            piece = adaptive(&mut f, lo, hi, PANEL_TOLERANCE, PANEL_DEPTH);
            total += piece;
            quiet = if piece < OCTAVE_TOLERANCE { quiet + 1 } else { 0 };
            if quiet >= 2 && lo <= -1.0 {
                return Ok(total);
            }
            hi = lo;
            lo *= 2.0;
        }
        Err(Error::Truncation {
            tau_min: hi,
            last_octave: piece,
        })
    }

    /// `⟨M_F(t)⟩`.
    pub fn mf(&self, t: f64) -> Result<f64> {
        self.tail(-t)
    }

    /// `⟨M_F(t)⟩` for every time, sharing the tail beyond the latest time.
    pub fn trace(&self, times: &[f64]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&i, &j| times[j].total_cmp(&times[i]));
        let mut out = vec![0.0; times.len()];
        let mut previous: Option<(f64, f64)> = None;
        for i in order {
            let a = -times[i];
            let value = match previous {
                None => self.tail(a)?,
                Some((pa, pv)) => pv + self.segment(pa, a),
            };
            out[i] = value;
            previous = Some((a, value));
        }
        Ok(out)
    }
}

/// Points `±2^k` strictly inside `(a, b)`.
fn octave_cuts(a: f64, b: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    if a < 0.0 && b > 0.0 {
        cuts.extend(octave_cuts(a, 0.0));
        cuts.push(0.0);
        cuts.extend(octave_cuts(0.0, b));
        return cuts;
    }
    let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
    let sign = if b <= 0.0 { -1.0 } else { 1.0 };
    let mut x = if lo > 0.0 { 2f64.powi(lo.log2().floor() as i32 + 1) } else { 2f64.powi(-4) };
    let mut inner = Vec::new();
    while x < hi {
        if x > lo {
            inner.push(sign * x);
        }
        x *= 2.0;
    }
    if sign < 0.0 {
        inner.reverse();
    }
    inner
}

/// `f_j(τ)` for every channel.
pub fn forward_component(psi: &ChannelState, tau: f64) -> Vec<Complex64> {
    HardyOracle::new(psi).forward_component(tau)
}

/// `2π Σ_j |f_j(τ)|²`.
pub fn tail_density(psi: &ChannelState, tau: f64) -> f64 {
    HardyOracle::new(psi).tail_density(tau)
}

/// `2π Σ_j |F_j(τ)|²` without the support restriction.
pub fn transform_density(psi: &ChannelState, tau: f64) -> f64 {
    HardyOracle::new(psi).transform_density(tau)
}

pub fn mf_expectation_oracle(psi: &ChannelState, t: f64) -> Result<f64> {
    HardyOracle::new(psi).mf(t)
}
