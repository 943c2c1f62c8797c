//! Discrete time operators: the difference `M_F - M_B = 2M_F - 𝟙` on a grid,
//! and the canonical time operator `T_nm = i/(E_n - E_m)` on a finite set of
//! levels, whose expectation oscillates instead of decaying.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::EnergyGrid;

/// Tolerance for a sample to count as a strict local extremum.
pub const EXTREMUM_TOLERANCE: f64 = 1e-12;

/// A dense operator in the eigenbasis of `H = diag(E_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    energies: Vec<f64>,
    /// Row-major.
    matrix: Vec<Complex64>,
}

impl DiscreteOperator {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.len() + col]
    }

    /// `max |A_nm - conj(A_mn)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for k in i..n {
                worst = worst.max((self.entry(i, k) - self.entry(k, i).conj()).norm());
            }
        }
        worst
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &[Complex64]) -> Result<Complex64> {
        if state.len() != self.len() {
            return Err(invalid("state", "length differs from the operator dimension"));
        }
        let n = self.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let row: Complex64 = (0..n).map(|k| self.entry(i, k) * state[k]).sum();
            acc += state[i].conj() * row;
        }
        Ok(acc)
    }
}

/// `2M_F - 𝟙` on `grid`: zero diagonal and
/// `(i/π) √(w_n w_m) / (E_n - E_m)` off the diagonal, with `w` the cell
/// weights of the grid.
pub fn discretize_symmetric(grid: &EnergyGrid) -> DiscreteOperator {
    let e = grid.nodes();
    let w = grid.cell_weights();
    let n = e.len();
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            if i != k {
                matrix[i * n + k] = Complex64::new(0.0, (w[i] * w[k]).sqrt() / (PI * (e[i] - e[k])));
            }
        }
    }
    DiscreteOperator {
        energies: e.to_vec(),
        matrix,
    }
}

/// `T_nm = i/(E_n - E_m)`, zero on the diagonal.
pub fn galapon_t(energies: &[f64]) -> Result<DiscreteOperator> {
    let n = energies.len();
    if let Some(bad) = energies.iter().find(|e| !e.is_finite()) {
        return Err(invalid("energies", format!("must be finite, got {bad}")));
    }
    for i in 0..n {
        for k in 0..i {
            if energies[i] == energies[k] {
                return Err(Error::RepeatedEnergy(energies[i]));
            }
        }
    }
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            if i != k {
                matrix[i * n + k] = Complex64::new(0.0, 1.0 / (energies[i] - energies[k]));
            }
        }
    }
    Ok(DiscreteOperator {
        energies: energies.to_vec(),
        matrix,
    })
}

/// Factor `w/π` relating [`discretize_symmetric`] to [`galapon_t`] on a
/// linear grid with step `w`.
pub fn galapon_scale(grid: &EnergyGrid) -> Result<f64> {
    if grid.is_logarithmic() {
        return Err(invalid("grid", "the entrywise correspondence needs uniform weights"));
    }
    Ok(grid.step() / PI)
}

/// `max |A_nm - c B_nm|`.
pub fn proportionality_defect(a: &DiscreteOperator, b: &DiscreteOperator, factor: f64) -> Result<f64> {
    if a.energies != b.energies {
        return Err(Error::GridMismatch);
    }
    Ok(a.matrix
        .iter()
        .zip(&b.matrix)
        .map(|(x, y)| (x - factor * y).norm())
        .fold(0.0, f64::max))
}

/// `⟨T(t)⟩` sampled over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest imaginary part met along the way.
    pub max_imaginary: f64,
    /// Whether the samples contain a strict local extremum.
    pub non_monotone: bool,
}

/// Evolves `state` under `H = diag(E_n)` and records `⟨T(t)⟩`.
pub fn lyapunov_violation_witness(
    operator: &DiscreteOperator,
    state: &[Complex64],
    times: &[f64],
) -> Result<WitnessTrace> {
    let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(invalid("state", format!("must be normalized, norm² = {norm}")));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut max_imaginary: f64 = 0.0;
    for &t in times {
        let evolved: Vec<Complex64> = state
            .iter()
            .zip(&operator.energies)
            .map(|(a, e)| a * Complex64::from_polar(1.0, -e * t))
            .collect();
        let v = operator.expectation(&evolved)?;
        max_imaginary = max_imaginary.max(v.im.abs());
        values.push(v.re);
    }
    let non_monotone = values.windows(3).any(|w| {
        let (d1, d2) = (w[1] - w[0], w[2] - w[1]);
        (d1 > EXTREMUM_TOLERANCE && d2 < -EXTREMUM_TOLERANCE)
            || (d1 < -EXTREMUM_TOLERANCE && d2 > EXTREMUM_TOLERANCE)
    });
    Ok(WitnessTrace {
        times: times.to_vec(),
        values,
        max_imaginary,
        non_monotone,
    })
}

/// Closed-form two-level trace `-sin(Δt)/Δ`, `Δ = E₁ - E₂`, for the equal
/// superposition.
pub fn two_level_expectation(e1: f64, e2: f64, t: f64) -> f64 {
    let gap = e1 - e2;
    -(gap * t).sin() / gap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equal(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]
    }

    fn window(count: usize) -> Vec<f64> {
        (0..count).map(|k| 2.0 * PI * k as f64 / (count - 1) as f64).collect()
    }

    #[test]
    fn two_level_entries() {
        let t = galapon_t(&[0.0, 1.0]).unwrap();
        assert_eq!(t.entry(0, 1), Complex64::new(0.0, -1.0));
        assert_eq!(t.entry(1, 0), Complex64::new(0.0, 1.0));
        assert_eq!(t.entry(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(t.hermiticity_defect(), 0.0);
    }

    #[test]
    fn repeated_energies_are_rejected() {
        assert_eq!(galapon_t(&[1.0, 2.0, 1.0]), Err(Error::RepeatedEnergy(1.0)));
    }

    #[test]
    fn two_level_witness_is_minus_sine() {
        let t = galapon_t(&[0.0, 1.0]).unwrap();
        let times = window(201);
        let trace = lyapunov_violation_witness(&t, &equal(2), &times).unwrap();
        for (time, v) in times.iter().zip(&trace.values) {
            assert!((v + time.sin()).abs() < 1e-12);
        }
        assert_eq!(trace.values[0], 0.0);
        assert!(trace.non_monotone);
        assert!(trace.max_imaginary < 1e-12);
    }

    #[test]
    fn other_gaps() {
        for (e1, e2) in [(0.0, 0.5), (1.0, 2.0), (0.0, 2.0)] {
            let t = galapon_t(&[e1, e2]).unwrap();
            let times = window(101);
            let trace = lyapunov_violation_witness(&t, &equal(2), &times).unwrap();
            for (time, v) in times.iter().zip(&trace.values) {
                assert!((v - two_level_expectation(e1, e2, *time)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_trace_is_constant() {
        let t = galapon_t(&[0.0, 1.0, 3.0]).unwrap();
        let state = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let trace = lyapunov_violation_witness(&t, &state, &window(50)).unwrap();
        assert!(trace.values.iter().all(|&v| v == trace.values[0]));
        assert!(!trace.non_monotone);
    }

    #[test]
    fn symmetric_discretization_is_scaled_galapon() {
        let grid = EnergyGrid::linear(0.5, 3.0, 40).unwrap();
        let a = discretize_symmetric(&grid);
        let b = galapon_t(grid.nodes()).unwrap();
        assert!(a.hermiticity_defect() < 1e-14);
        assert!((0..40).all(|i| a.entry(i, i) == Complex64::new(0.0, 0.0)));
        let c = galapon_scale(&grid).unwrap();
        assert!(proportionality_defect(&a, &b, c).unwrap() < 1e-12);
        let w = grid.step();
        let expected = Complex64::new(0.0, w / PI) / (grid.nodes()[3] - grid.nodes()[7]);
        assert!((a.entry(3, 7) - expected).norm() < 1e-15);
    }
}
