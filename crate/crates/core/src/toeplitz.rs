//! Matrix-vector products with Toeplitz matrices through circulant embedding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// An `n × n` Toeplitz matrix `A_{jk} = a(j - k)` with a cached spectrum of
/// its circulant embedding.
#[derive(Clone)]
pub(crate) struct Toeplitz {
    n: usize,
    /// `a(k)` for `k = -(n-1) ..= n-1`, stored at index `k + n - 1`.
    diagonals: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Toeplitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toeplitz").field("n", &self.n).finish()
    }
}

impl Toeplitz {
    /// `diagonal(k)` gives `a(k)` for `|k| < n`.
    pub(crate) fn new<F: Fn(i64) -> f64>(n: usize, diagonal: F) -> Self {
        let diagonals: Vec<f64> = (0..2 * n.max(1) - 1)
            .map(|i| diagonal(i as i64 - (n as i64 - 1)))
            .collect();
        Self::from_diagonals(n, diagonals)
    }

    fn from_diagonals(n: usize, diagonals: Vec<f64>) -> Self {
        let len = (2 * n).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut column = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..n {
            column[k] = Complex64::new(diagonals[k + n - 1], 0.0);
            if k > 0 {
                column[len - k] = Complex64::new(diagonals[n - 1 - k], 0.0);
            }
        }
        forward.process(&mut column);
        Self {
            n,
            diagonals,
            spectrum: column,
            forward,
            inverse,
        }
    }

    /// `a(k)`.
    pub(crate) fn diagonal(&self, k: i64) -> f64 {
        let n = self.n as i64;
        if k.abs() >= n {
            0.0
        } else {
            self.diagonals[(k + n - 1) as usize]
        }
    }

    /// Copy with `a(k)` replaced.
    pub(crate) fn with_diagonal(&self, k: i64, value: f64) -> Self {
        let mut d = self.diagonals.clone();
        d[(k + self.n as i64 - 1) as usize] = value;
        Self::from_diagonals(self.n, d)
    }

    pub(crate) fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "vector length does not match the matrix");
        let len = self.spectrum.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[..self.n].copy_from_slice(x);
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        buf.truncate(self.n);
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }

    pub(crate) fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&z).into_iter().map(|v| v.re).collect()
    }
}
