//! Multi-dimensional FFT on a [`Grid`] and band-limited interpolation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Forward/inverse transform plans for every axis of a grid.
pub struct SpectralPlan {
    points: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("points", &self.points).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.points().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.points().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { points: grid.points().to_vec(), forward, inverse }
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse DFT including the `1/N` factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn apply(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        for (axis, (&n, plan)) in self.points.iter().zip(plans).enumerate() {
            let stride: usize = self.points[axis + 1..].iter().product();
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Band-limited (trigonometric) interpolant of a periodic grid field.
///
/// Even point counts carry a Nyquist mode, which is interpolated as a cosine
/// so that real data stays real.
#[derive(Debug, Clone)]
pub struct BandLimited {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl BandLimited {
    pub fn new(grid: &Grid, samples: &[Complex64]) -> Self {
        let mut coefficients = samples.to_vec();
        SpectralPlan::new(grid).forward(&mut coefficients);
        let scale = 1.0 / samples.len() as f64;
        coefficients.iter_mut().for_each(|z| *z *= scale);
        Self { grid: grid.clone(), coefficients }
    }

    pub fn from_real(grid: &Grid, samples: &[f64]) -> Self {
        let c: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(grid, &c)
    }

    fn axis_basis(&self, axis: usize, x: f64) -> Vec<Complex64> {
        let n = self.grid.points()[axis];
        let origin = self.grid.coordinate(axis, 0);
        let ks = self.grid.wavenumbers(axis);
        let offset = x - origin;
        ks.iter()
            .enumerate()
            .map(|(j, k)| {
                if j == n / 2 {
                    Complex64::new((k * offset).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * offset)
                }
            })
            .collect()
    }

    /// Evaluates the interpolant at an arbitrary position.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let dim = self.grid.dim();
        let points = self.grid.points();
        let mut current = self.coefficients.clone();
        // Contract the fastest axis first.
        for axis in (0..dim).rev() {
            let n = points[axis];
            let basis = self.axis_basis(axis, x[axis]);
            current = current.chunks_exact(n).map(|chunk| chunk.iter().zip(&basis).map(|(c, b)| c * b).sum()).collect();
        }
        current[0]
    }
}

/// Multiplies each Fourier mode by `exp(-i k·shift)`, i.e. evaluates the
/// band-limited interpolant at `x - shift` on every grid point.
pub fn fourier_shift(grid: &Grid, samples: &[Complex64], shift: &[f64]) -> Vec<Complex64> {
    let plan = SpectralPlan::new(grid);
    let mut data = samples.to_vec();
    plan.forward(&mut data);
    let phases: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|axis| {
            let n = grid.points()[axis];
            grid.wavenumbers(axis)
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    if j == n / 2 {
                        Complex64::new((k * shift[axis]).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, -k * shift[axis])
                    }
                })
                .collect()
        })
        .collect();
    for (flat, z) in data.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        for (axis, &i) in idx.iter().enumerate() {
            *z *= phases[axis][i];
        }
    }
    plan.inverse(&mut data);
    data
}
