//! Independent reference implementations used only by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use gravdeco::grid::Grid;
use gravdeco::Complex64;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Closed-form overlap of two unit Gaussians with density std `sigma`,
/// centers `d` apart and no phase.
pub fn gaussian_overlap(d: f64, sigma: f64) -> f64 {
    (-d * d / (8.0 * sigma * sigma)).exp()
}

/// Free-particle width of an initially unchirped Gaussian.
pub fn free_width(sigma0: f64, mass: f64, t: f64) -> f64 {
    sigma0 * (1.0 + (t / (2.0 * mass * sigma0 * sigma0)).powi(2)).sqrt()
}

/// Integer frequency index of FFT slot `j`, Nyquist taken as `-n/2`.
fn mode(j: usize, n: usize) -> f64 {
    if j < n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Spectral kinetic matrix `-Δ/(2m)` on a 1D periodic grid, assembled as an
/// explicit sum over plane waves.
pub fn kinetic_matrix(n: usize, extent: f64, mass: f64) -> DMatrix<f64> {
    let dx = extent / n as f64;
    let dk = 2.0 * PI / extent;
    DMatrix::from_fn(n, n, |a, b| {
        let r = (a as f64 - b as f64) * dx;
        (0..n)
            .map(|j| {
                let k = mode(j, n) * dk;
                (k * r).cos() * k * k / (2.0 * mass)
            })
            .sum::<f64>()
            / n as f64
    })
}

/// `exp(-iHt)ψ` for `H = T + diag(V)` through a full eigendecomposition.
pub fn dense_propagate(
    n: usize,
    extent: f64,
    mass: f64,
    potential: &[f64],
    psi: &[Complex64],
    t: f64,
) -> Vec<Complex64> {
    let mut h = kinetic_matrix(n, extent, mass);
    for i in 0..n {
        h[(i, i)] += potential[i];
    }
    let eig = SymmetricEigen::new(h);
    let q = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
    let v = DVector::from_column_slice(psi);
    let coeffs = q.transpose() * v;
    let phased = DVector::from_iterator(
        n,
        coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, e)| c * Complex64::from_polar(1.0, -e * t)),
    );
    (q * phased).iter().cloned().collect()
}

/// Discrete L² distance with the cell volume of `grid`.
pub fn l2_distance(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// Periodic piecewise-linear interpolation of 1D samples.
pub fn linear_interp(grid: &Grid, samples: &[Complex64], x: f64) -> Complex64 {
    let n = samples.len();
    let dx = grid.spacing(0);
    let u = (x + grid.extent()[0] / 2.0) / dx;
    let i0 = u.floor();
    let frac = u - i0;
    let i0 = (i0 as isize).rem_euclid(n as isize) as usize;
    let i1 = (i0 + 1) % n;
    samples[i0] * (1.0 - frac) + samples[i1] * frac
}

/// Newton iteration `X ← (X + X^{-†})/2`, converging to the unitary polar
/// factor of a non-singular matrix.
pub fn newton_polar(b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut x = b.clone();
    for _ in 0..100 {
        let inv_adj = x.clone().try_inverse().expect("non-singular").adjoint();
        let next = (&x + inv_adj) * Complex64::new(0.5, 0.0);
        let delta = (&next - &x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}
