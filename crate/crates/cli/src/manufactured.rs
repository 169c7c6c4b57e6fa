//! Metric families with known divergence for `check-harmonic`.

use std::f64::consts::TAU;

use gravdeco::harmonic::{Lattice, MetricField};

use crate::config::ManufacturedSpec;

fn eta(mu: usize) -> f64 {
    if mu == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Wave vector of component `μ`: unit along `μ` plus a fixed oblique part,
/// so every `g_μμ` varies along several axes.
fn wave(mu: usize, nu: usize) -> f64 {
    ((mu + 2 * nu) % 3) as f64 * 0.5 + if mu == nu { 1.0 } else { 0.0 }
}

fn phase(mu: usize, x: &[f64]) -> f64 {
    TAU * x.iter().enumerate().map(|(nu, v)| wave(mu, nu) * v).sum::<f64>() + 0.7 * mu as f64 + 0.3
}

impl ManufacturedSpec {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Minkowski { dim, .. } | Self::Ripple { dim, .. } => dim,
        }
    }

    fn points(&self) -> usize {
        match *self {
            Self::Minkowski { points, .. } | Self::Ripple { points, .. } => points,
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            Self::Minkowski { .. } => 0.0,
            Self::Ripple { amplitude, .. } => amplitude,
        }
    }

    /// `points` per axis on the unit box.
    pub fn lattice(&self) -> gravdeco::Result<Lattice> {
        let (d, n) = (self.dim(), self.points());
        Lattice::new(vec![n; d], vec![1.0 / (n.max(2) - 1) as f64; d], vec![0.0; d])
    }

    fn diag(&self, mu: usize, x: &[f64]) -> f64 {
        eta(mu) * (1.0 + self.amplitude() * phase(mu, x).sin())
    }

    fn d_diag(&self, mu: usize, nu: usize, x: &[f64]) -> f64 {
        eta(mu) * self.amplitude() * phase(mu, x).cos() * TAU * wave(mu, nu)
    }

    /// Diagonal `g_μμ = η_μμ (1 + a sin(2π w_μ·x + φ_μ))`.
    pub fn metric(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut g = vec![0.0; d * d];
        for mu in 0..d {
            g[mu * d + mu] = if self.amplitude() == 0.0 { eta(mu) } else { self.diag(mu, x) };
        }
        g
    }

    pub fn field(&self, lattice: Lattice) -> gravdeco::Result<MetricField> {
        MetricField::from_fn(lattice, |x| self.metric(x))
    }

    /// `∂_ν(√−g / g_νν)` for the diagonal family.
    pub fn divergence(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        if self.amplitude() == 0.0 {
            return vec![0.0; d];
        }
        let s = (0..d).map(|mu| self.diag(mu, x).abs()).product::<f64>().sqrt();
        (0..d)
            .map(|nu| {
                let ds = 0.5 * s * (0..d).map(|mu| self.d_diag(mu, nu, x) / self.diag(mu, x)).sum::<f64>();
                let g = self.diag(nu, x);
                ds / g - s * self.d_diag(nu, nu, x) / (g * g)
            })
            .collect()
    }
}
