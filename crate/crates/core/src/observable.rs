//! The decoherence observable θ, the reduced two-level density matrix of the
//! source particle, and fringe synthesis/estimation.
//!
//! Basis order is `(|g_l⟩, |g_r⟩)`; matrix rows index kets. With
//! `θ = ⟨ψ_l|ψ_r⟩` the reduced state is `½[[1, θ̄], [θ, 1]]`.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::grid::{inner_product, WaveFunction};

/// Largest accepted `|θ|` before it is treated as upstream norm drift.
pub const THETA_MAGNITUDE_SLACK: f64 = 1e-9;
/// Tolerance of the density-matrix validity checks.
pub const DENSITY_TOLERANCE: f64 = 1e-12;
/// Inputs to [`partial_trace`] must have `|‖ψ‖ - 1|` below this.
pub const PARTIAL_TRACE_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceObservable {
    theta: Complex64,
}

impl DecoherenceObservable {
    pub fn new(theta: Complex64) -> Result<Self> {
        if !(theta.re.is_finite() && theta.im.is_finite()) {
            return Err(Error::NumericalBlowup(format!("theta = {theta}")));
        }
        if theta.norm() > 1.0 + THETA_MAGNITUDE_SLACK {
            return Err(Error::NormViolation(format!("|theta| = {} exceeds 1", theta.norm())));
        }
        Ok(Self { theta })
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(magnitude, phase))
    }

    pub fn theta(&self) -> Complex64 {
        self.theta
    }

    /// Remaining fringe visibility `|θ|`.
    pub fn magnitude(&self) -> f64 {
        self.theta.norm()
    }

    /// Interaction-induced phase shift `arg θ` in `(-π, π]`.
    pub fn phase(&self) -> f64 {
        self.theta.arg()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelDensityMatrix {
    entries: [[Complex64; 2]; 2],
}

impl TwoLevelDensityMatrix {
    /// Checked constructor: Hermitian, unit trace and positive semidefinite
    /// within [`DENSITY_TOLERANCE`].
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = Self { entries };
        rho.validate(DENSITY_TOLERANCE)?;
        Ok(rho)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let e = &self.entries;
        if (e[0][1] - e[1][0].conj()).norm() > tol || e[0][0].im.abs() > tol || e[1][1].im.abs() > tol {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        if (self.trace().re - 1.0).abs() > tol {
            return Err(Error::Domain(format!("density matrix trace {} != 1", self.trace())));
        }
        let (low, _) = self.eigenvalues();
        if low < -tol {
            return Err(Error::Domain(format!("density matrix eigenvalue {low} < 0")));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.entries[0][0].re;
        let d = self.entries[1][1].re;
        let b = 0.5 * (self.entries[0][1] + self.entries[1][0].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - radius, mean + radius)
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                sum += (self.entries[i][j] * self.entries[j][i]).re;
            }
        }
        sum
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        m
    }

    /// Coherence carried by the state, recovered as `2ρ_rl`.
    pub fn theta(&self) -> Complex64 {
        2.0 * self.entries[1][0]
    }
}

/// `θ(t) = ⟨ψ_l(t)|ψ_r(t)⟩`, each branch snapped to its nearest snapshot.
pub fn compute_theta(left: &Trajectory, right: &Trajectory, t: f64) -> Result<DecoherenceObservable> {
    left.grid().check_same(right.grid())?;
    let slack = 1e-9 * left.end().abs().max(right.end().abs()).max(1.0);
    let (_, psi_l) = left.nearest(t, slack)?;
    let (_, psi_r) = right.nearest(t, slack)?;
    DecoherenceObservable::new(inner_product(psi_l, psi_r)?)
}

/// `½[[1, θ̄], [θ, 1]]`; eigenvalues `(1 ± |θ|)/2`.
pub fn density_matrix(theta: &DecoherenceObservable) -> Result<TwoLevelDensityMatrix> {
    let z = theta.theta();
    if z.norm() > 1.0 + DENSITY_TOLERANCE {
        return Err(Error::Domain(format!("|theta| = {} > 1", z.norm())));
    }
    let half = Complex64::new(0.5, 0.0);
    Ok(TwoLevelDensityMatrix { entries: [[half, 0.5 * z.conj()], [0.5 * z, half]] })
}

/// Reduced state of the source particle obtained by summing the joint
/// outer product `½ Σ_x v(x)v(x)† dV` with `v(x) = (ψ_l(x), ψ_r(x))`, i.e.
/// tracing out the position of the light particle.
pub fn partial_trace(left: &WaveFunction, right: &WaveFunction) -> Result<TwoLevelDensityMatrix> {
    left.grid().check_same(right.grid())?;
    for psi in [left, right] {
        let drift = (psi.norm() - 1.0).abs();
        if drift > PARTIAL_TRACE_NORM_TOLERANCE {
            return Err(Error::NormViolation(format!("{} has norm drift {drift:e}", psi.label())));
        }
    }
    let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (l, r) in left.amplitudes().iter().zip(right.amplitudes()) {
        let v = [*l, *r];
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += v[i] * v[j].conj();
            }
        }
    }
    let w = 0.5 * left.grid().cell_volume();
    for row in acc.iter_mut() {
        for z in row.iter_mut() {
            *z *= w;
        }
    }
    Ok(TwoLevelDensityMatrix { entries: acc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringePattern {
    pub screen_positions: Vec<f64>,
    pub intensities: Vec<f64>,
    pub wavenumber: f64,
}

/// `I(x) = ½(1 + |θ| cos(Δk·x + arg θ))`, whose visibility is `|θ|`.
pub fn interference_pattern(theta: &DecoherenceObservable, screen: &[f64], wavenumber: f64) -> Result<FringePattern> {
    if !(wavenumber.is_finite() && wavenumber > 0.0) {
        return Err(Error::Domain(format!("fringe wavenumber {wavenumber} must be positive")));
    }
    if theta.magnitude() > 1.0 + DENSITY_TOLERANCE {
        return Err(Error::Domain(format!("|theta| = {} > 1", theta.magnitude())));
    }
    let (mag, phase) = (theta.magnitude(), theta.phase());
    let intensities = screen.iter().map(|x| 0.5 * (1.0 + mag * (wavenumber * x + phase).cos())).collect();
    Ok(FringePattern { screen_positions: screen.to_vec(), intensities, wavenumber })
}

/// Least-squares fit of the intensities onto `{1, cos Δk·x, sin Δk·x}`.
///
/// With `I = a + b cos + c sin` the estimate is `θ̂ = (b - ic)/a`, which does
/// not depend on the overall intensity scale.
pub fn estimate_theta(pattern: &FringePattern) -> Result<DecoherenceObservable> {
    let FringePattern { screen_positions: xs, intensities, wavenumber: dk } = pattern;
    if xs.len() != intensities.len() {
        return Err(Error::DimensionMismatch(format!("{} positions but {} intensities", xs.len(), intensities.len())));
    }
    if intensities.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("intensities must be finite and non-negative".into()));
    }
    let n = xs.len();
    if n < 6 || dk.is_nan() || *dk <= 0.0 {
        return Err(Error::UnderdeterminedFit(format!("{n} samples")));
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    // Sample extent including the last cell, in fringe periods.
    let periods = (hi - lo) * n as f64 / (n - 1) as f64 * dk / TAU;
    if periods < 2.0 - 1e-9 {
        return Err(Error::UnderdeterminedFit(format!("only {periods:.3} fringe periods covered")));
    }
    if (n as f64) < 3.0 * periods {
        return Err(Error::UnderdeterminedFit(format!(
            "{:.2} samples per period, need at least 3",
            n as f64 / periods
        )));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (x, y) in xs.iter().zip(intensities) {
        let row = Vector3::new(1.0, (dk * x).cos(), (dk * x).sin());
        normal += row * row.transpose();
        rhs += row * *y;
    }
    let coef =
        normal.cholesky().ok_or_else(|| Error::UnderdeterminedFit("singular normal equations".into()))?.solve(&rhs);
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if a <= 0.0 {
        return Err(Error::UnderdeterminedFit(format!("non-positive mean intensity {a}")));
    }
    DecoherenceObservable::new(Complex64::new(b, -c) / a)
}
