//! Time propagation under an external branch potential.
//!
//! The production stepper is second-order Strang splitting with an exact
//! spectral kinetic step: `e^{-iV dt/2} · F⁻¹ e^{-i|k|² dt/(2m)} F · e^{-iV dt/2}`.
//! Every factor is a pointwise phase, so the step is unitary to rounding.

use std::f64::consts::FRAC_PI_4;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner_product, Grid, WaveFunction};
use crate::spectral::{BandLimited, SpectralPlan};

/// Snapshot norms must stay within this distance of one.
pub const TRAJECTORY_NORM_TOLERANCE: f64 = 1e-8;

/// Default Coulomb softening, in units of the smallest grid spacing.
pub const DEFAULT_SOFTENING_SPACINGS: f64 = 2.0;

/// External potential felt by the light particle in one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// Softened Newtonian well `-coupling / sqrt(|x - source|² + softening²)`,
    /// with the source held fixed and distances taken as minimum images.
    PointMass { source: Vec<f64>, coupling: f64, softening: f64 },
    /// Arbitrary real values, one per grid point.
    Tabulated { grid: Grid, values: Vec<f64> },
}

impl Potential {
    pub fn point_mass(source: Vec<f64>, coupling: f64, softening: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::Domain(format!("coupling {coupling} must be non-negative")));
        }
        if !(softening.is_finite() && softening > 0.0) {
            return Err(Error::Domain(format!("softening {softening} must be positive")));
        }
        if source.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("source position must be finite".into()));
        }
        Ok(Self::PointMass { source, coupling, softening })
    }

    /// Point mass with the default softening of two grid spacings.
    pub fn point_mass_on(grid: &Grid, source: Vec<f64>, coupling: f64) -> Result<Self> {
        Self::point_mass(source, coupling, DEFAULT_SOFTENING_SPACINGS * grid.min_spacing())
    }

    pub fn tabulated(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} potential values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup("non-finite tabulated potential".into()));
        }
        Ok(Self::Tabulated { grid, values })
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self> {
        Self::tabulated(grid.clone(), vec![value; grid.len()])
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::Tabulated { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    /// Value at an arbitrary position. Tabulated potentials are interpolated
    /// band-limitedly; prefer [`Potential::sample`] for whole grids.
    pub fn value_at(&self, grid: &Grid, x: &[f64]) -> Result<f64> {
        match self {
            Self::PointMass { source, coupling, softening } => {
                check_source_dim(grid, source)?;
                let r = grid.distance(x, source);
                Ok(-coupling / (r * r + softening * softening).sqrt())
            }
            Self::Tabulated { grid: own, values } => {
                own.check_same(grid)?;
                Ok(BandLimited::from_real(own, values).eval(x).re)
            }
        }
    }

    /// Values on every point of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Self::PointMass { source, .. } => {
                check_source_dim(grid, source)?;
                (0..grid.len()).map(|i| self.value_at(grid, &grid.position(i))).collect()
            }
            Self::Tabulated { grid: own, values } => {
                own.check_same(grid)?;
                Ok(values.clone())
            }
        }
    }
}

fn check_source_dim(grid: &Grid, source: &[f64]) -> Result<()> {
    if source.len() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source of dimension {} on a {}-dimensional grid",
            source.len(),
            grid.dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub mass: f64,
    pub snapshot_stride: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Domain(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::Domain(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Domain(format!("mass = {} must be positive", self.mass)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Domain("snapshot_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps taken to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Precomputed Strang-split propagator for one grid, potential, mass and step.
#[derive(Debug)]
pub struct SplitStepPropagator {
    grid: Grid,
    plan: SpectralPlan,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    dt: f64,
}

impl SplitStepPropagator {
    /// `dt` may be negative, which runs the same scheme backwards in time.
    pub fn new(grid: &Grid, potential: &Potential, mass: f64, dt: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("mass = {mass} must be positive")));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Domain(format!("dt = {dt} must be finite and non-zero")));
        }
        let values = potential.sample(grid)?;
        let v_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dt.abs() * v_max > FRAC_PI_4 {
            warn!("potential phase per step {:.3} exceeds pi/4; consider a smaller dt", dt.abs() * v_max);
        }
        let half_potential = values.iter().map(|v| Complex64::from_polar(1.0, -0.5 * v * dt)).collect();
        let k2 = squared_wavenumbers(grid);
        let kinetic = k2.iter().map(|q| Complex64::from_polar(1.0, -q * dt / (2.0 * mass))).collect();
        Ok(Self { grid: grid.clone(), plan: SpectralPlan::new(grid), half_potential, kinetic, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// One step on raw amplitudes, in place.
    pub fn advance(&self, data: &mut [Complex64]) {
        for (z, p) in data.iter_mut().zip(&self.half_potential) {
            *z *= p;
        }
        self.plan.forward(data);
        for (z, p) in data.iter_mut().zip(&self.kinetic) {
            *z *= p;
        }
        self.plan.inverse(data);
        for (z, p) in data.iter_mut().zip(&self.half_potential) {
            *z *= p;
        }
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.grid.check_same(psi.grid())?;
        let mut data = psi.amplitudes().to_vec();
        self.advance(&mut data);
        check_finite(&data)?;
        psi.with_amplitudes(data)
    }
}

pub(crate) fn squared_wavenumbers(grid: &Grid) -> Vec<f64> {
    let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
    (0..grid.len())
        .map(|flat| grid.multi_index(flat).iter().enumerate().map(|(axis, &i)| ks[axis][i] * ks[axis][i]).sum())
        .collect()
}

fn check_finite(data: &[Complex64]) -> Result<()> {
    match data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(i) => Err(Error::NumericalBlowup(format!("non-finite amplitude at index {i}"))),
        None => Ok(()),
    }
}

/// A single Strang step of size `cfg.dt`.
pub fn step(psi: &WaveFunction, potential: &Potential, cfg: &EvolutionConfig) -> Result<WaveFunction> {
    cfg.validate()?;
    SplitStepPropagator::new(psi.grid(), potential, cfg.mass, cfg.dt)?.apply(psi)
}

/// Ordered `(time, state)` snapshots of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    snapshots: Vec<(f64, WaveFunction)>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<(f64, WaveFunction)>) -> Result<Self> {
        let Some((_, first)) = snapshots.first() else {
            return Err(Error::Domain("a trajectory needs at least one snapshot".into()));
        };
        let grid = first.grid().clone();
        for pair in snapshots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Domain(format!(
                    "snapshot times not strictly increasing: {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        for (t, psi) in &snapshots {
            grid.check_same(psi.grid())?;
            let drift = (psi.norm() - 1.0).abs();
            if drift > TRAJECTORY_NORM_TOLERANCE {
                return Err(Error::NormViolation(format!("snapshot at t = {t} has norm drift {drift:e}")));
            }
        }
        Ok(Self { snapshots })
    }

    pub fn snapshots(&self) -> &[(f64, WaveFunction)] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].1.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn start(&self) -> f64 {
        self.snapshots[0].0
    }

    pub fn end(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].0
    }

    pub fn last(&self) -> &WaveFunction {
        &self.snapshots[self.snapshots.len() - 1].1
    }

    /// Snapshot closest to `t`; ties go to the earlier one. `t` must lie in
    /// `[start, end]` up to `slack`.
    pub fn nearest(&self, t: f64, slack: f64) -> Result<&(f64, WaveFunction)> {
        if !(t >= self.start() - slack && t <= self.end() + slack) {
            return Err(Error::TimeOutOfRange { t, start: self.start(), end: self.end() });
        }
        let idx = self.snapshots.partition_point(|(s, _)| *s < t);
        let best = match idx {
            0 => 0,
            i if i == self.snapshots.len() => i - 1,
            i => {
                if (self.snapshots[i].0 - t) < (t - self.snapshots[i - 1].0) {
                    i
                } else {
                    i - 1
                }
            }
        };
        Ok(&self.snapshots[best])
    }
}

/// Repeated [`step`]s with a snapshot every `snapshot_stride` steps; the
/// final state is always recorded.
pub fn evolve(psi0: &WaveFunction, potential: &Potential, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = cfg.steps();
    let mut snapshots = vec![(0.0, psi0.clone())];
    if steps == 0 {
        return Trajectory::new(snapshots);
    }
    let prop = SplitStepPropagator::new(psi0.grid(), potential, cfg.mass, cfg.dt)?;
    let mut data = psi0.amplitudes().to_vec();
    for k in 1..=steps {
        prop.advance(&mut data);
        if k % cfg.snapshot_stride == 0 || k == steps {
            check_finite(&data)?;
            snapshots.push((k as f64 * cfg.dt, psi0.with_amplitudes(data.clone())?));
        }
    }
    Trajectory::new(snapshots)
}

/// Expectation of the discretized Hamiltonian `-Δ/(2m) + V`, with the
/// Laplacian taken spectrally.
pub fn energy(psi: &WaveFunction, potential: &Potential, mass: f64) -> Result<f64> {
    let grid = psi.grid();
    let values = potential.sample(grid)?;
    let mut hat = psi.amplitudes().to_vec();
    SpectralPlan::new(grid).forward(&mut hat);
    let k2 = squared_wavenumbers(grid);
    let n = grid.len() as f64;
    let kinetic: f64 =
        hat.iter().zip(&k2).map(|(z, q)| z.norm_sqr() * q).sum::<f64>() * grid.cell_volume() / (n * 2.0 * mass);
    let v_psi = psi.with_amplitudes(psi.amplitudes().iter().zip(&values).map(|(z, v)| z * v).collect())?;
    let pot = inner_product(psi, &v_psi)?.re;
    Ok(kinetic + pot)
}
