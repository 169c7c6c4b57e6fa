//! Uniform periodic grids, wavefunction storage and the L² inner product.
//!
//! Every axis covers `[-L/2, L/2)` with `N` points, `N` a power of two.
//! Storage is row-major with the last axis varying fastest. Quadrature is the
//! plain cell-volume-weighted sum, which coincides with the trapezoid rule on
//! periodic data and is spectrally accurate for smooth fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude ratio (relative to the peak) a packet may keep at the domain
/// boundary.
pub const BOUNDARY_TAIL_LIMIT: f64 = 1e-12;

/// Minimum packet width, in grid spacings.
pub const MIN_WIDTH_IN_SPACINGS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid {
    points: Vec<usize>,
    extent: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Vec<usize>,
    extent: Vec<f64>,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.points, raw.extent)
    }
}

impl Grid {
    pub fn new(points: Vec<usize>, extent: Vec<f64>) -> Result<Self> {
        let dim = points.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if extent.len() != dim {
            return Err(Error::InvalidGrid(format!("{} extents given for a {dim}-dimensional grid", extent.len())));
        }
        for (axis, (&n, &l)) in points.iter().zip(&extent).enumerate() {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("axis {axis}: point count {n} is not a power of two >= 2")));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {axis}: extent {l} must be positive")));
            }
        }
        Ok(Self { points, extent })
    }

    /// Same point count and extent on every axis.
    pub fn cubic(dim: usize, points: usize, extent: f64) -> Result<Self> {
        Self::new(vec![points; dim], vec![extent; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        -0.5 * self.extent[axis] + index as f64 * self.spacing(axis)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.points[axis];
            flat /= self.points[axis];
        }
        idx
    }

    /// Row-major flat index; indices wrap periodically on every axis.
    pub fn flat_index(&self, index: &[isize]) -> usize {
        index.iter().zip(&self.points).fold(0, |acc, (&i, &n)| acc * n + i.rem_euclid(n as isize) as usize)
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().enumerate().map(|(axis, i)| self.coordinate(axis, i)).collect()
    }

    /// All grid positions, in storage order.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Minimum-image representative of a displacement along `axis`.
    pub fn wrap_displacement(&self, axis: usize, d: f64) -> f64 {
        let l = self.extent[axis];
        d - l * (d / l).round()
    }

    /// Minimum-image displacement `x - y`, per axis.
    pub fn displacement(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        x.iter().zip(y).enumerate().map(|(axis, (a, b))| self.wrap_displacement(axis, a - b)).collect()
    }

    /// Periodic Euclidean distance.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.displacement(x, y).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Angular wavenumbers of the discrete Fourier modes along `axis`, in FFT
    /// order. The Nyquist mode is reported as `-π/dx`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let dk = 2.0 * std::f64::consts::PI / self.extent[axis];
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as isize } else { j as isize - n as isize };
                m as f64 * dk
            })
            .collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.points, self.extent, other.points, other.extent
            )))
        }
    }
}

/// Axis-aligned box on the periodic domain, used to declare support regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBox {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl PeriodicBox {
    pub fn new(center: Vec<f64>, half_width: Vec<f64>) -> Self {
        Self { center, half_width }
    }

    pub fn contains(&self, grid: &Grid, x: &[f64]) -> bool {
        grid.displacement(x, &self.center).iter().zip(&self.half_width).all(|(d, w)| d.abs() <= *w)
    }

    /// True when the two boxes share no point of the periodic domain.
    pub fn is_disjoint_from(&self, grid: &Grid, other: &PeriodicBox) -> bool {
        let gap = grid.displacement(&self.center, &other.center);
        gap.iter().zip(self.half_width.iter().zip(&other.half_width)).any(|(d, (a, b))| d.abs() > a + b)
    }

    pub fn check_dim(&self, grid: &Grid) -> Result<()> {
        if self.center.len() != grid.dim() || self.half_width.len() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "region has {} / {} components on a {}-dimensional grid",
                self.center.len(),
                self.half_width.len(),
                grid.dim()
            )));
        }
        if self.half_width.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("region half-widths must be positive".into()));
        }
        Ok(())
    }
}

/// Complex amplitude field on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    label: String,
}

impl WaveFunction {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        if let Some(i) = amplitudes.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericalBlowup(format!("non-finite amplitude at index {i}")));
        }
        Ok(Self { grid, amplitudes, label: label.into() })
    }

    /// Samples `f` at every grid position.
    pub fn from_fn<F>(grid: Grid, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let amplitudes = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self::new(grid, amplitudes, label)
    }

    pub fn zeros(grid: Grid, label: impl Into<String>) -> Self {
        let n = grid.len();
        Self { grid, amplitudes: vec![Complex64::new(0.0, 0.0); n], label: label.into() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same grid and label, new amplitudes. Fails on non-finite values.
    pub fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), amplitudes, self.label.clone())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
            label: self.label.clone(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Probability mass inside `region`.
    pub fn mass_in(&self, region: &PeriodicBox) -> f64 {
        let dv = self.grid.cell_volume();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| region.contains(&self.grid, &self.grid.position(*i)))
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * dv
    }

    /// Probability density expectation of position along `axis` (minimum image
    /// around `origin`).
    pub fn mean_position(&self, axis: usize, origin: f64) -> f64 {
        let dv = self.grid.cell_volume();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let x = self.grid.position(i)[axis];
                (origin + self.grid.wrap_displacement(axis, x - origin)) * z.norm_sqr()
            })
            .sum::<f64>()
            * dv
            / self.norm_sqr()
    }

    /// Standard deviation of the position density along `axis`.
    pub fn position_spread(&self, axis: usize) -> f64 {
        let dv = self.grid.cell_volume();
        let total = self.norm_sqr();
        let mean = self.mean_position(axis, 0.0);
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let d = self.grid.wrap_displacement(axis, self.grid.position(i)[axis] - mean);
                d * d * z.norm_sqr()
            })
            .sum::<f64>()
            * dv
            / total;
        var.sqrt()
    }
}

/// `Σ conj(a)·b · dV`.
pub fn inner_product(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    a.grid.check_same(&b.grid)?;
    let sum: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.cell_volume())
}

pub fn normalize(psi: &WaveFunction) -> Result<WaveFunction> {
    let norm = psi.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(psi.scaled(Complex64::new(1.0 / norm, 0.0)))
}

/// Normalized Gaussian packet `exp(-|x-c|²/(4w²) + i p·(x-c))`, so that `width`
/// is the standard deviation of the position density along each axis.
///
/// Displacements are taken as minimum images, so a center shifted by a full
/// period produces the same packet.
pub fn gaussian_packet(grid: &Grid, center: &[f64], width: f64, momentum: &[f64]) -> Result<WaveFunction> {
    if center.len() != grid.dim() || momentum.len() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "center/momentum of length {}/{} on a {}-dimensional grid",
            center.len(),
            momentum.len(),
            grid.dim()
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::Resolution(format!("packet width {width} must be positive")));
    }
    for axis in 0..grid.dim() {
        let dx = grid.spacing(axis);
        if width < MIN_WIDTH_IN_SPACINGS * dx {
            return Err(Error::Resolution(format!(
                "axis {axis}: width {width} below {MIN_WIDTH_IN_SPACINGS} spacings ({dx})"
            )));
        }
        // Farthest minimum-image distance is half the extent.
        let half = 0.5 * grid.extent()[axis];
        let tail = (-(half * half) / (4.0 * width * width)).exp();
        if tail > BOUNDARY_TAIL_LIMIT {
            return Err(Error::Resolution(format!(
                "axis {axis}: boundary tail {tail:e} exceeds {BOUNDARY_TAIL_LIMIT:e}"
            )));
        }
    }
    let center: Vec<f64> = center.iter().zip(grid.extent()).map(|(c, l)| c.rem_euclid(*l)).collect();
    let inv = 1.0 / (4.0 * width * width);
    let psi = WaveFunction::from_fn(grid.clone(), "psi0", |x| {
        let d = grid.displacement(x, &center);
        let r2: f64 = d.iter().map(|v| v * v).sum();
        let phase: f64 = d.iter().zip(momentum).map(|(v, p)| v * p).sum();
        Complex64::from_polar((-r2 * inv).exp(), phase)
    })?;
    normalize(&psi)
}
