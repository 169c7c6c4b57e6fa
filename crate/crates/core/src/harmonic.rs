//! Harmonic-coordinate residual of a tabulated Lorentzian metric.
//!
//! Coordinates satisfy the harmonic condition when the densitized inverse
//! metric `𝔤^{μν} = √−g g^{μν}` is divergence free, `∂_μ 𝔤^{μν} = 0`. The
//! divergence is taken with second-order central differences on interior
//! points. Axis 0 is time.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `max |g·g⁻¹ − I|` at each point.
pub const INVERSE_RESIDUAL_LIMIT: f64 = 1e-12;
/// Expected convergence order of the residual under spacing halving.
pub const EXPECTED_ORDER: f64 = 2.0;
/// Accepted band around `EXPECTED_ORDER`.
pub const ORDER_BAND: f64 = 0.2;
/// Errors below this (relative to the analytic scale) are rounding only.
pub const ERROR_FLOOR: f64 = 1e-11;

/// Sample lattice shared by metric and residual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl Lattice {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        let d = shape.len();
        if !(2..=4).contains(&d) || spacing.len() != d || origin.len() != d {
            return Err(Error::InvalidGrid(format!(
                "spacetime lattice needs 2 to 4 axes with matching spacing and origin, got {d}/{}/{}",
                spacing.len(),
                origin.len()
            )));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(Error::InvalidGrid(format!("every axis needs at least 3 points, got {shape:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("spacings must be positive and origins finite".into()));
        }
        Ok(Self { shape, spacing, origin })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major multi-index, last axis fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coordinate(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a]).collect()
    }

    /// Same physical box sampled at half spacing.
    pub fn refined(&self) -> Self {
        Self {
            shape: self.shape.iter().map(|&n| 2 * n - 1).collect(),
            spacing: self.spacing.iter().map(|h| h / 2.0).collect(),
            origin: self.origin.clone(),
        }
    }

    fn interior(&self) -> Self {
        Self {
            shape: self.shape.iter().map(|&n| n - 2).collect(),
            spacing: self.spacing.clone(),
            origin: self.origin.iter().zip(&self.spacing).map(|(o, h)| o + h).collect(),
        }
    }
}

/// Symmetric `D×D` metric at every lattice point, stored as full matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    lattice: Lattice,
    components: Vec<f64>,
}

fn point_matrix(values: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, values)
}

impl MetricField {
    /// `components` holds `D²` row-major entries per point.
    pub fn new(lattice: Lattice, components: Vec<f64>) -> Result<Self> {
        let d = lattice.dim();
        if components.len() != lattice.len() * d * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} metric entries, got {}",
                lattice.len() * d * d,
                components.len()
            )));
        }
        for (p, g) in components.chunks(d * d).enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Signature { index: p, reason: "non-finite component".into() });
            }
            for a in 0..d {
                for b in a + 1..d {
                    if g[a * d + b] != g[b * d + a] {
                        return Err(Error::Signature { index: p, reason: format!("g[{a}][{b}] != g[{b}][{a}]") });
                    }
                }
            }
            let m = point_matrix(g, d);
            if m.determinant().is_nan() || m.determinant() >= 0.0 {
                return Err(Error::Signature { index: p, reason: "determinant is not negative".into() });
            }
            let negative = SymmetricEigen::new(m).eigenvalues.iter().filter(|&&v| v < 0.0).count();
            if negative != 1 {
                return Err(Error::Signature { index: p, reason: format!("{negative} negative eigenvalues") });
            }
        }
        Ok(Self { lattice, components })
    }

    /// Tabulates `f(x)`, which returns `D²` row-major entries.
    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(lattice: Lattice, f: F) -> Result<Self> {
        let d = lattice.dim();
        let mut components = Vec::with_capacity(lattice.len() * d * d);
        for p in 0..lattice.len() {
            let x = lattice.coordinate(&lattice.multi_index(p));
            let g = f(&x);
            if g.len() != d * d {
                return Err(Error::DimensionMismatch(format!("metric function returned {} entries", g.len())));
            }
            components.extend(g);
        }
        Self::new(lattice, components)
    }

    pub fn minkowski(lattice: Lattice) -> Result<Self> {
        let d = lattice.dim();
        Self::from_fn(lattice, |_| {
            let mut g = vec![0.0; d * d];
            g[0] = -1.0;
            (1..d).for_each(|a| g[a * d + a] = 1.0);
            g
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn at(&self, point: usize) -> &[f64] {
        let d = self.lattice.dim();
        &self.components[point * d * d..(point + 1) * d * d]
    }
}

/// `𝔤^{μν}` at every lattice point, same layout as `MetricField`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitizedField {
    lattice: Lattice,
    components: Vec<f64>,
}

impl DensitizedField {
    pub fn from_components(lattice: Lattice, components: Vec<f64>) -> Result<Self> {
        let d = lattice.dim();
        if components.len() != lattice.len() * d * d {
            return Err(Error::DimensionMismatch(format!("expected {} entries", lattice.len() * d * d)));
        }
        Ok(Self { lattice, components })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::GridMismatch("densitized fields live on different lattices".into()));
        }
        let components = self.components.iter().zip(&other.components).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { lattice: self.lattice.clone(), components })
    }
}

/// Inverts the metric pointwise and multiplies by `√−g`.
pub fn densitize(metric: &MetricField) -> Result<DensitizedField> {
    let d = metric.lattice.dim();
    let mut out = Vec::with_capacity(metric.components.len());
    for p in 0..metric.lattice.len() {
        let g = point_matrix(metric.at(p), d);
        let det = g.determinant();
        let inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Signature { index: p, reason: "metric is singular".into() })?;
        let inv = (&inv + inv.transpose()) * 0.5;
        let residual = (&g * &inv - DMatrix::identity(d, d)).abs().max();
        if residual > INVERSE_RESIDUAL_LIMIT {
            return Err(Error::Signature { index: p, reason: format!("inverse residual {residual:.3e}") });
        }
        let root = (-det).sqrt();
        for a in 0..d {
            for b in 0..d {
                out.push(root * inv[(a, b)]);
            }
        }
    }
    Ok(DensitizedField { lattice: metric.lattice.clone(), components: out })
}

/// `R^ν = ∂_μ 𝔤^{μν}` on interior points, `D` values per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl ResidualField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `max |R^ν|` for each `ν`.
    pub fn component_max_abs(&self) -> Vec<f64> {
        let d = self.lattice.dim();
        (0..d).map(|nu| self.values.iter().skip(nu).step_by(d).map(|v| v.abs()).fold(0.0, f64::max)).collect()
    }

    pub fn at(&self, point: usize) -> &[f64] {
        let d = self.lattice.dim();
        &self.values[point * d..(point + 1) * d]
    }
}

/// Central-difference divergence of a densitized field.
pub fn divergence(field: &DensitizedField) -> ResidualField {
    let lat = &field.lattice;
    let d = lat.dim();
    let interior = lat.interior();
    let mut values = Vec::with_capacity(interior.len() * d);
    for q in 0..interior.len() {
        let idx: Vec<usize> = interior.multi_index(q).iter().map(|i| i + 1).collect();
        let mut r = vec![0.0; d];
        for mu in 0..d {
            let mut up = idx.clone();
            let mut down = idx.clone();
            up[mu] += 1;
            down[mu] -= 1;
            let (pu, pd) = (lat.flat_index(&up) * d * d, lat.flat_index(&down) * d * d);
            let h2 = 2.0 * lat.spacing[mu];
            for (nu, rn) in r.iter_mut().enumerate() {
                let k = mu * d + nu;
                *rn += (field.components[pu + k] - field.components[pd + k]) / h2;
            }
        }
        values.extend(r);
    }
    ResidualField { lattice: interior, values }
}

pub fn harmonic_residual(metric: &MetricField) -> Result<ResidualField> {
    Ok(divergence(&densitize(metric)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub error_coarse: Vec<f64>,
    pub error_fine: Vec<f64>,
    /// `log2(coarse / fine)` per component; `None` where both errors sit at
    /// the rounding floor.
    pub orders: Vec<Option<f64>>,
    pub within_band: bool,
    pub notes: Vec<String>,
}

/// Compares residuals at spacing `h` and `h/2` against an analytic
/// divergence. The fine lattice must refine the coarse one.
pub fn convergence_order<F>(coarse: &MetricField, fine: &MetricField, analytic: F) -> Result<ConvergenceReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if fine.lattice != coarse.lattice.refined() {
        return Err(Error::GridMismatch("fine lattice is not the 2x refinement of the coarse lattice".into()));
    }
    let d = coarse.lattice.dim();
    let rc = harmonic_residual(coarse)?;
    let rf = harmonic_residual(fine)?;
    let errors = |r: &ResidualField| -> (Vec<f64>, f64) {
        let mut err = vec![0.0; d];
        let mut scale: f64 = 0.0;
        for q in 0..r.lattice.len() {
            let x = r.lattice.coordinate(&r.lattice.multi_index(q));
            let exact = analytic(&x);
            for nu in 0..d {
                err[nu] = f64::max(err[nu], (r.at(q)[nu] - exact[nu]).abs());
                scale = scale.max(exact[nu].abs());
            }
        }
        (err, scale)
    };
    let (error_coarse, scale_c) = errors(&rc);
    let (error_fine, scale_f) = errors(&rf);
    let floor = ERROR_FLOOR * scale_c.max(scale_f).max(1.0);
    let mut notes = Vec::new();
    let mut within_band = true;
    let orders: Vec<Option<f64>> = (0..d)
        .map(|nu| {
            if error_coarse[nu] <= floor && error_fine[nu] <= floor {
                notes.push(format!("component {nu}: residual exact at both spacings, order not measured"));
                None
            } else {
                let order = (error_coarse[nu] / error_fine[nu]).log2();
                if (order - EXPECTED_ORDER).abs() > ORDER_BAND {
                    within_band = false;
                    notes.push(format!(
                        "component {nu}: order {order:.3} outside expected band, input may not be smooth"
                    ));
                }
                Some(order)
            }
        })
        .collect();
    Ok(ConvergenceReport { error_coarse, error_fine, orders, within_band, notes })
}
