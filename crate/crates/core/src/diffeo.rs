//! Time-dependent spatial diffeomorphisms `x' = x'(x, t)` on the periodic
//! domain, and the transformation of wavefunctions and potentials under them.
//!
//! Every map has the form `x' = x + s(t)·d(x)` where `s` is a smoothstep ramp
//! from `0` at `t0` to `1` at `t1`, so the map is the identity up to `t0`.
//! Displacement fields are parametric with analytic Jacobians.
//!
//! Wavefunctions transform as the square root of a density:
//! `ψ'(y) = ψ(x) · |det J(x)|^{-1/2}` with `y = x'(x, t)`. This is the
//! probability-preserving choice of the weight left free by the hole
//! construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Potential;
use crate::grid::{Grid, WaveFunction};
use crate::spectral::{fourier_shift, BandLimited};

/// Convergence target of the inverse map.
pub const INVERSE_TOLERANCE: f64 = 1e-12;
const MAX_INVERSE_ITERATIONS: usize = 500;

/// `max_ρ |d/dρ (1-ρ²)³| = 96 / (25√5)`, attained at `ρ = 1/√5`.
const BUMP_MAX_SLOPE: f64 = 1.717_300_846_961_545;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Displacement {
    Identity,
    /// Rigid shift of the whole domain.
    TranslationRamp {
        shift: Vec<f64>,
    },
    /// `peak_shift · (1 - ρ²)³` with `ρ = |x - center| / radius`, zero for `ρ ≥ 1`.
    BumpDisplacement {
        center: Vec<f64>,
        radius: f64,
        peak_shift: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDiffeomorphism {
    displacement: Displacement,
    t0: f64,
    t1: f64,
    /// Periodic box the map lives on.
    extent: Vec<f64>,
}

/// Smoothstep `u²(3 - 2u)` on `u = (t - t0)/(t1 - t0)`, clamped to `[0, 1]`.
pub fn smoothstep(t: f64, t0: f64, t1: f64) -> f64 {
    if t <= t0 {
        0.0
    } else if t >= t1 {
        1.0
    } else {
        let u = (t - t0) / (t1 - t0);
        u * u * (3.0 - 2.0 * u)
    }
}

fn check_ramp(t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::Domain(format!("ramp needs t0 < t1, got t0 = {t0}, t1 = {t1}")));
    }
    Ok(())
}

fn check_vector(grid: &Grid, v: &[f64], what: &str) -> Result<()> {
    if v.len() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} components on a {}-dimensional grid",
            v.len(),
            grid.dim()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("{what} must be finite")));
    }
    Ok(())
}

pub fn identity(grid: &Grid) -> SpatialDiffeomorphism {
    SpatialDiffeomorphism { displacement: Displacement::Identity, t0: 0.0, t1: 1.0, extent: grid.extent().to_vec() }
}

/// `x' = x + s(t)·shift`; the Jacobian is identically one.
pub fn make_translation_ramp(grid: &Grid, shift: Vec<f64>, t0: f64, t1: f64) -> Result<SpatialDiffeomorphism> {
    check_ramp(t0, t1)?;
    check_vector(grid, &shift, "shift")?;
    for (axis, (d, l)) in shift.iter().zip(grid.extent()).enumerate() {
        if d.abs() >= 0.5 * l {
            return Err(Error::Domain(format!("axis {axis}: shift {d} is not below half the extent {l}")));
        }
    }
    Ok(SpatialDiffeomorphism {
        displacement: Displacement::TranslationRamp { shift },
        t0,
        t1,
        extent: grid.extent().to_vec(),
    })
}

/// Compactly supported bump displacement around `center`.
///
/// Invertibility needs `|peak_shift| · max|β'| / radius < 1`, which also makes
/// the inverse a contraction fixed point. The bound is checked here and the
/// Jacobian sign is verified on a dense sample.
pub fn make_bump_displacement(
    grid: &Grid,
    center: Vec<f64>,
    radius: f64,
    peak_shift: Vec<f64>,
    t0: f64,
    t1: f64,
) -> Result<SpatialDiffeomorphism> {
    check_ramp(t0, t1)?;
    check_vector(grid, &center, "bump center")?;
    check_vector(grid, &peak_shift, "peak shift")?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("bump radius {radius} must be positive")));
    }
    let half = grid.extent().iter().fold(f64::INFINITY, |m, l| m.min(0.5 * l));
    if radius >= half {
        return Err(Error::Domain(format!("bump radius {radius} must be below half the extent {half}")));
    }
    let peak = peak_shift.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lipschitz = peak * BUMP_MAX_SLOPE / radius;
    if lipschitz >= 1.0 {
        return Err(Error::NonInvertibleDiffeo(format!(
            "|peak_shift| * max slope / radius = {lipschitz:.4} must be below 1"
        )));
    }
    let phi = SpatialDiffeomorphism {
        displacement: Displacement::BumpDisplacement { center, radius, peak_shift },
        t0,
        t1,
        extent: grid.extent().to_vec(),
    };
    phi.verify_jacobian(grid, t1)?;
    Ok(phi)
}

/// Serializable description of a diffeomorphism; [`DiffeoSpec::build`]
/// binds it to a grid and runs the constructor checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffeoSpec {
    Identity,
    TranslationRamp { shift: Vec<f64>, t0: f64, t1: f64 },
    BumpDisplacement { center: Vec<f64>, radius: f64, peak_shift: Vec<f64>, t0: f64, t1: f64 },
}

impl DiffeoSpec {
    pub fn build(&self, grid: &Grid) -> Result<SpatialDiffeomorphism> {
        match self {
            Self::Identity => Ok(identity(grid)),
            Self::TranslationRamp { shift, t0, t1 } => make_translation_ramp(grid, shift.clone(), *t0, *t1),
            Self::BumpDisplacement { center, radius, peak_shift, t0, t1 } => {
                make_bump_displacement(grid, center.clone(), *radius, peak_shift.clone(), *t0, *t1)
            }
        }
    }

    /// Onset and completion times; `None` for the identity.
    pub fn ramp_times(&self) -> Option<(f64, f64)> {
        match self {
            Self::Identity => None,
            Self::TranslationRamp { t0, t1, .. } | Self::BumpDisplacement { t0, t1, .. } => Some((*t0, *t1)),
        }
    }

    /// Displacement vector at full ramp (the bump peak for bumps).
    pub fn shift(&self) -> Option<&[f64]> {
        match self {
            Self::Identity => None,
            Self::TranslationRamp { shift, .. } => Some(shift),
            Self::BumpDisplacement { peak_shift, .. } => Some(peak_shift),
        }
    }

    /// Same direction, new magnitude. A zero direction is taken along the
    /// first axis.
    pub fn with_shift_magnitude(&self, magnitude: f64) -> Self {
        let rescale = |v: &[f64]| -> Vec<f64> {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                let mut out = vec![0.0; v.len()];
                if let Some(first) = out.first_mut() {
                    *first = magnitude;
                }
                out
            } else {
                v.iter().map(|x| x * magnitude / n).collect()
            }
        };
        match self {
            Self::Identity => Self::Identity,
            Self::TranslationRamp { shift, t0, t1 } => {
                Self::TranslationRamp { shift: rescale(shift), t0: *t0, t1: *t1 }
            }
            Self::BumpDisplacement { center, radius, peak_shift, t0, t1 } => Self::BumpDisplacement {
                center: center.clone(),
                radius: *radius,
                peak_shift: rescale(peak_shift),
                t0: *t0,
                t1: *t1,
            },
        }
    }
}

/// Result of pushing a wavefunction forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Pushforward {
    pub wavefunction: WaveFunction,
    /// `‖ψ'‖ - ‖ψ‖` before renormalization.
    pub norm_drift: f64,
}

impl SpatialDiffeomorphism {
    pub fn displacement_kind(&self) -> &Displacement {
        &self.displacement
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn ramp(&self, t: f64) -> f64 {
        smoothstep(t, self.t0, self.t1)
    }

    /// True when the map is the identity at time `t`.
    pub fn is_trivial_at(&self, t: f64) -> bool {
        match &self.displacement {
            Displacement::Identity => true,
            Displacement::TranslationRamp { shift } => self.ramp(t) == 0.0 || shift.iter().all(|v| *v == 0.0),
            Displacement::BumpDisplacement { peak_shift, .. } => {
                self.ramp(t) == 0.0 || peak_shift.iter().all(|v| *v == 0.0)
            }
        }
    }

    fn wrap(&self, axis: usize, d: f64) -> f64 {
        let l = self.extent[axis];
        d - l * (d / l).round()
    }

    /// `1 - ρ²` and the minimum-image offset `x - center`, or `None` outside
    /// the support.
    fn bump_profile(&self, x: &[f64], center: &[f64], radius: f64) -> Option<(f64, Vec<f64>)> {
        let rel: Vec<f64> = x.iter().zip(center).enumerate().map(|(a, (p, c))| self.wrap(a, p - c)).collect();
        let rho2 = rel.iter().map(|v| v * v).sum::<f64>() / (radius * radius);
        if rho2 >= 1.0 {
            return None;
        }
        Some((1.0 - rho2, rel))
    }

    /// `s(t)·d(x)`.
    pub fn displacement(&self, x: &[f64], t: f64) -> Vec<f64> {
        let s = self.ramp(t);
        match &self.displacement {
            Displacement::Identity => vec![0.0; x.len()],
            Displacement::TranslationRamp { shift } => shift.iter().map(|v| s * v).collect(),
            Displacement::BumpDisplacement { center, radius, peak_shift } => {
                match self.bump_profile(x, center, *radius) {
                    Some((q, _)) => peak_shift.iter().map(|v| s * q * q * q * v).collect(),
                    None => vec![0.0; x.len()],
                }
            }
        }
    }

    pub fn forward(&self, x: &[f64], t: f64) -> Vec<f64> {
        x.iter().zip(self.displacement(x, t)).map(|(a, d)| a + d).collect()
    }

    /// Jacobian determinant of the forward map at `x`.
    ///
    /// The displacement gradient is rank one, so
    /// `det(I + s·p ⊗ ∇β) = 1 + s·p·∇β` with `∇β = -6(1-ρ²)²(x-c)/R²`.
    pub fn jacobian_det(&self, x: &[f64], t: f64) -> f64 {
        match &self.displacement {
            Displacement::Identity | Displacement::TranslationRamp { .. } => 1.0,
            Displacement::BumpDisplacement { center, radius, peak_shift } => {
                match self.bump_profile(x, center, *radius) {
                    Some((q, rel)) => {
                        let s = self.ramp(t);
                        let dot: f64 = peak_shift.iter().zip(&rel).map(|(p, r)| p * r).sum();
                        1.0 - 6.0 * s * q * q * dot / (radius * radius)
                    }
                    None => 1.0,
                }
            }
        }
    }

    /// Solves `x'(x, t) = y` for `x`.
    pub fn inverse(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        match &self.displacement {
            Displacement::Identity => Ok(y.to_vec()),
            Displacement::TranslationRamp { shift } => {
                let s = self.ramp(t);
                Ok(y.iter().zip(shift).map(|(a, d)| a - s * d).collect())
            }
            Displacement::BumpDisplacement { .. } => {
                // x ← x + ω (y - x'(x)); the undamped map is a contraction
                // under the construction bound, ω is halved if a step
                // fails to reduce the residual.
                let mut x = y.to_vec();
                let mut omega = 1.0;
                let mut residual = self.residual(&x, y, t);
                for _ in 0..MAX_INVERSE_ITERATIONS {
                    let r = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r <= INVERSE_TOLERANCE {
                        return Ok(x);
                    }
                    let candidate: Vec<f64> = x.iter().zip(&residual).map(|(a, e)| a + omega * e).collect();
                    let next = self.residual(&candidate, y, t);
                    if next.iter().map(|v| v * v).sum::<f64>().sqrt() < r {
                        x = candidate;
                        residual = next;
                    } else {
                        omega *= 0.5;
                        if omega < 1e-6 {
                            break;
                        }
                    }
                }
                Err(Error::NonInvertibleDiffeo(format!("inverse did not converge at y = {y:?}, t = {t}")))
            }
        }
    }

    /// Minimum-image `y - x'(x, t)`.
    fn residual(&self, x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
        let fx = self.forward(x, t);
        y.iter().zip(&fx).enumerate().map(|(a, (p, q))| self.wrap(a, p - q)).collect()
    }

    /// Checks `det J > 0` on the grid points and along dense lines through
    /// the bump center.
    pub fn verify_jacobian(&self, grid: &Grid, t: f64) -> Result<()> {
        let mut samples: Vec<Vec<f64>> = grid.positions();
        if let Displacement::BumpDisplacement { center, radius, .. } = &self.displacement {
            for axis in 0..grid.dim() {
                for k in 0..=4000 {
                    let mut x = center.clone();
                    x[axis] += radius * (k as f64 / 2000.0 - 1.0);
                    samples.push(x);
                }
            }
        }
        for x in samples {
            let det = self.jacobian_det(&x, t);
            if det.is_nan() || det <= 0.0 {
                return Err(Error::NonInvertibleDiffeo(format!("det J = {det} at {x:?}")));
            }
        }
        Ok(())
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.extent() != self.extent.as_slice() {
            return Err(Error::GridMismatch(format!(
                "diffeomorphism built for extent {:?}, grid has {:?}",
                self.extent,
                grid.extent()
            )));
        }
        Ok(())
    }
}

/// Uniform shift `s(t)·shift` if the map is a translation.
fn translation_at(phi: &SpatialDiffeomorphism, t: f64) -> Option<Vec<f64>> {
    match &phi.displacement {
        Displacement::TranslationRamp { shift } => {
            let s = phi.ramp(t);
            Some(shift.iter().map(|v| s * v).collect())
        }
        _ => None,
    }
}

/// Whole-cell offsets if `shift` is grid-aligned on every axis.
fn aligned_cells(grid: &Grid, shift: &[f64]) -> Option<Vec<isize>> {
    shift
        .iter()
        .enumerate()
        .map(|(axis, d)| {
            let cells = d / grid.spacing(axis);
            let rounded = cells.round();
            ((cells - rounded).abs() <= 1e-12 * rounded.abs().max(1.0)).then_some(rounded as isize)
        })
        .collect()
}

/// `ψ'(y) = ψ(φ⁻¹(y, t)) · |det J(φ⁻¹(y, t), t)|^{-1/2}` sampled on the grid.
///
/// Off-grid values of `ψ` come from its band-limited interpolant. The result
/// is rescaled to the input norm; the pre-rescaling discrepancy is returned
/// in [`Pushforward::norm_drift`].
pub fn pushforward_wavefunction(psi: &WaveFunction, phi: &SpatialDiffeomorphism, t: f64) -> Result<Pushforward> {
    let grid = psi.grid();
    phi.check_grid(grid)?;
    if phi.is_trivial_at(t) {
        return Ok(Pushforward { wavefunction: psi.clone(), norm_drift: 0.0 });
    }
    let norm_in = psi.norm();
    let amplitudes = if let Some(shift) = translation_at(phi, t) {
        match aligned_cells(grid, &shift) {
            Some(cells) => {
                // Exact circular shift of samples.
                let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
                for (flat, z) in psi.amplitudes().iter().enumerate() {
                    let target: Vec<isize> =
                        grid.multi_index(flat).iter().zip(&cells).map(|(&i, c)| i as isize + c).collect();
                    out[grid.flat_index(&target)] = *z;
                }
                return Ok(Pushforward { wavefunction: psi.with_amplitudes(out)?, norm_drift: 0.0 });
            }
            None => fourier_shift(grid, psi.amplitudes(), &shift),
        }
    } else {
        let interp = BandLimited::new(grid, psi.amplitudes());
        (0..grid.len())
            .map(|flat| {
                let x = phi.inverse(&grid.position(flat), t)?;
                let det = phi.jacobian_det(&x, t);
                if det.is_nan() || det <= 0.0 {
                    return Err(Error::NonInvertibleDiffeo(format!("det J = {det} at {x:?}")));
                }
                Ok(interp.eval(&x) / det.sqrt())
            })
            .collect::<Result<Vec<_>>>()?
    };
    let pushed = psi.with_amplitudes(amplitudes)?;
    let norm_out = pushed.norm();
    if norm_out == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(Pushforward {
        wavefunction: pushed.scaled(Complex64::new(norm_in / norm_out, 0.0)),
        norm_drift: norm_out - norm_in,
    })
}

/// Scalar transformation `V'(y) = V(φ⁻¹(y, t))`.
///
/// Point masses under a translation stay point masses at the moved source;
/// every other case is tabulated on `grid`.
pub fn pushforward_potential(
    potential: &Potential,
    phi: &SpatialDiffeomorphism,
    t: f64,
    grid: &Grid,
) -> Result<Potential> {
    phi.check_grid(grid)?;
    if phi.is_trivial_at(t) {
        return Ok(potential.clone());
    }
    if let Some(shift) = translation_at(phi, t) {
        match potential {
            Potential::PointMass { source, coupling, softening } => {
                let moved = source
                    .iter()
                    .zip(&shift)
                    .enumerate()
                    .map(|(axis, (x, d))| grid.wrap_displacement(axis, x + d))
                    .collect();
                return Potential::point_mass(moved, *coupling, *softening);
            }
            Potential::Tabulated { grid: own, values } => {
                own.check_same(grid)?;
                let c: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
                let moved = fourier_shift(grid, &c, &shift).iter().map(|z| z.re).collect();
                return Potential::tabulated(grid.clone(), moved);
            }
        }
    }
    let interp = match potential {
        Potential::Tabulated { grid: own, values } => {
            own.check_same(grid)?;
            Some(BandLimited::from_real(grid, values))
        }
        Potential::PointMass { .. } => None,
    };
    let values = (0..grid.len())
        .map(|flat| {
            let x = phi.inverse(&grid.position(flat), t)?;
            match &interp {
                Some(b) => Ok(b.eval(&x).re),
                None => potential.value_at(grid, &x),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Potential::tabulated(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_packet, inner_product};

    fn line() -> Grid {
        Grid::new(vec![512], vec![40.0]).unwrap()
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(-1.0, 0.0, 2.0), 0.0);
        assert_eq!(smoothstep(0.0, 0.0, 2.0), 0.0);
        assert_eq!(smoothstep(1.0, 0.0, 2.0), 0.5);
        assert_eq!(smoothstep(2.0, 0.0, 2.0), 1.0);
        assert_eq!(smoothstep(5.0, 0.0, 2.0), 1.0);
    }

    #[test]
    fn zero_translation_is_identity() {
        let g = line();
        let phi = make_translation_ramp(&g, vec![0.0], 0.0, 1.0).unwrap();
        for t in [-1.0, 0.5, 3.0] {
            assert_eq!(phi.forward(&[1.25], t), vec![1.25]);
            assert!(phi.is_trivial_at(t));
        }
    }

    #[test]
    fn translation_gate_and_completion() {
        let g = line();
        let phi = make_translation_ramp(&g, vec![3.0], 1.0, 2.0).unwrap();
        assert_eq!(phi.forward(&[0.5], 0.9), vec![0.5]);
        assert_eq!(phi.forward(&[0.5], 1.0), vec![0.5]);
        assert_eq!(phi.forward(&[0.5], 2.0), vec![3.5]);
        assert_eq!(phi.jacobian_det(&[0.5], 2.0), 1.0);
        assert_eq!(phi.inverse(&[3.5], 7.0).unwrap(), vec![0.5]);
    }

    #[test]
    fn oversized_translation_is_rejected() {
        let g = line();
        assert!(matches!(make_translation_ramp(&g, vec![20.0], 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(make_translation_ramp(&g, vec![1.0], 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bump_bound_is_enforced() {
        let g = line();
        // |p| * 1.7173 / R must be below 1
        assert!(make_bump_displacement(&g, vec![0.0], 4.0, vec![2.0], 0.0, 1.0).is_ok());
        assert!(matches!(
            make_bump_displacement(&g, vec![0.0], 4.0, vec![2.4], 0.0, 1.0),
            Err(Error::NonInvertibleDiffeo(_))
        ));
    }

    #[test]
    fn bump_is_identity_outside_support_and_for_zero_peak() {
        let g = line();
        let phi = make_bump_displacement(&g, vec![0.0], 4.0, vec![1.5], 0.0, 1.0).unwrap();
        assert_eq!(phi.forward(&[5.0], 2.0), vec![5.0]);
        assert_eq!(phi.forward(&[-4.0], 2.0), vec![-4.0]);
        assert_eq!(phi.jacobian_det(&[7.0], 2.0), 1.0);
        let zero = make_bump_displacement(&g, vec![0.0], 4.0, vec![0.0], 0.0, 1.0).unwrap();
        assert_eq!(zero.forward(&[1.0], 2.0), vec![1.0]);
    }

    #[test]
    fn bump_jacobian_matches_finite_differences() {
        let g = Grid::new(vec![64, 64], vec![20.0, 20.0]).unwrap();
        let phi = make_bump_displacement(&g, vec![0.5, -0.5], 5.0, vec![1.2, 0.8], 0.0, 2.0).unwrap();
        let h = 1e-5;
        for x in [[0.1, 0.2], [1.8, -2.0], [-1.0, 1.5]] {
            let t = 1.3;
            let mut jac = [[0.0; 2]; 2];
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fp = phi.forward(&xp, t);
                let fm = phi.forward(&xm, t);
                for i in 0..2 {
                    jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            assert!((det - phi.jacobian_det(&x, t)).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_pushforward_returns_input() {
        let g = line();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.5]).unwrap();
        let out = pushforward_wavefunction(&psi, &identity(&g), 3.0).unwrap();
        assert_eq!(out.wavefunction, psi);
        assert_eq!(out.norm_drift, 0.0);
    }

    #[test]
    fn aligned_translation_permutes_samples() {
        let g = line();
        let dx = g.spacing(0);
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.5]).unwrap();
        let phi = make_translation_ramp(&g, vec![7.0 * dx], 0.0, 1.0).unwrap();
        let out = pushforward_wavefunction(&psi, &phi, 1.0).unwrap().wavefunction;
        for i in 0..g.len() {
            assert_eq!(out.amplitudes()[(i + 7) % g.len()], psi.amplitudes()[i]);
        }
        assert_eq!(out.norm(), psi.norm());
    }

    #[test]
    fn bump_pushforward_keeps_norm_and_changes_state() {
        let g = line();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        let phi = make_bump_displacement(&g, vec![0.5], 5.0, vec![2.0], 0.0, 1.0).unwrap();
        let out = pushforward_wavefunction(&psi, &phi, 1.0).unwrap();
        assert!(out.norm_drift.abs() < 1e-6, "{}", out.norm_drift);
        assert!((out.wavefunction.norm() - 1.0).abs() < 1e-12);
        assert!(inner_product(&out.wavefunction, &psi).unwrap().norm() < 1.0 - 1e-3);
    }

    #[test]
    fn point_mass_follows_translation() {
        let g = line();
        let v = Potential::point_mass_on(&g, vec![2.0], 0.3).unwrap();
        let phi = make_translation_ramp(&g, vec![5.5], 0.0, 1.0).unwrap();
        let moved = pushforward_potential(&v, &phi, 1.0, &g).unwrap();
        let expected = Potential::point_mass_on(&g, vec![7.5], 0.3).unwrap();
        let (a, b) = (moved.sample(&g).unwrap(), expected.sample(&g).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        assert_eq!(pushforward_potential(&v, &identity(&g), 1.0, &g).unwrap(), v);
    }
}
