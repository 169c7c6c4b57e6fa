//! Two-branch decoherence run with and without the hole construction.
//!
//! Both branches start from the same packet and evolve in the potential of a
//! source fixed at `x_l` or `x_r`. The hole run transforms the stored left
//! snapshots (never re-evolving them) with a diffeomorphism that is trivial
//! before `t0` and carries the support `U` into a disjoint region `U'` after
//! `t1`. The right branch is left untouched. A control run applies the same
//! map to both branches.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{pushforward_potential, pushforward_wavefunction, DiffeoSpec, SpatialDiffeomorphism};
use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolutionConfig, Potential, Trajectory, DEFAULT_SOFTENING_SPACINGS};
use crate::grid::{gaussian_packet, inner_product, Grid, PeriodicBox, WaveFunction};
use crate::observable::{DecoherenceObservable, THETA_MAGNITUDE_SLACK};

/// `|θ| ≈ 1` threshold of the baseline run.
pub const COHERENT_THRESHOLD: f64 = 0.9;
/// `|θ| ≈ 0` threshold of the hole run.
pub const DECOHERED_THRESHOLD: f64 = 1e-3;
/// Mass each branch may leak out of `U`.
pub const SUPPORT_LEAK_LIMIT: f64 = 1e-12;
/// Mass the transformed left branch may keep inside `U` after `t1`.
pub const OVERLAP_MASS_LIMIT: f64 = 1e-6;
/// Joint pushforward must reproduce the baseline θ to this accuracy.
pub const JOINT_CONTROL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: Vec<f64>,
    pub width: f64,
    pub momentum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleExperimentConfig {
    pub grid: Grid,
    pub packet: PacketSpec,
    pub left_source: Vec<f64>,
    pub right_source: Vec<f64>,
    pub coupling: f64,
    /// Defaults to two grid spacings.
    pub softening: Option<f64>,
    pub evolution: EvolutionConfig,
    pub diffeo: DiffeoSpec,
    /// Declared support `U` of both branches.
    pub support: PeriodicBox,
    /// Region `U'` the diffeomorphism carries `U` into.
    pub displaced_support: PeriodicBox,
    /// Require `U ∩ U' = ∅` and the overlap-mass bound in [`run_hole`].
    pub enforce_disjoint: bool,
}

impl HoleExperimentConfig {
    /// Committed weak-coupling scenario: 1024 points over 40 packet widths,
    /// sources symmetric about the packet center, and a rigid shift of the
    /// left branch by 19 widths between `t = 1` and `t = 3`.
    ///
    /// The packet carries a small momentum; with a parity-symmetric packet
    /// and symmetric sources `⟨ψ_l|ψ_r⟩` would be real.
    pub fn default_weak() -> Self {
        Self {
            grid: Grid::new(vec![1024], vec![40.0]).expect("static grid"),
            packet: PacketSpec { center: vec![0.0], width: 1.0, momentum: vec![0.5] },
            left_source: vec![-7.0],
            right_source: vec![7.0],
            coupling: 0.5,
            softening: None,
            evolution: EvolutionConfig { dt: 0.01, t_end: 4.0, mass: 5.0, snapshot_stride: 10 },
            diffeo: DiffeoSpec::TranslationRamp { shift: vec![19.0], t0: 1.0, t1: 3.0 },
            support: PeriodicBox::new(vec![0.0], vec![9.0]),
            displaced_support: PeriodicBox::new(vec![19.0], vec![9.0]),
            enforce_disjoint: true,
        }
    }

    pub fn softening(&self) -> f64 {
        self.softening.unwrap_or(DEFAULT_SOFTENING_SPACINGS * self.grid.min_spacing())
    }

    pub fn potentials(&self) -> Result<(Potential, Potential)> {
        let eps = self.softening();
        Ok((
            Potential::point_mass(self.left_source.clone(), self.coupling, eps)?,
            Potential::point_mass(self.right_source.clone(), self.coupling, eps)?,
        ))
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        gaussian_packet(&self.grid, &self.packet.center, self.packet.width, &self.packet.momentum)
    }

    /// Every validation failure, not just the first.
    pub fn validation_errors(&self) -> Vec<Error> {
        let mut errors = Vec::new();
        let dim = self.grid.dim();
        if let Err(e) = self.initial_state() {
            errors.push(e);
        }
        for (name, v) in [("left_source", &self.left_source), ("right_source", &self.right_source)] {
            if v.len() != dim {
                errors.push(Error::DimensionMismatch(format!("{name} has {} components, grid has {dim}", v.len())));
            }
        }
        if let Some(eps) = self.softening {
            if !(eps.is_finite() && eps > 0.0) {
                errors.push(Error::Domain(format!("softening {eps} must be positive")));
            }
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            errors.push(Error::Domain(format!("coupling {} must be non-negative", self.coupling)));
        }
        if let Err(e) = self.evolution.validate() {
            errors.push(e);
        }
        if let Err(e) = self.diffeo.build(&self.grid) {
            errors.push(e);
        }
        if let Some((t0, _)) = self.diffeo.ramp_times() {
            if t0 < 0.0 {
                errors.push(Error::Domain(format!("diffeomorphism onset t0 = {t0} must be non-negative")));
            }
        }
        for region in [&self.support, &self.displaced_support] {
            if let Err(e) = region.check_dim(&self.grid) {
                errors.push(e);
            }
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        match self.validation_errors().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// One sample of a θ time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub arg: f64,
}

impl ThetaPoint {
    pub fn new(t: f64, theta: Complex64) -> Self {
        Self { t, re: theta.re, im: theta.im, abs: theta.norm(), arg: theta.arg() }
    }

    pub fn theta(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleDiagnostics {
    /// Largest mass of the transformed left branch inside `U` after `t1`.
    pub max_overlap_mass: f64,
    /// Largest `|‖ψ'‖ - ‖ψ‖|` seen while transforming snapshots.
    pub max_norm_drift: f64,
    /// Largest `|θ_joint(t) - θ(t)|` of the two-sided control.
    pub joint_control_deviation: f64,
    /// Left-branch potential after the transformation, at the final time.
    pub transformed_left_potential: Potential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleReport {
    pub theta_baseline: Vec<ThetaPoint>,
    pub theta_hole: Option<Vec<ThetaPoint>>,
    pub theta_joint: Option<Vec<ThetaPoint>>,
    pub final_baseline: ThetaPoint,
    pub final_hole: Option<ThetaPoint>,
    /// `|θ_baseline(T)| - |θ_hole(T)|`.
    pub contrast: Option<f64>,
    /// Largest mass outside `U` over all snapshots, per branch.
    pub max_tail_mass_left: f64,
    pub max_tail_mass_right: f64,
    pub softening: f64,
    pub hole: Option<HoleDiagnostics>,
    pub config: HoleExperimentConfig,
}

fn theta_series(left: &[(f64, WaveFunction)], right: &[(f64, WaveFunction)]) -> Result<Vec<ThetaPoint>> {
    left.iter()
        .zip(right)
        .map(|((t, l), (_, r))| {
            let obs = DecoherenceObservable::new(inner_product(l, r)?)?;
            Ok(ThetaPoint::new(*t, obs.theta()))
        })
        .collect()
}

fn max_tail_mass(traj: &Trajectory, region: &PeriodicBox) -> f64 {
    traj.snapshots().iter().map(|(_, psi)| (psi.norm_sqr() - psi.mass_in(region)).max(0.0)).fold(0.0, f64::max)
}

struct Branches {
    left: Trajectory,
    right: Trajectory,
    left_potential: Potential,
    report: HoleReport,
}

fn baseline(cfg: &HoleExperimentConfig) -> Result<Branches> {
    cfg.validate()?;
    let psi0 = cfg.initial_state()?;
    let (v_l, v_r) = cfg.potentials()?;
    let (left, right) = rayon::join(
        || evolve(&psi0.clone().with_label("psi_l"), &v_l, &cfg.evolution),
        || evolve(&psi0.clone().with_label("psi_r"), &v_r, &cfg.evolution),
    );
    let (left, right) = (left?, right?);
    let tail_l = max_tail_mass(&left, &cfg.support);
    let tail_r = max_tail_mass(&right, &cfg.support);
    for (name, tail) in [("left", tail_l), ("right", tail_r)] {
        if tail > SUPPORT_LEAK_LIMIT {
            return Err(Error::SupportViolation(format!(
                "{name} branch leaks mass {tail:e} outside the declared support"
            )));
        }
    }
    let series = theta_series(left.snapshots(), right.snapshots())?;
    let final_baseline = *series.last().expect("trajectory has a snapshot");
    let report = HoleReport {
        theta_baseline: series,
        theta_hole: None,
        theta_joint: None,
        final_baseline,
        final_hole: None,
        contrast: None,
        max_tail_mass_left: tail_l,
        max_tail_mass_right: tail_r,
        softening: cfg.softening(),
        hole: None,
        config: cfg.clone(),
    };
    Ok(Branches { left, right, left_potential: v_l, report })
}

/// Evolves both branches and reports `θ(t) = ⟨ψ_l(t)|ψ_r(t)⟩` at every
/// snapshot.
pub fn run_baseline(cfg: &HoleExperimentConfig) -> Result<HoleReport> {
    Ok(baseline(cfg)?.report)
}

fn push_all(traj: &Trajectory, phi: &SpatialDiffeomorphism) -> Result<(Vec<(f64, WaveFunction)>, f64)> {
    let pushed = traj
        .snapshots()
        .par_iter()
        .map(|(t, psi)| pushforward_wavefunction(psi, phi, *t).map(|p| ((*t, p.wavefunction), p.norm_drift)))
        .collect::<Result<Vec<_>>>()?;
    let drift = pushed.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    Ok((pushed.into_iter().map(|(s, _)| s).collect(), drift))
}

/// Baseline plus the one-sided hole construction on the left branch and the
/// two-sided control.
pub fn run_hole(cfg: &HoleExperimentConfig) -> Result<HoleReport> {
    let Branches { left, right, left_potential, mut report } = baseline(cfg)?;
    let phi = cfg.diffeo.build(&cfg.grid)?;
    if cfg.enforce_disjoint && !cfg.support.is_disjoint_from(&cfg.grid, &cfg.displaced_support) {
        return Err(Error::InsufficientDisplacement("declared regions U and U' intersect".into()));
    }

    let (left_pushed, drift_l) = push_all(&left, &phi)?;
    let (right_pushed, drift_r) = push_all(&right, &phi)?;

    let t1 = cfg.diffeo.ramp_times().map_or(f64::INFINITY, |(_, t1)| t1);
    let max_overlap_mass =
        left_pushed.iter().filter(|(t, _)| *t > t1).map(|(_, psi)| psi.mass_in(&cfg.support)).fold(0.0, f64::max);
    if cfg.enforce_disjoint && max_overlap_mass > OVERLAP_MASS_LIMIT {
        return Err(Error::InsufficientDisplacement(format!(
            "transformed left branch keeps mass {max_overlap_mass:e} inside U after t1"
        )));
    }

    let hole = theta_series(&left_pushed, right.snapshots())?;
    let joint = theta_series(&left_pushed, &right_pushed)?;
    let joint_control_deviation =
        joint.iter().zip(&report.theta_baseline).map(|(a, b)| (a.theta() - b.theta()).norm()).fold(0.0, f64::max);

    let t_final = left.end();
    let transformed_left_potential = pushforward_potential(&left_potential, &phi, t_final, &cfg.grid)?;

    let final_hole = *hole.last().expect("trajectory has a snapshot");
    report.contrast = Some(report.final_baseline.abs - final_hole.abs);
    report.final_hole = Some(final_hole);
    report.theta_hole = Some(hole);
    report.theta_joint = Some(joint);
    report.hole = Some(HoleDiagnostics {
        max_overlap_mass,
        max_norm_drift: drift_l.max(drift_r),
        joint_control_deviation,
        transformed_left_potential,
    });
    debug_assert!(report.theta_baseline.iter().all(|p| p.abs <= 1.0 + THETA_MAGNITUDE_SLACK));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Coupling,
    /// Magnitude of the diffeomorphism shift; `U'` follows the shift.
    Displacement,
    Mass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub report: Option<HoleReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub entries: Vec<SweepEntry>,
    /// Empirical expectations that did not hold (reported, not fatal).
    pub flags: Vec<String>,
}

/// The configuration actually run for one sweep value.
pub fn sweep_config(template: &HoleExperimentConfig, parameter: SweepParameter, value: f64) -> HoleExperimentConfig {
    let mut cfg = template.clone();
    match parameter {
        SweepParameter::Coupling => cfg.coupling = value,
        SweepParameter::Mass => cfg.evolution.mass = value,
        SweepParameter::Displacement => {
            let old = template.diffeo.shift().map(|s| s.to_vec());
            cfg.diffeo = template.diffeo.with_shift_magnitude(value);
            if let (Some(old), Some(new)) = (old, cfg.diffeo.shift()) {
                // U' rides along with the shift.
                for ((c, o), n) in cfg.displaced_support.center.iter_mut().zip(&old).zip(new) {
                    *c += n - o;
                }
            }
            cfg.enforce_disjoint = false;
        }
    }
    cfg
}

/// Independent hole runs, one per value, evaluated in parallel. Failed runs
/// are recorded and do not abort the sweep.
pub fn sweep(template: &HoleExperimentConfig, parameter: SweepParameter, values: &[f64]) -> SweepReport {
    let entries: Vec<SweepEntry> = values
        .par_iter()
        .map(|&value| match run_hole(&sweep_config(template, parameter, value)) {
            Ok(report) => SweepEntry { value, report: Some(report), error: None },
            Err(e) => SweepEntry { value, report: None, error: Some(e.to_string()) },
        })
        .collect();
    let flags = monotonicity_flags(parameter, &entries);
    SweepReport { parameter, entries, flags }
}

fn monotonicity_flags(parameter: SweepParameter, entries: &[SweepEntry]) -> Vec<String> {
    // Stronger coupling should not restore coherence; larger displacement
    // should not increase the transformed overlap.
    let pick: fn(&HoleReport) -> Option<f64> = match parameter {
        SweepParameter::Coupling => |r| Some(r.final_baseline.abs),
        SweepParameter::Displacement => |r| r.final_hole.map(|p| p.abs),
        SweepParameter::Mass => return Vec::new(),
    };
    let mut points: Vec<(f64, f64)> =
        entries.iter().filter_map(|e| e.report.as_ref().and_then(pick).map(|v| (e.value, v))).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 + 1e-12)
        .map(|w| format!("|theta| increased from {:.6e} at {} to {:.6e} at {}", w[0].1, w[0].0, w[1].1, w[1].0))
        .collect()
}
