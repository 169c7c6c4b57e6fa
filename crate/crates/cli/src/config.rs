//! Run configuration files.
//!
//! A run is described by one TOML file. Every section except `experiment` is
//! optional; missing sections and keys take the values of the committed
//! weak-coupling scenario.

use std::path::{Path, PathBuf};

use gravdeco::diffeo::DiffeoSpec;
use gravdeco::evolve::EvolutionConfig;
use gravdeco::grid::{gaussian_packet, Grid, PeriodicBox};
use gravdeco::hole_experiment::{HoleExperimentConfig, PacketSpec, SweepParameter};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, ConfigIssue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Baseline,
    Hole,
    Sweep,
    RecoverBackground,
    CheckHarmonic,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Hole => "hole",
            Self::Sweep => "sweep",
            Self::RecoverBackground => "recover-background",
            Self::CheckHarmonic => "check-harmonic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("results"), formats: vec![OutputFormat::Csv, OutputFormat::Json] }
    }
}

fn weak() -> HoleExperimentConfig {
    HoleExperimentConfig::default_weak()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points: Vec<usize>,
    pub extent: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = weak().grid;
        Self { points: g.points().to_vec(), extent: g.extent().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketSection {
    pub center: Vec<f64>,
    pub width: f64,
    pub momentum: Vec<f64>,
}

impl Default for PacketSection {
    fn default() -> Self {
        let p = weak().packet;
        Self { center: p.center, width: p.width, momentum: p.momentum }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesSection {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub coupling: f64,
    /// Two grid spacings when absent.
    pub softening: Option<f64>,
}

impl Default for SourcesSection {
    fn default() -> Self {
        let w = weak();
        Self { left: w.left_source, right: w.right_source, coupling: w.coupling, softening: w.softening }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_end: f64,
    pub mass: f64,
    pub snapshot_stride: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let e = weak().evolution;
        Self { dt: e.dt, t_end: e.t_end, mass: e.mass, snapshot_stride: e.snapshot_stride }
    }
}

impl EvolutionSection {
    pub fn to_config(&self) -> EvolutionConfig {
        EvolutionConfig { dt: self.dt, t_end: self.t_end, mass: self.mass, snapshot_stride: self.snapshot_stride }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl RegionSection {
    fn support() -> Self {
        let b = weak().support;
        Self { center: b.center, half_width: b.half_width }
    }

    fn displaced() -> Self {
        let b = weak().displaced_support;
        Self { center: b.center, half_width: b.half_width }
    }

    pub fn to_box(&self) -> PeriodicBox {
        PeriodicBox::new(self.center.clone(), self.half_width.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoleSection {
    /// Require `U` and `U'` to be disjoint.
    pub enforce_disjoint: bool,
}

impl Default for HoleSection {
    fn default() -> Self {
        Self { enforce_disjoint: weak().enforce_disjoint }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// How `B[i][j]` is obtained from the two basis families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormOracle {
    /// `⟨e_i|f_j⟩` directly.
    Static,
    /// `⟨e_i(T)|f_j(T)⟩` after evolving both under the same point mass.
    Evolved { source: Vec<f64>, coupling: f64, dt: f64, t_end: f64, mass: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSection {
    /// 1D grid carrying both families.
    pub points: usize,
    pub extent: f64,
    /// Grid cells per basis element.
    pub block: usize,
    /// Reference family = branch family shifted by this many grid cells.
    pub translation_cells: i64,
    /// Further rotates the reference family by a seeded random unitary.
    pub rotation_seed: Option<u64>,
    pub oracle: FormOracle,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        Self {
            points: 32,
            extent: 8.0,
            block: 1,
            translation_cells: 5,
            rotation_seed: None,
            oracle: FormOracle::Static,
        }
    }
}

/// Metric families with a hand-derived divergence, sampled on `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManufacturedSpec {
    Minkowski { dim: usize, points: usize },
    Ripple { dim: usize, points: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicSection {
    /// Grid-field metric file, relative to the config file.
    pub metric_file: Option<PathBuf>,
    pub manufactured: Option<ManufacturedSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub packet: PacketSection,
    #[serde(default)]
    pub sources: SourcesSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default = "default_diffeo")]
    pub diffeo: DiffeoSpec,
    #[serde(default = "RegionSection::support")]
    pub support: RegionSection,
    #[serde(default = "RegionSection::displaced")]
    pub displaced_support: RegionSection,
    #[serde(default)]
    pub hole: HoleSection,
    pub sweep: Option<SweepSection>,
    pub background: Option<BackgroundSection>,
    pub harmonic: Option<HarmonicSection>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_diffeo() -> DiffeoSpec {
    weak().diffeo
}

fn finite_positive(issues: &mut Vec<ConfigIssue>, key: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        issues.push(ConfigIssue::new(key, format!("{v} must be positive")));
    }
}

fn check_len(issues: &mut Vec<ConfigIssue>, key: &str, v: &[f64], dim: usize) -> bool {
    if v.len() != dim {
        issues.push(ConfigIssue::new(key, format!("has {} components, grid has {dim}", v.len())));
        return false;
    }
    if v.iter().any(|x| !x.is_finite()) {
        issues.push(ConfigIssue::new(key, "components must be finite"));
        return false;
    }
    true
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn needs_hole_config(&self) -> bool {
        matches!(self.experiment, ExperimentKind::Baseline | ExperimentKind::Hole | ExperimentKind::Sweep)
    }

    pub fn background_section(&self) -> BackgroundSection {
        self.background.clone().unwrap_or_default()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Every failed check; empty when the configuration is runnable.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if self.output.formats.is_empty() {
            issues.push(ConfigIssue::new("output.formats", "at least one format is required"));
        }
        if self.needs_hole_config() {
            self.hole_issues(&mut issues);
        }
        match self.experiment {
            ExperimentKind::Sweep => match &self.sweep {
                None => issues.push(ConfigIssue::new("sweep", "section is required for a sweep")),
                Some(s) => {
                    if s.values.is_empty() {
                        issues.push(ConfigIssue::new("sweep.values", "at least one value is required"));
                    }
                    if s.values.iter().any(|v| !v.is_finite()) {
                        issues.push(ConfigIssue::new("sweep.values", "values must be finite"));
                    }
                }
            },
            ExperimentKind::RecoverBackground => self.background_issues(&mut issues),
            ExperimentKind::CheckHarmonic => self.harmonic_issues(&mut issues),
            _ => {}
        }
        issues
    }

    fn hole_issues(&self, issues: &mut Vec<ConfigIssue>) {
        let grid = match Grid::new(self.grid.points.clone(), self.grid.extent.clone()) {
            Ok(g) => Some(g),
            Err(e) => {
                issues.push(ConfigIssue::new("grid", e));
                None
            }
        };
        let dim = grid.as_ref().map_or(self.grid.points.len(), Grid::dim);

        finite_positive(issues, "packet.width", self.packet.width);
        let packet_ok = check_len(issues, "packet.center", &self.packet.center, dim)
            & check_len(issues, "packet.momentum", &self.packet.momentum, dim);
        if let (Some(g), true) = (&grid, packet_ok) {
            if let Err(e) = gaussian_packet(g, &self.packet.center, self.packet.width, &self.packet.momentum) {
                issues.push(ConfigIssue::new("packet", e));
            }
        }

        check_len(issues, "sources.left", &self.sources.left, dim);
        check_len(issues, "sources.right", &self.sources.right, dim);
        if !(self.sources.coupling.is_finite() && self.sources.coupling >= 0.0) {
            issues
                .push(ConfigIssue::new("sources.coupling", format!("{} must be non-negative", self.sources.coupling)));
        }
        if let Some(eps) = self.sources.softening {
            finite_positive(issues, "sources.softening", eps);
        }

        let ev = &self.evolution;
        finite_positive(issues, "evolution.dt", ev.dt);
        finite_positive(issues, "evolution.mass", ev.mass);
        if !(ev.t_end.is_finite() && ev.t_end >= 0.0) {
            issues.push(ConfigIssue::new("evolution.t_end", format!("{} must be non-negative", ev.t_end)));
        }
        if ev.snapshot_stride == 0 {
            issues.push(ConfigIssue::new("evolution.snapshot_stride", "must be at least 1"));
        }
        if !issues.iter().any(|i| i.key.starts_with("evolution.")) {
            if let Err(e) = ev.to_config().validate() {
                issues.push(ConfigIssue::new("evolution", e));
            }
        }

        if let Some((t0, _)) = self.diffeo.ramp_times() {
            if t0 < 0.0 {
                issues.push(ConfigIssue::new("diffeo.t0", format!("onset {t0} must be non-negative")));
            }
        }
        if let Some(g) = &grid {
            if let Err(e) = self.diffeo.build(g) {
                issues.push(ConfigIssue::new("diffeo", e));
            }
            let mut regions_ok = true;
            for (key, region) in [("support", &self.support), ("displaced_support", &self.displaced_support)] {
                if let Err(e) = region.to_box().check_dim(g) {
                    issues.push(ConfigIssue::new(key, e));
                    regions_ok = false;
                }
            }
            if regions_ok
                && self.hole.enforce_disjoint
                && self.experiment != ExperimentKind::Baseline
                && !self.support.to_box().is_disjoint_from(g, &self.displaced_support.to_box())
            {
                issues.push(ConfigIssue::new("displaced_support", "overlaps the support region"));
            }
        }
    }

    fn background_issues(&self, issues: &mut Vec<ConfigIssue>) {
        let b = self.background_section();
        let grid = match Grid::new(vec![b.points], vec![b.extent]) {
            Ok(g) => Some(g),
            Err(e) => {
                issues.push(ConfigIssue::new("background.points", e));
                None
            }
        };
        if b.block == 0 || !b.points.is_multiple_of(b.block) {
            issues.push(ConfigIssue::new("background.block", format!("{} must divide {} points", b.block, b.points)));
        } else if b.points / b.block < 2 {
            issues.push(ConfigIssue::new("background.block", "leaves fewer than two basis elements"));
        }
        if let FormOracle::Evolved { source, coupling, dt, t_end, mass } = &b.oracle {
            check_len(issues, "background.oracle.source", source, 1);
            if !(coupling.is_finite() && *coupling >= 0.0) {
                issues.push(ConfigIssue::new("background.oracle.coupling", format!("{coupling} must be non-negative")));
            }
            finite_positive(issues, "background.oracle.dt", *dt);
            finite_positive(issues, "background.oracle.mass", *mass);
            let cfg = EvolutionConfig { dt: *dt, t_end: *t_end, mass: *mass, snapshot_stride: 1 };
            if grid.is_some() && dt.is_finite() && *dt > 0.0 && mass.is_finite() && *mass > 0.0 {
                if let Err(e) = cfg.validate() {
                    issues.push(ConfigIssue::new("background.oracle", e));
                }
            }
        }
    }

    fn harmonic_issues(&self, issues: &mut Vec<ConfigIssue>) {
        let Some(h) = &self.harmonic else {
            issues.push(ConfigIssue::new("harmonic", "section is required"));
            return;
        };
        match (&h.metric_file, &h.manufactured) {
            (Some(_), Some(_)) | (None, None) => {
                issues.push(ConfigIssue::new("harmonic", "give exactly one of metric_file or manufactured"))
            }
            (Some(path), None) => {
                if !self.resolve(path).is_file() {
                    issues.push(ConfigIssue::new("harmonic.metric_file", format!("{} does not exist", path.display())));
                }
            }
            (None, Some(m)) => {
                let (dim, points) = match *m {
                    ManufacturedSpec::Minkowski { dim, points } => (dim, points),
                    ManufacturedSpec::Ripple { dim, points, amplitude } => {
                        if !(amplitude.is_finite() && amplitude.abs() < 0.5) {
                            issues.push(ConfigIssue::new(
                                "harmonic.manufactured.amplitude",
                                format!("{amplitude} must be below 0.5 in magnitude to keep the signature"),
                            ));
                        }
                        (dim, points)
                    }
                };
                if !(2..=4).contains(&dim) {
                    issues.push(ConfigIssue::new("harmonic.manufactured.dim", format!("{dim} must be 2, 3 or 4")));
                }
                if points < 3 {
                    issues.push(ConfigIssue::new("harmonic.manufactured.points", "at least 3 points per axis"));
                }
            }
        }
    }

    /// Assembles the hole-experiment configuration. Call after validation.
    pub fn hole_config(&self) -> CliResult<HoleExperimentConfig> {
        let grid = Grid::new(self.grid.points.clone(), self.grid.extent.clone())?;
        Ok(HoleExperimentConfig {
            grid,
            packet: PacketSpec {
                center: self.packet.center.clone(),
                width: self.packet.width,
                momentum: self.packet.momentum.clone(),
            },
            left_source: self.sources.left.clone(),
            right_source: self.sources.right.clone(),
            coupling: self.sources.coupling,
            softening: self.sources.softening,
            evolution: self.evolution.to_config(),
            diffeo: self.diffeo.clone(),
            support: self.support.to_box(),
            displaced_support: self.displaced_support.to_box(),
            enforce_disjoint: self.hole.enforce_disjoint,
        })
    }
}

/// Reads, parses and validates a configuration file, reporting every
/// problem at once.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut cfg =
        RunConfig::from_toml(&text).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let issues = cfg.issues();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(issues))
    }
}
