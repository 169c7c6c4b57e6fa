//! Experiment dispatch and result serialization.
//!
//! Data files never contain timings; those go to `metadata.json`, so repeated
//! runs of one configuration produce byte-identical data files.

use std::path::Path;
use std::time::Instant;

use gravdeco::background_recover::{
    cell_basis, commutation_check, position_projectors, random_unitary, riesz_isomorphism, rotated_basis, sample_form,
    translated_basis, MatrixRecord,
};
use gravdeco::evolve::{evolve, EvolutionConfig, Potential};
use gravdeco::grid::{inner_product, Grid, WaveFunction};
use gravdeco::harmonic::{convergence_order, harmonic_residual, ConvergenceReport, MetricField, ResidualField};
use gravdeco::hole_experiment::{run_baseline, run_hole, sweep, HoleReport, SweepReport, ThetaPoint};
use gravdeco::observable::{density_matrix, DecoherenceObservable};
use gravdeco::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentKind, FormOracle, OutputFormat, RunConfig};
use crate::error::{CliError, CliResult};
use crate::grid_field::{self, GridField};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const THETA_CSV_HEADER: &str = "t,re_theta,im_theta,abs_theta,arg_theta";
pub const SWEEP_CSV_HEADER: &str =
    "value,status,abs_theta_baseline,arg_theta_baseline,abs_theta_hole,arg_theta_hole,message";
pub const LOCALIZATION_CSV_HEADER: &str = "element,localization_index,expected_index";
pub const RESIDUAL_CSV_HEADER: &str = "component,max_abs_residual,error_coarse,error_fine,order";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub experiment: ExperimentKind,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub files: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub experiment: ExperimentKind,
    pub files: Vec<DataFile>,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
    pub metadata: Metadata,
}

impl ResultBundle {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

struct Files<'a> {
    formats: &'a [OutputFormat],
    out: Vec<DataFile>,
}

impl Files<'_> {
    fn csv(&mut self, name: &str, contents: String) {
        if self.formats.contains(&OutputFormat::Csv) {
            self.out.push(DataFile { name: name.into(), contents });
        }
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> CliResult<()> {
        if self.formats.contains(&OutputFormat::Json) {
            let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
            text.push('\n');
            self.out.push(DataFile { name: name.into(), contents: text });
        }
        Ok(())
    }

    fn always(&mut self, name: &str, contents: String) {
        self.out.push(DataFile { name: name.into(), contents });
    }
}

fn ensure_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> CliResult<()> {
    match values.into_iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::Serialize(format!("{what} contains the non-finite value {v}"))),
        None => Ok(()),
    }
}

fn theta_values(series: &[ThetaPoint]) -> Vec<f64> {
    series.iter().flat_map(|p| [p.t, p.re, p.im, p.abs, p.arg]).collect()
}

pub fn theta_csv(series: &[ThetaPoint]) -> String {
    let mut out = String::from(THETA_CSV_HEADER);
    out.push('\n');
    for p in series {
        out.push_str(&format!("{},{},{},{},{}\n", p.t, p.re, p.im, p.abs, p.arg));
    }
    out
}

fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn point_json(p: &ThetaPoint) -> serde_json::Value {
    json!({ "t": p.t, "re": p.re, "im": p.im, "abs": p.abs, "arg": p.arg })
}

fn check_report(report: &HoleReport) -> CliResult<()> {
    ensure_finite("theta_baseline", &theta_values(&report.theta_baseline))?;
    for series in [&report.theta_hole, &report.theta_joint].into_iter().flatten() {
        ensure_finite("transformed theta series", &theta_values(series))?;
    }
    ensure_finite("tail masses", &[report.max_tail_mass_left, report.max_tail_mass_right, report.softening])?;
    if let Some(d) = &report.hole {
        ensure_finite("hole diagnostics", &[d.max_overlap_mass, d.max_norm_drift, d.joint_control_deviation])?;
    }
    Ok(())
}

fn baseline_summary(report: &HoleReport) -> CliResult<serde_json::Value> {
    let fin = report.final_baseline;
    let rho = density_matrix(&DecoherenceObservable::new(fin.theta())?)?;
    let entries: Vec<Vec<[f64; 2]>> =
        rho.entries().iter().map(|row| row.iter().map(|z| complex_pair(*z)).collect()).collect();
    Ok(json!({
        "final_baseline": point_json(&fin),
        "density_matrix": entries,
        "purity": rho.purity(),
        "max_tail_mass_left": report.max_tail_mass_left,
        "max_tail_mass_right": report.max_tail_mass_right,
        "softening": report.softening,
    }))
}

fn hole_summary(report: &HoleReport) -> CliResult<serde_json::Value> {
    let mut summary = baseline_summary(report)?;
    let diag = report.hole.as_ref().expect("hole run carries diagnostics");
    let obj = summary.as_object_mut().expect("summary is an object");
    obj.insert("final_hole".into(), report.final_hole.as_ref().map_or(serde_json::Value::Null, point_json));
    obj.insert("contrast".into(), json!(report.contrast));
    obj.insert("joint_control_deviation".into(), json!(diag.joint_control_deviation));
    obj.insert("max_norm_drift".into(), json!(diag.max_norm_drift));
    obj.insert("max_overlap_mass".into(), json!(diag.max_overlap_mass));
    Ok(summary)
}

fn run_two_branch(cfg: &RunConfig, files: &mut Files, summary: &mut Vec<String>) -> CliResult<()> {
    let hole_cfg = cfg.hole_config()?;
    let with_hole = cfg.experiment == ExperimentKind::Hole;
    let report = if with_hole { run_hole(&hole_cfg)? } else { run_baseline(&hole_cfg)? };
    check_report(&report)?;
    let fin = report.final_baseline;
    summary.push(format!("final theta_baseline: |theta| = {:.6}, arg = {:.6}", fin.abs, fin.arg));
    files.csv("theta_baseline.csv", theta_csv(&report.theta_baseline));
    let block = if with_hole {
        let hole = report.final_hole.expect("hole run has a final point");
        summary.push(format!("final theta_hole: |theta| = {:.3e}", hole.abs));
        summary.push(format!("contrast: {:.6}", report.contrast.unwrap_or(f64::NAN)));
        files.csv("theta_hole.csv", theta_csv(report.theta_hole.as_deref().unwrap_or_default()));
        files.csv("theta_joint.csv", theta_csv(report.theta_joint.as_deref().unwrap_or_default()));
        hole_summary(&report)?
    } else {
        baseline_summary(&report)?
    };
    files.json(
        "report.json",
        &json!({
            "experiment": cfg.experiment,
            "version": VERSION,
            "config": cfg,
            "summary": block,
            "report": report,
        }),
    )
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for e in &report.entries {
        match (&e.report, &e.error) {
            (Some(r), _) => {
                let (ha, hp) =
                    r.final_hole.map_or((String::new(), String::new()), |p| (p.abs.to_string(), p.arg.to_string()));
                out.push_str(&format!(
                    "{},ok,{},{},{},{},\n",
                    e.value, r.final_baseline.abs, r.final_baseline.arg, ha, hp
                ));
            }
            (None, err) => {
                let msg = err.as_deref().unwrap_or("").replace([',', '\n'], ";");
                out.push_str(&format!("{},error,,,,,{}\n", e.value, msg));
            }
        }
    }
    out
}

fn run_sweep(cfg: &RunConfig, files: &mut Files, summary: &mut Vec<String>) -> CliResult<()> {
    let section = cfg.sweep.as_ref().expect("validated sweep section");
    let template = cfg.hole_config()?;
    let report = sweep(&template, section.parameter, &section.values);
    for entry in &report.entries {
        if let Some(r) = &entry.report {
            check_report(r)?;
        }
        let line = match (&entry.report, &entry.error) {
            (Some(r), _) => format!(
                "{:?} = {}: |theta_baseline| = {:.6}, |theta_hole| = {:.3e}",
                section.parameter,
                entry.value,
                r.final_baseline.abs,
                r.final_hole.map_or(f64::NAN, |p| p.abs)
            ),
            (None, e) => format!("{:?} = {}: error: {}", section.parameter, entry.value, e.as_deref().unwrap_or("")),
        };
        summary.push(line);
    }
    summary.extend(report.flags.iter().map(|f| format!("flag: {f}")));
    files.csv("sweep.csv", sweep_csv(&report));
    files.json(
        "sweep.json",
        &json!({ "experiment": cfg.experiment, "version": VERSION,
            "config": cfg, "sweep": report }),
    )
}

/// Output of `recover-background`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundResult {
    pub n: usize,
    pub condition_number: f64,
    pub localization_indices: Vec<usize>,
    /// Known answer when the reference family is a whole-element shift.
    pub expected_indices: Option<Vec<usize>>,
    pub commutator_norm: f64,
    pub form_matrix: MatrixRecord,
    pub unitary: MatrixRecord,
}

pub fn recover_background(section: &crate::config::BackgroundSection) -> CliResult<BackgroundResult> {
    let grid = Grid::new(vec![section.points], vec![section.extent])?;
    let g = cell_basis(&grid, section.block)?;
    let n = g.len();
    let mut eta = translated_basis(&g, section.translation_cells as isize)?;
    if let Some(seed) = section.rotation_seed {
        eta = rotated_basis(&eta, &random_unitary(n, seed))?;
    }
    let sample = match &section.oracle {
        FormOracle::Static => sample_form(&g, &eta, inner_product)?,
        FormOracle::Evolved { source, coupling, dt, t_end, mass } => {
            let v = Potential::point_mass_on(&grid, source.clone(), *coupling)?;
            let ev = EvolutionConfig { dt: *dt, t_end: *t_end, mass: *mass, snapshot_stride: usize::MAX };
            let advance =
                |psi: &WaveFunction| -> gravdeco::Result<WaveFunction> { Ok(evolve(psi, &v, &ev)?.last().clone()) };
            sample_form(&g, &eta, |a, b| inner_product(&advance(a)?, &advance(b)?))?
        }
    };
    let q = position_projectors(n);
    let map = riesz_isomorphism(&sample)?.recover(&q)?;
    let commutator_norm = commutation_check(&map, &q)?;
    let k = section.translation_cells.rem_euclid(section.points as i64) as usize;
    let expected_indices = (section.rotation_seed.is_none() && k.is_multiple_of(section.block))
        .then(|| (0..n).map(|j| (j + k / section.block) % n).collect());
    let result = BackgroundResult {
        n,
        condition_number: map.condition_number,
        localization_indices: map.localization_indices(),
        expected_indices,
        commutator_norm,
        form_matrix: MatrixRecord::from_matrix(&sample.matrix),
        unitary: MatrixRecord::from_matrix(&map.unitary),
    };
    let matrix_values = result.form_matrix.entries.iter().chain(&result.unitary.entries).flatten().flatten();
    ensure_finite("background matrices", matrix_values)?;
    ensure_finite("background scalars", &[result.condition_number, result.commutator_norm])?;
    Ok(result)
}

fn run_background(cfg: &RunConfig, files: &mut Files, summary: &mut Vec<String>) -> CliResult<()> {
    let section = cfg.background_section();
    let result = recover_background(&section)?;
    summary.push(format!("n = {}, condition number = {:.6e}", result.n, result.condition_number));
    summary.push(format!("commutator norm = {:.3e}", result.commutator_norm));
    if let Some(expected) = &result.expected_indices {
        let hits = expected.iter().zip(&result.localization_indices).filter(|(a, b)| a == b).count();
        summary.push(format!("localization matches planted translation for {hits}/{} elements", result.n));
    }
    let mut csv = String::from(LOCALIZATION_CSV_HEADER);
    csv.push('\n');
    for (j, idx) in result.localization_indices.iter().enumerate() {
        let expected = result.expected_indices.as_ref().map_or(String::new(), |e| e[j].to_string());
        csv.push_str(&format!("{j},{idx},{expected}\n"));
    }
    files.csv("localization.csv", csv);
    files.json(
        "background.json",
        &json!({ "experiment": cfg.experiment, "version": VERSION,
            "config": cfg, "background": section, "result": result }),
    )
}

/// Output of `check-harmonic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResult {
    pub max_abs_residual: f64,
    pub component_max_abs: Vec<f64>,
    pub convergence: Option<ConvergenceReport>,
}

pub fn load_metric(path: &Path) -> CliResult<MetricField> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let field = grid_field::parse(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    })?;
    Ok(field.into_metric()?)
}

pub fn check_harmonic(
    metric: &MetricField,
    convergence: Option<ConvergenceReport>,
) -> CliResult<(ResidualField, HarmonicResult)> {
    let residual = harmonic_residual(metric)?;
    ensure_finite("residual", &residual.values)?;
    let result = HarmonicResult {
        max_abs_residual: residual.max_abs(),
        component_max_abs: residual.component_max_abs(),
        convergence,
    };
    Ok((residual, result))
}

fn run_harmonic(cfg: &RunConfig, files: &mut Files, summary: &mut Vec<String>) -> CliResult<()> {
    let section = cfg.harmonic.as_ref().expect("validated harmonic section");
    let (metric, convergence) = match (&section.metric_file, &section.manufactured) {
        (Some(path), _) => (load_metric(&cfg.resolve(path))?, None),
        (None, Some(spec)) => {
            let lattice = spec.lattice()?;
            let coarse = spec.field(lattice.clone())?;
            let fine = spec.field(lattice.refined())?;
            let report = convergence_order(&coarse, &fine, |x| spec.divergence(x))?;
            files.always("metric.txt", grid_field::write(&GridField::from_metric(&coarse)));
            (coarse, Some(report))
        }
        (None, None) => unreachable!("validated harmonic section"),
    };
    let (residual, result) = check_harmonic(&metric, convergence)?;
    summary.push(format!("max |R| = {:.6e}", result.max_abs_residual));
    if let Some(c) = &result.convergence {
        for (nu, order) in c.orders.iter().enumerate() {
            match order {
                Some(o) => summary.push(format!("component {nu}: observed order {o:.4}")),
                None => summary.push(format!("component {nu}: exact at both spacings")),
            }
        }
        summary.extend(c.notes.iter().map(|n| format!("note: {n}")));
    }
    files.always("residual.txt", grid_field::write(&GridField::from_residual(&residual)));
    let mut csv = String::from(RESIDUAL_CSV_HEADER);
    csv.push('\n');
    for (nu, max) in result.component_max_abs.iter().enumerate() {
        let (ec, ef, order) = match &result.convergence {
            Some(c) => (
                c.error_coarse[nu].to_string(),
                c.error_fine[nu].to_string(),
                c.orders[nu].map_or(String::new(), |o| o.to_string()),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        csv.push_str(&format!("{nu},{max},{ec},{ef},{order}\n"));
    }
    files.csv("residual_summary.csv", csv);
    files.json(
        "harmonic.json",
        &json!({ "experiment": cfg.experiment, "version": VERSION,
            "config": cfg, "lattice": residual.lattice, "result": result }),
    )
}

/// Runs the configured experiment. The configuration must already be valid.
pub fn execute(cfg: &RunConfig) -> CliResult<ResultBundle> {
    let start = Instant::now();
    let mut files = Files { formats: &cfg.output.formats, out: Vec::new() };
    let mut summary = Vec::new();
    match cfg.experiment {
        ExperimentKind::Baseline | ExperimentKind::Hole => run_two_branch(cfg, &mut files, &mut summary)?,
        ExperimentKind::Sweep => run_sweep(cfg, &mut files, &mut summary)?,
        ExperimentKind::RecoverBackground => run_background(cfg, &mut files, &mut summary)?,
        ExperimentKind::CheckHarmonic => run_harmonic(cfg, &mut files, &mut summary)?,
    }
    let files = files.out;
    let metadata = Metadata {
        version: VERSION.into(),
        experiment: cfg.experiment,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        files: files.iter().map(|f| f.name.clone()).collect(),
        config: cfg.clone(),
    };
    Ok(ResultBundle { experiment: cfg.experiment, files, summary, metadata })
}

/// Writes the data files and `metadata.json` into `dir`.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> CliResult<()> {
    let io = |source| CliError::Io { path: dir.to_path_buf(), source };
    std::fs::create_dir_all(dir).map_err(io)?;
    for f in &bundle.files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|source| CliError::Io { path, source })?;
    }
    let meta = serde_json::to_string_pretty(&bundle.metadata).map_err(|e| CliError::Serialize(e.to_string()))?;
    let path = dir.join("metadata.json");
    std::fs::write(&path, meta + "\n").map_err(|source| CliError::Io { path, source })
}
