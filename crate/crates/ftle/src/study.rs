//! Parameter studies against the closed-form reference, and the end-to-end
//! pipeline that turns a velocity field into FTLE, ridge, and profile
//! artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::advect::IntegratorConfig;
use crate::classify::{classify_ridge, ClassifySettings};
use crate::config::Config;
use crate::field::{discretize, GriddedField, InterpMode, Rect, SwirlField, VelocityField};
use crate::flowmap::{
    compute_ftle_field, phi_e, FtleField, FtleSettings, GradientMethod, GridSpec,
};
use crate::oracle;
use crate::ridge::{
    advect_ridge, refine_ridges, track_ridges, ExactFtle, RefinementSchedule, Ridge, TrackerConfig,
};
use crate::{FtleError, Result};

/// Which parameter a study sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Velocity-grid spacing of the discretized field.
    Dx,
    /// Uniform noise magnitude added to the discretized field.
    Noise,
    /// Cluster spacing of the finite-difference gradient.
    Cluster,
    /// Integrator relative tolerance.
    Rtol,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Dx => "dx",
            StudyKind::Noise => "noise",
            StudyKind::Cluster => "cluster",
            StudyKind::Rtol => "rtol",
        }
    }
}

/// One scored point of a study: an axis value, a gradient method, and the
/// field error against the closed-form reference.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub axis: f64,
    /// Gradient method name, or "-" for an axis-level failure.
    pub method: String,
    /// Mean |Φ - Φ_ref| over the scored region; NaN when failed.
    pub phi_e: f64,
    /// Nodes entering the mean.
    pub nodes: usize,
    /// Region nodes the numeric field could not value.
    pub excluded: usize,
    /// Wall time spent computing and scoring this row.
    pub seconds: f64,
    /// Failure marker: the error message for points that could not be scored.
    pub error: Option<String>,
}

impl StudyRow {
    fn failure(axis: f64, method: &str, err: &FtleError) -> StudyRow {
        StudyRow {
            axis,
            method: method.to_string(),
            phi_e: f64::NAN,
            nodes: 0,
            excluded: 0,
            seconds: 0.0,
            error: Some(err.to_string().replace(',', ";").replace('\n', " ")),
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{}",
            self.axis,
            self.method,
            self.phi_e,
            self.nodes,
            self.excluded,
            self.seconds,
            self.error.as_deref().unwrap_or("")
        )
    }
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    /// Rows of one method, in axis order.
    pub fn method_rows(&self, method: GradientMethod) -> Vec<&StudyRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method.as_str())
            .collect()
    }

    pub fn failures(&self) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.error.is_some()).collect()
    }

    pub fn save_csv(&self, settings: &StudySettings, path: &Path) -> Result<()> {
        let mut s = String::new();
        s.push_str(&format!("# study-{} v1\n", self.kind.as_str()));
        s.push_str(&format!(
            "# grid {} {} {} {} {}\n",
            settings.grid.origin.x,
            settings.grid.origin.y,
            settings.grid.dx,
            settings.grid.nx,
            settings.grid.ny
        ));
        s.push_str(&format!("# window {} {}\n", settings.t0, settings.t1));
        s.push_str(&format!("# threshold {}\n", settings.threshold));
        s.push_str(&format!("# delta-a {}\n", settings.delta_a));
        s.push_str(&format!(
            "# tolerances {} {}\n",
            settings.integrator.rtol, settings.integrator.atol
        ));
        s.push_str(&format!("# noise-seed {}\n", settings.noise_seed));
        s.push_str(&format!("# interp {}\n", settings.interp.as_str()));
        s.push_str("# columns axis method phi_e nodes excluded seconds error\n");
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        fs::write(path, s)?;
        Ok(())
    }
}

/// Fixed context of a study: where FTLE is evaluated and scored, and how.
#[derive(Debug, Clone)]
pub struct StudySettings {
    /// FTLE evaluation grid (coarser than the velocity grids under study).
    pub grid: GridSpec,
    pub t0: f64,
    pub t1: f64,
    /// Cluster spacing for the finite-difference method.
    pub delta_a: f64,
    /// Scoring region: nodes with reference FTLE at or above this.
    pub threshold: f64,
    pub integrator: IntegratorConfig,
    /// Interpolation for discretized fields.
    pub interp: InterpMode,
    /// Seed for frozen noise; reused for every magnitude so that runs are
    /// comparable and reruns identical.
    pub noise_seed: u64,
    /// Score axis points concurrently. Off by default: fine velocity grids
    /// are large, and holding several in flight multiplies peak memory.
    pub parallel_axis: bool,
}

impl Default for StudySettings {
    fn default() -> StudySettings {
        let rect = Rect::new(crate::Vec2::new(-1.0, -1.0), crate::Vec2::new(1.0, 1.0));
        StudySettings {
            grid: GridSpec::from_rect(rect, 0.025).expect("exact tiling"),
            t0: 0.0,
            t1: 2.0,
            delta_a: 1e-6,
            threshold: 1.0,
            integrator: IntegratorConfig::default(),
            interp: InterpMode::Bicubic,
            noise_seed: 1,
            parallel_axis: false,
        }
    }
}

/// Velocity-grid spacings 2^-4 … 2^-11.
pub fn default_dx_axis() -> Vec<f64> {
    (4..=11).map(|k| 2f64.powi(-k)).collect()
}

pub fn default_noise_axis() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1]
}

/// Fine spacing where noise, not discretization, dominates.
pub const DEFAULT_NOISE_DX: f64 = 0.00048828125; // 2^-11

pub fn default_cluster_axis() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8]
}

pub fn default_rtol_axis() -> Vec<f64> {
    vec![1e-3, 1e-5, 1e-7, 1e-9]
}

fn reference_field(settings: &StudySettings) -> Result<FtleField> {
    oracle::ftle_field(&settings.grid, settings.t1 - settings.t0)
}

/// The analytic model opened up to its whole evaluation box, so that
/// `discretize` samples data everywhere the integrator may place a stage.
/// Sampling only the nominal domain would surround it with clamped-edge
/// values, and trajectory clusters near the boundary would difference
/// interpolation artifacts instead of the field.
struct PaddedSwirl(SwirlField);

impl VelocityField for PaddedSwirl {
    fn domain(&self) -> Rect {
        self.0.freeze_bounds()
    }
    fn margin(&self) -> f64 {
        0.0
    }
    fn eval_velocity(&self, x: crate::Vec2, t: f64) -> crate::Vec2 {
        self.0.eval_velocity(x, t)
    }
    fn eval_velocity_gradient(&self, x: crate::Vec2, t: f64) -> crate::Mat2 {
        self.0.eval_velocity_gradient(x, t)
    }
}

/// A velocity grid sampled from the analytic model, carrying the model's
/// domain and containment so trajectories stop by the same protocol as the
/// reference: at the model's curvilinear boundary, not at the data box.
/// Without this the numeric and reference fields would freeze different
/// trajectory sets and the error mean would compare different windows.
struct SampledSwirl {
    data: GriddedField,
    model: SwirlField,
}

impl SampledSwirl {
    fn new(data: GriddedField) -> SampledSwirl {
        SampledSwirl {
            data,
            model: SwirlField::default(),
        }
    }
}

impl VelocityField for SampledSwirl {
    fn domain(&self) -> Rect {
        self.model.domain()
    }
    fn margin(&self) -> f64 {
        self.model.margin()
    }
    fn contains(&self, x: crate::Vec2) -> bool {
        self.model.contains(x)
    }
    fn time_span(&self) -> (f64, f64) {
        self.data.time_span()
    }
    fn eval_velocity(&self, x: crate::Vec2, t: f64) -> crate::Vec2 {
        self.data.eval_velocity(x, t)
    }
    fn eval_velocity_gradient(&self, x: crate::Vec2, t: f64) -> crate::Mat2 {
        self.data.eval_velocity_gradient(x, t)
    }
}

/// Sample the analytic model over its padded box at spacing `dx`.
fn discretize_swirl(dx: f64, t: f64, interp: InterpMode) -> Result<GriddedField> {
    let mut data = discretize(&PaddedSwirl(SwirlField::default()), dx, &[t])?;
    data.set_interp(interp);
    Ok(data)
}

/// Score one (field, settings) combination into a row.
fn score(
    settings: &StudySettings,
    field: &dyn VelocityField,
    reference: &FtleField,
    axis: f64,
    ftle: &FtleSettings,
) -> StudyRow {
    let started = std::time::Instant::now();
    let outcome = compute_ftle_field(field, &settings.grid, settings.t0, settings.t1, ftle)
        .and_then(|numeric| phi_e(&numeric, reference, settings.threshold));
    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok(pe) => StudyRow {
            axis,
            method: ftle.method.as_str().to_string(),
            phi_e: pe.value,
            nodes: pe.nodes,
            excluded: pe.skipped_numeric,
            seconds,
            error: None,
        },
        Err(e) => StudyRow {
            seconds,
            ..StudyRow::failure(axis, ftle.method.as_str(), &e)
        },
    }
}

fn both_methods(
    settings: &StudySettings,
    field: &dyn VelocityField,
    reference: &FtleField,
    axis: f64,
    integrator: &IntegratorConfig,
) -> Vec<StudyRow> {
    [GradientMethod::ClusterFd, GradientMethod::AdvectedGradient]
        .into_iter()
        .map(|method| {
            let ftle = FtleSettings {
                method,
                delta_a: settings.delta_a,
                integrator: *integrator,
                ..FtleSettings::default()
            };
            score(settings, field, reference, axis, &ftle)
        })
        .collect()
}

/// Drive one study: evaluate every axis point (each writing its own part
/// file as soon as it completes), then merge in axis order.
fn run_axis_study<F>(
    kind: StudyKind,
    settings: &StudySettings,
    axis: &[f64],
    out: Option<&Path>,
    eval: F,
) -> Result<StudyResult>
where
    F: Fn(f64) -> Result<Vec<StudyRow>> + Sync,
{
    let point = |(i, &a): (usize, &f64)| -> Vec<StudyRow> {
        let rows = eval(a).unwrap_or_else(|e| vec![StudyRow::failure(a, "-", &e)]);
        if let Some(out) = out {
            if let Err(e) = write_part(out, i, a, &rows) {
                log::warn!("could not write part file for axis point {a}: {e}");
            }
        }
        rows
    };
    let nested: Vec<Vec<StudyRow>> = if settings.parallel_axis {
        axis.par_iter().enumerate().map(point).collect()
    } else {
        axis.iter().enumerate().map(point).collect()
    };
    let result = StudyResult {
        kind,
        rows: nested.into_iter().flatten().collect(),
    };
    if let Some(out) = out {
        result.save_csv(settings, out)?;
        for i in 0..axis.len() {
            let _ = fs::remove_file(part_path(out, i));
        }
    }
    Ok(result)
}

fn part_path(out: &Path, index: usize) -> PathBuf {
    PathBuf::from(format!("{}.part{:03}", out.display(), index))
}

fn write_part(out: &Path, index: usize, axis: f64, rows: &[StudyRow]) -> Result<()> {
    let mut s = format!("# part {index} axis {axis}\n");
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    fs::write(part_path(out, index), s)?;
    Ok(())
}

/// Sweep the velocity-grid spacing: discretize the analytic field at each
/// Δx and score both gradient methods against the closed-form reference.
pub fn run_discretization_study(
    settings: &StudySettings,
    axis: &[f64],
    out: Option<&Path>,
) -> Result<StudyResult> {
    let reference = reference_field(settings)?;
    run_axis_study(StudyKind::Dx, settings, axis, out, |dx| {
        let field = SampledSwirl::new(discretize_swirl(dx, settings.t0, settings.interp)?);
        Ok(both_methods(
            settings,
            &field,
            &reference,
            dx,
            &settings.integrator,
        ))
    })
}

/// Sweep the noise magnitude on a fixed fine discretization.
pub fn run_noise_study(
    settings: &StudySettings,
    axis: &[f64],
    base_dx: f64,
    out: Option<&Path>,
) -> Result<StudyResult> {
    let reference = reference_field(settings)?;
    let base = discretize_swirl(base_dx, settings.t0, settings.interp)?;
    run_axis_study(StudyKind::Noise, settings, axis, out, |magnitude| {
        let data: GriddedField = if magnitude == 0.0 {
            base.clone()
        } else {
            base.add_noise(magnitude, settings.noise_seed)?
        };
        let field = SampledSwirl::new(data);
        Ok(both_methods(
            settings,
            &field,
            &reference,
            magnitude,
            &settings.integrator,
        ))
    })
}

/// Sweep the finite-difference cluster spacing on the analytic field.
pub fn run_cluster_study(
    settings: &StudySettings,
    axis: &[f64],
    out: Option<&Path>,
) -> Result<StudyResult> {
    let reference = reference_field(settings)?;
    let field = SwirlField::default();
    run_axis_study(StudyKind::Cluster, settings, axis, out, |delta_a| {
        let ftle = FtleSettings {
            method: GradientMethod::ClusterFd,
            delta_a,
            integrator: settings.integrator,
            ..FtleSettings::default()
        };
        Ok(vec![score(settings, &field, &reference, delta_a, &ftle)])
    })
}

/// Sweep the integrator tolerance on the analytic field (atol rides along
/// at rtol / 100).
pub fn run_rtol_study(
    settings: &StudySettings,
    axis: &[f64],
    out: Option<&Path>,
) -> Result<StudyResult> {
    let reference = reference_field(settings)?;
    let field = SwirlField::default();
    run_axis_study(StudyKind::Rtol, settings, axis, out, |rtol| {
        let integrator = IntegratorConfig::with_tolerances(rtol, rtol * 1e-2);
        Ok(both_methods(
            settings,
            &field,
            &reference,
            rtol,
            &integrator,
        ))
    })
}

// ---------------------------------------------------------------------------
// end-to-end pipeline

/// Everything the pipeline needs beyond the velocity field itself.
#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub grid: GridSpec,
    pub t0: f64,
    pub t1: f64,
    pub ftle: FtleSettings,
    /// None: derived from the FTLE grid spacing.
    pub tracker: Option<TrackerConfig>,
    /// None: derived from the FTLE grid spacing.
    pub schedule: Option<RefinementSchedule>,
    pub classify: ClassifySettings,
    /// Advection window for the refined ridges; None reuses (t0, t1).
    pub advect_window: Option<(f64, f64)>,
    /// Resolved run configuration, written next to the artifacts.
    pub config_snapshot: String,
}

impl PipelineSettings {
    pub fn new(grid: GridSpec, t0: f64, t1: f64) -> PipelineSettings {
        PipelineSettings {
            grid,
            t0,
            t1,
            ftle: FtleSettings::default(),
            tracker: None,
            schedule: None,
            classify: ClassifySettings::default(),
            advect_window: None,
            config_snapshot: String::new(),
        }
    }

    /// Capture the resolved configuration for the artifact directory.
    pub fn snapshot_from(&mut self, config: &Config) {
        self.config_snapshot = config.snapshot();
    }
}

/// Paths and status of one pipeline run.
#[derive(Debug)]
pub struct PipelineArtifacts {
    pub out_dir: PathBuf,
    pub ftle_binary: PathBuf,
    pub ftle_csv: PathBuf,
    pub tracked: PathBuf,
    pub refined: Option<PathBuf>,
    pub advected: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub ridge_count: usize,
    /// Stage-tagged failure messages; empty means a clean run.
    pub failures: Vec<String>,
}

impl PipelineArtifacts {
    pub fn clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run FTLE → seed/track → refine → advect → classify, writing every
/// artifact under `out_dir`. Later stages are skipped when a stage they
/// depend on fails; completed artifacts are never removed.
pub fn run_pipeline(
    field: &dyn VelocityField,
    settings: &PipelineSettings,
    out_dir: &Path,
) -> Result<PipelineArtifacts> {
    fs::create_dir_all(out_dir)?;
    if !settings.config_snapshot.is_empty() {
        fs::write(out_dir.join("config.txt"), &settings.config_snapshot)?;
    }

    let mut artifacts = PipelineArtifacts {
        out_dir: out_dir.to_path_buf(),
        ftle_binary: out_dir.join("ftle.bin"),
        ftle_csv: out_dir.join("ftle.csv"),
        tracked: out_dir.join("ridges_tracked.csv"),
        refined: None,
        advected: None,
        profiles: None,
        ridge_count: 0,
        failures: Vec::new(),
    };
    let fail = |artifacts: &mut PipelineArtifacts, stage: &str, e: &FtleError| {
        artifacts.failures.push(format!("{stage}: {e}"));
    };

    // FTLE: nothing downstream exists without it
    let ftle = compute_ftle_field(field, &settings.grid, settings.t0, settings.t1, &settings.ftle)?;
    crate::io::save_ftle(&ftle, &artifacts.ftle_binary)?;
    crate::io::export_ftle_csv(&ftle, &artifacts.ftle_csv)?;

    // track
    let tracker = settings
        .tracker
        .unwrap_or_else(|| TrackerConfig::for_field(&ftle));
    let tracked: Vec<Ridge> = match track_ridges(&ftle, &tracker) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut artifacts, "track", &e);
            return Ok(artifacts);
        }
    };
    artifacts.ridge_count = tracked.len();
    crate::io::save_ridges(&tracked, &artifacts.tracked)?;
    if tracked.is_empty() {
        return Ok(artifacts);
    }

    // refine
    let schedule = settings
        .schedule
        .unwrap_or_else(|| RefinementSchedule::for_spacing(settings.grid.dx));
    let evaluator = ExactFtle {
        field,
        t0: settings.t0,
        t1: settings.t1,
        settings: settings.ftle.clone(),
    };
    let refined = match refine_ridges(&tracked, &evaluator, &schedule) {
        Ok(r) => {
            let path = out_dir.join("ridges_refined.csv");
            crate::io::save_ridges(&r, &path)?;
            artifacts.refined = Some(path);
            r
        }
        Err(e) => {
            fail(&mut artifacts, "refine", &e);
            return Ok(artifacts);
        }
    };

    // advect
    let (a0, a1) = settings.advect_window.unwrap_or((settings.t0, settings.t1));
    let mut advected: Vec<Ridge> = Vec::new();
    for (i, r) in refined.iter().enumerate() {
        match advect_ridge(r, field, a0, a1, &settings.ftle.integrator) {
            Ok(a) => advected.push(a),
            Err(e) => fail(&mut artifacts, &format!("advect ridge {i}"), &e),
        }
    }
    if !advected.is_empty() {
        let path = out_dir.join("ridges_advected.csv");
        crate::io::save_ridges(&advected, &path)?;
        artifacts.advected = Some(path);
    }

    // classify
    let mut profiles = Vec::new();
    for (i, r) in refined.iter().enumerate() {
        match classify_ridge(r, field, settings.t0, settings.t1, &settings.classify) {
            Ok(p) => profiles.push(p),
            Err(e) => fail(&mut artifacts, &format!("classify ridge {i}"), &e),
        }
    }
    if !profiles.is_empty() {
        let path = out_dir.join("profiles.csv");
        crate::io::save_profiles(&profiles, &path)?;
        artifacts.profiles = Some(path);
    }

    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LinearField;
    use crate::Vec2;
    use tempfile::tempdir;

    fn quick_settings() -> StudySettings {
        let rect = Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
        StudySettings {
            grid: GridSpec::from_rect(rect, 0.1).unwrap(),
            t1: 1.0,
            integrator: IntegratorConfig::with_tolerances(1e-6, 1e-8),
            ..StudySettings::default()
        }
    }

    #[test]
    fn discretization_error_grows_with_coarseness() {
        let settings = quick_settings();
        let result =
            run_discretization_study(&settings, &[0.25, 0.0625], None).unwrap();
        assert_eq!(result.rows.len(), 4);
        assert!(result.failures().is_empty());
        let fd = result.method_rows(GradientMethod::ClusterFd);
        assert!(fd[0].phi_e > fd[1].phi_e, "coarser grid, larger error");
        for r in &result.rows {
            assert!(r.phi_e.is_finite() && r.phi_e > 0.0);
            assert!(r.nodes > 0);
        }
    }

    #[test]
    fn noise_degrades_the_field_and_reruns_are_identical() {
        let settings = quick_settings();
        let axis = [0.0, 1e-2];
        let a = run_noise_study(&settings, &axis, 0.0625, None).unwrap();
        let b = run_noise_study(&settings, &axis, 0.0625, None).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.phi_e.to_bits(), y.phi_e.to_bits(), "frozen seed, frozen result");
        }
        let fd = a.method_rows(GradientMethod::ClusterFd);
        assert!(fd[1].phi_e > fd[0].phi_e, "noise raises the error");
    }

    #[test]
    fn wide_clusters_pay_truncation_error() {
        let settings = quick_settings();
        let result = run_cluster_study(&settings, &[1e-2, 1e-6], None).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows[0].phi_e > result.rows[1].phi_e);
    }

    #[test]
    fn loose_tolerances_pay_integration_error() {
        let settings = quick_settings();
        let result = run_rtol_study(&settings, &[1e-3, 1e-8], None).unwrap();
        let fd = result.method_rows(GradientMethod::ClusterFd);
        assert!(fd[0].phi_e > fd[1].phi_e);
    }

    #[test]
    fn saved_study_merges_parts_in_axis_order() {
        let settings = quick_settings();
        let dir = tempdir().unwrap();
        let out = dir.path().join("study.csv");
        let result = run_cluster_study(&settings, &[1e-3, 1e-5], Some(&out)).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("# study-cluster v1\n"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert!(data[0].starts_with("0.001,"));
        assert!(data[1].starts_with("0.00001,"));
        assert_eq!(result.rows.len(), 2);
        // part files were cleaned up after the merge
        assert!(!part_path(&out, 0).exists());
        assert!(!part_path(&out, 1).exists());
    }

    #[test]
    fn parallel_and_sequential_runs_agree() {
        let mut settings = quick_settings();
        let axis = [1e-3, 1e-6];
        let seq = run_cluster_study(&settings, &axis, None).unwrap();
        settings.parallel_axis = true;
        let par = run_cluster_study(&settings, &axis, None).unwrap();
        for (a, b) in seq.rows.iter().zip(&par.rows) {
            assert_eq!(a.phi_e.to_bits(), b.phi_e.to_bits());
            assert_eq!(a.method, b.method);
        }
    }

    #[test]
    fn pipeline_on_a_still_field_is_clean_and_ridgeless() {
        let dir = tempdir().unwrap();
        let rect = Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
        let field = LinearField::zero(rect);
        let mut settings =
            PipelineSettings::new(GridSpec::from_rect(rect, 0.25).unwrap(), 0.0, 1.0);
        settings.config_snapshot = "t0 = 0\nt1 = 1\n".to_string();
        let artifacts = run_pipeline(&field, &settings, dir.path()).unwrap();
        assert!(artifacts.clean());
        assert_eq!(artifacts.ridge_count, 0);
        assert!(artifacts.ftle_binary.exists());
        assert!(artifacts.ftle_csv.exists());
        assert!(artifacts.tracked.exists());
        assert!(artifacts.refined.is_none());
        assert!(dir.path().join("config.txt").exists());
        let ftle = crate::io::load_ftle(&artifacts.ftle_binary).unwrap();
        // finite-difference probe placement rounds seed coordinates, leaving
        // an O(ulp/delta_a) floor in phi even for a field that never moves
        assert!(ftle.phi.iter().all(|&v| v.abs() < 1e-9));
        let ridges = crate::io::load_ridges(&artifacts.tracked).unwrap();
        assert!(ridges.is_empty());
    }
}
