//! Command-line surface over the library: velocity-field files, FTLE
//! fields, ridge extraction, classification, parameter studies, and the
//! end-to-end pipeline.
//!
//! Every parameter is a flat config key. A `--config` file may supply all of
//! them; the mirrored command-line flags (and generic `--set key=value`)
//! override file entries. Keys a command does not understand are rejected.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 file error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ftle::advect::IntegratorConfig;
use ftle::classify::{classify_ridge, ClassifySettings};
use ftle::config::Config;
use ftle::field::{
    discretize, DoubleGyre, GriddedField, InterpMode, LinearField, Rect, SwirlField, VelocityField,
};
use ftle::flowmap::{
    compute_ftle_field, FtleField, FtleSettings, GradientMethod, GridSpec, NodeFlag,
};
use ftle::ridge::{
    advect_ridge, refine_ridges, track_ridges, ExactFtle, InitialDirection, RefinementSchedule,
    Ridge, TrackerConfig,
};
use ftle::study::{
    default_cluster_axis, default_dx_axis, default_noise_axis, default_rtol_axis,
    run_cluster_study, run_discretization_study, run_noise_study, run_pipeline, run_rtol_study,
    PipelineSettings, StudyResult, StudySettings, DEFAULT_NOISE_DX,
};
use ftle::{io, FtleError, Result, Vec2};

#[derive(Parser)]
#[command(
    name = "ftle",
    version,
    about = "FTLE fields, ridge extraction, and ridge deformation diagnostics for 2-D flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Velocity-field files: discretize an analytic field, add noise, inspect
    #[command(subcommand)]
    Field(FieldCmd),
    /// Compute FTLE fields
    #[command(subcommand)]
    Ftle(FtleCmd),
    /// Track, refine, and advect FTLE ridges
    #[command(subcommand)]
    Ridge(RidgeCmd),
    /// Deformation profiles along refined ridges
    Classify(CommonArgs),
    /// Parameter studies scored against the closed-form reference
    #[command(subcommand)]
    Study(StudyCmd),
    /// End-to-end artifact pipeline
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Sample an analytic velocity field onto a grid file
    Make(CommonArgs),
    /// Add frozen node noise to a gridded field (seed required)
    Noise(CommonArgs),
    /// Print a gridded field's header
    Info(CommonArgs),
}

#[derive(Subcommand)]
enum FtleCmd {
    /// Compute an FTLE field over a time window
    Compute(CommonArgs),
}

#[derive(Subcommand)]
enum RidgeCmd {
    /// Seed and track ridges on a stored FTLE field
    Track(CommonArgs),
    /// Re-locate tracked ridge points with exact FTLE evaluations
    Refine(CommonArgs),
    /// Advect ridge points as material particles
    Advect(CommonArgs),
}

#[derive(Subcommand)]
enum StudyCmd {
    /// Error vs. velocity-grid spacing
    Dx(CommonArgs),
    /// Error vs. velocity-node noise magnitude
    Noise(CommonArgs),
    /// Error vs. finite-difference cluster spacing
    Cluster(CommonArgs),
    /// Error vs. integrator tolerance
    Rtol(CommonArgs),
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// FTLE, ridges, refinement, advection, and profiles into one directory
    Run(CommonArgs),
}

/// The union of all config keys as flags. Each present flag overrides the
/// config file; commands reject keys they do not consume.
#[derive(Args)]
struct CommonArgs {
    /// key = value config file supplying any of the other flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Generic KEY=VALUE override (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Velocity source: swirl | double-gyre | zero | path to a gridded file
    #[arg(long)]
    field: Option<String>,
    /// Input artifact path
    #[arg(long = "in", value_name = "PATH")]
    input: Option<String>,
    /// Output path (directory for `pipeline run`)
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Additional CSV export path
    #[arg(long, value_name = "PATH")]
    csv: Option<String>,

    /// Velocity-grid spacing (field make)
    #[arg(long)]
    dx: Option<String>,
    /// Comma-separated sample times (field make)
    #[arg(long)]
    times: Option<String>,
    /// Space interpolation: bilinear | bicubic
    #[arg(long)]
    interp: Option<String>,
    /// Noise magnitude (field noise)
    #[arg(long)]
    magnitude: Option<String>,
    /// Noise seed (field noise)
    #[arg(long)]
    seed: Option<String>,

    /// FTLE grid extent; defaults to the field's domain
    #[arg(long)]
    grid_x0: Option<String>,
    #[arg(long)]
    grid_y0: Option<String>,
    #[arg(long)]
    grid_x1: Option<String>,
    #[arg(long)]
    grid_y1: Option<String>,
    /// FTLE grid node spacing
    #[arg(long)]
    grid_dx: Option<String>,

    /// Window start time
    #[arg(long)]
    t0: Option<String>,
    /// Window end time
    #[arg(long)]
    t1: Option<String>,
    /// Gradient method: cluster-fd | advected-gradient
    #[arg(long)]
    method: Option<String>,
    /// Cluster half-spacing of the finite-difference gradient
    #[arg(long)]
    delta_a: Option<String>,
    /// Integrator relative tolerance
    #[arg(long)]
    rtol: Option<String>,
    /// Integrator absolute tolerance
    #[arg(long)]
    atol: Option<String>,

    /// Seed scan-line pitch (ridge track)
    #[arg(long)]
    seed_spacing: Option<String>,
    /// Minimum FTLE for seeds (ridge track)
    #[arg(long)]
    seed_threshold: Option<String>,
    /// Walk step length (ridge track)
    #[arg(long)]
    step: Option<String>,
    /// Transverse probe offset (ridge track)
    #[arg(long)]
    probe: Option<String>,
    /// Walks stop below this FTLE (ridge track)
    #[arg(long)]
    stop_threshold: Option<String>,
    /// Point budget per ridge (ridge track)
    #[arg(long)]
    max_points: Option<String>,
    /// First step choice: gradient | gradient-normal (ridge track)
    #[arg(long)]
    direction: Option<String>,

    /// Initial refinement half-window (ridge refine)
    #[arg(long)]
    w0: Option<String>,
    /// Final refinement half-window (ridge refine)
    #[arg(long)]
    w_final: Option<String>,
    /// Window decay factor per iteration (ridge refine)
    #[arg(long)]
    shrink: Option<String>,
    /// Samples per window, odd (ridge refine)
    #[arg(long)]
    samples: Option<String>,
    /// Refinement iteration cap (ridge refine)
    #[arg(long)]
    max_iterations: Option<String>,

    /// Alignment tolerance on the eigenvector projection (classify)
    #[arg(long)]
    b_tol: Option<String>,
    /// Alignment tolerance on the eigenvalue ratio (classify)
    #[arg(long)]
    delta_tol: Option<String>,

    /// Comma-separated study axis values
    #[arg(long)]
    axis: Option<String>,
    /// FTLE level defining the scored region (studies)
    #[arg(long)]
    threshold: Option<String>,
    /// Velocity-grid spacing under the noise study
    #[arg(long)]
    base_dx: Option<String>,
    /// Frozen-noise seed (noise study)
    #[arg(long)]
    noise_seed: Option<String>,
    /// Score study axis points concurrently
    #[arg(long)]
    parallel: bool,

    /// Ridge advection window start (pipeline; defaults to t0)
    #[arg(long)]
    advect_t0: Option<String>,
    /// Ridge advection window end (pipeline; defaults to t1)
    #[arg(long)]
    advect_t1: Option<String>,
}

impl CommonArgs {
    /// Config file first, then every present flag on top.
    fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::new(),
        };
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                FtleError::Config(format!("--set expects KEY=VALUE, got '{pair}'"))
            })?;
            cfg.set(key.trim(), value.trim());
        }
        let overrides: [(&str, &Option<String>); 36] = [
            ("field", &self.field),
            ("in", &self.input),
            ("out", &self.out),
            ("csv", &self.csv),
            ("dx", &self.dx),
            ("times", &self.times),
            ("interp", &self.interp),
            ("magnitude", &self.magnitude),
            ("seed", &self.seed),
            ("grid-x0", &self.grid_x0),
            ("grid-y0", &self.grid_y0),
            ("grid-x1", &self.grid_x1),
            ("grid-y1", &self.grid_y1),
            ("grid-dx", &self.grid_dx),
            ("t0", &self.t0),
            ("t1", &self.t1),
            ("method", &self.method),
            ("delta-a", &self.delta_a),
            ("rtol", &self.rtol),
            ("atol", &self.atol),
            ("seed-spacing", &self.seed_spacing),
            ("seed-threshold", &self.seed_threshold),
            ("step", &self.step),
            ("probe", &self.probe),
            ("stop-threshold", &self.stop_threshold),
            ("max-points", &self.max_points),
            ("direction", &self.direction),
            ("w0", &self.w0),
            ("w-final", &self.w_final),
            ("shrink", &self.shrink),
            ("samples", &self.samples),
            ("max-iterations", &self.max_iterations),
            ("b-tol", &self.b_tol),
            ("delta-tol", &self.delta_tol),
            ("axis", &self.axis),
            ("threshold", &self.threshold),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.set(key, value);
            }
        }
        if let Some(v) = &self.base_dx {
            cfg.set("base-dx", v);
        }
        if let Some(v) = &self.noise_seed {
            cfg.set("noise-seed", v);
        }
        if let Some(v) = &self.advect_t0 {
            cfg.set("advect-t0", v);
        }
        if let Some(v) = &self.advect_t1 {
            cfg.set("advect-t1", v);
        }
        if self.parallel {
            cfg.set("parallel", "true");
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Field(FieldCmd::Make(a)) => field_make(&a.resolve()?),
        Command::Field(FieldCmd::Noise(a)) => field_noise(&a.resolve()?),
        Command::Field(FieldCmd::Info(a)) => field_info(&a.resolve()?),
        Command::Ftle(FtleCmd::Compute(a)) => ftle_compute(&a.resolve()?),
        Command::Ridge(RidgeCmd::Track(a)) => ridge_track(&a.resolve()?),
        Command::Ridge(RidgeCmd::Refine(a)) => ridge_refine(&a.resolve()?),
        Command::Ridge(RidgeCmd::Advect(a)) => ridge_advect(&a.resolve()?),
        Command::Classify(a) => classify(&a.resolve()?),
        Command::Study(cmd) => study(cmd),
        Command::Pipeline(PipelineCmd::Run(a)) => pipeline_run(&a.resolve()?),
    }
}

// ---------------------------------------------------------------------------
// shared pieces

/// An analytic builtin by name, or a gridded field loaded from a path.
fn resolve_field(cfg: &Config) -> Result<Box<dyn VelocityField>> {
    let unit = Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
    match cfg.str_or("field", "swirl").as_str() {
        "swirl" => Ok(Box::new(SwirlField::default())),
        "double-gyre" => Ok(Box::new(DoubleGyre::default())),
        "zero" => Ok(Box::new(LinearField::zero(unit))),
        path => Ok(Box::new(io::load_gridded(path)?)),
    }
}

/// Same resolution, restricted to analytic sources (for `field make`).
fn resolve_analytic(cfg: &Config) -> Result<Box<dyn VelocityField>> {
    let source = cfg.str_or("field", "swirl");
    match source.as_str() {
        "swirl" | "double-gyre" | "zero" => resolve_field(cfg),
        other => Err(FtleError::Config(format!(
            "'{other}' is not an analytic field (expected swirl, double-gyre, or zero)"
        ))),
    }
}

/// FTLE grid: the field's domain (overridable per edge) at `grid-dx`.
fn grid_spec(cfg: &Config, field: &dyn VelocityField, default_dx: f64) -> Result<GridSpec> {
    let domain = field.domain();
    let rect = Rect::new(
        Vec2::new(
            cfg.f64_or("grid-x0", domain.min.x)?,
            cfg.f64_or("grid-y0", domain.min.y)?,
        ),
        Vec2::new(
            cfg.f64_or("grid-x1", domain.max.x)?,
            cfg.f64_or("grid-y1", domain.max.y)?,
        ),
    );
    GridSpec::from_rect(rect, cfg.f64_or("grid-dx", default_dx)?)
}

fn integrator(cfg: &Config) -> Result<IntegratorConfig> {
    Ok(IntegratorConfig::with_tolerances(
        cfg.f64_or("rtol", 1e-7)?,
        cfg.f64_or("atol", 1e-9)?,
    ))
}

fn ftle_settings(cfg: &Config) -> Result<FtleSettings> {
    Ok(FtleSettings {
        method: GradientMethod::parse(&cfg.str_or("method", "cluster-fd"))?,
        delta_a: cfg.f64_or("delta-a", 1e-6)?,
        integrator: integrator(cfg)?,
        ..FtleSettings::default()
    })
}

fn classify_settings(cfg: &Config) -> Result<ClassifySettings> {
    let defaults = ClassifySettings::default();
    Ok(ClassifySettings {
        delta_a: cfg.f64_or("delta-a", defaults.delta_a)?,
        b_tol: cfg.f64_or("b-tol", defaults.b_tol)?,
        delta_tol: cfg.f64_or("delta-tol", defaults.delta_tol)?,
        integrator: integrator(cfg)?,
    })
}

/// Apply any tracker keys on top of `base`; report whether any were given.
fn tracker_overrides(cfg: &Config, base: &mut TrackerConfig) -> Result<bool> {
    let mut touched = false;
    if let Some(v) = cfg.f64("seed-spacing")? {
        base.seed_spacing = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("seed-threshold")? {
        base.seed_threshold = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("step")? {
        base.step = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("probe")? {
        base.probe = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("stop-threshold")? {
        base.stop_threshold = v;
        touched = true;
    }
    if cfg.contains("max-points") {
        base.max_points = cfg.usize_or("max-points", base.max_points)?;
        touched = true;
    }
    if let Some(v) = cfg.get("direction") {
        base.initial_direction = InitialDirection::parse(&v)?;
        touched = true;
    }
    base.validate()?;
    Ok(touched)
}

/// Apply any refinement keys on top of `base`; report whether any were given.
fn schedule_overrides(cfg: &Config, base: &mut RefinementSchedule) -> Result<bool> {
    let mut touched = false;
    if let Some(v) = cfg.f64("w0")? {
        base.w0 = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("w-final")? {
        base.w_final = v;
        touched = true;
    }
    if let Some(v) = cfg.f64("shrink")? {
        base.shrink = v;
        touched = true;
    }
    if cfg.contains("samples") {
        base.samples = cfg.usize_or("samples", base.samples)?;
        touched = true;
    }
    if cfg.contains("max-iterations") {
        base.max_iterations = cfg.usize_or("max-iterations", base.max_iterations)?;
        touched = true;
    }
    base.validate()?;
    Ok(touched)
}

/// `.csv` extension selects the text format, anything else the binary one.
fn save_ftle_auto(field: &FtleField, path: &str) -> Result<()> {
    if path.ends_with(".csv") {
        io::export_ftle_csv(field, path)
    } else {
        io::save_ftle(field, path)
    }
}

fn load_ftle_auto(path: &str) -> Result<FtleField> {
    if path.ends_with(".csv") {
        io::import_ftle_csv(path)
    } else {
        io::load_ftle(path)
    }
}

fn save_gridded_auto(field: &GriddedField, path: &str) -> Result<()> {
    if path.ends_with(".txt") {
        io::save_gridded_text(field, path)
    } else {
        io::save_gridded(field, path)
    }
}

fn flag_counts(field: &FtleField) -> (usize, usize, usize) {
    let mut valid = 0;
    let mut frozen = 0;
    let mut excluded = 0;
    for f in &field.flags {
        match f {
            NodeFlag::Valid => valid += 1,
            NodeFlag::Frozen => frozen += 1,
            NodeFlag::Excluded => excluded += 1,
        }
    }
    (valid, frozen, excluded)
}

fn ridge_summary(ridges: &[Ridge]) {
    for (i, r) in ridges.iter().enumerate() {
        let phi_max = r.points.iter().map(|p| p.phi).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "  ridge {i}: {} points, length {:.4}, peak {:.4}, stops {} / {}",
            r.points.len(),
            r.length(),
            phi_max,
            r.stop_start.as_str(),
            r.stop_end.as_str()
        );
    }
}

// ---------------------------------------------------------------------------
// field commands

fn field_make(cfg: &Config) -> Result<()> {
    let out = cfg.require("out")?;
    let field = resolve_analytic(cfg)?;
    let dx = cfg.require_f64("dx")?;
    let times = cfg.f64_list("times")?.unwrap_or_else(|| vec![0.0]);
    let interp = InterpMode::parse(&cfg.str_or("interp", "bicubic"))?;
    cfg.reject_unknown()?;

    let mut grid = discretize(field.as_ref(), dx, &times)?;
    grid.set_interp(interp);
    save_gridded_auto(&grid, &out)?;
    let (nx, ny) = grid.size();
    println!(
        "wrote {out}: {nx}x{ny} nodes, dx {dx}, {} time slice(s), {} interpolation",
        times.len(),
        interp.as_str()
    );
    Ok(())
}

fn field_noise(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let magnitude = cfg.require_f64("magnitude")?;
    let seed = cfg
        .u64("seed")?
        .ok_or_else(|| FtleError::Config("noise needs an explicit seed".into()))?;
    cfg.reject_unknown()?;

    let field = io::load_gridded(&input)?;
    let noisy = field.add_noise(magnitude, seed)?;
    save_gridded_auto(&noisy, &out)?;
    println!("wrote {out}: magnitude {magnitude}, seed {seed}");
    Ok(())
}

fn field_info(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    cfg.reject_unknown()?;

    let field = io::load_gridded(&input)?;
    let (nx, ny) = field.size();
    let origin = field.origin();
    let dx = field.dx();
    println!("{input}:");
    println!("  nodes       {nx} x {ny}");
    println!("  spacing     {dx}");
    println!(
        "  extent      [{}, {}] x [{}, {}]",
        origin.x,
        origin.x + (nx - 1) as f64 * dx,
        origin.y,
        origin.y + (ny - 1) as f64 * dx
    );
    println!("  interp      {}", field.interp().as_str());
    let times = field.times();
    if times.len() == 1 {
        println!("  time        steady (sampled at t = {})", times[0]);
    } else {
        println!(
            "  time        {} slices over [{}, {}]",
            times.len(),
            times[0],
            times[times.len() - 1]
        );
    }
    match field.noise() {
        Some(n) => println!("  noise       magnitude {}, seed {}", n.magnitude, n.seed),
        None => println!("  noise       none"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ftle compute

fn ftle_compute(cfg: &Config) -> Result<()> {
    let out = cfg.require("out")?;
    let field = resolve_field(cfg)?;
    let t0 = cfg.f64_or("t0", 0.0)?;
    let t1 = cfg.require_f64("t1")?;
    let grid = grid_spec(cfg, field.as_ref(), 0.01)?;
    let settings = ftle_settings(cfg)?;
    let csv = cfg.get("csv");
    cfg.reject_unknown()?;

    let ftle = compute_ftle_field(field.as_ref(), &grid, t0, t1, &settings)?;
    save_ftle_auto(&ftle, &out)?;
    if let Some(csv) = &csv {
        io::export_ftle_csv(&ftle, csv)?;
    }
    let (valid, frozen, excluded) = flag_counts(&ftle);
    let phi_max = ftle
        .phi
        .iter()
        .zip(&ftle.flags)
        .filter(|(_, f)| **f == NodeFlag::Valid)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "wrote {out}: {}x{} nodes over [{t0}, {t1}], {} method",
        grid.nx,
        grid.ny,
        settings.method.as_str()
    );
    println!("  valid {valid}, frozen {frozen}, excluded {excluded}, peak {phi_max:.4}");
    Ok(())
}

// ---------------------------------------------------------------------------
// ridge commands

fn ridge_track(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let ftle = load_ftle_auto(&input)?;
    let mut tracker = TrackerConfig::for_field(&ftle);
    tracker_overrides(cfg, &mut tracker)?;
    cfg.reject_unknown()?;

    let ridges = track_ridges(&ftle, &tracker)?;
    io::save_ridges(&ridges, &out)?;
    println!("wrote {out}: {} ridge(s)", ridges.len());
    ridge_summary(&ridges);
    Ok(())
}

fn ridge_refine(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let field = resolve_field(cfg)?;
    let t0 = cfg.f64_or("t0", 0.0)?;
    let t1 = cfg.require_f64("t1")?;
    let settings = ftle_settings(cfg)?;

    let ridges = io::load_ridges(&input)?;
    if ridges.is_empty() {
        cfg.reject_unknown()?;
        io::save_ridges(&ridges, &out)?;
        println!("wrote {out}: no ridges to refine");
        return Ok(());
    }
    // tracked ridges step two grid cells, which pins the spacing they came from
    let spacing = ridges
        .iter()
        .map(|r| r.max_spacing())
        .fold(0.0, f64::max)
        / 2.0;
    let mut schedule = RefinementSchedule::for_spacing(spacing);
    schedule_overrides(cfg, &mut schedule)?;
    cfg.reject_unknown()?;

    let evaluator = ExactFtle {
        field: field.as_ref(),
        t0,
        t1,
        settings,
    };
    let refined = refine_ridges(&ridges, &evaluator, &schedule)?;
    io::save_ridges(&refined, &out)?;
    println!("wrote {out}: {} ridge(s) refined", refined.len());
    ridge_summary(&refined);
    Ok(())
}

fn ridge_advect(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let field = resolve_field(cfg)?;
    let t0 = cfg.f64_or("t0", 0.0)?;
    let t1 = cfg.require_f64("t1")?;
    let integrator = integrator(cfg)?;
    cfg.reject_unknown()?;

    let ridges = io::load_ridges(&input)?;
    let advected: Vec<Ridge> = ridges
        .iter()
        .map(|r| advect_ridge(r, field.as_ref(), t0, t1, &integrator))
        .collect::<Result<_>>()?;
    io::save_ridges(&advected, &out)?;
    let frozen: usize = advected
        .iter()
        .map(|r| r.points.iter().filter(|p| p.frozen).count())
        .sum();
    println!(
        "wrote {out}: {} ridge(s) advected over [{t0}, {t1}], {frozen} point(s) froze at the domain edge",
        advected.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// classify

fn classify(cfg: &Config) -> Result<()> {
    let input = cfg.require("in")?;
    let out = cfg.require("out")?;
    let field = resolve_field(cfg)?;
    let t0 = cfg.f64_or("t0", 0.0)?;
    let t1 = cfg.require_f64("t1")?;
    let settings = classify_settings(cfg)?;
    cfg.reject_unknown()?;

    let ridges = io::load_ridges(&input)?;
    let mut profiles = Vec::with_capacity(ridges.len());
    for r in &ridges {
        profiles.push(classify_ridge(r, field.as_ref(), t0, t1, &settings)?);
    }
    io::save_profiles(&profiles, &out)?;
    println!("wrote {out}: {} profile(s)", profiles.len());
    for (i, p) in profiles.iter().enumerate() {
        let valid = p.valid_points().count();
        let repelling = p
            .valid_points()
            .filter(|pt| pt.metrics.n_l > 0.0 && pt.metrics.e_l < 0.0)
            .count();
        println!(
            "  profile {i}: {} points ({valid} valid), {repelling} with normal growth and tangential shrink",
            p.points.len()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// studies

fn study(cmd: StudyCmd) -> Result<()> {
    let (args, kind) = match &cmd {
        StudyCmd::Dx(a) => (a, "dx"),
        StudyCmd::Noise(a) => (a, "noise"),
        StudyCmd::Cluster(a) => (a, "cluster"),
        StudyCmd::Rtol(a) => (a, "rtol"),
    };
    let cfg = args.resolve()?;
    let settings = study_settings(&cfg)?;
    let axis = cfg.f64_list("axis")?;
    let out = cfg.get("out");
    let out_path = out.as_deref().map(Path::new);

    let result = match kind {
        "dx" => {
            let axis = axis.unwrap_or_else(default_dx_axis);
            cfg.reject_unknown()?;
            run_discretization_study(&settings, &axis, out_path)?
        }
        "noise" => {
            let axis = axis.unwrap_or_else(default_noise_axis);
            let base_dx = cfg.f64_or("base-dx", DEFAULT_NOISE_DX)?;
            cfg.reject_unknown()?;
            run_noise_study(&settings, &axis, base_dx, out_path)?
        }
        "cluster" => {
            let axis = axis.unwrap_or_else(default_cluster_axis);
            cfg.reject_unknown()?;
            run_cluster_study(&settings, &axis, out_path)?
        }
        _ => {
            let axis = axis.unwrap_or_else(default_rtol_axis);
            cfg.reject_unknown()?;
            run_rtol_study(&settings, &axis, out_path)?
        }
    };
    print_study(&result);
    if let Some(out) = &out {
        println!("wrote {out}");
    }
    let failed = result.failures().len();
    if failed > 0 {
        return Err(FtleError::Numeric(format!(
            "{failed} study point(s) failed (markers in the output table)"
        )));
    }
    Ok(())
}

fn study_settings(cfg: &Config) -> Result<StudySettings> {
    let mut s = StudySettings::default();
    let rect = Rect::new(
        Vec2::new(cfg.f64_or("grid-x0", -1.0)?, cfg.f64_or("grid-y0", -1.0)?),
        Vec2::new(cfg.f64_or("grid-x1", 1.0)?, cfg.f64_or("grid-y1", 1.0)?),
    );
    s.grid = GridSpec::from_rect(rect, cfg.f64_or("grid-dx", 0.025)?)?;
    s.t0 = cfg.f64_or("t0", s.t0)?;
    s.t1 = cfg.f64_or("t1", s.t1)?;
    s.delta_a = cfg.f64_or("delta-a", s.delta_a)?;
    s.threshold = cfg.f64_or("threshold", s.threshold)?;
    s.integrator = integrator(cfg)?;
    s.interp = InterpMode::parse(&cfg.str_or("interp", "bicubic"))?;
    if let Some(seed) = cfg.u64("noise-seed")? {
        s.noise_seed = seed;
    }
    s.parallel_axis = cfg.bool_or("parallel", false)?;
    Ok(s)
}

fn print_study(result: &StudyResult) {
    println!(
        "{:>12}  {:>18}  {:>12}  {:>7}  {:>8}  {:>8}",
        "axis", "method", "phi_e", "nodes", "excluded", "seconds"
    );
    for row in &result.rows {
        println!(
            "{:>12.6e}  {:>18}  {:>12.6e}  {:>7}  {:>8}  {:>8.2}{}",
            row.axis,
            row.method,
            row.phi_e,
            row.nodes,
            row.excluded,
            row.seconds,
            row.error
                .as_deref()
                .map(|e| format!("  FAILED: {e}"))
                .unwrap_or_default()
        );
    }
}

// ---------------------------------------------------------------------------
// pipeline

fn pipeline_run(cfg: &Config) -> Result<()> {
    let out = cfg.require("out")?;
    let field = resolve_field(cfg)?;
    let t0 = cfg.f64_or("t0", 0.0)?;
    let t1 = cfg.f64_or("t1", 2.0)?;
    let grid = grid_spec(cfg, field.as_ref(), 0.01)?;

    let mut settings = PipelineSettings::new(grid, t0, t1);
    settings.ftle = ftle_settings(cfg)?;
    settings.classify = classify_settings(cfg)?;
    let mut tracker = TrackerConfig::for_spacing(grid.dx);
    if tracker_overrides(cfg, &mut tracker)? {
        settings.tracker = Some(tracker);
    }
    let mut schedule = RefinementSchedule::for_spacing(grid.dx);
    if schedule_overrides(cfg, &mut schedule)? {
        settings.schedule = Some(schedule);
    }
    settings.advect_window = match (cfg.f64("advect-t0")?, cfg.f64("advect-t1")?) {
        (Some(a0), Some(a1)) => Some((a0, a1)),
        (None, None) => None,
        _ => {
            return Err(FtleError::Config(
                "advect-t0 and advect-t1 must be given together".into(),
            ))
        }
    };
    cfg.reject_unknown()?;
    settings.config_snapshot = format!("# ftle pipeline run\n{}", cfg.snapshot());

    let artifacts = run_pipeline(field.as_ref(), &settings, Path::new(&out))?;
    println!("pipeline artifacts in {out}:");
    println!("  {}", artifacts.ftle_binary.display());
    println!("  {}", artifacts.ftle_csv.display());
    println!("  {} ({} ridges)", artifacts.tracked.display(), artifacts.ridge_count);
    for path in [&artifacts.refined, &artifacts.advected, &artifacts.profiles]
        .into_iter()
        .flatten()
    {
        println!("  {}", path.display());
    }
    if artifacts.clean() {
        Ok(())
    } else {
        for f in &artifacts.failures {
            eprintln!("stage failure: {f}");
        }
        Err(FtleError::Numeric(format!(
            "{} pipeline stage failure(s)",
            artifacts.failures.len()
        )))
    }
}
