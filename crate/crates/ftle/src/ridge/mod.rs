//! Ridge extraction on FTLE fields.
//!
//! Ridges are located in three stages. Tracking walks along the crest of an
//! interpolated FTLE field from automatically detected seed points, using
//! transverse parabola fits to stay on the local maximum. Refinement then
//! replaces every point by the best of a shrinking window of exact FTLE
//! evaluations along the local normal, removing the interpolation bias.
//! Refined (or tracked) ridges can finally be advected as material lines.

mod advect;
mod refine;
mod seeds;
mod track;

pub use advect::advect_ridge;
pub use refine::{
    refine_ridge, refine_ridges, ExactFtle, FnEvaluator, FtleEvaluator, RefinementSchedule,
};
pub use seeds::{find_seeds, Seed};
pub use track::{track_from_seed, track_ridges};

use crate::field::interp::{axis_stencil, eval_scalar, InterpMode};
use crate::flowmap::FtleField;
use crate::{perp, FtleError, Result, Vec2};

/// Lifecycle stage of a ridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidgeState {
    Tracked,
    Refined,
    Advected,
}

impl RidgeState {
    pub fn as_str(&self) -> &'static str {
        match self {
            RidgeState::Tracked => "tracked",
            RidgeState::Refined => "refined",
            RidgeState::Advected => "advected",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tracked" => Ok(RidgeState::Tracked),
            "refined" => Ok(RidgeState::Refined),
            "advected" => Ok(RidgeState::Advected),
            other => Err(FtleError::InvalidArgument(format!(
                "unknown ridge state '{other}'"
            ))),
        }
    }
}

/// Why a tracking walk ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Left the FTLE grid (or entered flagged/invalid data).
    DomainExit,
    /// Came too close to another ridge's end (or looped onto itself).
    RidgeCollision,
    /// Transverse profile stopped being concave, or the fit kept saturating
    /// the probe window.
    NoMaximum,
    /// FTLE fell below the stop threshold.
    BelowThreshold,
    /// Point budget exhausted.
    MaxPoints,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::DomainExit => "domain-exit",
            StopReason::RidgeCollision => "ridge-collision",
            StopReason::NoMaximum => "no-maximum",
            StopReason::BelowThreshold => "below-threshold",
            StopReason::MaxPoints => "max-points",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "domain-exit" => Ok(StopReason::DomainExit),
            "ridge-collision" => Ok(StopReason::RidgeCollision),
            "no-maximum" => Ok(StopReason::NoMaximum),
            "below-threshold" => Ok(StopReason::BelowThreshold),
            "max-points" => Ok(StopReason::MaxPoints),
            other => Err(FtleError::InvalidArgument(format!(
                "unknown stop reason '{other}'"
            ))),
        }
    }
}

/// One vertex of a ridge polyline.
#[derive(Debug, Clone, Copy)]
pub struct RidgePoint {
    pub position: Vec2,
    /// Normalized arc-length coordinate in [0, 1].
    pub s: f64,
    /// FTLE value at this point (interpolated for tracked ridges, exact for
    /// refined ones; advected ridges keep their source values).
    pub phi: f64,
    /// Unit tangent of the polyline.
    pub tangent: Vec2,
    /// Unit normal: tangent rotated +90°.
    pub normal: Vec2,
    /// Set when advection froze this point at the domain edge.
    pub frozen: bool,
}

/// An ordered ridge polyline with provenance.
#[derive(Debug, Clone)]
pub struct Ridge {
    pub points: Vec<RidgePoint>,
    pub state: RidgeState,
    /// Seed position tracking started from.
    pub seed: Vec2,
    /// Stop reason of the walk that produced the first point.
    pub stop_start: StopReason,
    /// Stop reason of the walk that produced the last point.
    pub stop_end: StopReason,
    /// Refinement schedule applied, if any.
    pub schedule: Option<RefinementSchedule>,
    /// An advected ridge whose source had not been refined.
    pub from_unrefined: bool,
}

impl Ridge {
    /// Assemble a ridge from raw positions and values; geometry (arc
    /// coordinates, tangents, normals) is derived from the polyline.
    pub fn from_positions(
        positions: Vec<Vec2>,
        phi: Vec<f64>,
        state: RidgeState,
        seed: Vec2,
        stop_start: StopReason,
        stop_end: StopReason,
    ) -> Ridge {
        assert_eq!(positions.len(), phi.len());
        let mut r = Ridge {
            points: positions
                .into_iter()
                .zip(phi)
                .map(|(position, phi)| RidgePoint {
                    position,
                    s: 0.0,
                    phi,
                    tangent: Vec2::new(1.0, 0.0),
                    normal: Vec2::new(0.0, 1.0),
                    frozen: false,
                })
                .collect(),
            state,
            seed,
            stop_start,
            stop_end,
            schedule: None,
            from_unrefined: false,
        };
        r.rebuild_geometry();
        r
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.position).collect()
    }

    /// Total arc length of the polyline.
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .sum()
    }

    /// Recompute arc coordinates, tangents, and normals from the current
    /// point positions: central differences inside, one-sided at the ends.
    pub fn rebuild_geometry(&mut self) {
        let n = self.points.len();
        if n == 0 {
            return;
        }
        if n == 1 {
            self.points[0].s = 0.0;
            return;
        }
        let pos: Vec<Vec2> = self.points.iter().map(|p| p.position).collect();
        let mut cum = 0.0;
        let mut arcs = vec![0.0; n];
        for i in 1..n {
            cum += (pos[i] - pos[i - 1]).norm();
            arcs[i] = cum;
        }
        let total = cum;
        let mut last_tangent = Vec2::new(1.0, 0.0);
        for i in 0..n {
            self.points[i].s = if total > 0.0 { arcs[i] / total } else { 0.0 };
            let chord = if i == 0 {
                pos[1] - pos[0]
            } else if i == n - 1 {
                pos[n - 1] - pos[n - 2]
            } else {
                pos[i + 1] - pos[i - 1]
            };
            let norm = chord.norm();
            let tangent = if norm > 0.0 { chord / norm } else { last_tangent };
            last_tangent = tangent;
            self.points[i].tangent = tangent;
            self.points[i].normal = perp(tangent);
        }
    }

    /// Largest gap between consecutive points.
    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .fold(0.0, f64::max)
    }

    /// Shortest distance from `p` to any vertex of this ridge.
    pub fn min_distance_to(&self, p: Vec2) -> f64 {
        self.points
            .iter()
            .map(|q| (q.position - p).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// How the first step direction at a seed is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialDirection {
    /// Along the FTLE gradient (climbs toward sharp crests).
    Gradient,
    /// Normal to the FTLE gradient (along the crest; preferable on sharp
    /// ridges where the transverse gradient dominates).
    #[default]
    GradientNormal,
}

impl InitialDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialDirection::Gradient => "gradient",
            InitialDirection::GradientNormal => "gradient-normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(InitialDirection::Gradient),
            "gradient-normal" => Ok(InitialDirection::GradientNormal),
            other => Err(FtleError::InvalidArgument(format!(
                "unknown initial direction '{other}'"
            ))),
        }
    }
}

/// Parameters of seed detection and crest walking.
#[derive(Debug, Clone, Copy)]
pub struct TrackerConfig {
    /// Pitch of the seed-scan lines.
    pub seed_spacing: f64,
    /// Minimum FTLE for a scan-line maximum to become a seed.
    pub seed_threshold: f64,
    /// Walk step length along the ridge.
    pub step: f64,
    /// Transverse probe offset of the parabola fit.
    pub probe: f64,
    /// Walks stop when FTLE falls below this.
    pub stop_threshold: f64,
    /// Total point budget per ridge.
    pub max_points: usize,
    pub initial_direction: InitialDirection,
}

impl TrackerConfig {
    /// Defaults proportioned to an FTLE grid spacing: scan lines every 10
    /// cells, steps of two cells, probes of one cell. The stop threshold
    /// sits below the seed threshold so a crest passing through a weak spot
    /// (a hyperbolic fixed point dips to its own local rate) is walked
    /// through rather than split in two.
    pub fn for_spacing(dx: f64) -> TrackerConfig {
        TrackerConfig {
            seed_spacing: 10.0 * dx,
            seed_threshold: 1.0,
            step: 2.0 * dx,
            probe: dx,
            stop_threshold: 0.5,
            max_points: 4000,
            initial_direction: InitialDirection::default(),
        }
    }

    pub fn for_field(field: &FtleField) -> TrackerConfig {
        TrackerConfig::for_spacing(field.grid.dx)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.probe > 0.0) || !(self.seed_spacing > 0.0) {
            return Err(FtleError::InvalidArgument(
                "tracker lengths (step, probe, seed spacing) must be positive".into(),
            ));
        }
        if self.stop_threshold < 0.0 {
            return Err(FtleError::InvalidArgument(
                "stop threshold must be non-negative".into(),
            ));
        }
        if self.max_points < 3 {
            return Err(FtleError::InvalidArgument(
                "point budget must allow at least 3 points".into(),
            ));
        }
        Ok(())
    }
}

/// Smooth (bicubic) interpolated view of an FTLE field, for tracking.
/// Queries outside the grid are clamped to the boundary stencils; flagged
/// nodes poison their stencil with NaN, which walkers treat as leaving the
/// valid-data region.
pub struct FtleSampler<'a> {
    field: &'a FtleField,
}

impl<'a> FtleSampler<'a> {
    pub fn new(field: &'a FtleField) -> FtleSampler<'a> {
        FtleSampler { field }
    }

    pub fn field(&self) -> &FtleField {
        self.field
    }

    /// Interpolated FTLE at `p` (NaN when invalid data enters the stencil).
    pub fn phi(&self, p: Vec2) -> f64 {
        let g = &self.field.grid;
        let sx = axis_stencil(InterpMode::Bicubic, (p.x - g.origin.x) / g.dx, g.nx, g.dx);
        let sy = axis_stencil(InterpMode::Bicubic, (p.y - g.origin.y) / g.dx, g.ny, g.dx);
        let (v, _, _) = eval_scalar(&sx, &sy, |i, j| self.field.phi[g.index(i, j)]);
        v
    }

    /// FTLE gradient estimate at the node nearest to `p`, by central
    /// differences of the stored grid values.
    pub fn grad_at_nearest_node(&self, p: Vec2) -> Vec2 {
        let g = &self.field.grid;
        let i = (((p.x - g.origin.x) / g.dx).round() as i64).clamp(1, g.nx as i64 - 2) as usize;
        let j = (((p.y - g.origin.y) / g.dx).round() as i64).clamp(1, g.ny as i64 - 2) as usize;
        Vec2::new(
            (self.field.phi[g.index(i + 1, j)] - self.field.phi[g.index(i - 1, j)]) / (2.0 * g.dx),
            (self.field.phi[g.index(i, j + 1)] - self.field.phi[g.index(i, j - 1)]) / (2.0 * g.dx),
        )
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::flowmap::{FieldProvenance, FtleField, GridSpec, NodeFlag};
    use crate::Vec2;

    /// Build an FTLE field by sampling `f` on a grid over [-1,1]^2.
    pub fn synthetic_field(dx: f64, f: impl Fn(Vec2) -> f64) -> FtleField {
        let grid = GridSpec::from_rect(
            crate::field::Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            dx,
        )
        .unwrap();
        let phi: Vec<f64> = grid.positions().iter().map(|p| f(*p)).collect();
        FtleField {
            grid,
            t0: 0.0,
            t1: 1.0,
            phi,
            flags: vec![NodeFlag::Valid; grid.len()],
            provenance: FieldProvenance::Imported,
            delta_a: 0.0,
            rtol: 0.0,
            atol: 0.0,
        }
    }

    /// The standard smooth test surface: a flat-crested ridge along y = 0.
    pub fn flat_ridge(dx: f64) -> FtleField {
        synthetic_field(dx, |p| 2.0 * (-p.y * p.y).exp())
    }
}
