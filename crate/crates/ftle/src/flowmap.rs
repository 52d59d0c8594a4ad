//! Flow-map gradients, the Cauchy-Green strain tensor, and FTLE field
//! assembly on regular grids.
//!
//! Two gradient methods are provided. The cluster method advects, for each
//! evaluation point, four auxiliary points at distance `delta_a` along the
//! coordinate axes and forms the gradient by central differences; the five
//! trajectories of one cluster always share a step sequence so the common
//! truncation error cancels in the differences. The advected-gradient method
//! integrates the gradient entries alongside each trajectory using the
//! velocity gradient of the field.

use rayon::prelude::*;

use crate::advect::{advect_batch, advect_with_gradient, IntegratorConfig, TrajectoryStatus};
use crate::field::VelocityField;
use crate::{FtleError, Mat2, Result, Vec2};

/// Regular node layout for FTLE evaluation: `nx` x `ny` nodes with uniform
/// spacing `dx`, node `(i, j)` at `origin + (i*dx, j*dx)`. Values are stored
/// row-major with x fastest: index `j*nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Vec2,
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Vec2, dx: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(FtleError::InvalidArgument(format!(
                "grid spacing must be positive and finite, got {dx}"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(FtleError::InvalidArgument(format!(
                "grid needs at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        Ok(GridSpec { origin, dx, nx, ny })
    }

    /// Grid covering `rect` with spacing `dx`; errors unless `dx` tiles both
    /// extents to within 1e-9 relative.
    pub fn from_rect(rect: crate::field::Rect, dx: f64) -> Result<Self> {
        let steps = |len: f64| -> Result<usize> {
            let n = len / dx;
            let rounded = n.round();
            if (n - rounded).abs() > 1e-9 * n.max(1.0) {
                return Err(FtleError::InvalidArgument(format!(
                    "spacing {dx} does not tile extent {len}"
                )));
            }
            Ok(rounded as usize)
        };
        GridSpec::new(rect.min, dx, steps(rect.width())? + 1, steps(rect.height())? + 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dx,
        )
    }

    pub fn max(&self) -> Vec2 {
        self.node(self.nx - 1, self.ny - 1)
    }

    pub fn rect(&self) -> crate::field::Rect {
        crate::field::Rect::new(self.origin, self.max())
    }

    /// All node positions in storage order.
    pub fn positions(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.node(i, j));
            }
        }
        out
    }

    /// True when both grids have the same nodes to within a relative slack.
    pub fn matches(&self, other: &GridSpec) -> bool {
        let tol = 1e-9 * self.dx.max(other.dx);
        self.nx == other.nx
            && self.ny == other.ny
            && (self.dx - other.dx).abs() <= tol
            && (self.origin - other.origin).norm() <= tol
    }
}

/// Symmetric Cauchy-Green tensor C = (grad F)^T (grad F).
#[derive(Debug, Clone, Copy)]
pub struct CgTensor {
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

/// Eigen/singular structure of a [`CgTensor`]: eigenvalues `lambda1 <=
/// lambda2` with orthonormal eigenvectors oriented so that `xi1 x xi2 = +1`.
#[derive(Debug, Clone, Copy)]
pub struct CgEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    pub xi1: Vec2,
    pub xi2: Vec2,
}

impl CgTensor {
    pub fn from_gradient(f: &Mat2) -> Self {
        CgTensor {
            c11: f.m11 * f.m11 + f.m21 * f.m21,
            c12: f.m11 * f.m12 + f.m21 * f.m22,
            c22: f.m12 * f.m12 + f.m22 * f.m22,
        }
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.c11, self.c12, self.c12, self.c22)
    }

    /// Largest eigenvalue: (C11+C22+sqrt((C11-C22)^2+4 C12^2))/2.
    pub fn lambda2(&self) -> f64 {
        let mean = 0.5 * (self.c11 + self.c22);
        let disc = (0.5 * (self.c11 - self.c22)).hypot(self.c12);
        mean + disc
    }

    /// Both eigenvalues and oriented eigenvectors. The small eigenvalue is
    /// recovered from det C / lambda2, which keeps relative accuracy when the
    /// tensor is strongly anisotropic; det C >= 0 analytically, so rounding
    /// dips below zero are clamped.
    pub fn eigen(&self) -> CgEigen {
        let lambda2 = self.lambda2();
        let det = (self.c11 * self.c22 - self.c12 * self.c12).max(0.0);
        let lambda1 = if lambda2 > 0.0 {
            (det / lambda2).min(lambda2)
        } else {
            0.0
        };
        // Null vector of C - lambda2 I from whichever analytic candidate has
        // the larger magnitude; both rows of the singular matrix give one.
        let v1 = Vec2::new(self.c12, lambda2 - self.c11);
        let v2 = Vec2::new(lambda2 - self.c22, self.c12);
        let cand = if v1.norm_squared() >= v2.norm_squared() {
            v1
        } else {
            v2
        };
        let scale = self.c11.abs().max(self.c22.abs()).max(self.c12.abs());
        let mut xi2 = if cand.norm() > 1e-14 * scale.max(1e-300) {
            cand / cand.norm()
        } else {
            // isotropic tensor: any direction is an eigenvector
            Vec2::new(0.0, 1.0)
        };
        // deterministic orientation: larger component positive
        if xi2.y.abs() >= xi2.x.abs() {
            if xi2.y < 0.0 {
                xi2 = -xi2;
            }
        } else if xi2.x < 0.0 {
            xi2 = -xi2;
        }
        let xi1 = Vec2::new(xi2.y, -xi2.x);
        CgEigen {
            lambda1,
            lambda2,
            xi1,
            xi2,
        }
    }
}

impl CgEigen {
    /// Singular values of the underlying flow-map gradient.
    pub fn singular_values(&self) -> (f64, f64) {
        (self.lambda1.max(0.0).sqrt(), self.lambda2.max(0.0).sqrt())
    }
}

/// FTLE value from a CG tensor over a window of length `duration` = |t1-t0|:
/// log(lambda2) / (2 duration). Negative values are legitimate (contracting
/// regions of compressible flows).
pub fn ftle_from_cg(cg: &CgTensor, duration: f64) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(FtleError::InvalidArgument(format!(
            "FTLE window length must be positive, got {duration}"
        )));
    }
    let lambda2 = cg.lambda2();
    if !(lambda2 > 0.0) {
        return Err(FtleError::Numeric(format!(
            "degenerate deformation: largest CG eigenvalue {lambda2} is not positive"
        )));
    }
    Ok(lambda2.ln() / (2.0 * duration))
}

/// How flow-map gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    /// Central differences over a 4-point cluster at spacing `delta_a`.
    ClusterFd,
    /// Direct integration of the gradient entries along the trajectory.
    AdvectedGradient,
}

impl GradientMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradientMethod::ClusterFd => "cluster-fd",
            GradientMethod::AdvectedGradient => "advected-gradient",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cluster-fd" | "fd" => Ok(GradientMethod::ClusterFd),
            "advected-gradient" | "ag" => Ok(GradientMethod::AdvectedGradient),
            other => Err(FtleError::InvalidArgument(format!(
                "unknown gradient method '{other}' (expected cluster-fd or advected-gradient)"
            ))),
        }
    }
}

/// Step-sequence sharing granularity for a whole-grid computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// Each node's cluster (or single trajectory) is its own batch. Default:
    /// keeps the step sequence adapted to each cluster and lets nodes run in
    /// parallel.
    #[default]
    PerCluster,
    /// All trajectories of the grid share one step sequence.
    WholeBatch,
}

impl BatchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BatchMode::PerCluster => "per-cluster",
            BatchMode::WholeBatch => "whole-batch",
        }
    }
}

/// Flow-map gradient at one evaluation point.
#[derive(Debug, Clone, Copy)]
pub enum NodeGradient {
    /// Every trajectory ran the full window.
    Full(Mat2),
    /// Every trajectory stopped at the domain boundary before the window
    /// ended: the gradient describes the stopped flow map (each trajectory
    /// held at its exit position). Still a clean central difference, so it
    /// carries a value — a point outside the domain stops immediately and
    /// yields the identity, FTLE 0.
    Stopped(Mat2),
    /// Some but not all cluster members stopped. A gradient here would need
    /// one-sided differences, which silently degrade the order; the point
    /// is reported honestly as invalid instead.
    Mixed,
}

impl NodeGradient {
    pub fn gradient(&self) -> Option<&Mat2> {
        match self {
            NodeGradient::Full(g) | NodeGradient::Stopped(g) => Some(g),
            NodeGradient::Mixed => None,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, NodeGradient::Full(_))
    }
}

/// Gradients by cluster finite differences at each point of `points`.
pub fn cluster_gradient(
    field: &dyn VelocityField,
    points: &[Vec2],
    delta_a: f64,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<NodeGradient>> {
    cluster_gradient_with_mode(field, points, delta_a, t0, t1, cfg, BatchMode::PerCluster)
}

pub fn cluster_gradient_with_mode(
    field: &dyn VelocityField,
    points: &[Vec2],
    delta_a: f64,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mode: BatchMode,
) -> Result<Vec<NodeGradient>> {
    if !(delta_a > 0.0) {
        return Err(FtleError::InvalidArgument(format!(
            "cluster spacing must be positive, got {delta_a}"
        )));
    }
    let seeds_of = |p: &Vec2| {
        [
            *p,
            Vec2::new(p.x + delta_a, p.y),
            Vec2::new(p.x - delta_a, p.y),
            Vec2::new(p.x, p.y + delta_a),
            Vec2::new(p.x, p.y - delta_a),
        ]
    };
    let gradient_of = |final_pos: &[Vec2], status: &[TrajectoryStatus]| -> NodeGradient {
        let frozen = status.iter().filter(|s| s.is_frozen()).count();
        if frozen > 0 && frozen < status.len() {
            return NodeGradient::Mixed;
        }
        let inv = 1.0 / (2.0 * delta_a);
        let dx1 = (final_pos[1] - final_pos[2]) * inv;
        let dx2 = (final_pos[3] - final_pos[4]) * inv;
        let g = Mat2::new(dx1.x, dx2.x, dx1.y, dx2.y);
        if frozen == status.len() {
            NodeGradient::Stopped(g)
        } else {
            NodeGradient::Full(g)
        }
    };
    match mode {
        BatchMode::PerCluster => points
            .par_iter()
            .map(|p| {
                let r = advect_batch(field, &seeds_of(p), t0, t1, cfg)?;
                Ok(gradient_of(&r.positions, &r.status))
            })
            .collect(),
        BatchMode::WholeBatch => {
            let mut seeds = Vec::with_capacity(points.len() * 5);
            for p in points {
                seeds.extend_from_slice(&seeds_of(p));
            }
            let r = advect_batch(field, &seeds, t0, t1, cfg)?;
            Ok((0..points.len())
                .map(|n| gradient_of(&r.positions[n * 5..n * 5 + 5], &r.status[n * 5..n * 5 + 5]))
                .collect())
        }
    }
}

/// Gradients by the advected-gradient method at each point of `points`.
/// A frozen trajectory carries the gradient integrated up to its stop time,
/// the advected-gradient analogue of differencing the stopped flow map.
pub fn advected_gradient_with_mode(
    field: &dyn VelocityField,
    points: &[Vec2],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mode: BatchMode,
) -> Result<Vec<NodeGradient>> {
    let pick = |r: &crate::advect::GradientBatchResult, i: usize| -> NodeGradient {
        if r.status[i].is_frozen() {
            NodeGradient::Stopped(r.gradients[i])
        } else {
            NodeGradient::Full(r.gradients[i])
        }
    };
    match mode {
        BatchMode::PerCluster => points
            .par_iter()
            .map(|p| {
                let r = advect_with_gradient(field, std::slice::from_ref(p), t0, t1, cfg)?;
                Ok(pick(&r, 0))
            })
            .collect(),
        BatchMode::WholeBatch => {
            let r = advect_with_gradient(field, points, t0, t1, cfg)?;
            Ok((0..points.len()).map(|i| pick(&r, i)).collect())
        }
    }
}

/// Per-node validity in an [`FtleField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFlag {
    Valid,
    /// The node's trajectories stopped at the domain boundary before the
    /// window ended; the stored value is the FTLE of the stopped flow map
    /// (zero for nodes outside the domain, which stop immediately). Such
    /// values are comparable along the stopped region but never enter
    /// full-window statistics or error means.
    Frozen,
    /// No FTLE value here: a cluster straddling the domain boundary, a
    /// degenerate deformation, or an undefined closed-form reference.
    Excluded,
}

impl NodeFlag {
    pub fn code(&self) -> u8 {
        match self {
            NodeFlag::Valid => 0,
            NodeFlag::Frozen => 1,
            NodeFlag::Excluded => 2,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        match c {
             0 => Ok(NodeFlag::Valid),
            1 => Ok(NodeFlag::Frozen),
            2 => Ok(NodeFlag::Excluded),
            other => Err(FtleError::Numeric(format!("unknown node flag code {other}"))),
        }
    }
}

/// Provenance tag for how an FTLE field's values were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldProvenance {
    Numeric(GradientMethod),
    /// Closed-form reference values.
    Analytic,
    /// Loaded from an external table (e.g. CSV import).
    Imported,
}

impl FieldProvenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldProvenance::Numeric(m) => m.as_str(),
            FieldProvenance::Analytic => "analytic",
            FieldProvenance::Imported => "imported",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(FieldProvenance::Analytic),
            "imported" => Ok(FieldProvenance::Imported),
            other => Ok(FieldProvenance::Numeric(GradientMethod::parse(other)?)),
        }
    }
}

/// FTLE values on a regular grid, with enough metadata to reproduce the
/// computation. Excluded nodes carry NaN; frozen nodes carry the FTLE of
/// their stopped flow map.
#[derive(Debug, Clone)]
pub struct FtleField {
    pub grid: GridSpec,
    pub t0: f64,
    pub t1: f64,
    pub phi: Vec<f64>,
    pub flags: Vec<NodeFlag>,
    pub provenance: FieldProvenance,
    /// Cluster spacing used (0 when not applicable).
    pub delta_a: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl FtleField {
    pub fn duration(&self) -> f64 {
        (self.t1 - self.t0).abs()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.index(i, j)]
    }

    pub fn flag(&self, i: usize, j: usize) -> NodeFlag {
        self.flags[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|f| **f == NodeFlag::Valid).count()
    }

    pub fn max_phi(&self) -> f64 {
        self.phi
            .iter()
            .zip(&self.flags)
            .filter(|(_, f)| **f == NodeFlag::Valid)
            .fold(f64::NEG_INFINITY, |m, (v, _)| m.max(*v))
    }
}

/// Full FTLE computation settings.
#[derive(Debug, Clone)]
pub struct FtleSettings {
    pub method: GradientMethod,
    pub delta_a: f64,
    pub batch: BatchMode,
    pub integrator: IntegratorConfig,
}

impl Default for FtleSettings {
    fn default() -> Self {
        FtleSettings {
            method: GradientMethod::ClusterFd,
            delta_a: 1e-6,
            batch: BatchMode::PerCluster,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Compute the FTLE field for the window `t0 -> t1` at every node of `grid`.
/// Deterministic for fixed inputs, independent of thread count.
pub fn compute_ftle_field(
    field: &dyn VelocityField,
    grid: &GridSpec,
    t0: f64,
    t1: f64,
    settings: &FtleSettings,
) -> Result<FtleField> {
    if t0 == t1 {
        return Err(FtleError::InvalidArgument(
            "FTLE window must have nonzero length".into(),
        ));
    }
    let points = grid.positions();
    let gradients = match settings.method {
        GradientMethod::ClusterFd => cluster_gradient_with_mode(
            field,
            &points,
            settings.delta_a,
            t0,
            t1,
            &settings.integrator,
            settings.batch,
        )?,
        GradientMethod::AdvectedGradient => advected_gradient_with_mode(
            field,
            &points,
            t0,
            t1,
            &settings.integrator,
            settings.batch,
        )?,
    };
    let duration = (t1 - t0).abs();
    let mut phi = Vec::with_capacity(points.len());
    let mut flags = Vec::with_capacity(points.len());
    for g in &gradients {
        match g.gradient() {
            None => {
                phi.push(f64::NAN);
                flags.push(NodeFlag::Excluded);
            }
            Some(m) => match ftle_from_cg(&CgTensor::from_gradient(m), duration) {
                Ok(v) => {
                    phi.push(v);
                    flags.push(if g.is_full() {
                        NodeFlag::Valid
                    } else {
                        NodeFlag::Frozen
                    });
                }
                Err(_) => {
                    phi.push(f64::NAN);
                    flags.push(NodeFlag::Excluded);
                }
            },
        }
    }
    Ok(FtleField {
        grid: *grid,
        t0,
        t1,
        phi,
        flags,
        provenance: FieldProvenance::Numeric(settings.method),
        delta_a: match settings.method {
            GradientMethod::ClusterFd => settings.delta_a,
            GradientMethod::AdvectedGradient => 0.0,
        },
        rtol: settings.integrator.rtol,
        atol: settings.integrator.atol,
    })
}

/// Spatially averaged FTLE error between two fields on matching grids.
#[derive(Debug, Clone, Copy)]
pub struct PhiError {
    /// Mean |phi_numeric - phi_reference| over the compared nodes.
    pub value: f64,
    /// Nodes that entered the mean.
    pub nodes: usize,
    /// Nodes in the reference region that the numeric field had flagged.
    pub skipped_numeric: usize,
    /// Reference-flagged nodes (never part of the region).
    pub skipped_reference: usize,
}

/// Mean absolute FTLE difference over the region where the reference field
/// has `phi >= threshold` (both nodes valid). The region coming out empty is
/// an error: the threshold is above the reference field's range.
pub fn phi_e(numeric: &FtleField, reference: &FtleField, threshold: f64) -> Result<PhiError> {
    if !numeric.grid.matches(&reference.grid) {
        return Err(FtleError::InvalidArgument(
            "phi_e requires identical grids for both fields".into(),
        ));
    }
    let mut sum = 0.0;
    let mut nodes = 0usize;
    let mut skipped_numeric = 0usize;
    let mut skipped_reference = 0usize;
    for idx in 0..reference.phi.len() {
        if reference.flags[idx] != NodeFlag::Valid {
            skipped_reference += 1;
            continue;
        }
        let r = reference.phi[idx];
        if r < threshold {
            continue;
        }
        if numeric.flags[idx] != NodeFlag::Valid {
            skipped_numeric += 1;
            continue;
        }
        sum += (numeric.phi[idx] - r).abs();
        nodes += 1;
    }
    if nodes == 0 {
        return Err(FtleError::Numeric(format!(
            "no valid nodes with reference FTLE >= {threshold}: threshold too high for this field"
        )));
    }
    Ok(PhiError {
        value: sum / nodes as f64,
        nodes,
        skipped_numeric,
        skipped_reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{LinearField, Rect, SwirlField};
    use approx::assert_relative_eq;

    fn unit_box() -> Rect {
        Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    #[test]
    fn grid_from_rect_counts_nodes() {
        let g = GridSpec::from_rect(unit_box(), 0.25).unwrap();
        assert_eq!((g.nx, g.ny), (9, 9));
        assert_eq!(g.node(0, 0), Vec2::new(-1.0, -1.0));
        assert_eq!(g.node(8, 8), Vec2::new(1.0, 1.0));
        assert!(GridSpec::from_rect(unit_box(), 0.3).is_err());
    }

    #[test]
    fn cg_closed_form_matches_hand_example() {
        let cg = CgTensor {
            c11: 2.0,
            c12: 1.0,
            c22: 2.0,
        };
        let e = cg.eigen();
        assert_relative_eq!(e.lambda2, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.lambda1, 1.0, max_relative = 1e-15);
        let want = Vec2::new(1.0, 1.0) / 2f64.sqrt();
        assert!((e.xi2 - want).norm() < 1e-14);
    }

    #[test]
    fn eigen_pairs_satisfy_definition_and_orientation() {
        // deterministic sweep over asymmetric tensors
        for (a, b, c) in [
            (1.0, 0.0, 4.0),
            (4.0, 0.0, 1.0),
            (3.0, -2.0, 1.5),
            (1e-8, 1e-9, 2.0),
            (5.0, 1e-12, 5.0),
            (2.0, 0.0, 2.0),
        ] {
            let cg = CgTensor {
                c11: a,
                c12: b,
                c22: c,
            };
            let e = cg.eigen();
            let m = cg.matrix();
            let scale = e.lambda2.max(1.0);
            assert!((m * e.xi2 - e.lambda2 * e.xi2).norm() <= 1e-10 * scale);
            assert!((m * e.xi1 - e.lambda1 * e.xi1).norm() <= 1e-10 * scale);
            assert!(e.lambda1 <= e.lambda2);
            assert_relative_eq!(crate::cross2(e.xi1, e.xi2), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tiny_lambda1_keeps_relative_accuracy() {
        // gradient diag(1e-6, 1e6): lambda1 = 1e-12 exactly, naive
        // subtraction would lose it entirely
        let g = Mat2::new(1e-6, 0.0, 0.0, 1e6);
        let e = CgTensor::from_gradient(&g).eigen();
        assert_relative_eq!(e.lambda1, 1e-12, max_relative = 1e-12);
        assert_relative_eq!(e.lambda2, 1e12, max_relative = 1e-15);
    }

    #[test]
    fn ftle_values_from_known_tensors() {
        let id = CgTensor {
            c11: 1.0,
            c12: 0.0,
            c22: 1.0,
        };
        assert_eq!(ftle_from_cg(&id, 2.0).unwrap(), 0.0);
        let saddle = CgTensor {
            c11: (2f64).exp().powi(2),
            c12: 0.0,
            c22: (-2f64).exp().powi(2),
        };
        assert_relative_eq!(ftle_from_cg(&saddle, 2.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(ftle_from_cg(&id, 0.0).is_err());
    }

    #[test]
    fn fd_gradient_is_exact_for_linear_flows() {
        let f = LinearField::saddle(unit_box());
        let pts = [Vec2::new(0.1, 0.2), Vec2::new(-0.3, 0.05)];
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-13);
        for da in [1e-3, 1e-6] {
            let gs = cluster_gradient(&f, &pts, da, 0.0, 1.0, &cfg).unwrap();
            for g in gs {
                let g = *g.gradient().unwrap();
                assert_relative_eq!(g.m11, 1f64.exp(), max_relative = 1e-8);
                assert_relative_eq!(g.m22, (-1f64).exp(), max_relative = 1e-8);
                assert!(g.m12.abs() < 1e-9 && g.m21.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_field_gives_identity_gradient_and_zero_phi() {
        let f = LinearField::zero(unit_box());
        let grid = GridSpec::from_rect(unit_box(), 0.5).unwrap();
        for method in [GradientMethod::ClusterFd, GradientMethod::AdvectedGradient] {
            let settings = FtleSettings {
                method,
                ..Default::default()
            };
            // placing seeds at x +- delta_a rounds each coordinate to its
            // nearest float, so the finite differences carry an O(ulp/delta_a)
            // error even when nothing moves; the advected gradient has no
            // differencing step and stays exactly at the identity
            let tol = match method {
                GradientMethod::ClusterFd => 1e-9,
                GradientMethod::AdvectedGradient => 1e-15,
            };
            let field = compute_ftle_field(&f, &grid, 0.0, 2.0, &settings).unwrap();
            assert!(field.flags.iter().all(|fl| *fl == NodeFlag::Valid));
            assert!(field.phi.iter().all(|p| p.abs() < tol));
        }
    }

    #[test]
    fn methods_agree_on_swirl_sample_points() {
        let f = SwirlField::new();
        let pts = [Vec2::new(0.3, 0.1), Vec2::new(-0.4, -0.5)];
        let cfg = IntegratorConfig::default();
        let fd = cluster_gradient(&f, &pts, 1e-6, 0.0, 2.0, &cfg).unwrap();
        let ag =
            advected_gradient_with_mode(&f, &pts, 0.0, 2.0, &cfg, BatchMode::PerCluster).unwrap();
        for (a, b) in fd.iter().zip(&ag) {
            let (a, b) = (*a.gradient().unwrap(), *b.gradient().unwrap());
            let rel = (a - b).norm() / b.norm();
            assert!(rel < 1e-5, "methods disagree: rel {rel}");
        }
    }

    #[test]
    fn batch_modes_give_close_results_and_same_flags() {
        let f = SwirlField::new();
        let grid = GridSpec::from_rect(unit_box(), 0.25).unwrap();
        let per = compute_ftle_field(&f, &grid, 0.0, 1.0, &FtleSettings::default()).unwrap();
        let whole = compute_ftle_field(
            &f,
            &grid,
            0.0,
            1.0,
            &FtleSettings {
                batch: BatchMode::WholeBatch,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(per.flags, whole.flags);
        for (a, b) in per.phi.iter().zip(&whole.phi) {
            if a.is_finite() {
                assert!((a - b).abs() < 1e-5, "batch modes differ: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rotation_equivariance_of_eigenvectors() {
        let f = LinearField::saddle(unit_box());
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-13);
        let p = Vec2::new(0.2, 0.1);
        let g = *cluster_gradient(&f, &[p], 1e-6, 0.0, 1.0, &cfg).unwrap()[0]
            .gradient()
            .unwrap();
        let e = CgTensor::from_gradient(&g).eigen();
        // saddle stretches x: xi2 = +-(1,0), lambda2 = e^2
        assert!(e.xi2.x.abs() > 1.0 - 1e-8);
        assert_relative_eq!(e.lambda2, (2f64).exp(), max_relative = 1e-7);
    }

    #[test]
    fn phi_e_constant_offset_and_region_accounting() {
        let grid = GridSpec::from_rect(unit_box(), 0.5).unwrap();
        let base = FtleField {
            grid,
            t0: 0.0,
            t1: 2.0,
            phi: (0..grid.len()).map(|i| 0.5 + (i % 7) as f64 * 0.25).collect(),
            flags: vec![NodeFlag::Valid; grid.len()],
            provenance: FieldProvenance::Analytic,
            delta_a: 0.0,
            rtol: 0.0,
            atol: 0.0,
        };
        let mut shifted = base.clone();
        for v in &mut shifted.phi {
            *v += 1e-3;
        }
        let err = phi_e(&shifted, &base, 1.0).unwrap();
        assert_relative_eq!(err.value, 1e-3, max_relative = 1e-12);
        assert_eq!(err.nodes + err.skipped_numeric, base.phi.iter().filter(|v| **v >= 1.0).count());

        let self_err = phi_e(&base, &base, 1.0).unwrap();
        assert_eq!(self_err.value, 0.0);
        assert!(phi_e(&base, &base, 100.0).is_err(), "empty region must error");
    }

    #[test]
    fn phi_e_requires_matching_grids() {
        let g1 = GridSpec::from_rect(unit_box(), 0.5).unwrap();
        let g2 = GridSpec::from_rect(unit_box(), 0.25).unwrap();
        let mk = |g: GridSpec| FtleField {
            grid: g,
            t0: 0.0,
            t1: 1.0,
            phi: vec![2.0; g.len()],
            flags: vec![NodeFlag::Valid; g.len()],
            provenance: FieldProvenance::Analytic,
            delta_a: 0.0,
            rtol: 0.0,
            atol: 0.0,
        };
        assert!(phi_e(&mk(g1), &mk(g2), 1.0).is_err());
    }

    #[test]
    fn stopped_and_straddling_clusters() {
        let f = SwirlField::new();
        let inside = Vec2::new(0.3, 0.1);
        // base coordinates (-0.016, 1.022): past the repelling manifold, so
        // the whole cluster stops immediately and the stopped map is the
        // identity
        let outside = Vec2::new(-0.88, 0.52);
        // exactly on the manifold: members land on both sides
        let on_boundary = crate::rotation(1.0) * Vec2::new(0.0, 1.0);
        let cfg = IntegratorConfig::default();
        let gs = cluster_gradient(&f, &[inside, outside, on_boundary], 1e-6, 0.0, 2.0, &cfg)
            .unwrap();
        assert!(gs[0].is_full());
        match gs[1] {
            NodeGradient::Stopped(g) => {
                assert!((g - Mat2::identity()).amax() < 1e-9, "stopped map is the identity")
            }
            other => panic!("expected a stopped cluster, got {other:?}"),
        }
        assert!(matches!(gs[2], NodeGradient::Mixed));
    }

    #[test]
    fn field_values_stopped_nodes_and_keeps_them_out_of_statistics() {
        let f = SwirlField::new();
        // three nodes of this 2x2 grid lie past the repelling manifold of
        // the swirled saddle; (-0.86, 0.50) is inside
        let grid = GridSpec::new(Vec2::new(-0.88, 0.50), 0.02, 2, 2).unwrap();
        let field = compute_ftle_field(&f, &grid, 0.0, 2.0, &FtleSettings::default()).unwrap();
        let frozen: Vec<usize> = (0..4)
            .filter(|&i| field.flags[i] == NodeFlag::Frozen)
            .collect();
        assert_eq!(frozen.len(), 3, "flags: {:?}", field.flags);
        assert_eq!(field.flags[grid.index(1, 0)], NodeFlag::Valid);
        for &i in &frozen {
            // seed rounding leaves an O(ulp/delta_a) floor on the exact zero
            assert!(field.phi[i].abs() < 1e-9, "outside nodes stop immediately");
        }
        assert_eq!(field.valid_count(), 1);
        assert!(field.max_phi().is_finite());
    }
}
