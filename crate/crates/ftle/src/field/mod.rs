//! Velocity field samplers.
//!
//! Everything downstream (advection, FTLE fields, ridge work) consumes the
//! [`VelocityField`] trait. Implementations here: the analytic
//! [`SwirlField`](swirl::SwirlField) with a known closed-form flow map, the
//! [`DoubleGyre`](double_gyre::DoubleGyre) benchmark, affine-in-space
//! [`LinearField`]s for sanity checks, and [`GriddedField`](gridded::GriddedField)
//! for sampled data with interpolation and optional frozen node noise.

pub mod double_gyre;
pub mod gridded;
pub mod interp;
pub mod swirl;

pub use double_gyre::DoubleGyre;
pub use gridded::{discretize, GriddedField, NoiseSpec};
pub use interp::InterpMode;
pub use swirl::SwirlField;

use crate::{FtleError, Mat2, Result, Vec2};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    pub fn inflate(&self, by: f64) -> Rect {
        Rect {
            min: self.min - Vec2::new(by, by),
            max: self.max + Vec2::new(by, by),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// A 2-D velocity field u(x, t).
///
/// `eval_velocity` / `eval_velocity_gradient` are the unchecked fast paths the
/// integrator uses; callers keep positions inside [`freeze_bounds`](Self::freeze_bounds)
/// (the integrator clamps stage positions and freezes trajectories that leave).
/// `sample` / `sample_gradient` are the checked entry points with domain and
/// time-span validation.
pub trait VelocityField: Sync {
    /// Region the field is defined on.
    fn domain(&self) -> Rect;

    /// How far beyond the domain evaluation still behaves (clamped-edge
    /// extrapolation for gridded fields, formula evaluation for analytic
    /// ones). Trajectories crossing `domain + margin` are frozen.
    fn margin(&self) -> f64;

    fn freeze_bounds(&self) -> Rect {
        self.domain().inflate(self.margin())
    }

    /// True when `x` is inside the region trajectories may traverse. The
    /// integrator stops (freezes) a trajectory at its first accepted step
    /// outside. Defaults to the freeze bounds; fields whose meaningful
    /// region is not a rectangle override this so that stopping happens at
    /// the true boundary instead of a bounding box. Must imply membership
    /// in `freeze_bounds`, which remains the box evaluation is safe in.
    fn contains(&self, x: Vec2) -> bool {
        self.freeze_bounds().contains(x)
    }

    /// Time interval samples are valid on. Autonomous and periodic fields are
    /// unbounded.
    fn time_span(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Whether `eval_velocity_gradient` is meaningful for this field.
    fn has_gradient(&self) -> bool {
        true
    }

    /// Velocity at `x`. Precondition: `x` inside `freeze_bounds`, `t` inside
    /// the time span (times outside are clamped by gridded fields).
    fn eval_velocity(&self, x: Vec2, t: f64) -> Vec2;

    /// Spatial velocity gradient d u_i / d x_j at `x`; same preconditions.
    fn eval_velocity_gradient(&self, x: Vec2, t: f64) -> Mat2;

    /// Checked sample: validates position (against domain plus margin) and
    /// time before evaluating.
    fn sample(&self, x: Vec2, t: f64) -> Result<Vec2> {
        self.check(x, t)?;
        Ok(self.eval_velocity(x, t))
    }

    /// Checked gradient sample.
    fn sample_gradient(&self, x: Vec2, t: f64) -> Result<Mat2> {
        self.check(x, t)?;
        Ok(self.eval_velocity_gradient(x, t))
    }

    fn check(&self, x: Vec2, t: f64) -> Result<()> {
        let b = self.freeze_bounds();
        for (axis, (v, lo, hi)) in [(x.x, b.min.x, b.max.x), (x.y, b.min.y, b.max.y)]
            .into_iter()
            .enumerate()
        {
            if !(v >= lo && v <= hi) {
                return Err(FtleError::OutOfDomain {
                    axis,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        let (t_min, t_max) = self.time_span();
        if !(t >= t_min && t <= t_max) {
            return Err(FtleError::OutOfTimeSpan { t, t_min, t_max });
        }
        Ok(())
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn domain(&self) -> Rect {
        (**self).domain()
    }
    fn margin(&self) -> f64 {
        (**self).margin()
    }
    fn contains(&self, x: Vec2) -> bool {
        (**self).contains(x)
    }
    fn time_span(&self) -> (f64, f64) {
        (**self).time_span()
    }
    fn has_gradient(&self) -> bool {
        (**self).has_gradient()
    }
    fn eval_velocity(&self, x: Vec2, t: f64) -> Vec2 {
        (**self).eval_velocity(x, t)
    }
    fn eval_velocity_gradient(&self, x: Vec2, t: f64) -> Mat2 {
        (**self).eval_velocity_gradient(x, t)
    }
}

/// Steady affine field u(x) = M (x - x0). Exact flow map `exp(M t)` around the
/// fixed point makes these the standard integrator and classification checks:
/// `M = 0` (no flow), a rotation generator (rigid rotation), `diag(1, -1)`
/// (linear saddle).
#[derive(Debug, Clone, Copy)]
pub struct LinearField {
    pub matrix: Mat2,
    pub center: Vec2,
    pub domain: Rect,
}

impl LinearField {
    pub fn new(matrix: Mat2, domain: Rect) -> Self {
        LinearField {
            matrix,
            center: Vec2::zeros(),
            domain,
        }
    }

    /// u = 0 everywhere.
    pub fn zero(domain: Rect) -> Self {
        Self::new(Mat2::zeros(), domain)
    }

    /// Rigid rotation with angular velocity `omega` about the origin.
    pub fn rotation(omega: f64, domain: Rect) -> Self {
        Self::new(Mat2::new(0.0, -omega, omega, 0.0), domain)
    }

    /// The saddle u = (x, -y): unit stretching along x, unit compression
    /// along y.
    pub fn saddle(domain: Rect) -> Self {
        Self::new(Mat2::new(1.0, 0.0, 0.0, -1.0), domain)
    }
}

impl VelocityField for LinearField {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn margin(&self) -> f64 {
        // Affine fields evaluate anywhere; a wide margin keeps genuinely
        // diverging trajectories finite while not freezing benign ones.
        10.0 * self.domain.width().max(self.domain.height()).max(1.0)
    }

    fn eval_velocity(&self, x: Vec2, _t: f64) -> Vec2 {
        self.matrix * (x - self.center)
    }

    fn eval_velocity_gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        self.matrix
    }
}
