//! Analytic swirl model: a cubic saddle observed in swirled coordinates.
//!
//! The underlying autonomous system is the separable cubic saddle
//!
//! ```text
//! Ẋ₁ = X₁ - X₁³        Ẋ₂ = X₂³ - X₂
//! ```
//!
//! on the square [-1, 1]²: the X₂ axis collapses toward 0 while X₁ runs to
//! ±1, and the lines X₂ = ±1 are repelling invariant manifolds. The observed
//! field applies the radius-dependent rotation x = R(r)·X with r = |X| = |x|,
//! which swirls those straight manifolds into curved ones while preserving
//! every separation property. The closed-form flow map of the saddle therefore
//! transports to closed form for this field too (see [`crate::oracle`]),
//! which is what makes the model a useful ground truth: it is genuinely
//! swirling, compressible, and hyperbolic, yet exactly solvable.

use super::{Rect, VelocityField};
use crate::{Mat2, Vec2};

/// Evaluation margin beyond the unit square. The formulas evaluate anywhere,
/// but stage positions are clamped into `domain + margin` before sampling;
/// the box contains the swirled image of the base square (|x| <= sqrt(2))
/// with room to spare, so no contained trajectory is ever clamped.
pub const DEFAULT_MARGIN: f64 = 0.5;

/// Below this radius the field evaluates its origin limit: velocity
/// (x₁, -x₂) + O(r³), gradient diag(1, -1) + O(r). Keeps the 1/r bracket
/// coefficients out of the denormal range.
const ORIGIN_RADIUS: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
pub struct SwirlField {
    pub margin: f64,
}

impl Default for SwirlField {
    fn default() -> Self {
        SwirlField {
            margin: DEFAULT_MARGIN,
        }
    }
}

impl SwirlField {
    pub fn new() -> Self {
        Self::default()
    }

    /// Saddle coordinates of an observed position: X = R(-|x|) x.
    pub fn base_coords(x: Vec2) -> Vec2 {
        crate::rotation(-x.norm()) * x
    }
}

/// The four bracket polynomials of the swirled velocity.
///
/// In terms of k = 1/r - r, c₂ = cos 2r, s₂ = sin 2r:
///
/// ```text
/// u₁ = P₁ c₂ + Q₁ s₂      u₂ = P₂ c₂ + Q₂ s₂
/// P₁ = x₁ - x₁³ - k (x₁² - x₂²) x₂      Q₁ = x₂ - x₂(3x₁² + x₂²)/2 - 2k x₁ x₂²
/// P₂ = -x₂ + x₂³ + k (x₁² - x₂²) x₁     Q₂ = x₁ - x₁(x₁² + 3x₂²)/2 + 2k x₁² x₂
/// ```
///
/// This is literally d/dt of x = R(r)X along the saddle: the brackets fall out
/// of R(r)Ẋ + ṙ J x with ṙ = (X₁² - X₂²)(1/r - r). Each 1/r carries a cubic
/// factor, so the r -> 0 singularity is removable.
#[inline]
fn brackets(x1: f64, x2: f64, k: f64) -> (f64, f64, f64, f64) {
    let w = x1 * x1 - x2 * x2;
    let p1 = x1 - x1 * x1 * x1 - k * w * x2;
    let q1 = x2 - 0.5 * x2 * (3.0 * x1 * x1 + x2 * x2) - 2.0 * k * x1 * x2 * x2;
    let p2 = -x2 + x2 * x2 * x2 + k * w * x1;
    let q2 = x1 - 0.5 * x1 * (x1 * x1 + 3.0 * x2 * x2) + 2.0 * k * x1 * x1 * x2;
    (p1, q1, p2, q2)
}

impl VelocityField for SwirlField {
    fn domain(&self) -> Rect {
        Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    fn margin(&self) -> f64 {
        self.margin
    }

    /// The region this field models is the swirled image of the base square,
    /// not a rectangle. The base square is invariant under the saddle (X₁
    /// is attracted to ±1 from inside, X₂ decays), so contained trajectories
    /// run their full windows; everything outside lies beyond the repelling
    /// manifolds, where the cubic blows up in finite time and the model
    /// stops describing anything. Stopping exactly at the image boundary is
    /// what pins the FTLE crest of a truncated window onto the manifold
    /// itself instead of onto an arbitrary bounding box's exit locus.
    fn contains(&self, x: Vec2) -> bool {
        let b = Self::base_coords(x);
        b.x.abs() <= 1.0 && b.y.abs() <= 1.0
    }

    fn eval_velocity(&self, x: Vec2, _t: f64) -> Vec2 {
        let r = x.norm();
        if r < ORIGIN_RADIUS {
            // Linearization at the hyperbolic origin; error O(r³).
            return Vec2::new(x.x, -x.y);
        }
        let k = 1.0 / r - r;
        let (s2, c2) = (2.0 * r).sin_cos();
        let (p1, q1, p2, q2) = brackets(x.x, x.y, k);
        Vec2::new(p1 * c2 + q1 * s2, p2 * c2 + q2 * s2)
    }

    fn eval_velocity_gradient(&self, x: Vec2, _t: f64) -> Mat2 {
        let r = x.norm();
        if r < ORIGIN_RADIUS {
            return Mat2::new(1.0, 0.0, 0.0, -1.0);
        }
        let (x1, x2) = (x.x, x.y);
        let k = 1.0 / r - r;
        // dk/dx_i = -(1/r² + 1) x_i / r
        let kp = -(1.0 / (r * r) + 1.0);
        let dk1 = kp * x1 / r;
        let dk2 = kp * x2 / r;
        let (s2, c2) = (2.0 * r).sin_cos();
        let (dr1, dr2) = (x1 / r, x2 / r);
        let w = x1 * x1 - x2 * x2;
        let (p1, q1, p2, q2) = brackets(x1, x2, k);

        // Product-rule derivatives of the brackets. Every 1/r² term keeps a
        // cubic polynomial factor, so all summands stay O(r) near the origin.
        let dp1_1 = 1.0 - 3.0 * x1 * x1 - (dk1 * w * x2 + 2.0 * k * x1 * x2);
        let dp1_2 = -(dk2 * w * x2 - 2.0 * k * x2 * x2 + k * w);
        let dq1_1 = -3.0 * x1 * x2 - 2.0 * (dk1 * x1 * x2 * x2 + k * x2 * x2);
        let dq1_2 =
            1.0 - 1.5 * (x1 * x1 + x2 * x2) - 2.0 * (dk2 * x1 * x2 * x2 + 2.0 * k * x1 * x2);
        let dp2_1 = dk1 * w * x1 + 2.0 * k * x1 * x1 + k * w;
        let dp2_2 = -1.0 + 3.0 * x2 * x2 + (dk2 * w * x1 - 2.0 * k * x1 * x2);
        let dq2_1 =
            1.0 - 1.5 * (x1 * x1 + x2 * x2) + 2.0 * (dk1 * x1 * x1 * x2 + 2.0 * k * x1 * x2);
        let dq2_2 = -3.0 * x1 * x2 + 2.0 * (dk2 * x1 * x1 * x2 + k * x1 * x1);

        // d(cos 2r) = -2 s₂ dr, d(sin 2r) = 2 c₂ dr.
        let trig1 = (-p1 * s2 + q1 * c2) * 2.0;
        let trig2 = (-p2 * s2 + q2 * c2) * 2.0;
        Mat2::new(
            dp1_1 * c2 + dq1_1 * s2 + trig1 * dr1,
            dp1_2 * c2 + dq1_2 * s2 + trig1 * dr2,
            dp2_1 * c2 + dq2_1 * s2 + trig2 * dr1,
            dp2_2 * c2 + dq2_2 * s2 + trig2 * dr2,
        )
    }
}
