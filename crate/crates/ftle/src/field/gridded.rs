//! Velocity fields stored on a uniform space-time grid.
//!
//! Space is interpolated per [`InterpMode`] (bicubic by default), time
//! linearly between slices; a single slice means an autonomous field. Queries
//! up to two cells outside the grid are evaluated with clamped-edge
//! extrapolation; the advection layer freezes trajectories that go further.
//! Node noise is frozen: one seeded draw per node, per slice, per component,
//! so a noisy field is just another fixed field.

use super::interp::{axis_stencil, eval_pair, InterpMode};
use super::{Rect, VelocityField};
use crate::{FtleError, Mat2, Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frozen-noise descriptor: uniform amplitude and the seed it was drawn with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub magnitude: f64,
    pub seed: u64,
}

/// Cells of clamped-edge extrapolation tolerated beyond the grid before a
/// trajectory is frozen.
pub const MARGIN_CELLS: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct GriddedField {
    pub(crate) origin: Vec2,
    pub(crate) dx: f64,
    pub(crate) nx: usize,
    pub(crate) ny: usize,
    /// Ascending slice times; length >= 1.
    pub(crate) times: Vec<f64>,
    /// One vector per slice, row-major, (u, v) interleaved: len = nx * ny * 2.
    pub(crate) slices: Vec<Vec<f64>>,
    pub(crate) interp: InterpMode,
    pub(crate) noise: Option<NoiseSpec>,
}

impl GriddedField {
    pub fn new(
        origin: Vec2,
        dx: f64,
        nx: usize,
        ny: usize,
        times: Vec<f64>,
        slices: Vec<Vec<f64>>,
        interp: InterpMode,
    ) -> Result<Self> {
        if !(dx > 0.0) || nx < 2 || ny < 2 {
            return Err(FtleError::InvalidArgument(format!(
                "grid needs dx > 0 and at least 2x2 nodes (got dx = {dx}, {nx} x {ny})"
            )));
        }
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FtleError::InvalidArgument(
                "slice times must be non-empty and strictly increasing".into(),
            ));
        }
        if slices.len() != times.len() || slices.iter().any(|s| s.len() != nx * ny * 2) {
            return Err(FtleError::InvalidArgument(
                "slice data does not match grid size and slice count".into(),
            ));
        }
        Ok(GriddedField {
            origin,
            dx,
            nx,
            ny,
            times,
            slices,
            interp,
            noise: None,
        })
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn size(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }
    pub fn interp(&self) -> InterpMode {
        self.interp
    }
    pub fn noise(&self) -> Option<NoiseSpec> {
        self.noise
    }
    pub fn set_interp(&mut self, mode: InterpMode) {
        self.interp = mode;
    }

    pub fn node_position(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.dx, j as f64 * self.dx)
    }

    pub fn node_velocity(&self, slice: usize, i: usize, j: usize) -> Vec2 {
        let base = 2 * (j * self.nx + i);
        Vec2::new(self.slices[slice][base], self.slices[slice][base + 1])
    }

    /// A copy with uniform noise in [-magnitude, +magnitude] added to every
    /// node component. Draw order is fixed (slice-major, row-major, u then v),
    /// so a (seed, magnitude) pair always produces the same field.
    pub fn add_noise(&self, magnitude: f64, seed: u64) -> Result<Self> {
        if !(magnitude >= 0.0) {
            return Err(FtleError::InvalidArgument(format!(
                "noise magnitude must be non-negative (got {magnitude})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for slice in &mut out.slices {
            for v in slice.iter_mut() {
                *v += rng.gen_range(-magnitude..=magnitude);
            }
        }
        out.noise = Some(NoiseSpec { magnitude, seed });
        Ok(out)
    }

    /// Time bracket (k, tau): slices k and k+1 blended with weight tau.
    fn time_bracket(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 {
            return (0, 0.0);
        }
        let t = t.clamp(self.times[0], self.times[n - 1]);
        let k = match self
            .times
            .partition_point(|&tk| tk <= t)
        {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let dt = self.times[k + 1] - self.times[k];
        (k, (t - self.times[k]) / dt)
    }

    /// Value and spatial gradient of the interpolant at `x`, `t`, with
    /// clamped-edge extrapolation. Gradient components along clamped axes are
    /// zero: the extended field is constant there.
    fn eval(&self, x: Vec2, t: f64) -> ([f64; 2], [f64; 4]) {
        let ux = (x.x - self.origin.x) / self.dx;
        let uy = (x.y - self.origin.y) / self.dx;
        let sx = axis_stencil(self.interp, ux, self.nx, self.dx);
        let sy = axis_stencil(self.interp, uy, self.ny, self.dx);
        let (k, tau) = self.time_bracket(t);

        let eval_slice = |s: &[f64]| {
            eval_pair(&sx, &sy, |i, j| {
                let base = 2 * (j * self.nx + i);
                (s[base], s[base + 1])
            })
        };
        let (mut val, mut grad) = eval_slice(&self.slices[k]);
        if tau > 0.0 {
            let (val1, grad1) = eval_slice(&self.slices[k + 1]);
            for c in 0..2 {
                val[c] = (1.0 - tau) * val[c] + tau * val1[c];
            }
            for c in 0..4 {
                grad[c] = (1.0 - tau) * grad[c] + tau * grad1[c];
            }
        }
        if ux < 0.0 || ux > (self.nx - 1) as f64 {
            grad[0] = 0.0;
            grad[2] = 0.0;
        }
        if uy < 0.0 || uy > (self.ny - 1) as f64 {
            grad[1] = 0.0;
            grad[3] = 0.0;
        }
        (val, grad)
    }
}

impl VelocityField for GriddedField {
    fn domain(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin + Vec2::new((self.nx - 1) as f64 * self.dx, (self.ny - 1) as f64 * self.dx),
        )
    }

    fn margin(&self) -> f64 {
        MARGIN_CELLS * self.dx
    }

    fn time_span(&self) -> (f64, f64) {
        if self.times.len() == 1 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (self.times[0], *self.times.last().unwrap())
        }
    }

    fn eval_velocity(&self, x: Vec2, t: f64) -> Vec2 {
        let (val, _) = self.eval(x, t);
        Vec2::new(val[0], val[1])
    }

    fn eval_velocity_gradient(&self, x: Vec2, t: f64) -> Mat2 {
        let (_, g) = self.eval(x, t);
        Mat2::new(g[0], g[1], g[2], g[3])
    }
}

/// Sample `field` onto a uniform grid with spacing `dx` at the given slice
/// times. `dx` must tile the source domain exactly (within 1e-9 relative).
pub fn discretize(field: &dyn VelocityField, dx: f64, times: &[f64]) -> Result<GriddedField> {
    if !(dx > 0.0) {
        return Err(FtleError::InvalidArgument(format!(
            "grid spacing must be positive (got {dx})"
        )));
    }
    let dom = field.domain();
    let count = |span: f64| -> Result<usize> {
        let n = span / dx;
        if (n - n.round()).abs() > 1e-9 * n.round().max(1.0) {
            return Err(FtleError::InvalidArgument(format!(
                "spacing {dx} does not tile the domain extent {span}"
            )));
        }
        Ok(n.round() as usize + 1)
    };
    let nx = count(dom.width())?;
    let ny = count(dom.height())?;
    let mut slices = Vec::with_capacity(times.len());
    for &t in times {
        let mut data = vec![0.0; nx * ny * 2];
        for j in 0..ny {
            for i in 0..nx {
                let p = dom.min + Vec2::new(i as f64 * dx, j as f64 * dx);
                // domain corners are exact by construction; clamp shields
                // against the last float ulp
                let u = field.sample(dom.clamp(p), t)?;
                let base = 2 * (j * nx + i);
                data[base] = u.x;
                data[base + 1] = u.y;
            }
        }
        slices.push(data);
    }
    GriddedField::new(dom.min, dx, nx, ny, times.to_vec(), slices, InterpMode::Bicubic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{LinearField, SwirlField};

    fn unit_box() -> Rect {
        Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    #[test]
    fn discretize_then_sample_is_node_exact() {
        let src = SwirlField::new();
        let g = discretize(&src, 0.125, &[0.0]).unwrap();
        assert_eq!(g.size(), (17, 17));
        for j in [0, 5, 16] {
            for i in [0, 9, 16] {
                let p = g.node_position(i, j);
                let direct = src.eval_velocity(p, 0.0);
                assert!((g.eval_velocity(p, 0.0) - direct).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn interpolation_error_shrinks_with_spacing() {
        let src = SwirlField::new();
        let probe = Vec2::new(0.31, -0.47);
        let mut errs = Vec::new();
        for dx in [0.25, 0.125, 0.0625] {
            let g = discretize(&src, dx, &[0.0]).unwrap();
            errs.push((g.eval_velocity(probe, 0.0) - src.eval_velocity(probe, 0.0)).norm());
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        assert!(errs[2] < 1e-4);
    }

    #[test]
    fn linear_time_interpolation_between_slices() {
        // two slices of constant fields: (1, 0) then (3, 0)
        let mk = |val: f64| vec![[val, 0.0]; 9].concat();
        let g = GriddedField::new(
            Vec2::zeros(),
            1.0,
            3,
            3,
            vec![0.0, 2.0],
            vec![mk(1.0), mk(3.0)],
            InterpMode::Bilinear,
        )
        .unwrap();
        let p = Vec2::new(1.3, 0.7);
        assert!((g.eval_velocity(p, 0.0).x - 1.0).abs() < 1e-14);
        assert!((g.eval_velocity(p, 0.5).x - 1.5).abs() < 1e-14);
        assert!((g.eval_velocity(p, 2.0).x - 3.0).abs() < 1e-14);
        // clamped outside the span
        assert!((g.eval_velocity(p, 5.0).x - 3.0).abs() < 1e-14);
    }

    #[test]
    fn clamped_edge_extrapolation_and_gradient() {
        let src = LinearField::saddle(unit_box());
        let g = discretize(&src, 0.25, &[0.0]).unwrap();
        let edge = g.eval_velocity(Vec2::new(1.0, 0.5), 0.0);
        let outside = g.eval_velocity(Vec2::new(1.3, 0.5), 0.0);
        assert!((edge - outside).norm() < 1e-13, "constant beyond the edge");
        let grad = g.eval_velocity_gradient(Vec2::new(1.3, 0.5), 0.0);
        assert_eq!(grad.m11, 0.0, "clamped axis has zero gradient");
        assert!((grad.m22 - (-1.0)).abs() < 1e-10, "free axis keeps its slope");
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let src = SwirlField::new();
        let g = discretize(&src, 0.25, &[0.0]).unwrap();
        let a = g.add_noise(1e-2, 42).unwrap();
        let b = g.add_noise(1e-2, 42).unwrap();
        let c = g.add_noise(1e-2, 43).unwrap();
        let mut max_dev: f64 = 0.0;
        let mut differs = false;
        for (ga, (gb, (gc, g0))) in a.slices[0].iter().zip(
            b.slices[0].iter().zip(c.slices[0].iter().zip(g.slices[0].iter())),
        ) {
            assert_eq!(ga, gb, "same seed must reproduce bit-identically");
            max_dev = max_dev.max((ga - g0).abs());
            differs |= ga != gc;
        }
        assert!(max_dev <= 1e-2);
        assert!(differs, "different seeds must differ");
        assert_eq!(a.noise(), Some(NoiseSpec { magnitude: 1e-2, seed: 42 }));
        assert!(g.noise().is_none(), "source field untouched");
    }

    #[test]
    fn non_tiling_spacing_is_rejected() {
        let src = SwirlField::new();
        assert!(matches!(
            discretize(&src, 0.3, &[0.0]),
            Err(FtleError::InvalidArgument(_))
        ));
    }
}
