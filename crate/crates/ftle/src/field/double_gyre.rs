//! Periodically perturbed double gyre on [0, 2] x [0, 1].
//!
//! Two counter-rotating cells whose separating line oscillates horizontally:
//! the stream function is psi = A sin(pi f(x, t)) sin(pi y) with
//! f = e(t) x² + b(t) x, e(t) = eps sin(omega t), b(t) = 1 - 2 eps sin(omega t).
//! Incompressible, time-periodic, and the usual first benchmark for
//! time-dependent FTLE fields.

use super::{Rect, VelocityField};
use crate::{Mat2, Vec2};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct DoubleGyre {
    pub amplitude: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub margin: f64,
}

impl Default for DoubleGyre {
    fn default() -> Self {
        DoubleGyre {
            amplitude: 0.1,
            epsilon: 0.25,
            omega: PI / 5.0,
            margin: 0.05,
        }
    }
}

impl DoubleGyre {
    pub fn new(amplitude: f64, epsilon: f64, omega: f64) -> Self {
        DoubleGyre {
            amplitude,
            epsilon,
            omega,
            ..Default::default()
        }
    }

    fn f_terms(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let e = self.epsilon * (self.omega * t).sin();
        let b = 1.0 - 2.0 * e;
        let f = e * x * x + b * x;
        let fx = 2.0 * e * x + b;
        let fxx = 2.0 * e;
        (f, fx, fxx)
    }
}

impl VelocityField for DoubleGyre {
    fn domain(&self) -> Rect {
        Rect::new(Vec2::zeros(), Vec2::new(2.0, 1.0))
    }

    // The boundary is a streamline, so trajectories never leave; the margin
    // only absorbs integrator overshoot.
    fn margin(&self) -> f64 {
        self.margin
    }

    fn eval_velocity(&self, p: Vec2, t: f64) -> Vec2 {
        let (f, fx, _) = self.f_terms(p.x, t);
        let a = self.amplitude;
        Vec2::new(
            -PI * a * (PI * f).sin() * (PI * p.y).cos(),
            PI * a * fx * (PI * f).cos() * (PI * p.y).sin(),
        )
    }

    fn eval_velocity_gradient(&self, p: Vec2, t: f64) -> Mat2 {
        let (f, fx, fxx) = self.f_terms(p.x, t);
        let a = self.amplitude;
        let (spf, cpf) = (PI * f).sin_cos();
        let (spy, cpy) = (PI * p.y).sin_cos();
        Mat2::new(
            -PI * PI * a * fx * cpf * cpy,
            PI * PI * a * spf * spy,
            PI * a * spy * (fxx * cpf - PI * fx * fx * spf),
            PI * PI * a * fx * cpf * cpy,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_invariant() {
        let g = DoubleGyre::default();
        for t in [0.0, 1.3, 7.9] {
            for s in 0..=20 {
                let f = s as f64 / 20.0;
                // no normal flow through any edge
                assert!(g.eval_velocity(Vec2::new(2.0 * f, 0.0), t).y.abs() < 1e-14);
                assert!(g.eval_velocity(Vec2::new(2.0 * f, 1.0), t).y.abs() < 1e-13);
                assert!(g.eval_velocity(Vec2::new(0.0, f), t).x.abs() < 1e-14);
                assert!(g.eval_velocity(Vec2::new(2.0, f), t).x.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn divergence_free() {
        let g = DoubleGyre::default();
        for i in 0..10 {
            for j in 0..10 {
                let p = Vec2::new(0.1 + 0.19 * i as f64, 0.05 + 0.09 * j as f64);
                let grad = g.eval_velocity_gradient(p, 2.7);
                assert!((grad.m11 + grad.m22).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = DoubleGyre::default();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                let p = Vec2::new(0.05 + 0.16 * i as f64, 0.04 + 0.08 * j as f64);
                let t = 0.7 * i as f64;
                let grad = g.eval_velocity_gradient(p, t);
                let fd = Mat2::from_columns(&[
                    (g.eval_velocity(p + Vec2::new(h, 0.0), t)
                        - g.eval_velocity(p - Vec2::new(h, 0.0), t))
                        / (2.0 * h),
                    (g.eval_velocity(p + Vec2::new(0.0, h), t)
                        - g.eval_velocity(p - Vec2::new(0.0, h), t))
                        / (2.0 * h),
                ]);
                worst = worst.max((grad - fd).amax());
            }
        }
        assert!(worst < 1e-8, "gradient vs FD: {worst:e}");
    }

    #[test]
    fn time_periodic() {
        let g = DoubleGyre::default();
        let p = Vec2::new(1.3, 0.4);
        let period = 2.0 * PI / g.omega;
        assert!((g.eval_velocity(p, 1.0) - g.eval_velocity(p, 1.0 + period)).norm() < 1e-13);
    }
}
