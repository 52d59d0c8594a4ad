//! Closed-form reference solution for the swirl field.
//!
//! In the untransformed frame the dynamics decouple into two scalar
//! Bernoulli equations that integrate in closed form, so the flow map, its
//! gradient (by the chain rule through the frame change), the strain tensor,
//! and the FTLE value are all available exactly. Every numerical stage of
//! the toolkit is tested against this module.
//!
//! Also here: exact perturbation formulas for the classification metrics of
//! a line whose tangent is expressed in the singular frame of the flow-map
//! gradient. These predict how the metrics respond to tangent errors and
//! double as an independent algebraic oracle for the classification module.

use rayon::prelude::*;

use crate::classify::{alignment_flag, AlignmentSensitivity, B_TOL, DELTA_TOL};
use crate::flowmap::{
    ftle_from_cg, CgEigen, CgTensor, FieldProvenance, FtleField, GridSpec, NodeFlag,
};
use crate::{rotation, FtleError, Mat2, Result, Vec2};

/// Everything the closed form yields at one seed point.
#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    /// Position at the end of the window.
    pub x: Vec2,
    /// Flow-map gradient.
    pub gradient: Mat2,
    pub cg: CgTensor,
    pub eigen: CgEigen,
    pub phi: f64,
}

// In the untransformed frame, with initial condition (A1, A2):
//   X1(t) = A1 / sqrt(N1),  N1 = A1^2 (1 - e^{-2t}) + e^{-2t}
//   X2(t) = A2 / sqrt(N2),  N2 = A2^2 (1 - e^{+2t}) + e^{+2t}
//   dX1/dA1 = e^{-2t} / N1^{3/2},  dX2/dA2 = e^{+2t} / N2^{3/2}
// (cross-derivatives vanish; the scalar equations are decoupled). N1, N2 are
// monotone in t for fixed A, so positivity at the endpoint guarantees the
// trajectory exists on the whole window. N2 -> 0 is the finite-time escape
// of |X2| > 1 trajectories.
struct BaseSolution {
    x1: f64,
    x2: f64,
    dx1_da1: f64,
    dx2_da2: f64,
}

fn base_solution(a_frame: Vec2, t: f64) -> Result<BaseSolution> {
    let em = (-2.0 * t).exp();
    let ep = (2.0 * t).exp();
    let n1 = a_frame.x * a_frame.x * (1.0 - em) + em;
    let n2 = a_frame.y * a_frame.y * (1.0 - ep) + ep;
    if !(n1 > 0.0) || !(n2 > 0.0) {
        return Err(FtleError::Numeric(format!(
            "closed-form trajectory escapes to infinity inside the window (N1={n1:.3e}, N2={n2:.3e})"
        )));
    }
    Ok(BaseSolution {
        x1: a_frame.x / n1.sqrt(),
        x2: a_frame.y / n2.sqrt(),
        dx1_da1: em / (n1 * n1.sqrt()),
        dx2_da2: ep / (n2 * n2.sqrt()),
    })
}

/// True when the closed form has no finite value somewhere on `[0, t]` (or
/// `[t, 0]` backward): the trajectory reaches infinity inside the window.
pub fn escapes_before(a: Vec2, t: f64) -> bool {
    let r0 = a.norm();
    if r0 == 0.0 {
        return false;
    }
    let a_frame = rotation(-r0) * a;
    let em = (-2.0 * t).exp();
    let ep = (2.0 * t).exp();
    let n1 = a_frame.x * a_frame.x * (1.0 - em) + em;
    let n2 = a_frame.y * a_frame.y * (1.0 - ep) + ep;
    !(n1 > 0.0 && n2 > 0.0)
}

/// Exact position reached from `a` after time `t` (either sign).
pub fn flow_map(a: Vec2, t: f64) -> Result<Vec2> {
    Ok(evaluate_raw(a, t)?.0)
}

/// Exact flow-map gradient at `a` over a window of length `t`.
pub fn flow_map_gradient(a: Vec2, t: f64) -> Result<Mat2> {
    Ok(evaluate_raw(a, t)?.1)
}

fn evaluate_raw(a: Vec2, t: f64) -> Result<(Vec2, Mat2)> {
    let r0 = a.norm();
    if r0 == 0.0 {
        // stationary point; deformation follows its linearization
        return Ok((
            Vec2::zeros(),
            Mat2::new(t.exp(), 0.0, 0.0, (-t).exp()),
        ));
    }
    // frame change: rotate by the (angle = radius) transform
    let a_frame = rotation(-r0) * a;
    let base = base_solution(a_frame, t)?;
    let x_frame = Vec2::new(base.x1, base.x2);
    let r = x_frame.norm();

    // dA/da: differentiate A = R(-r0) a through r0 = |a|
    let j_a = Vec2::new(-a_frame.y, a_frame.x);
    let da_da = rotation(-r0) - j_a * (a.transpose() / r0);

    // chain through the decoupled frame solution
    let dx1_da = base.dx1_da1 * Vec2::new(da_da.m11, da_da.m12);
    let dx2_da = base.dx2_da2 * Vec2::new(da_da.m21, da_da.m22);

    // radius sensitivity and the rotation's contribution to the gradient:
    // x = R(r) X with r = |X| gives rows  dX1/da - X2 dr/da  and
    // dX2/da + X1 dr/da, rotated by R(r).
    let dr_da = (base.x1 * dx1_da + base.x2 * dx2_da) / r;
    let m = Mat2::new(
        dx1_da.x - base.x2 * dr_da.x,
        dx1_da.y - base.x2 * dr_da.y,
        dx2_da.x + base.x1 * dr_da.x,
        dx2_da.y + base.x1 * dr_da.y,
    );
    let grad = rotation(r) * m;
    let x = rotation(r) * x_frame;
    if !(x.x.is_finite() && x.y.is_finite()) || !grad.iter().all(|v| v.is_finite()) {
        return Err(FtleError::Numeric(
            "closed-form evaluation overflowed near the escape boundary".into(),
        ));
    }
    Ok((x, grad))
}

/// Exact FTLE over the window `0 -> t`; `t` may be negative.
pub fn ftle(a: Vec2, t: f64) -> Result<f64> {
    Ok(evaluate(a, t)?.phi)
}

/// Full closed-form evaluation: position, gradient, strain tensor, FTLE.
pub fn evaluate(a: Vec2, t: f64) -> Result<OracleResult> {
    if t == 0.0 {
        return Err(FtleError::InvalidArgument(
            "FTLE window must have nonzero length".into(),
        ));
    }
    let (x, gradient) = evaluate_raw(a, t)?;
    let cg = CgTensor::from_gradient(&gradient);
    let eigen = cg.eigen();
    let phi = ftle_from_cg(&cg, t.abs())?;
    Ok(OracleResult {
        x,
        gradient,
        cg,
        eigen,
        phi,
    })
}

/// Exact FTLE field on a grid. Nodes whose trajectory escapes inside the
/// window are flagged [`NodeFlag::Excluded`] and carry NaN.
pub fn ftle_field(grid: &GridSpec, t: f64) -> Result<FtleField> {
    if t == 0.0 {
        return Err(FtleError::InvalidArgument(
            "FTLE window must have nonzero length".into(),
        ));
    }
    let points = grid.positions();
    let values: Vec<(f64, NodeFlag)> = points
        .par_iter()
        .map(|p| match evaluate(*p, t) {
            Ok(r) => (r.phi, NodeFlag::Valid),
            Err(_) => (f64::NAN, NodeFlag::Excluded),
        })
        .collect();
    let (phi, flags) = values.into_iter().unzip();
    Ok(FtleField {
        grid: *grid,
        t0: 0.0,
        t1: t,
        phi,
        flags,
        provenance: FieldProvenance::Analytic,
        delta_a: 0.0,
        rtol: 0.0,
        atol: 0.0,
    })
}

/// Inputs of the exact perturbation formulas: a tangent written as
/// `e0 = sqrt(1-b^2) xi1 + b xi2` in the singular frame of a flow-map
/// gradient with singular values `lambda1 <= lambda2`, and a perturbation
/// `eps` of the alignment coefficient.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityInput {
    pub b: f64,
    pub eps: f64,
    /// Weak singular value of the gradient (NOT the CG eigenvalue).
    pub lambda1: f64,
    /// Strong singular value.
    pub lambda2: f64,
}

/// Classification magnitudes of the perturbed tangent, pre-logarithm.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityPrediction {
    /// ‖∇F e0'‖ for the perturbed tangent.
    pub e_mag: f64,
    /// ‖∇F n0'‖.
    pub n_mag: f64,
    /// Hyperbolic repulsion magnitude.
    pub rho: f64,
    /// Lagrangian shear magnitude (signed by the perturbed alignment).
    pub sigma: f64,
    /// Alignment regime at the unperturbed b.
    pub flag: AlignmentSensitivity,
}

/// Evaluate the exact (non-series) perturbation formulas.
pub fn sensitivity_exact(inp: &SensitivityInput) -> Result<SensitivityPrediction> {
    let SensitivityInput {
        b,
        eps,
        lambda1,
        lambda2,
    } = *inp;
    if !(lambda2 > 0.0) || lambda1 < 0.0 || lambda1 > lambda2 {
        return Err(FtleError::InvalidArgument(format!(
            "singular values must satisfy 0 <= lambda1 <= lambda2 with lambda2 > 0, got ({lambda1}, {lambda2})"
        )));
    }
    if b.abs() > 1.0 {
        return Err(FtleError::InvalidArgument(format!(
            "alignment coefficient must satisfy |b| <= 1, got {b}"
        )));
    }
    let beta = b + eps;
    if beta.abs() > 1.0 {
        return Err(FtleError::InvalidArgument(format!(
            "perturbed alignment b + eps = {beta} leaves [-1, 1]"
        )));
    }
    let delta = lambda1 / lambda2;
    let bsq = beta * beta;
    // group as a convex combination of delta^2 and 1 so neither radicand
    // cancels when beta approaches either endpoint
    let one_minus_bsq = 1.0 - bsq;
    let e_mag = lambda2 * (delta * delta * one_minus_bsq + bsq).sqrt();
    let n_mag = lambda2 * (one_minus_bsq + bsq * delta * delta).sqrt();
    if !(e_mag > 0.0) {
        return Err(FtleError::Numeric(
            "degenerate configuration: perturbed tangent is annihilated (lambda1 = 0, b + eps = 0)"
                .into(),
        ));
    }
    let rho = lambda1 * lambda2 / e_mag;
    let sigma = (lambda2 * lambda2 - lambda1 * lambda1) * beta * one_minus_bsq.sqrt() / e_mag;
    Ok(SensitivityPrediction {
        e_mag,
        n_mag,
        rho,
        sigma,
        flag: alignment_flag(b, delta, B_TOL, DELTA_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advect::{advect_batch, advect_with_gradient, IntegratorConfig};
    use crate::field::SwirlField;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_is_a_fixed_point_with_saddle_linearization() {
        for t in [0.5, 2.0, -1.0] {
            assert_eq!(flow_map(Vec2::zeros(), t).unwrap(), Vec2::zeros());
            let g = flow_map_gradient(Vec2::zeros(), t).unwrap();
            assert_relative_eq!(g.m11, t.exp(), max_relative = 1e-15);
            assert_relative_eq!(g.m22, (-t).exp(), max_relative = 1e-15);
            assert_eq!((g.m12, g.m21), (0.0, 0.0));
        }
    }

    #[test]
    fn zero_window_gradient_is_identity() {
        let g = flow_map_gradient(Vec2::new(0.3, -0.4), 0.0).unwrap();
        assert!((g - Mat2::identity()).norm() < 1e-14);
        let x = flow_map(Vec2::new(0.3, -0.4), 0.0).unwrap();
        assert!((x - Vec2::new(0.3, -0.4)).norm() < 1e-14);
    }

    #[test]
    fn frame_invariant_line_stays_invariant() {
        // initial conditions with |A1| = 1 keep X1 = +-1 for all time;
        // verify by mapping forward and undoing the frame rotation
        for (a2, t) in [(0.3, 1.0), (-0.6, 2.0), (0.9, 0.7)] {
            let a_frame = Vec2::new(1.0, a2);
            let r0 = a_frame.norm();
            let a = rotation(r0) * a_frame;
            let x = flow_map(a, t).unwrap();
            let back = rotation(-x.norm()) * x;
            assert_relative_eq!(back.x, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_numerical_integration_of_the_field() {
        // locks the frame-rotation sign: integrating the velocity field must
        // land on the closed form
        let field = SwirlField::new();
        let cfg = IntegratorConfig::with_tolerances(1e-11, 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            // draw in saddle coordinates and swirl into the observed frame:
            // such points are contained and never stop
            let base = Vec2::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let a = rotation(base.norm()) * base;
            let t = 2.0;
            let exact = flow_map(a, t).unwrap();
            let num = advect_batch(&field, &[a], 0.0, t, &cfg).unwrap();
            assert!(!num.status[0].is_frozen());
            assert!(
                (num.positions[0] - exact).norm() < 1e-7,
                "integration disagrees with closed form at {a:?}: {:?} vs {exact:?}",
                num.positions[0]
            );
        }
    }

    #[test]
    fn gradient_matches_advected_gradient_integration() {
        let field = SwirlField::new();
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-13);
        for a in [Vec2::new(0.4, 0.2), Vec2::new(-0.55, 0.5), Vec2::new(0.1, -0.75)] {
            let exact = flow_map_gradient(a, 2.0).unwrap();
            let num = advect_with_gradient(&field, &[a], 0.0, 2.0, &cfg).unwrap();
            let rel = (num.gradients[0] - exact).norm() / exact.norm();
            assert!(rel < 1e-6, "gradient mismatch at {a:?}: rel {rel:.2e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_of_flow_map() {
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 30 {
            let a = Vec2::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            if escapes_before(a, 2.0) {
                continue;
            }
            let g = flow_map_gradient(a, 2.0).unwrap();
            let fd = |da: Vec2| {
                let p = flow_map(a + da, 2.0).unwrap();
                let m = flow_map(a - da, 2.0).unwrap();
                (p - m) / (2.0 * h)
            };
            let c1 = fd(Vec2::new(h, 0.0));
            let c2 = fd(Vec2::new(0.0, h));
            let approx = Mat2::new(c1.x, c2.x, c1.y, c2.y);
            let rel = (approx - g).norm() / g.norm();
            assert!(rel < 1e-6, "FD mismatch at {a:?}: rel {rel:.2e}");
            checked += 1;
        }
    }

    #[test]
    fn escape_detection_brackets_the_critical_amplitude() {
        // for T = 2 the frame amplitude |A2| = (1 - e^{-2T})^{-1/2} separates
        // bounded windows from finite-time escape
        let critical = (1.0 - (-4.0f64).exp()).powf(-0.5);
        for (a2, escapes) in [
            (critical * 0.999, false),
            (critical * 1.001, true),
            (2.0, true),
            (0.5, false),
        ] {
            let a_frame = Vec2::new(0.2, a2);
            let a = rotation(a_frame.norm()) * a_frame;
            assert_eq!(escapes_before(a, 2.0), escapes, "at frame amplitude {a2}");
            assert_eq!(flow_map(a, 2.0).is_err(), escapes);
        }
    }

    #[test]
    fn backward_windows_escape_on_the_other_axis() {
        // |A1| > 1 trajectories reach infinity in backward time
        let a_frame = Vec2::new(1.5, 0.1);
        let a = rotation(a_frame.norm()) * a_frame;
        assert!(!escapes_before(a, 2.0));
        assert!(escapes_before(a, -2.0));
    }

    #[test]
    fn ftle_field_reproduces_known_structure() {
        let grid = GridSpec::from_rect(
            crate::field::Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            0.01,
        )
        .unwrap();
        let f = ftle_field(&grid, 2.0).unwrap();
        assert!(f.max_phi() > 2.0, "peak FTLE should exceed 2, got {}", f.max_phi());
        let negative = f
            .phi
            .iter()
            .zip(&f.flags)
            .filter(|(v, fl)| **fl == NodeFlag::Valid && **v < 0.0)
            .count();
        assert!(
            negative > f.grid.len() / 20,
            "a large region of negative FTLE is expected, got {negative} nodes"
        );
        let excluded = f.flags.iter().filter(|fl| **fl == NodeFlag::Excluded).count();
        assert!(
            excluded > 0 && excluded < f.grid.len() / 10,
            "escape region should exist but stay small, got {excluded}"
        );
        // fixed-point value from the linearization: lambda2 = e^{2T}
        let center = f.value(f.grid.nx / 2, f.grid.ny / 2);
        assert_relative_eq!(center, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sensitivity_limit_cases() {
        let strain = sensitivity_exact(&SensitivityInput {
            b: 0.0,
            eps: 0.0,
            lambda1: 0.4,
            lambda2: 5.0,
        })
        .unwrap();
        assert_relative_eq!(strain.e_mag, 0.4, max_relative = 1e-15);
        assert_relative_eq!(strain.rho, 5.0, max_relative = 1e-15);
        assert_eq!(strain.sigma, 0.0);

        let stretch = sensitivity_exact(&SensitivityInput {
            b: 1.0,
            eps: 0.0,
            lambda1: 0.4,
            lambda2: 5.0,
        })
        .unwrap();
        assert_relative_eq!(stretch.e_mag, 5.0, max_relative = 1e-15);
        assert_relative_eq!(stretch.n_mag, 0.4, max_relative = 1e-15);
        assert_eq!(stretch.flag, AlignmentSensitivity::StretchlineSensitive);
    }

    #[test]
    fn small_delta_amplifies_tangent_errors() {
        // delta = 0.01 with a tangent error of 0.1 moves the tangent
        // magnitude by an order of magnitude: the strain-aligned regime is
        // genuinely sensitive
        let p = sensitivity_exact(&SensitivityInput {
            b: 0.0,
            eps: 0.1,
            lambda1: 0.1,
            lambda2: 10.0,
        })
        .unwrap();
        assert_relative_eq!(
            p.e_mag,
            10.0 * (1e-4f64 + 0.01 * (1.0 - 1e-4)).sqrt(),
            max_relative = 1e-14
        );
        assert!(p.e_mag > 10.0 * 0.1 - 1e-12, "sensitivity blow-up expected");
        assert_eq!(p.flag, AlignmentSensitivity::StrainlineSensitive);
    }

    #[test]
    fn sensitivity_rejects_out_of_range_alignment() {
        assert!(sensitivity_exact(&SensitivityInput {
            b: 0.95,
            eps: 0.1,
            lambda1: 1.0,
            lambda2: 2.0,
        })
        .is_err());
    }

    #[test]
    fn sensitivity_matches_direct_classification() {
        // build a gradient from a prescribed singular structure, perturb the
        // tangent inside the singular frame, and compare the directly
        // computed metrics with the closed formulas
        use crate::classify::classify_point;
        let (c, s) = (0.6f64, 0.8f64);
        let xi1 = Vec2::new(c, s);
        let xi2 = Vec2::new(-s, c);
        let u_angle = 1.1f64;
        let u1 = Vec2::new(u_angle.cos(), u_angle.sin());
        let u2 = Vec2::new(-u_angle.sin(), u_angle.cos());
        for (l1, l2) in [(0.5, 2.0), (0.001, 8.0), (1.0, 1.5)] {
            let grad: Mat2 = l2 * u2 * xi2.transpose() + l1 * u1 * xi1.transpose();
            for b in [-0.7, 0.0, 0.3, 0.9] {
                for eps in [0.0, 0.05, -0.02] {
                    let beta: f64 = b + eps;
                    let e0 = (1.0 - beta * beta).sqrt() * xi1 + beta * xi2;
                    let direct = classify_point(&grad, e0);
                    let predicted = sensitivity_exact(&SensitivityInput {
                        b,
                        eps,
                        lambda1: l1,
                        lambda2: l2,
                    })
                    .unwrap();
                    assert_relative_eq!(
                        direct.e_l.exp(),
                        predicted.e_mag,
                        max_relative = 1e-12
                    );
                    assert_relative_eq!(
                        direct.n_l.exp(),
                        predicted.n_mag,
                        max_relative = 1e-12
                    );
                    assert_relative_eq!(direct.rho.abs(), predicted.rho.abs(), max_relative = 1e-12);
                    if predicted.sigma != 0.0 {
                        assert_relative_eq!(
                            direct.sigma.abs(),
                            predicted.sigma.abs(),
                            max_relative = 1e-11
                        );
                    }
                }
            }
        }
    }
}
