//! Deformation classification of material lines.
//!
//! Given a flow-map gradient and the line's unit tangent `e0`, the advected
//! images of the tangent and of the normal `n0` (tangent rotated +90°)
//! separate the deformation into interpretable pieces: logarithmic growth of
//! the tangent and normal, and the split of the advected normal into
//! hyperbolic repulsion (component along the advected normal direction) and
//! Lagrangian shear (component along the advected tangent).

use rayon::prelude::*;

use crate::advect::IntegratorConfig;
use crate::field::VelocityField;
use crate::flowmap::{cluster_gradient, CgTensor, NodeGradient};
use crate::ridge::Ridge;
use crate::{perp, FtleError, Mat2, Result, Vec2};

/// Default alignment tolerance: |b| below this counts as strain-aligned,
/// above 1 minus this as stretch-aligned.
pub const B_TOL: f64 = 0.1;
/// Default eigenvalue-ratio tolerance below which strain-aligned tangents
/// make the shear/repulsion metrics error-sensitive.
pub const DELTA_TOL: f64 = 0.05;

/// Deformation metrics of one material point.
#[derive(Debug, Clone, Copy)]
pub struct PointClassification {
    /// ln of the advected-tangent magnitude ‖∇F e0‖.
    pub e_l: f64,
    /// ln of the advected-normal magnitude ‖∇F n0‖.
    pub n_l: f64,
    /// Hyperbolic repulsion: component of ∇F n0 along the advected normal.
    pub rho: f64,
    /// Lagrangian shear: component of ∇F n0 along the advected tangent.
    pub sigma: f64,
    /// ln|rho|; -inf when rho = 0.
    pub rho_l: f64,
    /// ln|sigma|; -inf when sigma = 0 (see `zero_shear`).
    pub sigma_l: f64,
    /// Sign of rho (+1 repulsion, -1 attraction, 0 exactly none).
    pub rho_sign: i8,
    /// Sign of sigma (shear handedness; 0 exactly none).
    pub sigma_sign: i8,
    /// Advected tangent direction (unit).
    pub e_t: Vec2,
    /// Advected normal direction: e_t rotated +90° (unit).
    pub n_t: Vec2,
    /// sigma is exactly zero; sigma_l is a -inf sentinel, not data.
    pub zero_shear: bool,
}

/// Classify the deformation of a material point whose local line direction
/// is the unit tangent `e0`.
pub fn classify_point(gradient: &Mat2, e0: Vec2) -> PointClassification {
    debug_assert!(
        (e0.norm() - 1.0).abs() < 1e-9,
        "tangent must be unit length"
    );
    let n0 = perp(e0);
    let fe = gradient * e0;
    let fn0 = gradient * n0;
    let e_mag = fe.norm();
    let n_mag = fn0.norm();
    let e_t = if e_mag > 0.0 { fe / e_mag } else { e0 };
    let n_t = perp(e_t);
    let rho = n_t.dot(&fn0);
    let sigma = e_t.dot(&fn0);
    let sign_of = |v: f64| {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    PointClassification {
        e_l: e_mag.ln(),
        n_l: n_mag.ln(),
        rho,
        sigma,
        rho_l: rho.abs().ln(),
        sigma_l: sigma.abs().ln(),
        rho_sign: sign_of(rho),
        sigma_sign: sign_of(sigma),
        e_t,
        n_t,
        zero_shear: sigma == 0.0,
    }
}

/// Eigen-alignment regime of a tangent direction relative to the local
/// Cauchy-Green structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentSensitivity {
    /// Metrics are stable under small tangent errors.
    Robust,
    /// Tangent near the weak principal direction with strongly separated
    /// eigenvalues: shear/repulsion magnitudes amplify tangent errors.
    StrainlineSensitive,
    /// Tangent near the strong principal direction.
    StretchlineSensitive,
    /// Eigenvalues (numerically) equal: alignment undefined but harmless.
    Isotropic,
}

impl AlignmentSensitivity {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlignmentSensitivity::Robust => "robust",
            AlignmentSensitivity::StrainlineSensitive => "strainline-sensitive",
            AlignmentSensitivity::StretchlineSensitive => "stretchline-sensitive",
            AlignmentSensitivity::Isotropic => "isotropic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(AlignmentSensitivity::Robust),
            "strainline-sensitive" => Ok(AlignmentSensitivity::StrainlineSensitive),
            "stretchline-sensitive" => Ok(AlignmentSensitivity::StretchlineSensitive),
            "isotropic" => Ok(AlignmentSensitivity::Isotropic),
            other => Err(FtleError::InvalidArgument(format!(
                "unknown sensitivity flag '{other}'"
            ))),
        }
    }
}

/// Regime decision from the alignment coefficient and singular-value ratio.
pub fn alignment_flag(b: f64, delta: f64, b_tol: f64, delta_tol: f64) -> AlignmentSensitivity {
    if b.abs() > 1.0 - b_tol {
        AlignmentSensitivity::StretchlineSensitive
    } else if b.abs() < b_tol && delta < delta_tol {
        AlignmentSensitivity::StrainlineSensitive
    } else {
        AlignmentSensitivity::Robust
    }
}

/// Alignment of a tangent with the CG eigenstructure.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentDiagnostic {
    /// b = <e0, xi2>: how much of the tangent lies along the strong
    /// principal direction.
    pub b: f64,
    /// Singular-value ratio of the flow-map gradient (weak/strong, in
    /// [0, 1]); small delta means strong hyperbolicity.
    pub delta: f64,
    pub flag: AlignmentSensitivity,
}

pub fn alignment_diagnostic(
    cg: &CgTensor,
    e0: Vec2,
    b_tol: f64,
    delta_tol: f64,
) -> AlignmentDiagnostic {
    let eig = cg.eigen();
    let (s1, s2) = eig.singular_values();
    if s2 <= 0.0 || s2 - s1 <= 1e-12 * s2 {
        let b = e0.dot(&eig.xi2).clamp(-1.0, 1.0);
        return AlignmentDiagnostic {
            b,
            delta: 1.0,
            flag: AlignmentSensitivity::Isotropic,
        };
    }
    let b = e0.dot(&eig.xi2).clamp(-1.0, 1.0);
    let delta = s1 / s2;
    AlignmentDiagnostic {
        b,
        delta,
        flag: alignment_flag(b, delta, b_tol, delta_tol),
    }
}

/// Tolerances controlling how ridge-point classifications are flagged.
#[derive(Debug, Clone, Copy)]
pub struct ClassifySettings {
    pub delta_a: f64,
    pub b_tol: f64,
    pub delta_tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            delta_a: 1e-6,
            b_tol: B_TOL,
            delta_tol: DELTA_TOL,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Classification of one ridge point, with its alignment diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub s: f64,
    pub position: Vec2,
    pub phi: f64,
    pub metrics: PointClassification,
    pub b: f64,
    pub delta: f64,
    pub flag: AlignmentSensitivity,
    /// False when the point's gradient cluster stopped before the window
    /// ended (fully or in part), so no full-window gradient exists; such
    /// points carry placeholder metrics and are excluded from statistics.
    pub valid: bool,
}

/// Per-point deformation profile of one ridge.
#[derive(Debug, Clone)]
pub struct ClassificationProfile {
    pub points: Vec<ProfilePoint>,
    pub t0: f64,
    pub t1: f64,
    pub settings_delta_a: f64,
    pub b_tol: f64,
    pub delta_tol: f64,
}

impl ClassificationProfile {
    pub fn valid_points(&self) -> impl Iterator<Item = &ProfilePoint> {
        self.points.iter().filter(|p| p.valid)
    }
}

/// Classify every point of a ridge over the window `t0 -> t1`, obtaining
/// flow-map gradients by cluster finite differences around each point.
pub fn classify_ridge(
    ridge: &Ridge,
    field: &dyn VelocityField,
    t0: f64,
    t1: f64,
    settings: &ClassifySettings,
) -> Result<ClassificationProfile> {
    let positions: Vec<Vec2> = ridge.points.iter().map(|p| p.position).collect();
    let gradients = cluster_gradient(
        field,
        &positions,
        settings.delta_a,
        t0,
        t1,
        &settings.integrator,
    )?;
    let points: Vec<ProfilePoint> = ridge
        .points
        .par_iter()
        .zip(gradients.par_iter())
        .map(|(rp, grad)| match grad {
            // Only full-window gradients classify the window itself; a
            // stopped or straddling cluster describes a shorter interval.
            NodeGradient::Full(g) => {
                let metrics = classify_point(g, rp.tangent);
                let diag = alignment_diagnostic(
                    &CgTensor::from_gradient(g),
                    rp.tangent,
                    settings.b_tol,
                    settings.delta_tol,
                );
                ProfilePoint {
                    s: rp.s,
                    position: rp.position,
                    phi: rp.phi,
                    metrics,
                    b: diag.b,
                    delta: diag.delta,
                    flag: diag.flag,
                    valid: true,
                }
            }
            _ => ProfilePoint {
                s: rp.s,
                position: rp.position,
                phi: rp.phi,
                metrics: classify_point(&Mat2::identity(), rp.tangent),
                b: 0.0,
                delta: 1.0,
                flag: AlignmentSensitivity::Isotropic,
                valid: false,
            },
        })
        .collect();
    Ok(ClassificationProfile {
        points,
        t0,
        t1,
        settings_delta_a: settings.delta_a,
        b_tol: settings.b_tol,
        delta_tol: settings.delta_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_saddle_strainline_metrics() {
        let g = Mat2::new(1f64.exp(), 0.0, 0.0, (-1f64).exp());
        let c = classify_point(&g, Vec2::new(0.0, 1.0));
        assert_relative_eq!(c.e_l, -1.0, epsilon = 1e-14);
        assert_relative_eq!(c.n_l, 1.0, epsilon = 1e-14);
        // n0 = perp((0,1)) = (-1,0); F n0 = (-e, 0); e_t = (0,-1) wait:
        // F e0 = (0, 1/e) -> e_t = (0,1); n_t = (-1,0); rho = <n_t,Fn0> = e
        assert_relative_eq!(c.rho, 1f64.exp(), epsilon = 1e-14);
        assert_relative_eq!(c.rho_l, 1.0, epsilon = 1e-14);
        assert!(c.zero_shear);
        assert!(c.sigma_l == f64::NEG_INFINITY);
        assert_eq!(c.sigma_sign, 0);
    }

    #[test]
    fn simple_shear_metrics() {
        let g = Mat2::new(1.0, 2.0, 0.0, 1.0);
        let c = classify_point(&g, Vec2::new(1.0, 0.0));
        assert_relative_eq!(c.e_l, 0.0, epsilon = 1e-14);
        assert_relative_eq!(c.n_l, 5f64.sqrt().ln(), epsilon = 1e-14);
        assert_relative_eq!(c.rho, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.sigma, 2.0, epsilon = 1e-14);
        assert_relative_eq!(c.sigma_l, 2f64.ln(), epsilon = 1e-14);
        assert!(!c.zero_shear);
    }

    #[test]
    fn rotations_are_isometries_for_any_tangent() {
        for theta in [0.3, -1.2, 2.9] {
            let g = crate::rotation(theta);
            for e0 in [
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, -1.0),
                Vec2::new(0.6, 0.8),
            ] {
                let c = classify_point(&g, e0);
                assert!(c.e_l.abs() < 1e-14);
                assert!(c.n_l.abs() < 1e-14);
                assert_relative_eq!(c.rho, 1.0, epsilon = 1e-14);
                assert!(c.sigma.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_advected_normal() {
        let cases = [
            Mat2::new(1.3, 0.4, -0.2, 0.9),
            Mat2::new(3.0, 1.0, 0.5, 0.4),
            Mat2::new(-0.7, 2.0, 1.1, 0.6),
        ];
        for g in cases {
            for angle in [0.0f64, 0.7, 2.1, 4.4] {
                let e0 = Vec2::new(angle.cos(), angle.sin());
                let c = classify_point(&g, e0);
                let rebuilt = c.rho * c.n_t + c.sigma * c.e_t;
                let target = g * perp(e0);
                assert!(
                    (rebuilt - target).norm() <= 1e-10 * g.norm(),
                    "decomposition residual too large"
                );
                let identity = (c.rho * c.rho + c.sigma * c.sigma).sqrt();
                assert_relative_eq!(identity, target.norm(), max_relative = 1e-12);
                // log-domain consequence of the identity
                assert!(c.rho_l <= c.n_l + 1e-12 && c.sigma_l <= c.n_l + 1e-12);
            }
        }
    }

    #[test]
    fn alignment_examples_and_flags() {
        let cg = CgTensor {
            c11: 1.0,
            c12: 0.0,
            c22: 4.0,
        };
        let d = alignment_diagnostic(&cg, Vec2::new(1.0, 0.0), B_TOL, DELTA_TOL);
        assert_relative_eq!(d.b, 0.0, epsilon = 1e-14);
        assert_relative_eq!(d.delta, 0.5, epsilon = 1e-14);
        assert_eq!(d.flag, AlignmentSensitivity::Robust);

        let cg = CgTensor {
            c11: 1e-4,
            c12: 0.0,
            c22: 1e4,
        };
        let d = alignment_diagnostic(&cg, Vec2::new(1.0, 0.0), B_TOL, DELTA_TOL);
        assert_relative_eq!(d.delta, 1e-4, max_relative = 1e-12);
        assert_eq!(d.flag, AlignmentSensitivity::StrainlineSensitive);

        // tangent along the strong direction
        let d = alignment_diagnostic(&cg, Vec2::new(0.0, 1.0), B_TOL, DELTA_TOL);
        assert!(d.b.abs() > 1.0 - 1e-12);
        assert_eq!(d.flag, AlignmentSensitivity::StretchlineSensitive);

        let iso = CgTensor {
            c11: 2.0,
            c12: 0.0,
            c22: 2.0,
        };
        let d = alignment_diagnostic(&iso, Vec2::new(0.6, 0.8), B_TOL, DELTA_TOL);
        assert_eq!(d.flag, AlignmentSensitivity::Isotropic);
    }

    #[test]
    fn perturbation_robust_away_from_alignment() {
        // build gradients from prescribed SVD structure across the robust
        // band and check metric stability under tangent perturbation
        for b in [0.2f64, 0.5, 0.8] {
            for delta in [0.1, 0.4, 0.9] {
                let l2 = 3.0;
                let l1 = delta * l2;
                let xi1 = Vec2::new(1.0, 0.0);
                let xi2 = Vec2::new(0.0, 1.0);
                let g: Mat2 = l2 * xi2 * xi2.transpose() + l1 * xi1 * xi1.transpose();
                let e0 = Vec2::new((1.0 - b * b).sqrt(), b);
                let eps = 1e-3;
                let rotated = crate::rotation(eps) * e0;
                let base = classify_point(&g, e0);
                let moved = classify_point(&g, rotated);
                for (x, y) in [
                    (base.e_l, moved.e_l),
                    (base.n_l, moved.n_l),
                    (base.rho_l, moved.rho_l),
                    (base.sigma_l, moved.sigma_l),
                ] {
                    assert!(
                        (x - y).abs() <= 10.0 * eps,
                        "metric moved too much at b={b}, delta={delta}: {x} vs {y}"
                    );
                }
            }
        }
    }
}
