//! Advect a ridge polyline as a material line of the velocity field.

use super::{Ridge, RidgeState};
use crate::advect::{advect_batch, IntegratorConfig};
use crate::field::VelocityField;
use crate::{Result, Vec2};

/// Carry every ridge point from `t0` to `t1` in one shared batch (all points
/// see identical step sequences). Points that leave the tracked region are
/// frozen where they stopped and flagged; FTLE values are kept from the
/// source ridge, while arc coordinates, tangents, and normals are rebuilt
/// from the advected polyline.
pub fn advect_ridge(
    ridge: &Ridge,
    field: &dyn VelocityField,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Ridge> {
    let seeds: Vec<Vec2> = ridge.positions();
    let result = advect_batch(field, &seeds, t0, t1, cfg)?;

    let mut advected = ridge.clone();
    for (i, point) in advected.points.iter_mut().enumerate() {
        point.position = result.positions[i];
        point.frozen = result.status[i].is_frozen();
    }
    advected.rebuild_geometry();
    advected.state = RidgeState::Advected;
    advected.from_unrefined = ridge.state == RidgeState::Tracked;
    advected.schedule = ridge.schedule;
    Ok(advected)
}

#[cfg(test)]
mod tests {
    use super::super::StopReason;
    use super::*;
    use crate::field::{LinearField, Rect};

    fn unit_box() -> Rect {
        Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    fn line_ridge() -> Ridge {
        let positions: Vec<Vec2> = (0..9)
            .map(|i| Vec2::new(-0.4 + 0.1 * i as f64, 0.0))
            .collect();
        Ridge::from_positions(
            positions,
            (0..9).map(|i| 1.0 + 0.1 * i as f64).collect(),
            RidgeState::Refined,
            Vec2::zeros(),
            StopReason::DomainExit,
            StopReason::DomainExit,
        )
    }

    #[test]
    fn saddle_flow_stretches_the_line() {
        // dx/dt = (x, -y): the x-axis is invariant and stretches by e^t
        let field = LinearField::saddle(unit_box());
        let src = line_ridge();
        let adv = advect_ridge(&src, &field, 0.0, 0.5, &IntegratorConfig::default()).unwrap();
        assert_eq!(adv.state, RidgeState::Advected);
        assert!(!adv.from_unrefined);
        let factor = 0.5f64.exp();
        for (a, s) in adv.points.iter().zip(&src.points) {
            assert!((a.position.x - s.position.x * factor).abs() < 1e-7);
            assert!(a.position.y.abs() < 1e-12);
            assert_eq!(a.phi, s.phi, "FTLE values ride along unchanged");
            assert!(!a.frozen);
        }
        // arc coordinates are renormalized over the stretched line
        assert!((adv.length() - src.length() * factor).abs() < 1e-6);
        assert_eq!(adv.points[0].s, 0.0);
        assert_eq!(adv.points[8].s, 1.0);
    }

    #[test]
    fn rotation_rigidly_turns_tangents() {
        let field = LinearField::rotation(1.0, unit_box());
        let src = line_ridge();
        let half_turn = std::f64::consts::FRAC_PI_2;
        let adv = advect_ridge(&src, &field, 0.0, half_turn, &IntegratorConfig::default()).unwrap();
        for (a, s) in adv.points.iter().zip(&src.points) {
            // (x, 0) rotates onto (0, x)
            assert!((a.position.y - s.position.x).abs() < 1e-7);
            assert!(a.position.x.abs() < 1e-7);
            assert!((a.tangent - Vec2::new(0.0, 1.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn tracked_sources_are_flagged() {
        let field = LinearField::zero(unit_box());
        let mut src = line_ridge();
        src.state = RidgeState::Tracked;
        let adv = advect_ridge(&src, &field, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(adv.from_unrefined);
        for (a, s) in adv.points.iter().zip(&src.points) {
            assert_eq!(a.position, s.position);
        }
    }
}
