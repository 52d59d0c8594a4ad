//! Crest walking: grow ridge polylines outward from seed points.

use super::{FtleSampler, Ridge, RidgeState, Seed, StopReason, TrackerConfig};
use super::{find_seeds, InitialDirection};
use crate::flowmap::FtleField;
use crate::{perp, Result, Vec2};

/// Track every ridge of `field`: detect seeds, walk each one in both
/// directions, and collect the resulting polylines. Seeds landing within one
/// step of an already-tracked ridge are taken as re-detections and skipped.
/// Ridges with fewer than three points are dropped.
pub fn track_ridges(field: &FtleField, cfg: &TrackerConfig) -> Result<Vec<Ridge>> {
    let seeds = find_seeds(field, cfg)?;
    let sampler = FtleSampler::new(field);
    let mut ridges: Vec<Ridge> = Vec::new();
    for seed in &seeds {
        let duplicate = ridges
            .iter()
            .any(|r| r.min_distance_to(seed.position) < cfg.step);
        if duplicate {
            continue;
        }
        if let Some(ridge) = track_from_seed(&sampler, seed, cfg, &ridges) {
            ridges.push(ridge);
        }
    }
    Ok(ridges)
}

/// Walk a single seed in both directions and concatenate the halves.
/// Returns None when the combined polyline has fewer than three points.
pub fn track_from_seed(
    sampler: &FtleSampler,
    seed: &Seed,
    cfg: &TrackerConfig,
    existing: &[Ridge],
) -> Option<Ridge> {
    let dir0 = initial_direction(sampler, seed, cfg);

    let prior = [seed.position];
    let budget = cfg.max_points.saturating_sub(1);
    let fwd = walk(sampler, seed.position, dir0, cfg, existing, &prior, budget);

    let mut prior: Vec<Vec2> = vec![seed.position];
    prior.extend_from_slice(&fwd.points);
    let budget = budget.saturating_sub(fwd.points.len());
    let bwd = walk(sampler, seed.position, -dir0, cfg, existing, &prior, budget);

    let total = bwd.points.len() + 1 + fwd.points.len();
    if total < 3 {
        return None;
    }
    let mut positions = Vec::with_capacity(total);
    let mut phis = Vec::with_capacity(total);
    for (p, v) in bwd.points.iter().zip(&bwd.phis).rev() {
        positions.push(*p);
        phis.push(*v);
    }
    positions.push(seed.position);
    phis.push(seed.phi);
    positions.extend_from_slice(&fwd.points);
    phis.extend_from_slice(&fwd.phis);

    Some(Ridge::from_positions(
        positions,
        phis,
        RidgeState::Tracked,
        seed.position,
        bwd.reason,
        fwd.reason,
    ))
}

/// First step direction at a seed, from the FTLE gradient on the grid.
/// The detection scan runs transversely across the ridge, so a gradient that
/// genuinely points back toward the crest is dominated by its component along
/// the scan line. When the gradient vanishes (a perfectly flat crest) or is
/// dominated by the perpendicular component (the seed sits at an along-ridge
/// extremum, where the residual gradient is tail noise pointing along the
/// crest), the scan line is the only trustworthy orientation; ridges cross
/// their scan line, so the fallback steps perpendicular to it.
fn initial_direction(sampler: &FtleSampler, seed: &Seed, cfg: &TrackerConfig) -> Vec2 {
    let g = sampler.grad_at_nearest_node(seed.position);
    let scale = seed.phi.abs().max(1.0);
    let significant =
        g.x.is_finite() && g.y.is_finite() && g.norm() * cfg.probe > 1e-9 * scale;
    if significant && g.dot(&seed.scan_dir).abs() >= g.dot(&perp(seed.scan_dir)).abs() {
        let unit = g / g.norm();
        match cfg.initial_direction {
            InitialDirection::Gradient => unit,
            InitialDirection::GradientNormal => perp(unit),
        }
    } else {
        perp(seed.scan_dir)
    }
}

struct Walk {
    points: Vec<Vec2>,
    phis: Vec<f64>,
    reason: StopReason,
}

fn walk(
    sampler: &FtleSampler,
    start: Vec2,
    dir0: Vec2,
    cfg: &TrackerConfig,
    existing: &[Ridge],
    prior: &[Vec2],
    budget: usize,
) -> Walk {
    let rect = sampler.field().grid.rect();
    let mut points: Vec<Vec2> = Vec::new();
    let mut phis: Vec<f64> = Vec::new();
    let mut dir = dir0;
    let mut prev = start;
    let mut clamped_last = false;

    let reason = loop {
        if points.len() >= budget {
            break StopReason::MaxPoints;
        }
        let center = prev + cfg.step * dir;
        if !rect.contains(center) {
            break StopReason::DomainExit;
        }
        let m = perp(dir);
        let f0 = sampler.phi(center);
        let fm = sampler.phi(center - cfg.probe * m);
        let fp = sampler.phi(center + cfg.probe * m);
        if !(f0.is_finite() && fm.is_finite() && fp.is_finite()) {
            break StopReason::DomainExit;
        }
        let curvature = fm - 2.0 * f0 + fp;
        if curvature >= 0.0 {
            break StopReason::NoMaximum;
        }
        let vertex = cfg.probe * (fm - fp) / (2.0 * curvature);
        let hit_clamp = vertex.abs() > cfg.probe;
        if hit_clamp && clamped_last {
            break StopReason::NoMaximum;
        }
        clamped_last = hit_clamp;
        let p = center + vertex.clamp(-cfg.probe, cfg.probe) * m;
        if !rect.contains(p) {
            break StopReason::DomainExit;
        }
        let phi = sampler.phi(p);
        if !phi.is_finite() {
            break StopReason::DomainExit;
        }
        if phi < cfg.stop_threshold {
            break StopReason::BelowThreshold;
        }
        let hits_endpoint = existing.iter().any(|r| {
            r.points
                .first()
                .zip(r.points.last())
                .is_some_and(|(a, b)| {
                    (a.position - p).norm() < cfg.step || (b.position - p).norm() < cfg.step
                })
        });
        if hits_endpoint {
            break StopReason::RidgeCollision;
        }
        // closing in on this ridge's earlier points means the walk has looped;
        // the most recent points are always nearby and don't count
        let own_settled = points.len().saturating_sub(3);
        let loops = prior
            .iter()
            .chain(points[..own_settled].iter())
            .any(|q| (q - p).norm() < 0.5 * cfg.step);
        if loops {
            break StopReason::RidgeCollision;
        }
        dir = (p - prev) / (p - prev).norm();
        prev = p;
        points.push(p);
        phis.push(phi);
    };
    Walk {
        points,
        phis,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{flat_ridge, synthetic_field};
    use super::*;

    #[test]
    fn flat_crest_is_tracked_end_to_end() {
        let field = flat_ridge(0.05);
        let cfg = TrackerConfig::for_field(&field);
        let ridges = track_ridges(&field, &cfg).unwrap();
        assert_eq!(ridges.len(), 1, "later seeds re-detect the same ridge");
        let r = &ridges[0];
        assert!(r.points.len() >= 15);
        let xs: Vec<f64> = r.points.iter().map(|p| p.position.x).collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= -0.99 && hi >= 0.99, "spans the domain: [{lo}, {hi}]");
        assert_eq!(r.stop_start, StopReason::DomainExit);
        assert_eq!(r.stop_end, StopReason::DomainExit);
        for p in &r.points {
            assert!(p.position.y.abs() < 1e-9, "stays on the crest");
            assert!((p.phi - 2.0).abs() < 1e-9);
            assert!(p.tangent.y.abs() < 1e-9, "tangent aligned with the crest");
        }
        assert!(r.max_spacing() <= 2.0 * cfg.step + 1e-12);
    }

    #[test]
    fn tilted_narrow_ridge_is_followed() {
        let field = synthetic_field(0.05, |p| {
            let u = (p.y - 0.3 * p.x) / 0.2;
            2.0 * (-u * u).exp()
        });
        let cfg = TrackerConfig::for_field(&field);
        let ridges = track_ridges(&field, &cfg).unwrap();
        assert_eq!(ridges.len(), 1);
        let r = &ridges[0];
        for p in &r.points {
            assert!(
                (p.position.y - 0.3 * p.position.x).abs() < 0.02,
                "point {:?} strays from the crest",
                p.position
            );
        }
        assert!(r.length() > 1.5);
        assert!(r.max_spacing() <= 2.0 * cfg.step + 1e-12);
    }

    #[test]
    fn walks_stop_below_the_threshold() {
        // two collinear crest segments joined by a deep saddle
        let field = synthetic_field(0.05, |p| {
            let a = (-((p.x - 0.5) / 0.25) * ((p.x - 0.5) / 0.25)).exp()
                + (-((p.x + 0.5) / 0.25) * ((p.x + 0.5) / 0.25)).exp();
            2.0 * a * (-(p.y / 0.1) * (p.y / 0.1)).exp()
        });
        let cfg = TrackerConfig::for_field(&field);
        let ridges = track_ridges(&field, &cfg).unwrap();
        assert_eq!(ridges.len(), 2, "one ridge per bump");
        for r in &ridges {
            assert_eq!(r.stop_start, StopReason::BelowThreshold);
            assert_eq!(r.stop_end, StopReason::BelowThreshold);
            for p in &r.points {
                assert!(p.phi >= cfg.stop_threshold);
            }
        }
        let hi_x: Vec<f64> = ridges[1].points.iter().map(|p| p.position.x).collect();
        assert!(hi_x.iter().all(|&x| x > 0.0));
        assert!(ridges[0].points.iter().all(|p| p.position.x < 0.0));
    }

    #[test]
    fn flat_plateau_stops_the_walk() {
        // crest flattens into a constant plateau for x >= 0.5, where the
        // transverse parabola degenerates
        let field = synthetic_field(0.05, |p| {
            let t = ((p.x - 0.3) / 0.2).clamp(0.0, 1.0);
            let w = 1.0 - t * t * (3.0 - 2.0 * t);
            2.0 * (-p.y * p.y * w).exp()
        });
        let cfg = TrackerConfig::for_field(&field);
        let ridges = track_ridges(&field, &cfg).unwrap();
        assert_eq!(ridges.len(), 1);
        let r = &ridges[0];
        assert!(
            r.stop_start == StopReason::NoMaximum || r.stop_end == StopReason::NoMaximum,
            "the plateau end should report a degenerate maximum, got {:?}/{:?}",
            r.stop_start,
            r.stop_end
        );
    }

    #[test]
    fn point_budget_is_respected() {
        let field = flat_ridge(0.05);
        let mut cfg = TrackerConfig::for_field(&field);
        cfg.max_points = 8;
        let ridges = track_ridges(&field, &cfg).unwrap();
        let r = &ridges[0];
        assert_eq!(r.points.len(), 8);
        assert!(
            r.stop_start == StopReason::MaxPoints || r.stop_end == StopReason::MaxPoints
        );
    }

    #[test]
    fn walk_stops_at_another_ridges_endpoint() {
        let field = flat_ridge(0.05);
        let cfg = TrackerConfig::for_field(&field);
        let sampler = FtleSampler::new(&field);
        // a stub ridge whose endpoint sits on the crest at x = 0.35
        let stub = Ridge::from_positions(
            vec![
                Vec2::new(0.35, -0.2),
                Vec2::new(0.35, -0.1),
                Vec2::new(0.35, 0.0),
            ],
            vec![1.0; 3],
            RidgeState::Tracked,
            Vec2::new(0.35, -0.2),
            StopReason::DomainExit,
            StopReason::DomainExit,
        );
        let seed = Seed {
            position: Vec2::new(0.0, 0.0),
            phi: 2.0,
            scan_dir: Vec2::new(0.0, 1.0),
            curvature: -0.1,
        };
        let r = track_from_seed(&sampler, &seed, &cfg, std::slice::from_ref(&stub)).unwrap();
        assert!(
            r.stop_start == StopReason::RidgeCollision
                || r.stop_end == StopReason::RidgeCollision
        );
        for p in &r.points {
            assert!(
                p.position.x < 0.35 - cfg.step + 1e-12,
                "walk kept its distance from the stub endpoint"
            );
        }
    }

    #[test]
    fn closed_ridge_detects_its_own_loop() {
        let field = synthetic_field(0.05, |p| {
            let u = (p.norm() - 0.55) / 0.15;
            2.0 * (-u * u).exp()
        });
        let cfg = TrackerConfig::for_field(&field);
        let ridges = track_ridges(&field, &cfg).unwrap();
        assert_eq!(ridges.len(), 1, "the ring is one ridge");
        let r = &ridges[0];
        assert!(
            r.stop_start == StopReason::RidgeCollision
                || r.stop_end == StopReason::RidgeCollision,
            "loop closure reports a collision, got {:?}/{:?}",
            r.stop_start,
            r.stop_end
        );
        assert!(r.points.len() >= 30, "covers most of the circle");
        for p in &r.points {
            assert!((p.position.norm() - 0.55).abs() < 0.02);
        }
        assert!(r.length() > 0.8 * std::f64::consts::TAU * 0.55);
    }
}
