//! Seed detection: scan a coarse line grid for transverse FTLE maxima.

use std::collections::BTreeMap;

use super::{FtleSampler, TrackerConfig};
use crate::flowmap::FtleField;
use crate::{Result, Vec2};

/// A candidate ridge crossing found on a scan line.
#[derive(Debug, Clone, Copy)]
pub struct Seed {
    pub position: Vec2,
    pub phi: f64,
    /// Direction of the scan line the seed was found on; used as a fallback
    /// orientation when the FTLE gradient vanishes at the seed.
    pub scan_dir: Vec2,
    /// Second difference of the field along the scan line at the detection
    /// (negative at a maximum). A ridge falls off steeply across its crest
    /// and gently along it, so a sharper detection means a more transverse
    /// crossing.
    pub curvature: f64,
}

/// Find seeds on horizontal and vertical lines spaced `seed_spacing` apart.
///
/// Lines pass through grid nodes, so scanning reduces to the stored node
/// values. A strict local maximum along a line that exceeds the seed
/// threshold is sharpened to sub-cell accuracy with a parabola through the
/// three nodes around it. When several lines detect the same crossing, only
/// one seed per grid cell is kept: the one whose scan line cut the crest
/// most steeply (most negative curvature), since that scan runs transversely
/// while a scan along the crest sees only its gentle lengthwise profile.
/// Seeds are returned sorted by position (x, then y).
pub fn find_seeds(field: &FtleField, cfg: &TrackerConfig) -> Result<Vec<Seed>> {
    cfg.validate()?;
    let grid = &field.grid;
    let sampler = FtleSampler::new(field);
    let pitch = ((cfg.seed_spacing / grid.dx).round() as usize).max(1);

    let value = |i: usize, j: usize| field.phi[grid.index(i, j)];
    // cell-indexed dedup buckets; BTreeMap keeps the iteration deterministic
    let mut best: BTreeMap<(i64, i64), Seed> = BTreeMap::new();
    let mut push = |seed: Seed| {
        let key = (
            ((seed.position.x - grid.origin.x) / grid.dx).floor() as i64,
            ((seed.position.y - grid.origin.y) / grid.dx).floor() as i64,
        );
        match best.get_mut(&key) {
            Some(existing)
                if seed.curvature < existing.curvature
                    || (seed.curvature == existing.curvature && seed.phi > existing.phi) =>
            {
                *existing = seed
            }
            Some(_) => {}
            None => {
                best.insert(key, seed);
            }
        }
    };

    // vertical lines: fixed i, scan along y
    for i in (0..grid.nx).step_by(pitch) {
        for j in 1..grid.ny - 1 {
            let (lo, mid, hi) = (value(i, j - 1), value(i, j), value(i, j + 1));
            if mid > lo && mid > hi && mid > cfg.seed_threshold {
                let node = grid.node(i, j);
                let offset = parabola_offset(lo, mid, hi, grid.dx);
                let position = node + Vec2::new(0.0, offset);
                let phi = sampler.phi(position);
                if phi.is_finite() {
                    push(Seed {
                        position,
                        phi,
                        scan_dir: Vec2::new(0.0, 1.0),
                        curvature: lo - 2.0 * mid + hi,
                    });
                }
            }
        }
    }
    // horizontal lines: fixed j, scan along x
    for j in (0..grid.ny).step_by(pitch) {
        for i in 1..grid.nx - 1 {
            let (lo, mid, hi) = (value(i - 1, j), value(i, j), value(i + 1, j));
            if mid > lo && mid > hi && mid > cfg.seed_threshold {
                let node = grid.node(i, j);
                let offset = parabola_offset(lo, mid, hi, grid.dx);
                let position = node + Vec2::new(offset, 0.0);
                let phi = sampler.phi(position);
                if phi.is_finite() {
                    push(Seed {
                        position,
                        phi,
                        scan_dir: Vec2::new(1.0, 0.0),
                        curvature: lo - 2.0 * mid + hi,
                    });
                }
            }
        }
    }

    let mut seeds: Vec<Seed> = best.into_values().collect();
    seeds.sort_by(|a, b| {
        (a.position.x, a.position.y)
            .partial_cmp(&(b.position.x, b.position.y))
            .unwrap()
    });
    Ok(seeds)
}

/// Vertex offset of the parabola through (-h, lo), (0, mid), (h, hi),
/// clamped to half a cell so the seed stays inside its detection cell.
fn parabola_offset(lo: f64, mid: f64, hi: f64, h: f64) -> f64 {
    let curvature = lo - 2.0 * mid + hi;
    if curvature >= 0.0 {
        return 0.0;
    }
    (h * (lo - hi) / (2.0 * curvature)).clamp(-0.5 * h, 0.5 * h)
}
