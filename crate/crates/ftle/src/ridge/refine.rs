//! Ridge refinement: replace interpolation-biased tracked points by normal
//! line searches over exact FTLE evaluations with a shrinking window.

use super::{Ridge, RidgeState};
use crate::field::VelocityField;
use crate::flowmap::{
    advected_gradient_with_mode, cluster_gradient_with_mode, ftle_from_cg, CgTensor, FtleSettings,
    GradientMethod,
};
use crate::{cross2, FtleError, Result, Vec2};

/// A source of exact (re-advected, not interpolated) FTLE values.
pub trait FtleEvaluator: Sync {
    /// Evaluate the FTLE at each position; None marks points whose
    /// trajectories left the domain or degenerated.
    fn eval_batch(&self, positions: &[Vec2]) -> Vec<Option<f64>>;
}

/// Exact FTLE of a velocity field over a fixed window, by advecting a fresh
/// cluster (or gradient system) per query point.
pub struct ExactFtle<'a> {
    pub field: &'a dyn VelocityField,
    pub t0: f64,
    pub t1: f64,
    pub settings: FtleSettings,
}

impl<'a> ExactFtle<'a> {
    pub fn new(field: &'a dyn VelocityField, t0: f64, t1: f64) -> ExactFtle<'a> {
        ExactFtle {
            field,
            t0,
            t1,
            settings: FtleSettings::default(),
        }
    }

    pub fn phi(&self, position: Vec2) -> Option<f64> {
        self.eval_batch(std::slice::from_ref(&position))[0]
    }
}

impl FtleEvaluator for ExactFtle<'_> {
    fn eval_batch(&self, positions: &[Vec2]) -> Vec<Option<f64>> {
        let s = &self.settings;
        let grads = match s.method {
            GradientMethod::ClusterFd => cluster_gradient_with_mode(
                self.field, positions, s.delta_a, self.t0, self.t1, &s.integrator, s.batch,
            ),
            GradientMethod::AdvectedGradient => advected_gradient_with_mode(
                self.field, positions, self.t0, self.t1, &s.integrator, s.batch,
            ),
        };
        let grads = match grads {
            Ok(g) => g,
            Err(e) => {
                log::warn!("exact FTLE batch failed: {e}");
                return vec![None; positions.len()];
            }
        };
        let duration = (self.t1 - self.t0).abs();
        grads
            .into_iter()
            .map(|g| {
                let grad = *g.gradient()?;
                let phi = ftle_from_cg(&CgTensor::from_gradient(&grad), duration).ok()?;
                phi.is_finite().then_some(phi)
            })
            .collect()
    }
}

/// Evaluator backed by a plain function, for synthetic surfaces.
pub struct FnEvaluator<F: Fn(Vec2) -> Option<f64> + Sync>(pub F);

impl<F: Fn(Vec2) -> Option<f64> + Sync> FtleEvaluator for FnEvaluator<F> {
    fn eval_batch(&self, positions: &[Vec2]) -> Vec<Option<f64>> {
        positions.iter().map(|p| (self.0)(*p)).collect()
    }
}

/// Window schedule of the normal line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementSchedule {
    /// Initial half-width of the search window.
    pub w0: f64,
    /// Multiplicative window decay per iteration.
    pub shrink: f64,
    /// Samples per window (odd, so the center is always sampled).
    pub samples: usize,
    /// Final half-width; iteration settles here until no point moves.
    pub w_final: f64,
    /// Hard cap on total iterations.
    pub max_iterations: usize,
}

impl RefinementSchedule {
    /// Defaults proportioned to the FTLE grid spacing the ridge was tracked
    /// on: start at one cell, settle at 1/16 of a cell.
    pub fn for_spacing(dx: f64) -> RefinementSchedule {
        RefinementSchedule {
            w0: dx,
            shrink: 0.5,
            samples: 11,
            w_final: dx / 16.0,
            max_iterations: 24,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w0 > 0.0) || !(self.w_final > 0.0) || self.w_final > self.w0 {
            return Err(FtleError::InvalidArgument(format!(
                "window schedule needs 0 < w_final <= w0, got w0={} w_final={}",
                self.w0, self.w_final
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(FtleError::InvalidArgument(format!(
                "window shrink factor must be in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.samples < 3 || self.samples % 2 == 0 {
            return Err(FtleError::InvalidArgument(format!(
                "samples per window must be odd and at least 3, got {}",
                self.samples
            )));
        }
        if self.max_iterations == 0 {
            return Err(FtleError::InvalidArgument(
                "iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Refine one ridge. `others` caps the initial window at half the distance
/// to the nearest foreign ridge so the search cannot jump crests.
pub fn refine_ridge(
    ridge: &Ridge,
    evaluator: &dyn FtleEvaluator,
    schedule: &RefinementSchedule,
    others: &[&Ridge],
) -> Result<Ridge> {
    schedule.validate()?;
    if ridge.points.len() < 2 {
        return Err(FtleError::InvalidArgument(
            "refinement needs a ridge with at least 2 points".into(),
        ));
    }

    let mut refined = ridge.clone();
    let mut w = initial_window(ridge, schedule, others);
    let half = (schedule.samples - 1) / 2;
    let mut failed_points = 0usize;

    for _ in 0..schedule.max_iterations {
        refined.rebuild_geometry();
        let frozen = crossing_windows(&refined, w);

        // flatten every (point, offset) pair into one exact evaluation batch
        let mut queries: Vec<Vec2> = Vec::new();
        let mut spans: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, p) in refined.points.iter().enumerate() {
            let offsets: Vec<f64> = if frozen[i] {
                vec![0.0]
            } else {
                (0..schedule.samples)
                    .map(|k| (k as i64 - half as i64) as f64 * (w / half as f64))
                    .collect()
            };
            spans.push((queries.len(), offsets.clone()));
            queries.extend(offsets.iter().map(|&o| p.position + o * p.normal));
        }
        let values = evaluator.eval_batch(&queries);

        let mut moved = false;
        failed_points = 0;
        for (i, (start, offsets)) in spans.iter().enumerate() {
            let center = offsets.iter().position(|&o| o == 0.0).unwrap();
            let mut best = values[start + center];
            let mut best_off = 0.0;
            for (k, &off) in offsets.iter().enumerate() {
                if let Some(v) = values[start + k] {
                    if best.map_or(true, |b| v > b) {
                        best = Some(v);
                        best_off = off;
                    }
                }
            }
            match best {
                Some(v) => {
                    if best_off != 0.0 {
                        moved = true;
                        let n = refined.points[i].normal;
                        refined.points[i].position += best_off * n;
                    }
                    refined.points[i].phi = v;
                }
                None => failed_points += 1,
            }
        }

        if w > schedule.w_final {
            w = (w * schedule.shrink).max(schedule.w_final);
        } else if !moved {
            break;
        }
    }
    if failed_points > 0 {
        log::warn!(
            "{failed_points} of {} ridge points had no valid exact FTLE and kept their tracked values",
            refined.points.len()
        );
    }

    refined.rebuild_geometry();
    refined.state = RidgeState::Refined;
    refined.schedule = Some(*schedule);
    Ok(refined)
}

/// Refine each ridge against the rest of the set.
pub fn refine_ridges(
    ridges: &[Ridge],
    evaluator: &dyn FtleEvaluator,
    schedule: &RefinementSchedule,
) -> Result<Vec<Ridge>> {
    ridges
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let others: Vec<&Ridge> = ridges
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| o)
                .collect();
            refine_ridge(r, evaluator, schedule, &others)
        })
        .collect()
}

fn initial_window(ridge: &Ridge, schedule: &RefinementSchedule, others: &[&Ridge]) -> f64 {
    let mut w = schedule.w0;
    let nearest = ridge
        .points
        .iter()
        .flat_map(|p| others.iter().map(|o| o.min_distance_to(p.position)))
        .fold(f64::INFINITY, f64::min);
    if nearest.is_finite() {
        w = w.min(0.5 * nearest);
    }
    w.max(schedule.w_final)
}

/// Mark points whose normal search windows cross a neighbor's window; those
/// points sit out the current iteration.
fn crossing_windows(ridge: &Ridge, w: f64) -> Vec<bool> {
    let n = ridge.points.len();
    let mut frozen = vec![false; n];
    let ends: Vec<(Vec2, Vec2)> = ridge
        .points
        .iter()
        .map(|p| (p.position - w * p.normal, p.position + w * p.normal))
        .collect();
    for i in 0..n.saturating_sub(1) {
        if segments_cross(ends[i].0, ends[i].1, ends[i + 1].0, ends[i + 1].1) {
            frozen[i] = true;
            frozen[i + 1] = true;
        }
    }
    frozen
}

fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = cross2(q2 - q1, p1 - q1);
    let d2 = cross2(q2 - q1, p2 - q1);
    let d3 = cross2(p2 - p1, q1 - p1);
    let d4 = cross2(p2 - p1, q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

#[cfg(test)]
mod tests {
    use super::super::StopReason;
    use super::*;

    fn straight_ridge_with_wiggle(n: usize, amplitude: f64) -> Ridge {
        let positions: Vec<Vec2> = (0..n)
            .map(|i| {
                let x = -0.9 + 1.8 * i as f64 / (n - 1) as f64;
                let y = amplitude * (13.0 * x).sin();
                Vec2::new(x, y)
            })
            .collect();
        Ridge::from_positions(
            positions,
            vec![1.9; n],
            RidgeState::Tracked,
            Vec2::zeros(),
            StopReason::DomainExit,
            StopReason::DomainExit,
        )
    }

    fn crest_at_zero() -> impl Fn(Vec2) -> Option<f64> + Sync {
        |p: Vec2| Some(2.0 * (-p.y * p.y).exp())
    }

    #[test]
    fn pulls_a_perturbed_polyline_onto_the_crest() {
        let tracked = straight_ridge_with_wiggle(31, 0.008);
        let schedule = RefinementSchedule::for_spacing(0.01);
        let evaluator = FnEvaluator(crest_at_zero());
        let refined = refine_ridge(&tracked, &evaluator, &schedule, &[]).unwrap();
        for p in &refined.points {
            assert!(
                p.position.y.abs() <= schedule.w_final + 1e-12,
                "point settled within the final window of the crest, y = {}",
                p.position.y
            );
            assert!((p.phi - 2.0).abs() < 1e-4);
        }
        assert_eq!(refined.state, RidgeState::Refined);
        assert_eq!(refined.schedule, Some(schedule));
    }

    #[test]
    fn exact_values_never_decrease() {
        let tracked = straight_ridge_with_wiggle(31, 0.008);
        let schedule = RefinementSchedule::for_spacing(0.01);
        let f = crest_at_zero();
        let before: Vec<f64> = tracked
            .points
            .iter()
            .map(|p| f(p.position).unwrap())
            .collect();
        let refined = refine_ridge(&tracked, &FnEvaluator(f), &schedule, &[]).unwrap();
        for (p, b) in refined.points.iter().zip(&before) {
            assert!(p.phi >= *b - 1e-15);
        }
    }

    #[test]
    fn refined_points_pass_the_discrete_normal_maximum_test() {
        let tracked = straight_ridge_with_wiggle(25, 0.006);
        let schedule = RefinementSchedule::for_spacing(0.01);
        let evaluator = FnEvaluator(crest_at_zero());
        let refined = refine_ridge(&tracked, &evaluator, &schedule, &[]).unwrap();
        for p in &refined.points {
            let up = 2.0 * (-(p.position + schedule.w_final * p.normal).y.powi(2)).exp();
            let dn = 2.0 * (-(p.position - schedule.w_final * p.normal).y.powi(2)).exp();
            assert!(p.phi >= up - 1e-12 && p.phi >= dn - 1e-12);
        }
    }

    #[test]
    fn window_is_capped_near_a_foreign_ridge() {
        let tracked = straight_ridge_with_wiggle(11, 0.0);
        // a parallel ridge 0.04 away caps w0 at 0.02
        let other = Ridge::from_positions(
            (0..11)
                .map(|i| Vec2::new(-0.9 + 1.8 * i as f64 / 10.0, 0.04))
                .collect(),
            vec![1.9; 11],
            RidgeState::Tracked,
            Vec2::zeros(),
            StopReason::DomainExit,
            StopReason::DomainExit,
        );
        let schedule = RefinementSchedule {
            w0: 0.1,
            ..RefinementSchedule::for_spacing(0.1)
        };
        assert!((initial_window(&tracked, &schedule, &[&other]) - 0.02).abs() < 1e-12);
        assert_eq!(initial_window(&tracked, &schedule, &[]), 0.1);
    }

    #[test]
    fn crossing_normal_windows_freeze_for_the_iteration() {
        // a hairpin: on the inside of the turn the adjacent normal windows
        // overlap once they are longer than the local radius of curvature
        let positions = vec![
            Vec2::new(-0.2, 0.0),
            Vec2::new(-0.1, 0.0),
            Vec2::new(0.0, 0.05),
            Vec2::new(-0.1, 0.1),
            Vec2::new(-0.2, 0.1),
        ];
        let ridge = Ridge::from_positions(
            positions,
            vec![1.0; 5],
            RidgeState::Tracked,
            Vec2::zeros(),
            StopReason::DomainExit,
            StopReason::DomainExit,
        );
        let frozen = crossing_windows(&ridge, 0.2);
        assert!(frozen.iter().any(|&f| f), "wide windows at a kink collide");
        let frozen = crossing_windows(&ridge, 1e-3);
        assert!(frozen.iter().all(|&f| !f), "narrow windows are disjoint");
    }

    #[test]
    fn unreachable_evaluations_keep_tracked_values() {
        let tracked = straight_ridge_with_wiggle(11, 0.004);
        let schedule = RefinementSchedule::for_spacing(0.01);
        // exact FTLE unavailable right of x = 0
        let evaluator = FnEvaluator(|p: Vec2| {
            (p.x < 0.0).then(|| 2.0 * (-p.y * p.y).exp())
        });
        let refined = refine_ridge(&tracked, &evaluator, &schedule, &[]).unwrap();
        for (r, t) in refined.points.iter().zip(&tracked.points) {
            if t.position.x >= 0.01 {
                assert_eq!(r.phi, t.phi, "unreachable points keep tracked values");
            } else if t.position.x < -0.01 {
                assert!(r.position.y.abs() <= schedule.w_final + 1e-12);
            }
        }
    }

    #[test]
    fn schedule_validation_rejects_bad_parameters() {
        let good = RefinementSchedule::for_spacing(0.01);
        assert!(good.validate().is_ok());
        assert!(RefinementSchedule { samples: 4, ..good }.validate().is_err());
        assert!(RefinementSchedule { shrink: 1.0, ..good }.validate().is_err());
        assert!(RefinementSchedule { w_final: 0.1, ..good }.validate().is_err());
        assert!(RefinementSchedule { w0: -1.0, ..good }.validate().is_err());
    }
}
