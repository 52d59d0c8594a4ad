//! Batch trajectory advection with an embedded Dormand-Prince 4(5) scheme.
//!
//! All trajectories passed to one call share a single accepted-step sequence,
//! controlled by the worst per-component error across the batch. That is the
//! property finite differencing across a cluster of nearby trajectories
//! relies on: with a common step sequence the numerical flow map is a smooth
//! function of the seed, so differences between cluster members cancel the
//! common truncation error instead of amplifying it. Callers choose the
//! sharing granularity by how they batch (one call per cluster, or one call
//! for everything).
//!
//! Trajectories that leave the field's containment region
//! ([`VelocityField::contains`], the freeze bounds by default) are frozen:
//! they keep their exit position, contribute nothing to step control, and
//! are flagged in the result. Stage positions of live trajectories are
//! clamped into the freeze bounds before sampling, so transient overshoot
//! cannot sample outside the field's extrapolation region.

use crate::field::VelocityField;
use crate::{FtleError, Mat2, Result, Vec2};

/// Step-size and tolerance settings for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; defaults to 1% of the window.
    pub initial_step: Option<f64>,
    /// Largest step magnitude; defaults to the window length.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-7,
            atol: 1e-9,
            initial_step: None,
            max_step: None,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryStatus {
    Ok,
    /// Left the containment region at time `t`; position held fixed
    /// afterwards. Seeds starting outside are frozen at the window start.
    Frozen { t: f64 },
}

impl TrajectoryStatus {
    pub fn is_frozen(&self) -> bool {
        matches!(self, TrajectoryStatus::Frozen { .. })
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub positions: Vec<Vec2>,
    pub status: Vec<TrajectoryStatus>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone)]
pub struct GradientBatchResult {
    pub positions: Vec<Vec2>,
    /// Flow-map gradient dx(t1)/dx(t0) advected alongside each trajectory.
    pub gradients: Vec<Mat2>,
    pub status: Vec<TrajectoryStatus>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Dormand-Prince 4(5) tableau. B holds the 5th-order propagation weights
// (local extrapolation), E the difference to the embedded 4th-order solution.
// The last stage is evaluated at the accepted point (FSAL).
const STAGES: usize = 7;
const C: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// PI step controller constants (the standard tuning for this tableau).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 5.0; // step may shrink by at most 1/5 ...
const FAC_GROW_MAX: f64 = 0.1; // ... and grow by at most 10x per step

/// Flow-map gradient entries beyond this magnitude abort with a divergence
/// error instead of running into overflow.
const GRADIENT_LIMIT: f64 = 1e300;

/// Advect a batch of seed positions from `t0` to `t1` (either direction)
/// through `field`, sharing one accepted-step sequence across the batch.
pub fn advect_batch(
    field: &dyn VelocityField,
    seeds: &[Vec2],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<BatchResult> {
    let mut y = Vec::with_capacity(seeds.len() * 2);
    for p in seeds {
        y.extend_from_slice(&[p.x, p.y]);
    }
    let rhs = PositionSystem { field };
    let run = integrate(&rhs, 2, y, seeds.len(), field, t0, t1, cfg)?;
    Ok(BatchResult {
        positions: run
            .y
            .chunks_exact(2)
            .map(|c| Vec2::new(c[0], c[1]))
            .collect(),
        status: run.status,
        accepted_steps: run.accepted,
        rejected_steps: run.rejected,
    })
}

/// Advect seeds together with the flow-map gradient: each trajectory carries
/// the coupled system dx/dt = u(x, t), dF/dt = (grad u)(x, t) F, F(t0) = I.
/// Requires a field with a meaningful velocity gradient.
pub fn advect_with_gradient(
    field: &dyn VelocityField,
    seeds: &[Vec2],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<GradientBatchResult> {
    if !field.has_gradient() {
        return Err(FtleError::InvalidArgument(
            "field does not provide a velocity gradient".into(),
        ));
    }
    let mut y = Vec::with_capacity(seeds.len() * 6);
    for p in seeds {
        y.extend_from_slice(&[p.x, p.y, 1.0, 0.0, 0.0, 1.0]);
    }
    let rhs = GradientSystem { field };
    let run = integrate(&rhs, 6, y, seeds.len(), field, t0, t1, cfg)?;
    let mut positions = Vec::with_capacity(seeds.len());
    let mut gradients = Vec::with_capacity(seeds.len());
    for c in run.y.chunks_exact(6) {
        positions.push(Vec2::new(c[0], c[1]));
        // state stores F column-major: [f11, f21, f12, f22]
        gradients.push(Mat2::new(c[2], c[4], c[3], c[5]));
    }
    Ok(GradientBatchResult {
        positions,
        gradients,
        status: run.status,
        accepted_steps: run.accepted,
        rejected_steps: run.rejected,
    })
}

trait System: Sync {
    /// Derivative of one trajectory's state. `pos` is already clamped into
    /// the freeze bounds.
    fn deriv(&self, pos: Vec2, state: &[f64], t: f64, out: &mut [f64]);
}

struct PositionSystem<'a> {
    field: &'a dyn VelocityField,
}

impl System for PositionSystem<'_> {
    fn deriv(&self, pos: Vec2, _state: &[f64], t: f64, out: &mut [f64]) {
        let u = self.field.eval_velocity(pos, t);
        out[0] = u.x;
        out[1] = u.y;
    }
}

struct GradientSystem<'a> {
    field: &'a dyn VelocityField,
}

impl System for GradientSystem<'_> {
    fn deriv(&self, pos: Vec2, state: &[f64], t: f64, out: &mut [f64]) {
        let u = self.field.eval_velocity(pos, t);
        let g = self.field.eval_velocity_gradient(pos, t);
        out[0] = u.x;
        out[1] = u.y;
        let (f11, f21, f12, f22) = (state[2], state[3], state[4], state[5]);
        out[2] = g.m11 * f11 + g.m12 * f21;
        out[3] = g.m21 * f11 + g.m22 * f21;
        out[4] = g.m11 * f12 + g.m12 * f22;
        out[5] = g.m21 * f12 + g.m22 * f22;
    }
}

struct Run {
    y: Vec<f64>,
    status: Vec<TrajectoryStatus>,
    accepted: usize,
    rejected: usize,
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    sys: &dyn System,
    dim: usize,
    mut y: Vec<f64>,
    n_traj: usize,
    field: &dyn VelocityField,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Run> {
    for (i, c) in y.chunks_exact(dim).enumerate() {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(FtleError::Integration {
                trajectory: i,
                reason: "non-finite seed state".into(),
            });
        }
    }
    let (ts_min, ts_max) = field.time_span();
    for t in [t0, t1] {
        if !(t >= ts_min && t <= ts_max) {
            return Err(FtleError::OutOfTimeSpan {
                t,
                t_min: ts_min,
                t_max: ts_max,
            });
        }
    }

    let bounds = field.freeze_bounds();
    let mut status = vec![TrajectoryStatus::Ok; n_traj];
    // Seeds already outside the containment region start frozen.
    for (i, c) in y.chunks_exact(dim).enumerate() {
        if !field.contains(Vec2::new(c[0], c[1])) {
            status[i] = TrajectoryStatus::Frozen { t: t0 };
        }
    }

    let span = t1 - t0;
    if span == 0.0 || status.iter().all(|s| s.is_frozen()) {
        return Ok(Run {
            y,
            status,
            accepted: 0,
            rejected: 0,
        });
    }
    let posneg = span.signum();
    let hmax = cfg.max_step.unwrap_or_else(|| span.abs()).abs();
    let mut h = cfg
        .initial_step
        .map(|v| v.abs())
        .unwrap_or(span.abs() / 100.0)
        .min(hmax)
        * posneg;

    let n = y.len();
    let mut k = vec![vec![0.0; n]; STAGES];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut t = t0;
    let mut facold: f64 = 1e-4;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    let eval_into = |slot: &mut [f64], state: &[f64], time: f64, status: &[TrajectoryStatus]| {
        for i in 0..n_traj {
            let s = &state[i * dim..(i + 1) * dim];
            let out = &mut slot[i * dim..(i + 1) * dim];
            if status[i].is_frozen() {
                out.fill(0.0);
            } else {
                let pos = bounds.clamp(Vec2::new(s[0], s[1]));
                sys.deriv(pos, s, time, out);
            }
        }
    };

    eval_into(&mut k[0], &y, t, &status);

    let mut steps = 0usize;
    loop {
        if (t - t1) * posneg >= 0.0 {
            break;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(FtleError::Integration {
                trajectory: controlling_trajectory(&y, dim, n_traj, &status),
                reason: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }
        // land exactly on t1
        if (t + 1.01 * h - t1) * posneg > 0.0 {
            h = t1 - t;
        }

        // stages 2..7; stage 7 sits at the trial point (FSAL)
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let slot = std::mem::take(&mut k[s]);
            let mut slot = slot;
            eval_into(&mut slot, &y_stage, t + C[s] * h, &status);
            k[s] = slot;
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    acc += B[j] * kj[i];
                }
            }
            y_new[i] = y[i] + h * acc;
        }

        // worst per-component scaled error over live trajectories
        let mut err: f64 = 0.0;
        let mut worst = 0usize;
        for traj in 0..n_traj {
            if status[traj].is_frozen() {
                continue;
            }
            for c in 0..dim {
                let i = traj * dim + c;
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += E[j] * kj[i];
                    }
                }
                let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
                let scaled = (h * e / sc).abs();
                if scaled > err {
                    err = scaled;
                    worst = traj;
                }
            }
        }
        if !err.is_finite() {
            return Err(FtleError::Integration {
                trajectory: worst,
                reason: "non-finite error estimate (velocity produced NaN)".into(),
            });
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // accept; the controller remembers the previous accepted error
            let fac = (fac11 / facold.powf(BETA) / SAFETY)
                .clamp(FAC_GROW_MAX, FAC_SHRINK_MAX);
            facold = err.max(1e-4);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = if h_new.abs() > h.abs() { h } else { h_new };
            }
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            accepted += 1;
            last_rejected = false;

            for traj in 0..n_traj {
                if status[traj].is_frozen() {
                    continue;
                }
                let s = &y[traj * dim..(traj + 1) * dim];
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(FtleError::Integration {
                        trajectory: traj,
                        reason: "state became non-finite".into(),
                    });
                }
                if dim == 6 && s[2..].iter().any(|v| v.abs() > GRADIENT_LIMIT) {
                    return Err(FtleError::Integration {
                        trajectory: traj,
                        reason: "flow-map gradient diverged".into(),
                    });
                }
                if !field.contains(Vec2::new(s[0], s[1])) {
                    status[traj] = TrajectoryStatus::Frozen { t };
                }
            }
            if status.iter().all(|st| st.is_frozen()) {
                break;
            }
            // FSAL: stage 7 was evaluated at the accepted point unless a
            // freeze just changed the live set
            k.swap(0, 6);
            if status.iter().any(|st| {
                if let TrajectoryStatus::Frozen { t: tf } = st {
                    *tf == t
                } else {
                    false
                }
            }) {
                eval_into(&mut k[0], &y, t, &status);
            }
            h = h_new.abs().min(hmax) * posneg;
        } else {
            // reject and retry with a smaller step
            let h_new = h / (fac11 / SAFETY).min(FAC_SHRINK_MAX);
            if accepted > 0 || rejected > 0 {
                last_rejected = true;
            }
            rejected += 1;
            h = h_new;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(FtleError::Integration {
                    trajectory: worst,
                    reason: "step size underflow".into(),
                });
            }
        }
    }

    Ok(Run {
        y,
        status,
        accepted,
        rejected,
    })
}

/// Index of the live trajectory with the largest state magnitude; used to
/// name a culprit in step-exhaustion errors.
fn controlling_trajectory(
    y: &[f64],
    dim: usize,
    n_traj: usize,
    status: &[TrajectoryStatus],
) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for traj in 0..n_traj {
        if status[traj].is_frozen() {
            continue;
        }
        let mag = y[traj * dim..(traj + 1) * dim]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if mag > best_mag {
            best_mag = mag;
            best = traj;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{LinearField, Rect, SwirlField};

    fn unit_box() -> Rect {
        Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0))
    }

    #[test]
    fn zero_field_leaves_seeds_in_place() {
        let f = LinearField::zero(unit_box());
        let seeds = vec![Vec2::new(0.2, -0.4), Vec2::new(-0.9, 0.9)];
        let r = advect_batch(&f, &seeds, 0.0, 3.0, &IntegratorConfig::default()).unwrap();
        for (p, s) in r.positions.iter().zip(&seeds) {
            assert_eq!(p, s);
        }
        assert!(r.status.iter().all(|s| !s.is_frozen()));
    }

    #[test]
    fn saddle_matches_exact_exponentials() {
        let f = LinearField::saddle(unit_box());
        let cfg = IntegratorConfig::with_tolerances(1e-9, 1e-12);
        let seeds = vec![Vec2::new(0.3, 0.8), Vec2::new(-0.1, -0.6)];
        let t = 1.25;
        let r = advect_batch(&f, &seeds, 0.0, t, &cfg).unwrap();
        for (p, s) in r.positions.iter().zip(&seeds) {
            let exact = Vec2::new(s.x * t.exp(), s.y * (-t).exp());
            assert!(
                (p - exact).norm() / exact.norm().max(1e-3) < 1e-8,
                "got {p:?}, want {exact:?}"
            );
        }
    }

    #[test]
    fn rotation_preserves_radius_and_turns() {
        let f = LinearField::rotation(1.0, unit_box());
        let seed = Vec2::new(0.5, 0.0);
        let t = std::f64::consts::FRAC_PI_2;
        let r = advect_batch(&f, &[seed], 0.0, t, &IntegratorConfig::default()).unwrap();
        let p = r.positions[0];
        assert!((p.norm() - 0.5).abs() < 1e-8);
        assert!((p - Vec2::new(0.0, 0.5)).norm() < 1e-7);
    }

    #[test]
    fn backward_window_reverses_forward() {
        let f = SwirlField::new();
        let seeds = vec![Vec2::new(0.3, -0.2), Vec2::new(-0.5, 0.55), Vec2::new(0.05, 0.9)];
        let cfg = IntegratorConfig::default();
        let fwd = advect_batch(&f, &seeds, 0.0, 1.5, &cfg).unwrap();
        let back = advect_batch(&f, &fwd.positions, 1.5, 0.0, &cfg).unwrap();
        for (p, s) in back.positions.iter().zip(&seeds) {
            assert!(
                (p - s).norm() < 10.0 * cfg.rtol,
                "round trip drifted: {:?}",
                (p - s).norm()
            );
        }
    }

    #[test]
    fn self_convergence_under_tolerance_tightening() {
        let f = SwirlField::new();
        let seed = [Vec2::new(0.42, 0.13)];
        let reference = advect_batch(
            &f,
            &seed,
            0.0,
            2.0,
            &IntegratorConfig::with_tolerances(1e-13, 1e-14),
        )
        .unwrap()
        .positions[0];
        let mut errs = Vec::new();
        for rtol in [1e-4, 1e-5, 1e-6, 1e-7] {
            let r = advect_batch(
                &f,
                &seed,
                0.0,
                2.0,
                &IntegratorConfig::with_tolerances(rtol, rtol * 1e-2),
            )
            .unwrap();
            errs.push((r.positions[0] - reference).norm());
        }
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "tightening rtol must reduce error: {errs:?}");
        }
    }

    #[test]
    fn escaping_trajectory_freezes_and_leaves_neighbors_usable() {
        let f = SwirlField::new();
        // first seed starts on the outgoing axis of the deformed saddle with
        // amplitude 1.05 > 1, so it blows up in finite time (t* ~ 1.19) and
        // must hit the freeze bounds; second is a benign interior point
        let escaping = crate::rotation(1.05) * Vec2::new(0.0, 1.05);
        let seeds = vec![escaping, Vec2::new(0.2, 0.3)];
        let cfg = IntegratorConfig::default();
        let r = advect_batch(&f, &seeds, 0.0, 2.0, &cfg).unwrap();
        assert!(r.status[0].is_frozen(), "corner trajectory must freeze");
        assert!(!r.status[1].is_frozen());
        assert!(r.positions[0].x.is_finite() && r.positions[0].y.is_finite());
        let solo = advect_batch(&f, &seeds[1..], 0.0, 2.0, &cfg).unwrap();
        assert!(
            (r.positions[1] - solo.positions[0]).norm() < 1e-6,
            "benign trajectory should match its solo advection to tolerance"
        );
    }

    #[test]
    fn seed_outside_bounds_starts_frozen() {
        let f = SwirlField::new();
        let r = advect_batch(
            &f,
            &[Vec2::new(5.0, 0.0)],
            0.0,
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(r.status[0], TrajectoryStatus::Frozen { t: 0.0 });
        assert_eq!(r.positions[0], Vec2::new(5.0, 0.0));
    }

    #[test]
    fn advected_gradient_matches_saddle_monodromy() {
        let f = LinearField::saddle(unit_box());
        let t = 0.8;
        let r = advect_with_gradient(
            &f,
            &[Vec2::new(0.1, 0.2)],
            0.0,
            t,
            &IntegratorConfig::with_tolerances(1e-10, 1e-13),
        )
        .unwrap();
        let g = r.gradients[0];
        assert!((g.m11 - t.exp()).abs() < 1e-8);
        assert!((g.m22 - (-t).exp()).abs() < 1e-10);
        assert!(g.m12.abs() < 1e-12 && g.m21.abs() < 1e-12);
    }

    #[test]
    fn window_outside_field_time_span_is_rejected() {
        use crate::field::{discretize, DoubleGyre};
        let g = discretize(&DoubleGyre::default(), 0.25, &[0.0, 1.0, 2.0]).unwrap();
        let err = advect_batch(
            &g,
            &[Vec2::new(1.0, 0.5)],
            0.0,
            5.0,
            &IntegratorConfig::default(),
        );
        assert!(matches!(err, Err(FtleError::OutOfTimeSpan { .. })));
    }
}
