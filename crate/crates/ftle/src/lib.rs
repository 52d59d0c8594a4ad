//! Finite-time Lyapunov exponent (FTLE) fields for 2-D time-dependent velocity
//! fields, with ridge extraction and ridge deformation diagnostics.
//!
//! The toolkit covers the full chain from a velocity sampler to classified
//! transport barriers:
//!
//! * [`field`]: velocity samplers. An analytic swirl/saddle model with a known
//!   closed-form flow map, the double gyre benchmark, linear fields, and
//!   gridded fields with bilinear or bicubic space interpolation, linear time
//!   interpolation, and optional frozen node noise.
//! * [`advect`]: batch trajectory integration with an embedded
//!   Dormand-Prince 4(5) scheme. All trajectories of a batch share one
//!   accepted-step sequence, which is what makes finite differences across a
//!   tight cluster of trajectories consistent. A variant advects the flow-map
//!   gradient alongside the position.
//! * [`flowmap`]: flow-map gradients from trajectory clusters or from the
//!   advected-gradient system, Cauchy-Green tensors, FTLE values, whole-grid
//!   FTLE fields, and the field error metric `phi_e`.
//! * [`oracle`]: the closed-form flow map, flow-map gradient, and FTLE of the
//!   swirl model, used as ground truth everywhere, plus exact ridge
//!   orientation sensitivity formulas.
//! * [`ridge`]: seeding, tracking, refinement, and advection of FTLE ridges.
//! * [`classify`]: deformation of material lines seeded on ridges (normal
//!   repulsion, tangential stretch, shear) and alignment diagnostics.
//! * [`study`]: parameter studies (grid spacing, noise, cluster size,
//!   tolerance) and the end-to-end pipeline.
//! * [`io`]: binary containers and CSV exports for fields, ridges, and
//!   classification profiles.
//!
//! The `examples/` directory is the front door; each example is a runnable
//! demonstration of one capability:
//!
//! ```text
//! cargo run --release --example swirl_ftle            # FTLE field + error vs. exact
//! cargo run --release --example method_comparison     # cluster FD vs. advected gradient
//! cargo run --release --example discretization_study  # error vs. grid spacing
//! cargo run --release --example noise_study           # error vs. node noise
//! cargo run --release --example ridge_pipeline        # seed, track, refine, advect
//! cargo run --release --example classify_ridges       # deformation profiles
//! cargo run --release --example sensitivity           # orientation error blow-up
//! cargo run --release --example double_gyre           # time-dependent benchmark
//! cargo run --release --example gridded_io            # discretize, noise, save, load
//! ```
//!
//! A thin `ftle` binary exposes the same operations as subcommands
//! (`field`, `ftle`, `ridge`, `classify`, `study`, `pipeline`).

pub mod advect;
pub mod classify;
pub mod config;
pub mod error;
pub mod field;
pub mod flowmap;
pub mod io;
pub mod oracle;
pub mod ridge;
pub mod study;

pub use error::{FtleError, Result};

/// 2-D position / velocity vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2-D matrix (velocity gradients, flow-map gradients, Cauchy-Green tensors).
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Counterclockwise rotation matrix.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// `v` rotated by +90 degrees (the 2-D analogue of a cross product with ẑ).
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// z-component of the cross product of two in-plane vectors.
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
