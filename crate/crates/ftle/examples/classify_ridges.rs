//! Deformation profiles of material lines seeded on FTLE ridges.
//!
//! Tracks the ridges of the swirl model's FTLE field, then advects a material
//! line seeded on each ridge and measures its deformation: normal repulsion
//! (n_l, rho_l), tangential stretch (e_l), and Lagrangian shear (sigma_l),
//! plus the alignment regime of the seeding direction. A repelling barrier
//! shows n_l > 0 with rho_l tracking it; shear-dominated segments show
//! sigma_l close to rho_l instead.

use ftle::classify::{classify_ridge, ClassifySettings};
use ftle::field::SwirlField;
use ftle::flowmap::{compute_ftle_field, FtleSettings, GridSpec};
use ftle::ridge::{track_ridges, TrackerConfig};

fn main() -> ftle::Result<()> {
    let field = SwirlField::new();
    let grid = GridSpec::new(ftle::Vec2::new(-1.0, -1.0), 0.02, 101, 101)?;
    let (t0, t1) = (0.0, 2.0);

    let ftle = compute_ftle_field(&field, &grid, t0, t1, &FtleSettings::default())?;
    let ridges = track_ridges(&ftle, &TrackerConfig::for_field(&ftle))?;
    println!("tracked {} ridges", ridges.len());

    let settings = ClassifySettings::default();
    for (i, ridge) in ridges.iter().enumerate() {
        let profile = classify_ridge(ridge, &field, t0, t1, &settings)?;
        let valid: Vec<_> = profile.valid_points().collect();
        if valid.is_empty() {
            println!("\nridge {i}: no classifiable points (clusters froze)");
            continue;
        }
        let repelling = valid.iter().filter(|p| p.metrics.n_l > 0.0).count();
        let compressing = valid.iter().filter(|p| p.metrics.e_l < 0.0).count();
        println!(
            "\nridge {i}: {} points, {repelling} normally repelling, {compressing} tangentially compressing",
            valid.len()
        );
        println!("      s        phi      n_l      e_l    rho_l  sigma_l  alignment");
        let stride = (valid.len() / 8).max(1);
        for p in valid.iter().step_by(stride) {
            println!(
                "  {:>5.2}  {:>9.4}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}  {}",
                p.s,
                p.phi,
                p.metrics.n_l,
                p.metrics.e_l,
                p.metrics.rho_l,
                p.metrics.sigma_l,
                p.flag.as_str()
            );
        }
    }
    Ok(())
}
