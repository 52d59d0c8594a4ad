//! FTLE field of the swirl model, checked against the closed-form solution.
//!
//! Computes the forward FTLE over [0, 2] on a uniform grid with the default
//! cluster finite-difference method, prints field statistics and the mean
//! absolute error against the exact field, and sketches the ridge structure
//! as an ASCII intensity map.

use ftle::field::SwirlField;
use ftle::flowmap::{compute_ftle_field, phi_e, FtleField, FtleSettings, GridSpec, NodeFlag};
use ftle::oracle;

fn main() -> ftle::Result<()> {
    let field = SwirlField::new();
    let grid = GridSpec::from_rect(field_domain(), 0.025)?;
    let (t0, t1) = (0.0, 2.0);

    println!(
        "computing FTLE on a {}x{} grid, window [{t0}, {t1}] ...",
        grid.nx, grid.ny
    );
    let numeric = compute_ftle_field(&field, &grid, t0, t1, &FtleSettings::default())?;
    let exact = oracle::ftle_field(&grid, t1 - t0)?;

    let frozen = numeric
        .flags
        .iter()
        .filter(|f| **f == NodeFlag::Frozen)
        .count();
    println!("valid nodes:  {} / {}", numeric.valid_count(), grid.len());
    println!("frozen nodes: {frozen} (trajectories that left the domain box)");
    println!("peak FTLE:    {:.6}", numeric.max_phi());

    // score only the dynamically interesting region, phi >= 1
    let err = phi_e(&numeric, &exact, 1.0)?;
    println!(
        "mean |error| vs. closed form over phi >= 1: {:.3e}  ({} nodes)",
        err.value, err.nodes
    );

    println!("\nFTLE intensity (dark . to bright #), ridges are the bright bands:");
    print_ascii(&numeric);
    Ok(())
}

fn field_domain() -> ftle::field::Rect {
    use ftle::field::VelocityField;
    SwirlField::new().domain()
}

fn print_ascii(field: &FtleField) {
    let ramp: &[u8] = b" .:-=+*%#";
    let peak = field.max_phi().max(1e-300);
    let (nx, ny) = (field.grid.nx, field.grid.ny);
    // subsample to a terminal-sized panel, y downward
    let (cols, rows) = (nx.min(65), ny.min(33));
    for r in 0..rows {
        let j = (ny - 1) - r * (ny - 1) / (rows - 1);
        let mut line = String::with_capacity(cols);
        for c in 0..cols {
            let i = c * (nx - 1) / (cols - 1);
            let v = field.value(i, j);
            let ch = if v.is_finite() {
                let level = ((v / peak).clamp(0.0, 1.0) * (ramp.len() - 1) as f64).round();
                ramp[level as usize] as char
            } else {
                'x' // frozen / excluded
            };
            line.push(ch);
        }
        println!("  {line}");
    }
}
