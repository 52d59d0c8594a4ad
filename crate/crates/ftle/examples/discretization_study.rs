//! FTLE error as a function of the velocity-grid spacing.
//!
//! The analytic swirl field is sampled onto grids of decreasing spacing; the
//! FTLE computed from each sampled field is scored against the closed form.
//! The cluster method's error tracks the interpolation error of the sampled
//! velocity; the advected-gradient method additionally needs the interpolated
//! velocity *gradient*, which converges slower, until both floor out.
//!
//! The CLI (`ftle study dx`) runs the same sweep down to spacing 2^-11; this
//! example trims the axis to keep the runtime short.

use ftle::flowmap::GradientMethod;
use ftle::study::{run_discretization_study, StudySettings};

fn main() -> ftle::Result<()> {
    let settings = StudySettings::default();
    let axis: Vec<f64> = (4..=8).map(|k| 2f64.powi(-k)).collect();

    println!("sweeping velocity-grid spacing over {} points ...", axis.len());
    let result = run_discretization_study(&settings, &axis, None)?;

    println!("\n  spacing      cluster-fd     advected-gradient");
    for (fd, ag) in result
        .method_rows(GradientMethod::ClusterFd)
        .iter()
        .zip(result.method_rows(GradientMethod::AdvectedGradient))
    {
        println!(
            "  2^{:<4.0}  {:>12.3e}  {:>16.3e}",
            fd.axis.log2(),
            fd.phi_e,
            ag.phi_e
        );
    }
    for failure in result.failures() {
        println!("  axis {}: {}", failure.axis, failure.error.as_deref().unwrap_or("?"));
    }
    Ok(())
}
