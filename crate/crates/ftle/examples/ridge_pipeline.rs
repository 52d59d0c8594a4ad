//! The full ridge pipeline: FTLE field, seed + track, refine, advect.
//!
//! Runs on a discretized swirl field (the tracked ridges' jaggedness is a
//! discretization phenomenon, so the pipeline is demonstrated on sampled
//! data, not the analytic sampler). Artifacts land in a directory under the
//! system temp dir: the FTLE field (binary + CSV), and one ridge file per
//! stage.

use ftle::field::{discretize, InterpMode, SwirlField};
use ftle::flowmap::GridSpec;
use ftle::io;
use ftle::study::{run_pipeline, PipelineSettings};

fn main() -> ftle::Result<()> {
    let analytic = SwirlField::new();
    let mut sampled = discretize(&analytic, 0.01, &[0.0])?;
    sampled.set_interp(InterpMode::Bicubic);

    let grid = GridSpec::new(ftle::Vec2::new(-1.0, -1.0), 0.02, 101, 101)?;
    let mut settings = PipelineSettings::new(grid, 0.0, 2.0);
    settings.config_snapshot = "field = swirl (sampled, dx 0.01, bicubic)\n\
                                grid-dx = 0.02\nt0 = 0\nt1 = 2\n"
        .to_string();

    let out_dir = std::env::temp_dir().join("ftle_ridge_pipeline");
    println!("running the pipeline into {} ...", out_dir.display());
    let artifacts = run_pipeline(&sampled, &settings, &out_dir)?;

    println!("ridges tracked: {}", artifacts.ridge_count);
    for failure in &artifacts.failures {
        println!("stage failure: {failure}");
    }

    let tracked = io::load_ridges(&artifacts.tracked)?;
    for (i, r) in tracked.iter().enumerate() {
        println!(
            "  ridge {i}: {} points, length {:.3}, stops {} / {}",
            r.points.len(),
            r.length(),
            r.stop_start.as_str(),
            r.stop_end.as_str()
        );
    }

    if let Some(refined_path) = &artifacts.refined {
        let refined = io::load_ridges(refined_path)?;
        for (t, r) in tracked.iter().zip(&refined) {
            // refinement moves each point to the transverse maximum of the
            // exact FTLE, so the polyline sheds its discretization wiggle
            println!(
                "  refined: length {:.3} -> {:.3}",
                t.length(),
                r.length()
            );
        }
    }
    if let Some(advected_path) = &artifacts.advected {
        let advected = io::load_ridges(advected_path)?;
        let frozen: usize = advected
            .iter()
            .map(|r| r.points.iter().filter(|p| p.frozen).count())
            .sum();
        println!("  advected ridges written ({frozen} frozen points)");
    }

    println!("\nartifacts:");
    println!("  {}", artifacts.ftle_binary.display());
    println!("  {}", artifacts.ftle_csv.display());
    println!("  {}", artifacts.tracked.display());
    for p in [&artifacts.refined, &artifacts.advected, &artifacts.profiles]
        .into_iter()
        .flatten()
    {
        println!("  {}", p.display());
    }
    Ok(())
}
