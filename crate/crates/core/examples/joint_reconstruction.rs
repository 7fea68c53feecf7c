//! Compress a stereo pair, estimate depth, and decode both views jointly.

use mvjoint::codec::CodecConfig;
use mvjoint::pipeline::{reconstruct_pipeline, DepthParams, ReconstructionParams};
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> mvjoint::Result<()> {
    let scene = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 64, 64, 3, 0, 7))?;
    let geometry = scene.geometry(0, scene.max_disparity() + 2);
    let out = reconstruct_pipeline(
        &scene.views,
        CodecConfig::new(40)?,
        &geometry,
        &DepthParams::default(),
        &ReconstructionParams::default(),
    )?;

    for (k, (i, j)) in out.independent_psnr.iter().zip(&out.joint_psnr).enumerate() {
        println!("view {k}: independent {i:.2} dB, joint {j:.2} dB");
    }
    let last = out.report.records.last().expect("records");
    println!(
        "{:.0} bits, {} iterations, TV {:.0}, feasible {}",
        out.total_bits(),
        out.report.iterations,
        last.objective,
        out.report.feasible()
    );
    Ok(())
}
