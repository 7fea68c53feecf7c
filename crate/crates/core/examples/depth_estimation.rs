//! Depth from two compressed views with alpha-expansion graph cuts.

use mvjoint::codec::CodecConfig;
use mvjoint::depth::{bad_pixel_rate, estimate_depth_detailed, DepthProblem};
use mvjoint::pipeline::compress_views;
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> mvjoint::Result<()> {
    let scene = generate(&SceneSpec::new(SceneKind::TwoPlaneOcclusion, 64, 64, 1, 4, 11))?;
    let truth: Vec<f64> = scene.disparity.iter().map(|&d| f64::from(d)).collect();
    let visible = scene.non_occluded(0);

    for qp in [10, 30, 45] {
        let (decoded, _) = compress_views(&scene.views, CodecConfig::new(qp)?);
        let problem = DepthProblem::new(decoded, scene.geometry(0, 6), 190.0, 4.0)?;
        let (depth, outcome) = estimate_depth_detailed(&problem)?;
        let bad = bad_pixel_rate(&depth.disparities(1.0), &truth, Some(&visible), 1.0);
        println!(
            "QP' {qp}: energy {:.0} -> {:.0} in {} sweeps, {:.2}% bad visible pixels",
            outcome.move_energies[0],
            outcome.energy,
            outcome.sweeps,
            100.0 * bad
        );
    }
    Ok(())
}
