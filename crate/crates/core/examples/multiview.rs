//! Three views decoded together versus pair by pair.

use mvjoint::codec::CodecConfig;
use mvjoint::pipeline::{pairwise_reconstruction, reconstruct_pipeline, DepthParams, ReconstructionParams};
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> mvjoint::Result<()> {
    let scene = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 64, 64, 2, 0, 7).with_views(3))?;
    let geometry = scene.geometry(0, scene.max_disparity() + 2);
    let codec = CodecConfig::new(40)?;
    let (depth, params) = (DepthParams::default(), ReconstructionParams::default());

    let joint = reconstruct_pipeline(&scene.views, codec, &geometry, &depth, &params)?;
    let pairs = pairwise_reconstruction(&scene.views, &joint.decoded, &geometry, codec, &depth, &params)?;
    println!("independent {:.3} dB", joint.mean_independent_psnr());
    println!("pairwise    {:.3} dB", pairs.mean_psnr());
    println!("joint       {:.3} dB", joint.mean_joint_psnr());
    Ok(())
}
