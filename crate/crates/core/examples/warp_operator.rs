//! The sparse warp A and occlusion mask M built from a known depth map.

use mvjoint::image::{psnr, reshape, reshape_inverse};
use mvjoint::scene::{generate, SceneKind, SceneSpec};
use mvjoint::warp::{build_operator, motion_from_depth};

fn main() -> mvjoint::Result<()> {
    let scene = generate(&SceneSpec::new(SceneKind::TwoPlaneOcclusion, 48, 48, 1, 5, 2))?;
    let geometry = scene.geometry(0, 6);
    let depth = scene.truth_field(0, 6)?;
    let motion = motion_from_depth(&depth, &geometry, 0)?;
    let (a, m) = build_operator(&motion);

    println!("{} pixels, {} nonzeros, {} hole rows", a.size(), a.entries().count(), a.hole_rows().len());

    // M A x1 matches M x2 exactly; outside the mask nothing is predicted
    let predicted = m.apply(&a.apply(&reshape(&scene.views[0]))?)?;
    let target = m.apply(&reshape(&scene.views[1]))?;
    let worst = predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t).abs())
        .fold(0.0, f64::max);
    println!("largest masked prediction error: {worst}");

    let raw = reshape_inverse(&a.apply(&reshape(&scene.views[0]))?, 48, 48)?;
    println!("unmasked prediction PSNR: {:.2} dB", psnr(&scene.views[1], &raw)?);
    Ok(())
}
