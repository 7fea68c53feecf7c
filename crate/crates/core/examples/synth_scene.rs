//! Generate a two-plane stereo pair with ground truth and write it out.
//!
//! cargo run --example synth_scene -- [out_dir]

use std::path::PathBuf;

use mvjoint::io::save_image;
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("mvjoint-synth"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let spec = SceneSpec::new(SceneKind::TwoPlaneOcclusion, 96, 64, 2, 6, 3);
    let scene = generate(&spec)?;
    for (k, view) in scene.views.iter().enumerate() {
        save_image(view, out.join(format!("view_{k}.png")))?;
    }
    save_image(&scene.disparity_image(), out.join("disparity.png"))?;
    save_image(&scene.hole_image(0), out.join("holes.png"))?;

    let holes = scene.holes[0].iter().filter(|&&h| h).count();
    let visible = scene.non_occluded(0).iter().filter(|&&v| v).count();
    println!("disparity {}..={}", scene.min_disparity(), scene.max_disparity());
    println!("{holes} hole pixels in view 1, {visible} reference pixels visible in it");
    println!("wrote {}", out.display());
    Ok(())
}
