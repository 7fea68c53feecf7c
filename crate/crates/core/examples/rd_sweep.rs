//! Rate-distortion sweep, delta rate, and the CSV/SVG plot.
//!
//! cargo run --release --example rd_sweep -- [out_dir]

use std::path::PathBuf;

use mvjoint::eval::{emit_plot, run_rd_sweep};
use mvjoint::pipeline::{DepthParams, ReconstructionParams};
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("mvjoint-rd"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let scene = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 64, 64, 3, 0, 7))?;
    let geometry = scene.geometry(0, scene.max_disparity() + 2);
    let sweep = run_rd_sweep(
        &scene.views,
        &[50, 45, 40, 35, 30, 25],
        &geometry,
        &DepthParams::default(),
        &ReconstructionParams::default(),
    )?;

    for run in &sweep.runs {
        println!(
            "QP' {}: {:.0} bits, {:.2} -> {:.2} dB",
            run.qp,
            run.outcome.total_bits(),
            run.outcome.mean_independent_psnr(),
            run.outcome.mean_joint_psnr()
        );
    }
    match sweep.bd_rate() {
        Ok(bd) => println!("delta rate {bd:+.2}%"),
        Err(e) => println!("delta rate unavailable: {e}"),
    }
    let files = emit_plot(&[sweep.independent, sweep.joint], out.join("rd"))?;
    println!("wrote {} and {}", files.csv.display(), files.svg.display());
    Ok(())
}
