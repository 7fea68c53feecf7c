//! Depth in metric units from calibrated cameras instead of a disparity range.

use mvjoint::camera::CameraParams;
use mvjoint::depth::{estimate_depth, DepthProblem, Geometry};
use mvjoint::scene::{generate, SceneKind, SceneSpec};
use nalgebra::Vector3;

fn main() -> mvjoint::Result<()> {
    // f = 300 px and a 0.1 baseline: a plane at depth 10 moves 3 px
    let left = CameraParams::simple(300.0, Vector3::zeros())?;
    let right = CameraParams::simple(300.0, Vector3::new(0.0, 0.1, 0.0))?;

    let scene = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 64, 48, 3, 0, 5))?;
    let geometry = Geometry::Calibrated {
        cameras: vec![left, right],
        min_depth: 5.0,
        max_depth: 30.0,
        labels: 16,
    };
    let depth = estimate_depth(&DepthProblem::new(scene.views.clone(), geometry, 50.0, 4.0)?)?;

    // neighbouring depth labels can round to the same integer shift
    let shifts = depth.disparities(30.0);
    let right_shift = shifts.iter().filter(|s| s.round() == 3.0).count();
    let mut z: Vec<f64> = depth.disparities(1.0).iter().map(|v| 1.0 / v).collect();
    z.sort_by(f64::total_cmp);
    println!(
        "{right_shift}/{} pixels at the true 3 px shift, median depth {:.2}",
        shifts.len(),
        z[z.len() / 2]
    );
    Ok(())
}
