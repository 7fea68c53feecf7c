//! The proximity operators the solver is built from.

use mvjoint::image::{psnr, Image};
use mvjoint::linop::Identity;
use mvjoint::prox::{estimate_frame_bounds, project_ball, prox_affine_ball, prox_tv, tv_norm, TvConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let y = project_ball(&[3.0, 4.0], 1.0);
    println!("ball projection of (3, 4): ({:.3}, {:.3})", y[0], y[1]);

    let op = Identity(2);
    let bounds = estimate_frame_bounds(&op);
    let p = prox_affine_ball(&[2.0, 0.0], &op, 1.0, &bounds, 200);
    println!("affine ball with B = I: ({:.6}, {:.6}), step {:.3}", p[0], p[1], bounds.step());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let clean = Image::from_fn(48, 48, |r, c| if (12..36).contains(&r) && (12..36).contains(&c) { 200.0 } else { 50.0 });
    let noisy = Image::from_fn(48, 48, |r, c| clean.get(r, c) + rng.gen_range(-25.0..25.0));
    for weight in [5.0, 15.0, 40.0] {
        let den = prox_tv(&noisy, weight, &TvConfig::default());
        println!(
            "TV prox weight {weight}: TV {:.0} -> {:.0}, PSNR {:.2} -> {:.2} dB",
            tv_norm(&noisy),
            tv_norm(&den),
            psnr(&clean, &noisy).unwrap(),
            psnr(&clean, &den).unwrap()
        );
    }
}
