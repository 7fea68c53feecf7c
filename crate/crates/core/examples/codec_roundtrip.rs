//! Block-DCT coding at several quality levels, plus a byte round trip.

use mvjoint::codec::{decode, encode, CodecConfig, CompressedImage};
use mvjoint::image::psnr;
use mvjoint::scene::{generate, SceneKind, SceneSpec};

fn main() -> mvjoint::Result<()> {
    let image = generate(&SceneSpec::new(SceneKind::TexturedRamp, 64, 64, 1, 4, 9))?.views.remove(0);

    println!("QP'  step  bits      PSNR");
    for qp in [1, 10, 25, 40, 50] {
        let config = CodecConfig::new(qp)?;
        let stream = encode(&image, config);
        let decoded = decode(&stream);
        println!(
            "{qp:<4} {:<5} {:<9.0} {:.2} dB",
            config.step(),
            stream.estimated_bits(),
            psnr(&image, &decoded)?
        );
    }

    let stream = encode(&image, CodecConfig::new(30)?);
    let bytes = stream.to_bytes();
    let back = CompressedImage::from_bytes(&bytes)?;
    assert_eq!(decode(&back), decode(&stream));
    println!("serialized stream: {} bytes, round trip exact", bytes.len());
    Ok(())
}
