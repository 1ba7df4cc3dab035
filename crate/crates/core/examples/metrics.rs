//! PSNR and SSIM of a few common degradations of one image.

use lapsrn::data::{downscale, extract_y, load_image, upscale, ImageBuffer};
use lapsrn::metrics::{psnr, ssim};

fn main() -> lapsrn::Result<()> {
    let hr = extract_y(&load_image(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/camera_64.png"))?)?;
    let brighter = ImageBuffer::from_fn(64, 64, 1, |y, x, _| (hr.get(y, x, 0) + 4.0 / 255.0).min(1.0))?;
    let noisy = ImageBuffer::from_fn(64, 64, 1, |y, x, _| {
        let n = ((y * 131 + x * 71) % 17) as f64 / 16.0 - 0.5;
        (hr.get(y, x, 0) + 0.05 * n).clamp(0.0, 1.0)
    })?;
    let cases = [
        ("identical", hr.clone()),
        ("+4 grey levels", brighter),
        ("patterned noise", noisy),
        ("bicubic 2x round trip", upscale(&downscale(&hr, 2)?, 2)?),
        ("bicubic 4x round trip", upscale(&downscale(&hr, 4)?, 4)?),
    ];
    for (name, img) in cases {
        let p = psnr(&hr, &img, 4)?;
        let s = ssim(&hr.shave(4)?, &img.shave(4)?)?;
        println!("{name:<22} PSNR {p:7.2} dB  SSIM {s:.4}");
    }
    Ok(())
}
