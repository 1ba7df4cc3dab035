//! BT.601 studio-swing YCbCr, the colour space SR benchmarks measure on.

use crate::error::{invalid, Result};

use super::ImageBuffer;

/// Rows map `(R, G, B)` in `[0, 1]` to `255·(Y, Cb, Cr) − offset`.
const FORWARD: [[f64; 3]; 3] =
    [[65.481, 128.553, 24.966], [-37.797, -74.203, 112.0], [112.0, -93.786, -18.214]];
const OFFSET: [f64; 3] = [16.0, 128.0, 128.0];

fn inverse() -> [[f64; 3]; 3] {
    let m = FORWARD;
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    [
        [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
        [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
        [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
    ]
}

fn require_rgb(img: &ImageBuffer, what: &str) -> Result<()> {
    if img.channels() != 3 {
        return invalid(format!("{what} needs a 3-channel image, got {}", img.channels()));
    }
    Ok(())
}

pub fn rgb_to_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer> {
    require_rgb(img, "rgb_to_ycbcr")?;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let rgb = [px[0], px[1], px[2]];
        for (o, (row, off)) in px.iter_mut().zip(FORWARD.iter().zip(OFFSET)) {
            *o = (off + row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2]) / 255.0;
        }
    }
    Ok(out)
}

/// Inverse of [`rgb_to_ycbcr`], clamped to `[0, 1]`.
pub fn ycbcr_to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    require_rgb(img, "ycbcr_to_rgb")?;
    let inv = inverse();
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let v = [px[0] * 255.0 - OFFSET[0], px[1] * 255.0 - OFFSET[1], px[2] * 255.0 - OFFSET[2]];
        for (o, row) in px.iter_mut().zip(inv) {
            *o = (row[0] * v[0] + row[1] * v[1] + row[2] * v[2]).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Luminance plane. Single-channel input is returned unchanged.
pub fn extract_y(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() == 1 {
        return Ok(img.clone());
    }
    let ycc = rgb_to_ycbcr(img)?;
    ycc.channel(0)
}
