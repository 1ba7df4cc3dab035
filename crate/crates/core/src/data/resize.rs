//! Separable bicubic resampling in the convention of the reference resizer
//! used by SR benchmarks: Keys kernel with `a = −0.5`, half-pixel-centred
//! coordinates and, when shrinking with antialiasing, a kernel stretched by
//! the inverse scale.

use crate::error::{invalid, Result};

use super::ImageBuffer;

/// Keys cubic convolution kernel, `a = −0.5`.
pub fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        1.5 * ax3 - 2.5 * ax2 + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

/// Source taps `(index, weight)` for every output position along one axis.
/// Weights for one output sum to 1; indices past the edges are clamped.
pub fn resize_weights(in_len: usize, out_len: usize, antialias: bool) -> Vec<Vec<(usize, f64)>> {
    let scale = out_len as f64 / in_len as f64;
    let (stretch, width) = if antialias && scale < 1.0 { (scale, 4.0 / scale) } else { (1.0, 4.0) };
    let taps = width.ceil() as isize + 2;
    (0..out_len)
        .map(|i| {
            let u = (i as f64 + 0.5) / scale - 0.5;
            let left = (u - width / 2.0).floor() as isize;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(taps as usize);
            let mut total = 0.0;
            for j in left..left + taps {
                let wgt = stretch * cubic(stretch * (u - j as f64));
                if wgt == 0.0 {
                    continue;
                }
                total += wgt;
                let idx = j.clamp(0, in_len as isize - 1) as usize;
                match row.iter_mut().find(|(k, _)| *k == idx) {
                    Some(entry) => entry.1 += wgt,
                    None => row.push((idx, wgt)),
                }
            }
            for (_, w) in &mut row {
                *w /= total;
            }
            row
        })
        .collect()
}

fn resize_rows(img: &ImageBuffer, out_h: usize, antialias: bool) -> Result<ImageBuffer> {
    let (w, c) = (img.width(), img.channels());
    let weights = resize_weights(img.height(), out_h, antialias);
    let mut data = vec![0.0; out_h * w * c];
    let src = img.data();
    for (y, taps) in weights.iter().enumerate() {
        let dst = &mut data[y * w * c..(y + 1) * w * c];
        for &(sy, wgt) in taps {
            let line = &src[sy * w * c..(sy + 1) * w * c];
            for (d, s) in dst.iter_mut().zip(line) {
                *d += wgt * s;
            }
        }
    }
    ImageBuffer::new(out_h, w, c, data)
}

fn resize_cols(img: &ImageBuffer, out_w: usize, antialias: bool) -> Result<ImageBuffer> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let weights = resize_weights(w, out_w, antialias);
    let mut data = vec![0.0; h * out_w * c];
    let src = img.data();
    for y in 0..h {
        let line = &src[y * w * c..(y + 1) * w * c];
        for (x, taps) in weights.iter().enumerate() {
            for ch in 0..c {
                data[(y * out_w + x) * c + ch] = taps.iter().map(|&(sx, wgt)| wgt * line[sx * c + ch]).sum();
            }
        }
    }
    ImageBuffer::new(h, out_w, c, data)
}

/// Bicubic resize to `out_h × out_w`. The result is clamped to `[0, 1]`.
pub fn bicubic_resize(img: &ImageBuffer, out_h: usize, out_w: usize, antialias: bool) -> Result<ImageBuffer> {
    if out_h == 0 || out_w == 0 {
        return invalid(format!("resize target must be at least 1x1, got {out_h}x{out_w}"));
    }
    if out_h == img.height() && out_w == img.width() {
        return Ok(img.clone());
    }
    let sh = out_h as f64 / img.height() as f64;
    let sw = out_w as f64 / img.width() as f64;
    // The axis with the smaller scale goes first; ties go rows first.
    let mut out = if sw < sh {
        resize_rows(&resize_cols(img, out_w, antialias)?, out_h, antialias)?
    } else {
        resize_cols(&resize_rows(img, out_h, antialias)?, out_w, antialias)?
    };
    out.clamp01();
    Ok(out)
}

/// Shrinks by an integer factor (dimensions must divide evenly).
pub fn downscale(img: &ImageBuffer, factor: usize) -> Result<ImageBuffer> {
    if factor == 0 || !img.height().is_multiple_of(factor) || !img.width().is_multiple_of(factor) {
        return invalid(format!("{}x{} image is not divisible by {factor}", img.height(), img.width()));
    }
    bicubic_resize(img, img.height() / factor, img.width() / factor, true)
}

/// Enlarges by an integer factor.
pub fn upscale(img: &ImageBuffer, factor: usize) -> Result<ImageBuffer> {
    if factor == 0 {
        return invalid("upscale factor must be >= 1");
    }
    bicubic_resize(img, img.height() * factor, img.width() * factor, true)
}
