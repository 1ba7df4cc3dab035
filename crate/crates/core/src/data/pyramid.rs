use crate::error::{invalid, Result};

use super::resize::bicubic_resize;
use super::ImageBuffer;

/// Per-level supervision targets for one HR image.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthPyramid {
    /// `levels[s-1]` is the target at cumulative scale `2^s`; the last entry
    /// is the HR image itself.
    pub levels: Vec<ImageBuffer>,
    /// Network input at `1/scale` of the HR size.
    pub lr: ImageBuffer,
}

impl GroundTruthPyramid {
    /// Target at cumulative upscaling factor `scale` (2, 4, 8, ...).
    pub fn target(&self, scale: usize) -> Option<&ImageBuffer> {
        if !scale.is_power_of_two() || scale < 2 {
            return None;
        }
        self.levels.get(scale.trailing_zeros() as usize - 1)
    }
}

/// Bicubic-downscales a single-channel HR image to every pyramid level. The
/// LR input is one direct resize to `1/scale`, never iterated halving.
pub fn build_gt_pyramid(hr: &ImageBuffer, scale: usize) -> Result<GroundTruthPyramid> {
    if hr.channels() != 1 {
        return invalid(format!(
            "ground-truth pyramids are built on luminance, got {} channels",
            hr.channels()
        ));
    }
    if !scale.is_power_of_two() || scale < 2 {
        return invalid(format!("scale must be a power of two >= 2, got {scale}"));
    }
    let (h, w) = (hr.height(), hr.width());
    if h % scale != 0 || w % scale != 0 {
        return invalid(format!(
            "{h}x{w} image is not divisible by {scale}; crop it with crop_to_multiple first"
        ));
    }
    let n = scale.trailing_zeros() as usize;
    let levels = (1..=n)
        .map(|s| {
            let f = 1 << (n - s);
            bicubic_resize(hr, h / f, w / f, true)
        })
        .collect::<Result<Vec<_>>>()?;
    let lr = bicubic_resize(hr, h / scale, w / scale, true)?;
    Ok(GroundTruthPyramid { levels, lr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, 1, |y, x, _| ((y * 31 + x * 17) % 97) as f64 / 96.0).unwrap()
    }

    #[test]
    fn scale_two_is_single_level() {
        let hr = ramp(16, 12);
        let p = build_gt_pyramid(&hr, 2).unwrap();
        assert_eq!(p.levels, vec![hr]);
        assert_eq!((p.lr.height(), p.lr.width()), (8, 6));
    }

    #[test]
    fn scale_eight_shapes() {
        let p = build_gt_pyramid(&ramp(128, 128), 8).unwrap();
        let dims: Vec<_> = p.levels.iter().map(|l| l.height()).collect();
        assert_eq!(dims, vec![32, 64, 128]);
        assert_eq!(p.lr.height(), 16);
        for pair in p.levels.windows(2) {
            assert_eq!(pair[1].height(), 2 * pair[0].height());
            assert_eq!(pair[1].width(), 2 * pair[0].width());
        }
        assert_eq!(p.target(4).unwrap().height(), 64);
    }

    #[test]
    fn direct_and_iterated_downscaling_differ() {
        let hr = ramp(64, 64);
        let direct = build_gt_pyramid(&hr, 4).unwrap().lr;
        let half = bicubic_resize(&hr, 32, 32, true).unwrap();
        let twice = bicubic_resize(&half, 16, 16, true).unwrap();
        let diff = direct.data().iter().zip(twice.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff > 1e-3, "antialiased kernels should not compose (max diff {diff})");
    }

    #[test]
    fn non_divisible_rejected() {
        assert!(build_gt_pyramid(&ramp(18, 16), 4).is_err());
    }
}
