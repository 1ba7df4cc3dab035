use rand::Rng;

use super::resize::bicubic_resize;
use super::ImageBuffer;

/// One draw of the training-time augmentation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AugmentParams {
    /// Downscale factor in `[0.5, 1.0]`.
    pub scale: f64,
    /// Clockwise quarter turns, `0..4`.
    pub quarter_turns: u8,
    pub flip_h: bool,
    pub flip_v: bool,
}

impl AugmentParams {
    pub const IDENTITY: Self = Self { scale: 1.0, quarter_turns: 0, flip_h: false, flip_v: false };

    pub fn sample(rng: &mut impl Rng) -> Self {
        Self {
            scale: rng.random_range(0.5..=1.0),
            quarter_turns: rng.random_range(0..4),
            flip_h: rng.random_bool(0.5),
            flip_v: rng.random_bool(0.5),
        }
    }

    pub fn apply(&self, img: &ImageBuffer) -> ImageBuffer {
        let mut out = if self.scale < 1.0 {
            let h = ((img.height() as f64 * self.scale).round() as usize).max(1);
            let w = ((img.width() as f64 * self.scale).round() as usize).max(1);
            bicubic_resize(img, h, w, true).expect("non-zero target size")
        } else {
            img.clone()
        };
        for _ in 0..self.quarter_turns {
            out = rotate90(&out);
        }
        if self.flip_h {
            out = flip_horizontal(&out);
        }
        if self.flip_v {
            out = flip_vertical(&out);
        }
        out
    }
}

/// Random downscale, rotation and flips.
pub fn augment(img: &ImageBuffer, rng: &mut impl Rng) -> ImageBuffer {
    AugmentParams::sample(rng).apply(img)
}

fn remap(img: &ImageBuffer, h: usize, w: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> ImageBuffer {
    ImageBuffer::from_fn(h, w, img.channels(), |y, x, c| {
        let (sy, sx) = src(y, x);
        img.get(sy, sx, c)
    })
    .expect("dimensions come from a valid image")
}

/// Quarter turn clockwise.
pub fn rotate90(img: &ImageBuffer) -> ImageBuffer {
    let (h, w) = (img.height(), img.width());
    remap(img, w, h, |y, x| (h - 1 - x, y))
}

pub fn flip_horizontal(img: &ImageBuffer) -> ImageBuffer {
    let w = img.width();
    remap(img, img.height(), w, |y, x| (y, w - 1 - x))
}

pub fn flip_vertical(img: &ImageBuffer) -> ImageBuffer {
    let h = img.height();
    remap(img, h, img.width(), |y, x| (h - 1 - y, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn img() -> ImageBuffer {
        ImageBuffer::from_fn(5, 7, 3, |y, x, c| ((y * 7 + x) * 3 + c) as f64 / 104.0).unwrap()
    }

    #[test]
    fn half_turn_twice_is_identity() {
        let a = img();
        let p = AugmentParams { quarter_turns: 2, ..AugmentParams::IDENTITY };
        assert_eq!(p.apply(&p.apply(&a)), a);
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let a = img();
        let r = rotate90(&a);
        assert_eq!((r.height(), r.width()), (7, 5));
        assert_eq!(rotate90(&rotate90(&rotate90(&r))), a);
    }

    #[test]
    fn flips_are_involutions() {
        let a = img();
        assert_eq!(flip_horizontal(&flip_horizontal(&a)), a);
        assert_eq!(flip_vertical(&flip_vertical(&a)), a);
        assert_ne!(flip_horizontal(&a), a);
    }

    #[test]
    fn unit_scale_keeps_dims() {
        let a = img();
        let p = AugmentParams { quarter_turns: 0, flip_h: true, ..AugmentParams::IDENTITY };
        let out = p.apply(&a);
        assert_eq!((out.height(), out.width()), (5, 7));
    }

    #[test]
    fn sampled_scale_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let p = AugmentParams::sample(&mut rng);
            assert!((0.5..=1.0).contains(&p.scale));
            assert!(p.quarter_turns < 4);
        }
    }
}
