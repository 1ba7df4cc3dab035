//! Full-reference quality metrics on single-channel images in `[0, 1]`.

use crate::data::ImageBuffer;
use crate::error::{invalid, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn check_pair(reference: &ImageBuffer, test: &ImageBuffer, what: &str) -> Result<()> {
    if reference.channels() != 1 || test.channels() != 1 {
        return invalid(format!("{what} expects single-channel images"));
    }
    if reference.height() != test.height() || reference.width() != test.width() {
        return invalid(format!(
            "{what}: {}x{} vs {}x{}",
            reference.height(),
            reference.width(),
            test.height(),
            test.width()
        ));
    }
    Ok(())
}

/// Mean squared error after removing `shave` pixels from each border.
pub fn mse(reference: &ImageBuffer, test: &ImageBuffer, shave: usize) -> Result<f64> {
    check_pair(reference, test, "mse")?;
    let (a, b) = if shave == 0 {
        (reference.clone(), test.clone())
    } else {
        (reference.shave(shave)?, test.shave(shave)?)
    };
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10·log10(1 / MSE)` over the shaved interior; `+∞` when the crops match.
pub fn psnr(reference: &ImageBuffer, test: &ImageBuffer, shave: usize) -> Result<f64> {
    let e = mse(reference, test, shave)?;
    Ok(if e == 0.0 { f64::INFINITY } else { -10.0 * e.log10() })
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.map(|t| t / s)
}

/// Separable Gaussian filter keeping only fully covered positions.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let k = SSIM_WINDOW;
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&line[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| taps[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5) and
/// unit dynamic range, averaged over window positions inside the image.
pub fn ssim(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_pair(reference, test, "ssim")?;
    let (h, w) = (reference.height(), reference.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return invalid(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"));
    }
    let taps = gaussian_taps();
    let (x, y) = (reference.data(), test.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, h, w, &taps);
    let mu_y = filter_valid(y, h, w, &taps);
    let e_xx = filter_valid(&xx, h, w, &taps);
    let e_yy = filter_valid(&yy, h, w, &taps);
    let e_xy = filter_valid(&xy, h, w, &taps);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(h: usize, w: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageBuffer::from_fn(h, w, 1, |_, _, _| rng.random_range(0.0..1.0)).unwrap()
    }

    fn structured(h: usize, w: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, 1, |y, x, _| {
            0.5 + 0.4 * ((x as f64 * 0.7).sin() * (y as f64 * 0.45).cos())
        })
        .unwrap()
    }

    #[test]
    fn uniform_one_level_difference() {
        let a = ImageBuffer::filled(16, 16, 1, 0.5).unwrap();
        let b = ImageBuffer::filled(16, 16, 1, 0.5 + 1.0 / 255.0).unwrap();
        let expected = 20.0 * 255f64.log10();
        assert!((psnr(&a, &b, 0).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 48.1308).abs() < 1e-3);
    }

    #[test]
    fn identical_is_infinite() {
        let a = noise(20, 20, 1);
        assert_eq!(psnr(&a, &a, 2).unwrap(), f64::INFINITY);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn shave_excludes_borders() {
        let a = ImageBuffer::filled(10, 10, 1, 0.5).unwrap();
        let mut b = a.clone();
        b.set(0, 0, 0, 0.0);
        assert!(psnr(&a, &b, 0).unwrap().is_finite());
        assert_eq!(psnr(&a, &b, 1).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b, 5).is_err());
    }

    #[test]
    fn residual_doubling_costs_six_db() {
        let a = noise(24, 24, 2);
        let n = noise(24, 24, 3);
        let b1 = ImageBuffer::from_fn(24, 24, 1, |y, x, _| a.get(y, x, 0) + 0.01 * (n.get(y, x, 0) - 0.5))
            .unwrap();
        let b2 = ImageBuffer::from_fn(24, 24, 1, |y, x, _| a.get(y, x, 0) + 0.02 * (n.get(y, x, 0) - 0.5))
            .unwrap();
        let drop = psnr(&a, &b1, 0).unwrap() - psnr(&a, &b2, 0).unwrap();
        assert!((drop - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn inverted_structure_is_negative() {
        let a = structured(32, 32);
        let inv = ImageBuffer::from_fn(32, 32, 1, |y, x, _| 1.0 - a.get(y, x, 0)).unwrap();
        assert!(ssim(&a, &inv).unwrap() < 0.0);
    }

    #[test]
    fn errors() {
        let a = noise(8, 8, 1);
        assert!(ssim(&a, &a).is_err());
        assert!(psnr(&a, &noise(8, 9, 1), 0).is_err());
        let rgb = ImageBuffer::filled(12, 12, 3, 0.0).unwrap();
        assert!(ssim(&rgb, &rgb).is_err());
    }

    #[test]
    fn window_sums_to_one() {
        let t = gaussian_taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0], t[10]);
    }

    proptest! {
        #[test]
        fn ssim_symmetric_and_bounded(s1 in 0u64..1000, s2 in 0u64..1000) {
            let a = noise(14, 15, s1);
            let b = noise(14, 15, s2);
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= 1.0);
        }

        #[test]
        fn ssim_shift_invariant(seed in 0u64..1000, c in 0.0f64..0.1) {
            let a = structured(16, 16);
            let n = noise(16, 16, seed);
            // the luminance term is only shift-invariant to second order in
            // the local-mean gap, so keep the perturbation small
            let b = ImageBuffer::from_fn(16, 16, 1, |y, x, _| a.get(y, x, 0) + 0.01 * (n.get(y, x, 0) - 0.5)).unwrap();
            let shift = |img: &ImageBuffer| ImageBuffer::from_fn(16, 16, 1, |y, x, _| img.get(y, x, 0) + c).unwrap();
            let d = ssim(&a, &b).unwrap() - ssim(&shift(&a), &shift(&b)).unwrap();
            prop_assert!(d.abs() < 1e-6, "{d}");
        }
    }
}
