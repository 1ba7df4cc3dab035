mod common;

use lapsrn::data::{bicubic_resize, downscale, upscale, ImageBuffer};
use lapsrn::layers::{bilinear_kernel, transposed_conv2d, ConvSpec};
use lapsrn::{Shape4, Tensor4};

use common::{bilinear_2x, imresize, random_plane};

fn plane(h: usize, w: usize, seed: u64) -> ImageBuffer {
    ImageBuffer::new(h, w, 1, random_plane(h, w, seed)).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn clamped(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

#[test]
fn downscale_matches_direct_imresize() {
    for (factor, h, w, seed) in [(2, 24, 30, 1), (3, 27, 21, 2), (4, 32, 16, 3), (8, 40, 48, 4)] {
        let img = plane(h, w, seed);
        let got = downscale(&img, factor).unwrap();
        let want = clamped(imresize(img.data(), h, w, h / factor, w / factor));
        let err = max_diff(got.data(), &want);
        assert!(err < 1.0 / 255.0, "{factor}x down: {err}");
        assert!(err < 1e-12, "{factor}x down drifted from the reference: {err}");
    }
}

#[test]
fn upscale_matches_direct_imresize() {
    for (factor, h, w, seed) in [(2, 9, 13, 5), (3, 7, 5, 6), (4, 6, 6, 7)] {
        let img = plane(h, w, seed);
        let got = upscale(&img, factor).unwrap();
        let want = clamped(imresize(img.data(), h, w, h * factor, w * factor));
        let err = max_diff(got.data(), &want);
        assert!(err < 1e-12, "{factor}x up: {err}");
    }
}

#[test]
fn non_integer_resize_matches_direct_imresize() {
    let img = plane(20, 17, 8);
    let got = bicubic_resize(&img, 13, 29, true).unwrap();
    let want = clamped(imresize(img.data(), 20, 17, 13, 29));
    assert!(max_diff(got.data(), &want) < 1e-12);
}

#[test]
fn constant_images_stay_constant() {
    let img = ImageBuffer::filled(32, 24, 3, 0.37).unwrap();
    for out in [downscale(&img, 4).unwrap(), upscale(&img, 2).unwrap()] {
        assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }
}

#[test]
fn bilinear_transposed_conv_is_bilinear_interpolation() {
    let (h, w) = (11, 14);
    let src = random_plane(h, w, 9);
    let x = Tensor4::<f64>::new(Shape4::new(1, 1, h, w).unwrap(), src.clone()).unwrap();
    let spec = ConvSpec::upsample(1, 1, 2);
    let weight = bilinear_kernel::<f64>(spec.kernel, 2, 1).unwrap();
    let y = transposed_conv2d(&x, &weight, &spec).unwrap();
    let want = bilinear_2x(&src, h, w);
    let (oh, ow) = (2 * h, 2 * w);
    assert_eq!((y.shape().h, y.shape().w), (oh, ow));
    for r in 1..oh - 1 {
        for c in 1..ow - 1 {
            assert!((y.get(0, 0, r, c) - want[r * ow + c]).abs() < 1e-14, "({r}, {c})");
        }
    }
}

#[test]
fn bilinear_kernel_keeps_channels_separate() {
    let spec = ConvSpec::upsample(3, 3, 2);
    let weight = bilinear_kernel::<f64>(spec.kernel, 2, 3).unwrap();
    let x = Tensor4::from_fn(Shape4::new(1, 3, 4, 4).unwrap(), |_, c, _, _| (c + 1) as f64);
    let y = transposed_conv2d(&x, &weight, &spec).unwrap();
    for c in 0..3 {
        assert!((y.get(0, c, 3, 4) - (c + 1) as f64).abs() < 1e-14);
    }
}
