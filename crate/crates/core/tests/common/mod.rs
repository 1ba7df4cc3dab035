//! Reference implementations and fixtures shared by the integration tests.
//! Everything here is written from the textbook definitions with plain
//! loops so it shares no code with the library.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn cli(args: &[&str]) -> Output {
    cli_with_env(args, &[])
}

pub fn cli_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lapsrn"));
    cmd.args(args).env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("the lapsrn binary runs")
}

/// Row-major `h × w` image with entries uniform in `[0, 1)`.
pub fn random_plane(h: usize, w: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..h * w).map(|_| rng.random::<f64>()).collect()
}

/// 2× bilinear interpolation with half-pixel centres and replicated edges:
/// each output sample mixes its nearest input sample (weight 3/4) with the
/// next nearest one (weight 1/4), separably.
pub fn bilinear_2x(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let taps = |o: usize, n: usize| -> (usize, usize) {
        let near = o / 2;
        let far = if o.is_multiple_of(2) { near.saturating_sub(1) } else { (near + 1).min(n - 1) };
        (near, far)
    };
    let (oh, ow) = (2 * h, 2 * w);
    let mut rows = vec![0.0; oh * w];
    for y in 0..oh {
        let (a, b) = taps(y, h);
        for x in 0..w {
            rows[y * w + x] = 0.75 * src[a * w + x] + 0.25 * src[b * w + x];
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let (a, b) = taps(x, w);
            out[y * ow + x] = 0.75 * rows[y * w + a] + 0.25 * rows[y * w + b];
        }
    }
    out
}

/// Keys' cubic convolution kernel with a = -0.5.
pub fn keys_cubic(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        1.5 * t * t * t - 2.5 * t * t + 1.0
    } else if t <= 2.0 {
        -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
    } else {
        0.0
    }
}

/// Resamples one line of samples the way MATLAB's `imresize` does: output
/// sample `i` (1-based) sits at `i / s + (1 - 1/s) / 2` in input coordinates,
/// the kernel is stretched by `1/s` when shrinking, weights are normalised
/// and out-of-range taps clamp to the edge.
pub fn imresize_line(src: &[f64], out_len: usize) -> Vec<f64> {
    let n = src.len();
    let s = out_len as f64 / n as f64;
    let stretch = if s < 1.0 { s } else { 1.0 };
    let support = 2.0 / stretch;
    (1..=out_len)
        .map(|i| {
            let u = i as f64 / s + 0.5 * (1.0 - 1.0 / s);
            let lo = (u - support).floor() as i64;
            let hi = (u + support).ceil() as i64;
            let (mut acc, mut norm) = (0.0, 0.0);
            for j in lo..=hi {
                let wgt = stretch * keys_cubic(stretch * (u - j as f64));
                if wgt == 0.0 {
                    continue;
                }
                let idx = (j - 1).clamp(0, n as i64 - 1) as usize;
                acc += wgt * src[idx];
                norm += wgt;
            }
            acc / norm
        })
        .collect()
}

/// Separable `imresize`-style bicubic resize of a row-major plane, rows
/// first, then columns.
pub fn imresize(src: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let mut tmp = vec![0.0; oh * w];
    for x in 0..w {
        let col: Vec<f64> = (0..h).map(|y| src[y * w + x]).collect();
        for (y, v) in imresize_line(&col, oh).into_iter().enumerate() {
            tmp[y * w + x] = v;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        let line = imresize_line(&tmp[y * w..(y + 1) * w], ow);
        out[y * ow..(y + 1) * ow].copy_from_slice(&line);
    }
    out
}

/// PSNR in dB for a peak of 1 over the whole plane.
pub fn psnr_direct(a: &[f64], b: &[f64]) -> f64 {
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    10.0 * (1.0 / mse).log10()
}
