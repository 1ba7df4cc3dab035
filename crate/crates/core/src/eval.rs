//! Super-resolution front ends and the benchmark evaluation harness.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::data::{downscale, extract_y, load_image, rgb_to_ycbcr, upscale, ycbcr_to_rgb, ImageBuffer};
use crate::error::{invalid, Result};
use crate::metrics::{psnr, ssim};
use crate::model::LapSrn;
use crate::tensor::Real;

/// Anything that turns a luminance image into one `scale` times larger.
pub trait SuperResolver: Sync {
    fn name(&self) -> String;

    fn super_resolve(&self, lr: &ImageBuffer, scale: usize) -> Result<ImageBuffer>;
}

/// Plain bicubic upscaling.
#[derive(Copy, Clone, Debug, Default)]
pub struct Bicubic;

impl SuperResolver for Bicubic {
    fn name(&self) -> String {
        "bicubic".into()
    }

    fn super_resolve(&self, lr: &ImageBuffer, scale: usize) -> Result<ImageBuffer> {
        upscale(lr, scale)
    }
}

/// A trained network. Requests below the model's scale stop after the
/// level that produces them.
pub struct ModelResolver<'a, T> {
    pub model: &'a LapSrn<T>,
}

impl<'a, T: Real> ModelResolver<'a, T> {
    pub fn new(model: &'a LapSrn<T>) -> Self {
        Self { model }
    }

    /// Every pyramid output up to `max_scale`, coarsest first.
    pub fn all_scales(&self, lr: &ImageBuffer, max_scale: usize) -> Result<Vec<(usize, ImageBuffer)>> {
        let n = self.model.levels_for_scale(max_scale)?;
        let out = self.model.forward_levels(&lr.to_tensor::<T>()?, n)?;
        out.outputs.iter().zip(&out.scales).map(|(t, &s)| Ok((s, ImageBuffer::from_tensor(t, 0)?))).collect()
    }
}

impl<T: Real> SuperResolver for ModelResolver<'_, T> {
    fn name(&self) -> String {
        format!("lapsrn x{}", self.model.config().scale)
    }

    fn super_resolve(&self, lr: &ImageBuffer, scale: usize) -> Result<ImageBuffer> {
        let out = self.model.forward_scale(&lr.to_tensor::<T>()?, scale)?;
        ImageBuffer::from_tensor(&out, 0)
    }
}

/// Super-resolves a grey or colour image. Colour images go through the
/// resolver on luminance only; chroma is bicubic-upscaled and recombined.
pub fn super_resolve_image(
    resolver: &dyn SuperResolver,
    img: &ImageBuffer,
    scale: usize,
) -> Result<ImageBuffer> {
    if img.channels() == 1 {
        return resolver.super_resolve(img, scale);
    }
    let ycc = rgb_to_ycbcr(img)?;
    let y = resolver.super_resolve(&ycc.channel(0)?, scale)?;
    recombine(&y, &ycc, scale)
}

/// Puts a super-resolved luminance plane back together with the upscaled
/// chroma of `ycc`.
pub fn recombine(y: &ImageBuffer, ycc: &ImageBuffer, scale: usize) -> Result<ImageBuffer> {
    let cb = upscale(&ycc.channel(1)?, scale)?;
    let cr = upscale(&ycc.channel(2)?, scale)?;
    ycbcr_to_rgb(&ImageBuffer::merge([y, &cb, &cr])?)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EvalProtocol {
    pub scale: usize,
    /// Border pixels ignored by both metrics.
    pub shave: usize,
}

impl EvalProtocol {
    /// Shave equal to the scale factor.
    pub fn new(scale: usize) -> Self {
        Self { scale, shave: scale }
    }

    pub fn with_shave(mut self, shave: usize) -> Self {
        self.shave = shave;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub image: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug)]
pub struct EvalSummary {
    /// Sorted by image id.
    pub records: Vec<EvalRecord>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub mean_ms: f64,
    /// Images that could not be evaluated, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl EvalSummary {
    pub fn incomplete(&self) -> bool {
        !self.skipped.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("image,psnr_db,ssim,ms\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{:.3}\n",
                r.image,
                fmt_metric(r.psnr_db),
                fmt_metric(r.ssim),
                r.runtime_ms
            ));
        }
        s.push_str(&format!(
            "MEAN,{},{},{:.3}\n",
            fmt_metric(self.mean_psnr),
            fmt_metric(self.mean_ssim),
            self.mean_ms
        ));
        s
    }

    pub fn to_json(&self) -> Value {
        let row = |image: &str, p: f64, q: f64, ms: f64| json!({"image": image, "psnr_db": json_metric(p), "ssim": json_metric(q), "ms": ms});
        let mut rows: Vec<Value> =
            self.records.iter().map(|r| row(&r.image, r.psnr_db, r.ssim, r.runtime_ms)).collect();
        rows.push(row("MEAN", self.mean_psnr, self.mean_ssim, self.mean_ms));
        Value::Array(rows)
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn json_metric(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_metric(v))
    }
}

fn image_id(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

/// Scores one ground-truth image: crop to a multiple of the scale, take
/// luminance, downscale, super-resolve, compare.
pub fn evaluate_image(
    resolver: &dyn SuperResolver,
    hr: &ImageBuffer,
    protocol: &EvalProtocol,
) -> Result<(f64, f64, f64)> {
    let hr_y = extract_y(&hr.crop_to_multiple(protocol.scale)?)?;
    let lr = downscale(&hr_y, protocol.scale)?;
    let start = Instant::now();
    let sr = resolver.super_resolve(&lr, protocol.scale)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let p = psnr(&hr_y, &sr, protocol.shave)?;
    let (a, b) = if protocol.shave == 0 {
        (hr_y, sr)
    } else {
        (hr_y.shave(protocol.shave)?, sr.shave(protocol.shave)?)
    };
    Ok((p, ssim(&a, &b)?, ms))
}

/// Evaluates every image in `paths`. Unreadable images are skipped with a
/// warning and listed in the summary.
pub fn evaluate_dataset(
    resolver: &dyn SuperResolver,
    paths: &[PathBuf],
    protocol: &EvalProtocol,
) -> Result<EvalSummary> {
    if paths.is_empty() {
        return invalid("no images to evaluate");
    }
    let results: Vec<(PathBuf, Result<EvalRecord>)> = paths
        .par_iter()
        .map(|path| {
            let r = load_image(path).and_then(|hr| {
                let (psnr_db, ssim, runtime_ms) = evaluate_image(resolver, &hr, protocol)?;
                Ok(EvalRecord { image: image_id(path), psnr_db, ssim, runtime_ms })
            });
            (path.clone(), r)
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (path, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                skipped.push((path, e.to_string()));
            }
        }
    }
    records.sort_by(|a, b| a.image.cmp(&b.image));
    let n = records.len().max(1) as f64;
    let mean = |f: fn(&EvalRecord) -> f64| {
        if records.is_empty() {
            f64::NAN
        } else {
            records.iter().map(f).sum::<f64>() / n
        }
    };
    Ok(EvalSummary {
        mean_psnr: mean(|r| r.psnr_db),
        mean_ssim: mean(|r| r.ssim),
        mean_ms: mean(|r| r.runtime_ms),
        records,
        skipped,
    })
}
