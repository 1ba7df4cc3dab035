use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::tensor::{Real, Tensor4};

use super::augment::AugmentParams;
use super::color::extract_y;
use super::pyramid::build_gt_pyramid;
use super::ImageBuffer;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub batch: usize,
    /// HR patch side; the LR input side is `patch / scale`.
    pub patch: usize,
    pub scale: usize,
    /// Random downscale/rotation/flip per patch.
    pub augment: bool,
}

impl SamplerConfig {
    pub fn new(scale: usize) -> Self {
        Self { batch: 64, patch: 128, scale, augment: true }
    }

    fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return invalid("batch size must be >= 1");
        }
        if !self.scale.is_power_of_two() || self.scale < 2 {
            return invalid(format!("scale must be a power of two >= 2, got {}", self.scale));
        }
        if self.patch == 0 || !self.patch.is_multiple_of(self.scale) {
            return invalid(format!(
                "patch size {} must be a positive multiple of the scale {}",
                self.patch, self.scale
            ));
        }
        Ok(())
    }

    /// Smallest side an image needs to survive the worst-case 0.5 downscale.
    fn min_side(&self) -> usize {
        if self.augment {
            2 * self.patch
        } else {
            self.patch
        }
    }
}

/// LR inputs and per-level targets for one training step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainBatch<T> {
    /// `[N, 1, patch/scale, patch/scale]`.
    pub lr: Tensor4<T>,
    /// `targets[s-1]` is `[N, 1, 2^s·patch/scale, ...]`; the last is the HR patch.
    pub targets: Vec<Tensor4<T>>,
}

impl<T: Real> TrainBatch<T> {
    /// Target at cumulative scale `scale`.
    pub fn target(&self, scale: usize) -> Option<&Tensor4<T>> {
        if !scale.is_power_of_two() || scale < 2 {
            return None;
        }
        self.targets.get(scale.trailing_zeros() as usize - 1)
    }

    /// Assembles a batch from single-channel HR patches whose sides are a
    /// multiple of `scale`.
    pub fn from_patches(patches: &[ImageBuffer], scale: usize) -> Result<Self> {
        let mut lrs = Vec::with_capacity(patches.len());
        let mut levels: Vec<Vec<Tensor4<T>>> = Vec::new();
        for p in patches {
            let pyr = build_gt_pyramid(p, scale)?;
            lrs.push(pyr.lr.to_tensor()?);
            if levels.is_empty() {
                levels = vec![Vec::with_capacity(patches.len()); pyr.levels.len()];
            }
            for (dst, lvl) in levels.iter_mut().zip(&pyr.levels) {
                dst.push(lvl.to_tensor()?);
            }
        }
        Ok(Self {
            lr: Tensor4::stack(&lrs)?,
            targets: levels.iter().map(|l| Tensor4::stack(l)).collect::<Result<_>>()?,
        })
    }
}

fn usable(corpus: &[ImageBuffer], cfg: &SamplerConfig) -> Result<Vec<ImageBuffer>> {
    if corpus.is_empty() {
        return invalid("training corpus is empty");
    }
    let min = cfg.min_side();
    let mut out = Vec::with_capacity(corpus.len());
    for (i, img) in corpus.iter().enumerate() {
        if img.height().min(img.width()) < min {
            warn!("skipping corpus image {i}: {}x{} is smaller than {min} pixels", img.height(), img.width());
            continue;
        }
        out.push(extract_y(img)?);
    }
    if out.is_empty() {
        return invalid(format!("no corpus image is at least {min}x{min}"));
    }
    Ok(out)
}

fn draw_patch(images: &[ImageBuffer], cfg: &SamplerConfig, rng: &mut impl Rng) -> Result<ImageBuffer> {
    let img = &images[rng.random_range(0..images.len())];
    let params = if cfg.augment { AugmentParams::sample(rng) } else { AugmentParams::IDENTITY };
    let aug = params.apply(img);
    let y0 = rng.random_range(0..=aug.height() - cfg.patch);
    let x0 = rng.random_range(0..=aug.width() - cfg.patch);
    aug.crop(y0, x0, cfg.patch, cfg.patch)
}

/// Draws one augmented batch from `corpus` (colour images are reduced to
/// luminance; images too small for the patch size are skipped).
pub fn sample_batch<T: Real>(
    corpus: &[ImageBuffer],
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<TrainBatch<T>> {
    cfg.validate()?;
    let images = usable(corpus, cfg)?;
    let patches = (0..cfg.batch).map(|_| draw_patch(&images, cfg, rng)).collect::<Result<Vec<_>>>()?;
    TrainBatch::from_patches(&patches, cfg.scale)
}

/// A sampler that owns its filtered corpus and RNG.
#[derive(Clone, Debug)]
pub struct PatchSampler {
    images: Vec<ImageBuffer>,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl PatchSampler {
    pub fn new(corpus: &[ImageBuffer], cfg: SamplerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { images: usable(corpus, &cfg)?, cfg, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn next_batch<T: Real>(&mut self) -> Result<TrainBatch<T>> {
        let patches = (0..self.cfg.batch)
            .map(|_| draw_patch(&self.images, &self.cfg, &mut self.rng))
            .collect::<Result<Vec<_>>>()?;
        TrainBatch::from_patches(&patches, self.cfg.scale)
    }
}
