//! Image I/O, colour conversion, bicubic resampling, ground-truth pyramids
//! and the augmented training-patch sampler.

mod augment;
mod color;
mod image;
mod pyramid;
mod resize;
mod sampler;

use std::path::{Path, PathBuf};

pub use self::image::{is_supported_image, load_image, save_image, ImageBuffer};
pub use augment::{augment, flip_horizontal, flip_vertical, rotate90, AugmentParams};
pub use color::{extract_y, rgb_to_ycbcr, ycbcr_to_rgb};
pub use pyramid::{build_gt_pyramid, GroundTruthPyramid};
pub use resize::{bicubic_resize, cubic, downscale, resize_weights, upscale};
pub use sampler::{sample_batch, PatchSampler, SamplerConfig, TrainBatch};

use crate::error::{Error, Result};

/// Supported image files directly inside `dir`, sorted by name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    out.sort();
    Ok(out)
}

/// Reads an evaluation manifest: one path per line, relative to the
/// manifest's directory. Blank lines and `#` comments are ignored.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}
