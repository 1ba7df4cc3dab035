use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{invalid, Error, Result};
use crate::tensor::{Real, Shape4, Tensor4};

/// An image with values in `[0, 1]`, stored row-major H→W→C.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    h: usize,
    w: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(h: usize, w: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return invalid(format!("image dimensions must be >= 1, got {h}x{w}"));
        }
        if channels != 1 && channels != 3 {
            return invalid(format!("images have 1 or 3 channels, got {channels}"));
        }
        if data.len() != h * w * channels {
            return invalid(format!(
                "image data has {} values, {h}x{w}x{channels} needs {}",
                data.len(),
                h * w * channels
            ));
        }
        Ok(Self { h, w, channels, data })
    }

    pub fn filled(h: usize, w: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(h, w, channels, vec![value; h * w * channels])
    }

    pub fn from_fn(
        h: usize,
        w: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(h * w * channels);
        for y in 0..h {
            for x in 0..w {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(h, w, channels, data)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.w + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        self.data[(y * self.w + x) * self.channels + c] = v;
    }

    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// One channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Result<ImageBuffer> {
        if c >= self.channels {
            return invalid(format!("channel {c} out of range for {}-channel image", self.channels));
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        ImageBuffer::new(self.h, self.w, 1, data)
    }

    /// Interleaves three single-channel images.
    pub fn merge(planes: [&ImageBuffer; 3]) -> Result<ImageBuffer> {
        let (h, w) = (planes[0].h, planes[0].w);
        if planes.iter().any(|p| p.h != h || p.w != w || p.channels != 1) {
            return invalid("merge needs three single-channel planes of equal size");
        }
        let mut data = Vec::with_capacity(h * w * 3);
        for i in 0..h * w {
            for p in &planes {
                data.push(p.data[i]);
            }
        }
        ImageBuffer::new(h, w, 3, data)
    }

    /// Sub-image `[y0, y0+h) × [x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<ImageBuffer> {
        if h == 0 || w == 0 || y0 + h > self.h || x0 + w > self.w {
            return invalid(format!("crop {h}x{w} at ({y0}, {x0}) exceeds {}x{} image", self.h, self.w));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(h * w * c);
        for y in y0..y0 + h {
            let start = (y * self.w + x0) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        ImageBuffer::new(h, w, c, data)
    }

    /// Crops the bottom/right edges so both dimensions are multiples of `m`.
    pub fn crop_to_multiple(&self, m: usize) -> Result<ImageBuffer> {
        if m == 0 {
            return invalid("crop multiple must be >= 1");
        }
        let (h, w) = (self.h - self.h % m, self.w - self.w % m);
        if h == 0 || w == 0 {
            return invalid(format!("{}x{} image is smaller than {m}", self.h, self.w));
        }
        self.crop(0, 0, h, w)
    }

    /// Removes `n` pixels from every border.
    pub fn shave(&self, n: usize) -> Result<ImageBuffer> {
        if 2 * n >= self.h || 2 * n >= self.w {
            return invalid(format!("cannot shave {n} pixels from a {}x{} image", self.h, self.w));
        }
        self.crop(n, n, self.h - 2 * n, self.w - 2 * n)
    }

    /// Single-channel image as a `[1, 1, h, w]` tensor.
    pub fn to_tensor<T: Real>(&self) -> Result<Tensor4<T>> {
        if self.channels != 1 {
            return invalid(format!(
                "only single-channel images convert to tensors, got {} channels",
                self.channels
            ));
        }
        Tensor4::new(Shape4::new(1, 1, self.h, self.w)?, self.data.iter().map(|&v| T::from_f64(v)).collect())
    }

    /// Batch item `n`, channel 0 of a tensor as an image, clamped to `[0, 1]`.
    pub fn from_tensor<T: Real>(t: &Tensor4<T>, n: usize) -> Result<ImageBuffer> {
        let s = t.shape();
        if n >= s.n {
            return invalid(format!("batch index {n} out of range for {s}"));
        }
        let mut img = ImageBuffer::new(s.h, s.w, 1, t.plane(n, 0).iter().map(|v| v.as_f64()).collect())?;
        img.clamp01();
        Ok(img)
    }

    fn to_bytes(&self) -> Vec<u8> {
        // f64::round rounds half away from zero
        self.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }
}

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image { path: path.to_path_buf(), message: e.to_string() }
}

/// Whether `path` has an extension the loader accepts.
pub fn is_supported_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "bmp")
    )
}

/// Loads an 8-bit PNG or BMP; values become `byte / 255`. A BMP whose
/// pixels are all grey loads as a single channel.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path).map_err(|e| image_err(path, e))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Bmp) {
        return Err(image_err(path, "only PNG and BMP are supported"));
    }
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, raw) = match &img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => (1, img.to_luma8().into_raw()),
        _ => {
            let rgb = img.to_rgb8().into_raw();
            // BMP stores greyscale as a palette, which decodes to RGB.
            if format == ImageFormat::Bmp && rgb.chunks_exact(3).all(|p| p[0] == p[1] && p[1] == p[2]) {
                (1, rgb.chunks_exact(3).map(|p| p[0]).collect())
            } else {
                (3, rgb)
            }
        }
    };
    ImageBuffer::new(h, w, channels, raw.iter().map(|&b| b as f64 / 255.0).collect())
}

/// Saves as PNG or BMP (by extension), rounding half away from zero.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path).map_err(|e| image_err(path, e))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Bmp) {
        return Err(image_err(path, "only PNG and BMP are supported"));
    }
    let (w, h) = (img.w as u32, img.h as u32);
    let bytes = img.to_bytes();
    let dynamic = if img.channels == 1 {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("sized buffer"))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("sized buffer"))
    };
    dynamic.save_with_format(path, format).map_err(|e| image_err(path, e))
}
