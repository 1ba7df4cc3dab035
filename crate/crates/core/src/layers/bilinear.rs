use crate::error::{invalid, Result};
use crate::tensor::{Real, Shape4, Tensor4};

/// 1-D bilinear upsampling taps for an integer `factor`, kernel length
/// `2·factor`: `w[i] = 1 − |i − c| / factor` with `c = (2·factor − 1) / 2`.
/// For factor 2 this is `(0.25, 0.75, 0.75, 0.25)`.
pub fn bilinear_taps(factor: usize) -> Vec<f64> {
    let size = 2 * factor;
    let center = (size as f64 - 1.0) / 2.0;
    (0..size).map(|i| 1.0 - (i as f64 - center).abs() / factor as f64).collect()
}

/// Transposed-convolution weights `[channels, channels, size, size]` that
/// perform per-channel bilinear upsampling by `factor`. Channel `i` only
/// feeds channel `i`.
pub fn bilinear_kernel<T: Real>(size: usize, factor: usize, channels: usize) -> Result<Tensor4<T>> {
    if factor < 1 || size != 2 * factor || channels == 0 {
        return invalid(format!(
            "bilinear kernel needs size == 2·factor and channels >= 1 (got size {size}, factor {factor}, channels {channels})"
        ));
    }
    let taps = bilinear_taps(factor);
    let shape = Shape4::new(channels, channels, size, size)?;
    Ok(Tensor4::from_fn(shape, |i, o, y, x| if i == o { T::from_f64(taps[y] * taps[x]) } else { T::zero() }))
}
