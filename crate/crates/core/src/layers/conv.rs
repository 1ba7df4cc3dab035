//! 2-D cross-correlation and its transpose, lowered to GEMM through
//! `im2col` / `col2im`.
//!
//! Weight layouts:
//! - convolution: `[out_channels, in_channels, k, k]`
//! - transposed convolution: `[in_channels, out_channels, k, k]`
//!
//! Both layouts make the weight tensor a row-major matrix whose columns are
//! indexed by `(channel, ky, kx)`, the same ordering `im2col` uses for rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::{Real, Shape4, Tensor4};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvSpec {
    /// 3×3, stride 1, zero padding 1: keeps spatial size.
    pub fn conv3x3(in_channels: usize, out_channels: usize) -> Self {
        Self { in_channels, out_channels, kernel: 3, stride: 1, pad: 1 }
    }

    /// Transposed-convolution geometry that upsamples by exactly `factor`:
    /// kernel `2·factor`, stride `factor`, pad `factor/2`.
    pub fn upsample(in_channels: usize, out_channels: usize, factor: usize) -> Self {
        Self { in_channels, out_channels, kernel: 2 * factor, stride: factor, pad: factor / 2 }
    }

    fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 || self.kernel == 0 || self.stride == 0 {
            return invalid(format!("degenerate convolution spec {self:?}"));
        }
        Ok(())
    }

    /// Output size of the forward (non-transposed) convolution.
    pub fn conv_output(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let dim = |x: usize| -> Result<usize> {
            let padded = x + 2 * self.pad;
            if padded < self.kernel || !(padded - self.kernel).is_multiple_of(self.stride) {
                return invalid(format!(
                    "input extent {x} with kernel {}, stride {}, pad {} gives a non-integral output size",
                    self.kernel, self.stride, self.pad
                ));
            }
            Ok((padded - self.kernel) / self.stride + 1)
        };
        Ok((dim(h)?, dim(w)?))
    }

    /// Output size of the transposed convolution: `(x − 1)·stride − 2·pad + k`.
    pub fn transposed_output(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let dim = |x: usize| -> Result<usize> {
            let full = (x - 1) * self.stride + self.kernel;
            if full <= 2 * self.pad {
                return invalid(format!("transposed convolution of extent {x} collapses to zero"));
            }
            Ok(full - 2 * self.pad)
        };
        Ok((dim(h)?, dim(w)?))
    }
}

/// Gradients returned by the backward passes.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor4<T>,
    pub weights: Tensor4<T>,
    /// `None` for transposed convolutions, which carry no bias.
    pub bias: Option<Vec<T>>,
}

/// Geometry shared by `im2col` and `col2im`: an image of `channels×h×w`
/// scanned by a `k×k` window with the given stride and padding, producing
/// `oh×ow` window positions.
#[derive(Copy, Clone, Debug)]
struct Patches {
    channels: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl Patches {
    fn rows(&self) -> usize {
        self.channels * self.k * self.k
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }

    /// Source coordinate for window position `o` and tap `t`, or `None`
    /// when it falls in the zero padding.
    #[inline]
    fn src(&self, o: usize, t: usize, extent: usize) -> Option<usize> {
        let v = (o * self.stride + t) as isize - self.pad as isize;
        (v >= 0 && (v as usize) < extent).then_some(v as usize)
    }

    fn im2col<T: Real>(&self, img: &[T], col: &mut [T]) {
        let cols = self.cols();
        for c in 0..self.channels {
            let plane = &img[c * self.h * self.w..(c + 1) * self.h * self.w];
            for ky in 0..self.k {
                for kx in 0..self.k {
                    let row = (c * self.k + ky) * self.k + kx;
                    let dst = &mut col[row * cols..(row + 1) * cols];
                    for oy in 0..self.oh {
                        let out = &mut dst[oy * self.ow..(oy + 1) * self.ow];
                        match self.src(oy, ky, self.h) {
                            None => out.fill(T::zero()),
                            Some(y) => {
                                let line = &plane[y * self.w..(y + 1) * self.w];
                                for (ox, o) in out.iter_mut().enumerate() {
                                    *o = match self.src(ox, kx, self.w) {
                                        Some(x) => line[x],
                                        None => T::zero(),
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Scatter-adds columns back into an image (the adjoint of `im2col`).
    fn col2im<T: Real>(&self, col: &[T], img: &mut [T]) {
        img.fill(T::zero());
        let cols = self.cols();
        for c in 0..self.channels {
            let plane = &mut img[c * self.h * self.w..(c + 1) * self.h * self.w];
            for ky in 0..self.k {
                for kx in 0..self.k {
                    let row = (c * self.k + ky) * self.k + kx;
                    let src = &col[row * cols..(row + 1) * cols];
                    for oy in 0..self.oh {
                        let Some(y) = self.src(oy, ky, self.h) else {
                            continue;
                        };
                        let line = &mut plane[y * self.w..(y + 1) * self.w];
                        for ox in 0..self.ow {
                            if let Some(x) = self.src(ox, kx, self.w) {
                                line[x] += src[oy * self.ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_weights<T: Real>(weights: &Tensor4<T>, expected: [usize; 4], what: &str) -> Result<()> {
    let s = weights.shape();
    if [s.n, s.c, s.h, s.w] != expected {
        return invalid(format!("{what} weights have shape {s}, spec requires {expected:?}"));
    }
    Ok(())
}

fn check_channels(input: Shape4, expected: usize, what: &str) -> Result<()> {
    if input.c != expected {
        return invalid(format!("{what}: input has {} channels, spec expects {expected}", input.c));
    }
    Ok(())
}

/// Sums per-item partial gradients in item order so the result does not
/// depend on how the batch was split across threads.
fn ordered_sum<T: Real>(parts: Vec<Vec<T>>, len: usize) -> Vec<T> {
    let mut acc = vec![T::zero(); len];
    for p in parts {
        for (a, b) in acc.iter_mut().zip(p) {
            *a += b;
        }
    }
    acc
}

/// Zero-padded cross-correlation with bias.
pub fn conv2d<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    bias: &[T],
    spec: &ConvSpec,
) -> Result<Tensor4<T>> {
    spec.validate()?;
    let s = input.shape();
    check_channels(s, spec.in_channels, "conv2d")?;
    let k = spec.kernel;
    check_weights(weights, [spec.out_channels, spec.in_channels, k, k], "conv2d")?;
    if bias.len() != spec.out_channels {
        return invalid(format!("conv2d: bias has {} entries, expected {}", bias.len(), spec.out_channels));
    }
    let (oh, ow) = spec.conv_output(s.h, s.w)?;
    let geo = Patches { channels: s.c, h: s.h, w: s.w, k, stride: spec.stride, pad: spec.pad, oh, ow };
    let out_shape = Shape4::new(s.n, spec.out_channels, oh, ow)?;
    let mut out = Tensor4::zeros(out_shape);
    let p = geo.cols();
    out.data_mut().par_chunks_mut(out_shape.item()).enumerate().for_each(|(n, dst)| {
        let mut col = vec![T::zero(); geo.rows() * p];
        geo.im2col(input.item(n), &mut col);
        T::gemm(spec.out_channels, p, geo.rows(), weights.data(), false, &col, false, dst, false);
        for (co, &b) in bias.iter().enumerate() {
            for v in &mut dst[co * p..(co + 1) * p] {
                *v += b;
            }
        }
    });
    Ok(out)
}

/// Gradients of [`conv2d`] with respect to input, weights and bias.
pub fn conv2d_backward<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    spec: &ConvSpec,
) -> Result<ConvGrads<T>> {
    spec.validate()?;
    let s = input.shape();
    check_channels(s, spec.in_channels, "conv2d_backward")?;
    let k = spec.kernel;
    check_weights(weights, [spec.out_channels, spec.in_channels, k, k], "conv2d_backward")?;
    let (oh, ow) = spec.conv_output(s.h, s.w)?;
    let g = grad_out.shape();
    if g != Shape4::new(s.n, spec.out_channels, oh, ow)? {
        return invalid(format!("conv2d_backward: upstream gradient has shape {g}"));
    }
    let geo = Patches { channels: s.c, h: s.h, w: s.w, k, stride: spec.stride, pad: spec.pad, oh, ow };
    let (rows, p, cout) = (geo.rows(), geo.cols(), spec.out_channels);
    let mut grad_in = Tensor4::zeros(s);
    let parts: Vec<(Vec<T>, Vec<T>)> = grad_in
        .data_mut()
        .par_chunks_mut(s.item())
        .enumerate()
        .map(|(n, dx)| {
            let dy = grad_out.item(n);
            let mut col = vec![T::zero(); rows * p];
            geo.im2col(input.item(n), &mut col);
            let mut dw = vec![T::zero(); cout * rows];
            T::gemm(cout, rows, p, dy, false, &col, true, &mut dw, false);
            T::gemm(rows, p, cout, weights.data(), true, dy, false, &mut col, false);
            geo.col2im(&col, dx);
            let db = (0..cout).map(|co| dy[co * p..(co + 1) * p].iter().copied().sum()).collect();
            (dw, db)
        })
        .collect();
    let (dws, dbs): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(ConvGrads {
        input: grad_in,
        weights: Tensor4::new(weights.shape(), ordered_sum(dws, cout * rows))?,
        bias: Some(ordered_sum(dbs, cout)),
    })
}

fn transposed_geometry<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    spec: &ConvSpec,
    what: &str,
) -> Result<(Patches, Shape4)> {
    spec.validate()?;
    let s = input.shape();
    check_channels(s, spec.in_channels, what)?;
    let k = spec.kernel;
    check_weights(weights, [spec.in_channels, spec.out_channels, k, k], what)?;
    let (oh, ow) = spec.transposed_output(s.h, s.w)?;
    // The "image" side of the patch geometry is the (larger) output; its
    // window positions line up one-to-one with input pixels.
    let geo = Patches {
        channels: spec.out_channels,
        h: oh,
        w: ow,
        k,
        stride: spec.stride,
        pad: spec.pad,
        oh: s.h,
        ow: s.w,
    };
    debug_assert_eq!(spec.conv_output(oh, ow)?, (s.h, s.w));
    Ok((geo, Shape4::new(s.n, spec.out_channels, oh, ow)?))
}

/// Transposed convolution (no bias): every input pixel scatters its
/// weighted `k×k` footprint into the output with the given stride.
pub fn transposed_conv2d<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    spec: &ConvSpec,
) -> Result<Tensor4<T>> {
    let (geo, out_shape) = transposed_geometry(input, weights, spec, "transposed_conv2d")?;
    let (rows, p) = (geo.rows(), geo.cols());
    let mut out = Tensor4::zeros(out_shape);
    out.data_mut().par_chunks_mut(out_shape.item()).enumerate().for_each(|(n, dst)| {
        let mut col = vec![T::zero(); rows * p];
        T::gemm(rows, p, spec.in_channels, weights.data(), true, input.item(n), false, &mut col, false);
        geo.col2im(&col, dst);
    });
    Ok(out)
}

/// Gradients of [`transposed_conv2d`] with respect to input and weights.
pub fn transposed_conv2d_backward<T: Real>(
    input: &Tensor4<T>,
    weights: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    spec: &ConvSpec,
) -> Result<ConvGrads<T>> {
    let (geo, out_shape) = transposed_geometry(input, weights, spec, "transposed_conv2d_backward")?;
    if grad_out.shape() != out_shape {
        return invalid(format!(
            "transposed_conv2d_backward: upstream gradient has shape {}, expected {out_shape}",
            grad_out.shape()
        ));
    }
    let s = input.shape();
    let (rows, p, cin) = (geo.rows(), geo.cols(), spec.in_channels);
    let mut grad_in = Tensor4::zeros(s);
    let dws: Vec<Vec<T>> = grad_in
        .data_mut()
        .par_chunks_mut(s.item())
        .enumerate()
        .map(|(n, dx)| {
            let mut col = vec![T::zero(); rows * p];
            geo.im2col(grad_out.item(n), &mut col);
            T::gemm(cin, p, rows, weights.data(), false, &col, false, dx, false);
            let mut dw = vec![T::zero(); cin * rows];
            T::gemm(cin, rows, p, input.item(n), false, &col, true, &mut dw, false);
            dw
        })
        .collect();
    Ok(ConvGrads {
        input: grad_in,
        weights: Tensor4::new(weights.shape(), ordered_sum(dws, cin * rows))?,
        bias: None,
    })
}
