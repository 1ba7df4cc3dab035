//! The Laplacian pyramid super-resolution network.
//!
//! Per pyramid level `s` the network has two branches:
//!
//! ```text
//!   features(s-1) ──► d × [conv3x3 + LReLU] ──► transposed conv ×2 + LReLU ──► features(s)
//!                                                                           │
//!                                                                   residual conv (1 ch)
//!                                                                           │
//!   image(s-1) ─────► transposed conv ×2 ───────────────────────────────► (+) ──► image(s)
//! ```
//!
//! `features(0)` is the input embedding (one conv3x3 + LReLU applied to the
//! LR image) and `image(0)` is the LR image itself. Every level emits its
//! image, so an 8× model produces 2×, 4× and 8× results in a single pass and
//! can stop early when only a coarser scale is needed.
//!
//! Both transposed convolutions start as bilinear interpolators; the feature
//! branch can use He init instead via [`UpsamplerInit`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::layers::{
    bilinear_kernel, conv2d, conv2d_backward, leaky_relu, leaky_relu_backward, transposed_conv2d,
    transposed_conv2d_backward, ConvSpec, LossKind, DEFAULT_LRELU_SLOPE,
};
use crate::tensor::{elementwise_add, ParamRole, Parameter, Real, Shape4, Tensor4};

/// Architecture descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapSrnConfig {
    /// Total upscaling factor: 2, 4 or 8.
    pub scale: usize,
    /// Feature convolutions per level.
    pub depth: usize,
    pub channels: usize,
    pub lrelu_slope: f64,
    /// When false the network upsamples by `scale` in a single step.
    pub use_pyramid: bool,
    /// When false there is no image branch and each level predicts the
    /// HR image directly.
    pub use_residual: bool,
    pub loss_kind: LossKind,
    pub charbonnier_eps: f64,
    #[serde(default)]
    pub feature_up_init: UpsamplerInit,
}

/// Initialization of the feature-branch transposed convolutions. Image-branch
/// upsamplers always start as bilinear interpolators.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpsamplerInit {
    /// Per-channel bilinear interpolation kernel.
    #[default]
    Bilinear,
    /// Random normal with the same fan-in rule as the convolutions.
    He,
}

impl std::str::FromStr for UpsamplerInit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bilinear" => Ok(Self::Bilinear),
            "he" => Ok(Self::He),
            other => Err(format!("unknown upsampler init '{other}' (expected bilinear or he)")),
        }
    }
}

impl LapSrnConfig {
    /// Default configuration for a scale: depth 10 for 2× and 4×, 5 for 8×.
    pub fn new(scale: usize) -> Self {
        Self {
            scale,
            depth: if scale >= 8 { 5 } else { 10 },
            channels: 64,
            lrelu_slope: DEFAULT_LRELU_SLOPE,
            use_pyramid: true,
            use_residual: true,
            loss_kind: LossKind::Charbonnier,
            charbonnier_eps: 1e-3,
            feature_up_init: UpsamplerInit::Bilinear,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_channels(mut self, channels: usize) -> Self {
        self.channels = channels;
        self
    }

    /// `log2(scale)`, whether or not the pyramid is enabled.
    pub fn pyramid_levels(&self) -> usize {
        self.scale.trailing_zeros() as usize
    }

    /// Number of network stages actually built.
    pub fn levels(&self) -> usize {
        if self.use_pyramid {
            self.pyramid_levels()
        } else {
            1
        }
    }

    /// Upsampling factor of each stage.
    pub fn level_factor(&self) -> usize {
        if self.use_pyramid {
            2
        } else {
            self.scale
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.scale, 2 | 4 | 8) {
            return invalid(format!("scale must be 2, 4 or 8, got {}", self.scale));
        }
        if self.depth < 1 {
            return invalid("depth must be >= 1");
        }
        if self.channels < 1 {
            return invalid("channels must be >= 1");
        }
        if !self.lrelu_slope.is_finite() {
            return invalid(format!("lrelu_slope must be finite, got {}", self.lrelu_slope));
        }
        if !(self.charbonnier_eps > 0.0 && self.charbonnier_eps.is_finite()) {
            return invalid(format!("charbonnier_eps must be positive, got {}", self.charbonnier_eps));
        }
        Ok(())
    }
}

/// Number of convolution plus transposed-convolution layers.
///
/// Each stage has `depth` feature convs, one feature upsampler, one residual
/// predictor and (with residual learning) one image upsampler; the input
/// embedding conv is shared.
pub fn count_layers(config: &LapSrnConfig) -> usize {
    let image_branch = usize::from(config.use_residual);
    config.levels() * (config.depth + 2 + image_branch) + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conv<T> {
    pub spec: ConvSpec,
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
}

impl<T: Real> Conv<T> {
    fn he(spec: ConvSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let shape = Shape4::new(spec.out_channels, spec.in_channels, spec.kernel, spec.kernel)?;
        Ok(Self {
            spec,
            weight: Parameter::new(he_normal(shape, spec, rng)?, ParamRole::Weight),
            bias: Parameter::new(Tensor4::zeros(Shape4::new(1, spec.out_channels, 1, 1)?), ParamRole::Bias),
        })
    }

    pub fn forward(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        conv2d(x, &self.weight.value, self.bias.value.data(), &self.spec)
    }

    fn backward(&mut self, x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
        let g = conv2d_backward(x, &self.weight.value, grad_out, &self.spec)?;
        self.weight.accumulate(g.weights.data());
        if let Some(b) = &g.bias {
            self.bias.accumulate(b);
        }
        Ok(g.input)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Upsampler<T> {
    pub spec: ConvSpec,
    pub weight: Parameter<T>,
}

impl<T: Real> Upsampler<T> {
    pub fn forward(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        transposed_conv2d(x, &self.weight.value, &self.spec)
    }

    fn backward(&mut self, x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
        let g = transposed_conv2d_backward(x, &self.weight.value, grad_out, &self.spec)?;
        self.weight.accumulate(g.weights.data());
        Ok(g.input)
    }
}

fn he_normal<T: Real>(shape: Shape4, spec: ConvSpec, rng: &mut ChaCha8Rng) -> Result<Tensor4<T>> {
    let fan_in = (spec.kernel * spec.kernel * spec.in_channels) as f64;
    let normal = Normal::new(0.0, (2.0 / fan_in).sqrt())
        .map_err(|e| Error::InvalidArgument(format!("he init: {e}")))?;
    Ok(Tensor4::from_fn(shape, |_, _, _, _| T::from_f64(normal.sample(rng))))
}

/// One pyramid stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Level<T> {
    pub features: Vec<Conv<T>>,
    pub feature_up: Upsampler<T>,
    pub residual: Conv<T>,
    /// Absent when residual learning is disabled.
    pub image_up: Option<Upsampler<T>>,
}

/// Per-level predictions, coarsest first.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiScaleOutput<T> {
    pub outputs: Vec<Tensor4<T>>,
    /// Cumulative upscaling factor of each entry of `outputs`.
    pub scales: Vec<usize>,
}

impl<T: Real> MultiScaleOutput<T> {
    pub fn finest(&self) -> &Tensor4<T> {
        self.outputs.last().expect("a forward pass yields at least one level")
    }

    pub fn at_scale(&self, scale: usize) -> Option<&Tensor4<T>> {
        self.scales.iter().position(|&s| s == scale).map(|i| &self.outputs[i])
    }
}

#[derive(Clone, Debug)]
struct LevelTrace<T> {
    conv_inputs: Vec<Tensor4<T>>,
    conv_pre: Vec<Tensor4<T>>,
    up_input: Tensor4<T>,
    up_pre: Tensor4<T>,
    features: Tensor4<T>,
    image_input: Option<Tensor4<T>>,
}

/// Activations retained by [`LapSrn::forward_train`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace<T> {
    input: Tensor4<T>,
    embed_pre: Tensor4<T>,
    levels: Vec<LevelTrace<T>>,
}

impl<T: Real> Trace<T> {
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// Which side of zero every activation input fell on, in a fixed
    /// order. Two passes with equal patterns ran through the same linear
    /// piece of every activation.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut tensors = vec![&self.embed_pre];
        for l in &self.levels {
            tensors.extend(&l.conv_pre);
            tensors.push(&l.up_pre);
        }
        tensors.into_iter().flat_map(|t| t.data().iter().map(|&v| v >= T::zero())).collect()
    }
}

/// Kind of a layer in [`LapSrn::layer_list`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    TransposedConv,
}

/// Structural description of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerInfo {
    pub name: String,
    pub kind: LayerKind,
    pub spec: ConvSpec,
    pub activation: bool,
    pub bilinear_init: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LapSrn<T> {
    config: LapSrnConfig,
    embed: Conv<T>,
    levels: Vec<Level<T>>,
}

/// Builds a freshly initialized model. Deterministic in `seed`.
pub fn build_model<T: Real>(config: &LapSrnConfig, seed: u64) -> Result<LapSrn<T>> {
    LapSrn::new(config, seed)
}

impl<T: Real> LapSrn<T> {
    pub fn new(config: &LapSrnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = config.channels;
        let factor = config.level_factor();
        let embed = Conv::he(ConvSpec::conv3x3(1, ch), &mut rng)?;
        let mut levels = Vec::with_capacity(config.levels());
        for _ in 0..config.levels() {
            let features = (0..config.depth)
                .map(|_| Conv::he(ConvSpec::conv3x3(ch, ch), &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let up_spec = ConvSpec::upsample(ch, ch, factor);
            let up_weight = match config.feature_up_init {
                UpsamplerInit::Bilinear => bilinear_kernel(up_spec.kernel, factor, ch)?,
                UpsamplerInit::He => {
                    let shape = Shape4::new(ch, ch, up_spec.kernel, up_spec.kernel)?;
                    he_normal(shape, up_spec, &mut rng)?
                }
            };
            let feature_up =
                Upsampler { spec: up_spec, weight: Parameter::new(up_weight, ParamRole::Weight) };
            let residual = Conv::he(ConvSpec::conv3x3(ch, 1), &mut rng)?;
            let image_up = if config.use_residual {
                let spec = ConvSpec::upsample(1, 1, factor);
                Some(Upsampler {
                    spec,
                    weight: Parameter::new(bilinear_kernel(spec.kernel, factor, 1)?, ParamRole::Weight),
                })
            } else {
                None
            };
            levels.push(Level { features, feature_up, residual, image_up });
        }
        Ok(Self { config: config.clone(), embed, levels })
    }

    pub fn config(&self) -> &LapSrnConfig {
        &self.config
    }

    pub fn embed(&self) -> &Conv<T> {
        &self.embed
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    pub fn levels_mut(&mut self) -> &mut [Level<T>] {
        &mut self.levels
    }

    pub fn count_layers(&self) -> usize {
        count_layers(&self.config)
    }

    /// Every layer in evaluation order.
    pub fn layer_list(&self) -> Vec<LayerInfo> {
        let conv = |name: String, c: &Conv<T>, activation| LayerInfo {
            name,
            kind: LayerKind::Conv,
            spec: c.spec,
            activation,
            bilinear_init: false,
        };
        let mut out = vec![conv("embed".into(), &self.embed, true)];
        for (s, level) in self.levels.iter().enumerate() {
            let s = s + 1;
            for (i, c) in level.features.iter().enumerate() {
                out.push(conv(format!("level{s}.conv{i}"), c, true));
            }
            out.push(LayerInfo {
                name: format!("level{s}.feature_up"),
                kind: LayerKind::TransposedConv,
                spec: level.feature_up.spec,
                activation: true,
                bilinear_init: self.config.feature_up_init == UpsamplerInit::Bilinear,
            });
            out.push(conv(format!("level{s}.residual"), &level.residual, false));
            if let Some(up) = &level.image_up {
                out.push(LayerInfo {
                    name: format!("level{s}.image_up"),
                    kind: LayerKind::TransposedConv,
                    spec: up.spec,
                    activation: false,
                    bilinear_init: true,
                });
            }
        }
        out
    }

    /// Parameters in a fixed order with stable, unique names.
    pub fn named_params(&self) -> Vec<(String, &Parameter<T>)> {
        let mut out = vec![
            ("embed.weight".to_string(), &self.embed.weight),
            ("embed.bias".to_string(), &self.embed.bias),
        ];
        for (s, level) in self.levels.iter().enumerate() {
            let s = s + 1;
            for (i, c) in level.features.iter().enumerate() {
                out.push((format!("level{s}.conv{i}.weight"), &c.weight));
                out.push((format!("level{s}.conv{i}.bias"), &c.bias));
            }
            out.push((format!("level{s}.feature_up.weight"), &level.feature_up.weight));
            out.push((format!("level{s}.residual.weight"), &level.residual.weight));
            out.push((format!("level{s}.residual.bias"), &level.residual.bias));
            if let Some(up) = &level.image_up {
                out.push((format!("level{s}.image_up.weight"), &up.weight));
            }
        }
        out
    }

    /// Mutable counterpart of [`named_params`](Self::named_params), same order.
    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Parameter<T>)> {
        let mut out = vec![
            ("embed.weight".to_string(), &mut self.embed.weight),
            ("embed.bias".to_string(), &mut self.embed.bias),
        ];
        for (s, level) in self.levels.iter_mut().enumerate() {
            let s = s + 1;
            for (i, c) in level.features.iter_mut().enumerate() {
                out.push((format!("level{s}.conv{i}.weight"), &mut c.weight));
                out.push((format!("level{s}.conv{i}.bias"), &mut c.bias));
            }
            out.push((format!("level{s}.feature_up.weight"), &mut level.feature_up.weight));
            out.push((format!("level{s}.residual.weight"), &mut level.residual.weight));
            out.push((format!("level{s}.residual.bias"), &mut level.residual.bias));
            if let Some(up) = &mut level.image_up {
                out.push((format!("level{s}.image_up.weight"), &mut up.weight));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.zero_grad();
        }
    }

    /// Same architecture and weights in another precision.
    pub fn cast<U: Real>(&self) -> LapSrn<U> {
        fn p<T: Real, U: Real>(x: &Parameter<T>) -> Parameter<U> {
            Parameter {
                value: x.value.cast(),
                grad: x.grad.cast(),
                momentum: x.momentum.cast(),
                role: x.role,
            }
        }
        fn c<T: Real, U: Real>(x: &Conv<T>) -> Conv<U> {
            Conv { spec: x.spec, weight: p(&x.weight), bias: p(&x.bias) }
        }
        fn u<T: Real, U: Real>(x: &Upsampler<T>) -> Upsampler<U> {
            Upsampler { spec: x.spec, weight: p(&x.weight) }
        }
        LapSrn {
            config: self.config.clone(),
            embed: c(&self.embed),
            levels: self
                .levels
                .iter()
                .map(|l| Level {
                    features: l.features.iter().map(c).collect(),
                    feature_up: u(&l.feature_up),
                    residual: c(&l.residual),
                    image_up: l.image_up.as_ref().map(u),
                })
                .collect(),
        }
    }

    fn check_input(&self, x: &Tensor4<T>) -> Result<()> {
        let s = x.shape();
        if s.c != 1 {
            return invalid(format!(
                "the network processes single-channel (luminance) input, got {} channels",
                s.c
            ));
        }
        if s.h < 3 || s.w < 3 {
            return invalid(format!("input must be at least 3x3, got {}x{}", s.h, s.w));
        }
        Ok(())
    }

    fn run(
        &self,
        input: &Tensor4<T>,
        n_levels: usize,
        keep: bool,
    ) -> Result<(MultiScaleOutput<T>, Option<Trace<T>>)> {
        self.check_input(input)?;
        if n_levels == 0 || n_levels > self.levels.len() {
            return Err(Error::Capability(format!(
                "model has {} levels, {n_levels} requested",
                self.levels.len()
            )));
        }
        let slope = self.config.lrelu_slope;
        let embed_pre = self.embed.forward(input)?;
        let mut feat = leaky_relu(&embed_pre, slope);
        let mut image = input.clone();
        let mut outputs = Vec::with_capacity(n_levels);
        let mut scales = Vec::with_capacity(n_levels);
        let mut traces = Vec::new();
        let factor = self.config.level_factor();
        for (idx, level) in self.levels[..n_levels].iter().enumerate() {
            let mut conv_inputs = Vec::new();
            let mut conv_pre = Vec::new();
            for conv in &level.features {
                let pre = conv.forward(&feat)?;
                let next = leaky_relu(&pre, slope);
                if keep {
                    conv_inputs.push(std::mem::replace(&mut feat, next));
                    conv_pre.push(pre);
                } else {
                    feat = next;
                }
            }
            let up_pre = level.feature_up.forward(&feat)?;
            let features = leaky_relu(&up_pre, slope);
            let residual = level.residual.forward(&features)?;
            let out = match &level.image_up {
                Some(up) => elementwise_add(&up.forward(&image)?, &residual)?,
                None => residual,
            };
            if keep {
                traces.push(LevelTrace {
                    conv_inputs,
                    conv_pre,
                    up_input: feat,
                    up_pre,
                    features: features.clone(),
                    image_input: level.image_up.as_ref().map(|_| image.clone()),
                });
            }
            outputs.push(out.clone());
            scales.push(factor.pow(idx as u32 + 1));
            image = out;
            feat = features;
        }
        let trace = keep.then(|| Trace { input: input.clone(), embed_pre, levels: traces });
        Ok((MultiScaleOutput { outputs, scales }, trace))
    }

    /// Full forward pass through every level.
    pub fn forward(&self, input: &Tensor4<T>) -> Result<MultiScaleOutput<T>> {
        Ok(self.run(input, self.levels.len(), false)?.0)
    }

    /// Forward pass truncated after the first `n_levels` levels; finer
    /// levels are never computed.
    pub fn forward_levels(&self, input: &Tensor4<T>, n_levels: usize) -> Result<MultiScaleOutput<T>> {
        Ok(self.run(input, n_levels, false)?.0)
    }

    /// Number of levels needed to reach `scale`, or a capability error.
    pub fn levels_for_scale(&self, scale: usize) -> Result<usize> {
        let max = self.config.scale;
        if !scale.is_power_of_two() || scale < 2 || scale > max {
            return Err(Error::Capability(format!(
                "requested {scale}x but the model supports at most {max}x (powers of two)"
            )));
        }
        if !self.config.use_pyramid {
            if scale != max {
                return Err(Error::Capability(format!(
                    "single-step model only produces {max}x output, {scale}x requested"
                )));
            }
            return Ok(1);
        }
        Ok(scale.trailing_zeros() as usize)
    }

    /// Output at exactly `scale`, computing only the levels it needs.
    pub fn forward_scale(&self, input: &Tensor4<T>, scale: usize) -> Result<Tensor4<T>> {
        let n = self.levels_for_scale(scale)?;
        let mut out = self.forward_levels(input, n)?;
        Ok(out.outputs.pop().expect("non-empty"))
    }

    /// Forward pass that keeps activations for [`backward`](Self::backward).
    pub fn forward_train(&self, input: &Tensor4<T>) -> Result<(MultiScaleOutput<T>, Trace<T>)> {
        let (out, trace) = self.run(input, self.levels.len(), true)?;
        Ok((out, trace.expect("trace requested")))
    }

    /// Backpropagates per-level output gradients through the whole network,
    /// accumulating into every parameter's `grad`. Returns the gradient with
    /// respect to the input image.
    pub fn backward(&mut self, trace: &Trace<T>, output_grads: &[Tensor4<T>]) -> Result<Tensor4<T>> {
        if output_grads.len() != trace.levels.len() {
            return invalid(format!(
                "backward: {} output gradients for {} levels",
                output_grads.len(),
                trace.levels.len()
            ));
        }
        let slope = self.config.lrelu_slope;
        let mut grad_input = Tensor4::zeros(trace.input.shape());
        // Gradient flowing into the image produced by the level above.
        let mut carry_image: Option<Tensor4<T>> = None;
        // Gradient flowing into the features produced by the level above.
        let mut carry_feat: Option<Tensor4<T>> = None;
        for (s, (level, lt)) in self.levels.iter_mut().zip(&trace.levels).enumerate().rev() {
            let mut d_out = output_grads[s].clone();
            if let Some(c) = carry_image.take() {
                d_out.add_assign(&c)?;
            }
            if let (Some(up), Some(img_in)) = (&mut level.image_up, &lt.image_input) {
                let d_img = up.backward(img_in, &d_out)?;
                if s == 0 {
                    grad_input.add_assign(&d_img)?;
                } else {
                    carry_image = Some(d_img);
                }
            }
            let mut d_feat = level.residual.backward(&lt.features, &d_out)?;
            if let Some(c) = carry_feat.take() {
                d_feat.add_assign(&c)?;
            }
            let d_up = leaky_relu_backward(&lt.up_pre, &d_feat, slope)?;
            let mut d = level.feature_up.backward(&lt.up_input, &d_up)?;
            for (i, conv) in level.features.iter_mut().enumerate().rev() {
                let d_pre = leaky_relu_backward(&lt.conv_pre[i], &d, slope)?;
                d = conv.backward(&lt.conv_inputs[i], &d_pre)?;
            }
            carry_feat = Some(d);
        }
        let d_embed = leaky_relu_backward(&trace.embed_pre, &carry_feat.expect("at least one level"), slope)?;
        let d_x = self.embed.backward(&trace.input, &d_embed)?;
        grad_input.add_assign(&d_x)?;
        Ok(grad_input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_counts() {
        assert_eq!(count_layers(&LapSrnConfig::new(4)), 27);
        assert_eq!(count_layers(&LapSrnConfig::new(2)), 14);
        assert_eq!(count_layers(&LapSrnConfig::new(8)), 25);
        let m = build_model::<f32>(&LapSrnConfig::new(4).with_channels(4), 0).unwrap();
        assert_eq!(m.layer_list().len(), 27);
    }

    #[test]
    fn default_depths() {
        assert_eq!(LapSrnConfig::new(2).depth, 10);
        assert_eq!(LapSrnConfig::new(4).depth, 10);
        assert_eq!(LapSrnConfig::new(8).depth, 5);
    }

    #[test]
    fn invalid_configs() {
        let mut c = LapSrnConfig::new(4);
        c.scale = 3;
        let msg = build_model::<f32>(&c, 0).unwrap_err().to_string();
        assert!(msg.contains("scale"), "{msg}");
        let c = LapSrnConfig::new(4).with_depth(0);
        assert!(build_model::<f32>(&c, 0).unwrap_err().to_string().contains("depth"));
    }

    #[test]
    fn names_unique() {
        let m = build_model::<f32>(&LapSrnConfig::new(8).with_channels(2), 1).unwrap();
        let names: Vec<_> = m.named_params().into_iter().map(|(n, _)| n).collect();
        let set: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), names.len());
    }

    #[test]
    fn rejects_color_input() {
        let m = build_model::<f32>(&LapSrnConfig::new(2).with_depth(1).with_channels(2), 1).unwrap();
        let x = Tensor4::zeros(Shape4::new(1, 3, 8, 8).unwrap());
        assert!(matches!(m.forward(&x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn capability_errors() {
        let m = build_model::<f32>(&LapSrnConfig::new(4).with_depth(1).with_channels(2), 1).unwrap();
        let x = Tensor4::zeros(Shape4::new(1, 1, 8, 8).unwrap());
        assert!(matches!(m.forward_scale(&x, 8), Err(Error::Capability(_))));
        assert!(matches!(m.forward_scale(&x, 3), Err(Error::Capability(_))));
        assert_eq!(m.forward_scale(&x, 2).unwrap().shape().h, 16);
    }
}
