//! Deeply supervised training: one loss term per pyramid level, SGD with
//! momentum and weight decay, and a step learning-rate schedule.

mod config;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{parse_config, ConfigEntry};

use crate::data::{PatchSampler, TrainBatch};
use crate::error::{invalid, Error, Result};
use crate::layers::{LossKind, Reduction};
use crate::model::{LapSrn, MultiScaleOutput};
use crate::tensor::{ParamRole, Parameter, Real, Tensor4};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_gamma: f64,
    pub lr_step_epochs: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub iters_per_epoch: usize,
    pub batch_n: usize,
    pub lr_floor: f64,
    pub seed: u64,
    /// Hard cap on epochs; the schedule reaches the floor near epoch 200.
    pub max_epochs: usize,
    /// HR patch side.
    pub patch_size: usize,
    pub augment: bool,
    /// Global gradient-norm clipping threshold; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub loss_reduction: Reduction,
    /// When false the log's `wall_ms` column is written as 0 so that logs
    /// of identical runs compare equal byte for byte.
    pub log_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_init: 1e-5,
            lr_gamma: 0.5,
            lr_step_epochs: 50,
            momentum: 0.9,
            weight_decay: 1e-4,
            iters_per_epoch: 1000,
            batch_n: 64,
            lr_floor: 1e-6,
            seed: 0,
            max_epochs: 200,
            patch_size: 128,
            augment: true,
            grad_clip: None,
            loss_reduction: Reduction::Mean,
            log_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_floor > 0.0 && self.lr_init > self.lr_floor) {
            return invalid(format!(
                "learning rates need lr_init > lr_floor > 0 (got {} and {})",
                self.lr_init, self.lr_floor
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return invalid(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.lr_gamma > 0.0 && self.lr_gamma <= 1.0) {
            return invalid(format!("lr_gamma must be in (0, 1], got {}", self.lr_gamma));
        }
        if self.weight_decay < 0.0 {
            return invalid("weight_decay must be >= 0");
        }
        if self.lr_step_epochs == 0 || self.iters_per_epoch == 0 || self.batch_n == 0 {
            return invalid("lr_step_epochs, iters_per_epoch and batch_n must be >= 1");
        }
        if let Some(c) = self.grad_clip {
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(c > 0.0) {
                return invalid(format!("grad_clip must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// `lr_init · gamma^⌊epoch / step⌋` before applying the floor.
pub fn unfloored_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    let steps = (epoch / cfg.lr_step_epochs) as i32;
    cfg.lr_init * cfg.lr_gamma.powi(steps)
}

/// Learning rate for `epoch`, never below `lr_floor`.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    unfloored_lr(epoch, cfg).max(cfg.lr_floor)
}

/// True once the schedule has decayed below the floor; training stops there.
pub fn schedule_exhausted(epoch: usize, cfg: &TrainConfig) -> bool {
    unfloored_lr(epoch, cfg) < cfg.lr_floor
}

/// Sum over levels of the per-level penalty between prediction and target.
/// Returns the total and the gradient for each level's output.
pub fn multiscale_loss<T: Real>(
    outputs: &[Tensor4<T>],
    targets: &[&Tensor4<T>],
    kind: LossKind,
    epsilon: f64,
    reduction: Reduction,
) -> Result<(f64, Vec<Tensor4<T>>)> {
    if outputs.len() != targets.len() {
        return invalid(format!("{} outputs but {} targets", outputs.len(), targets.len()));
    }
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(outputs.len());
    for (out, target) in outputs.iter().zip(targets) {
        let l = kind.evaluate(out, target, epsilon, reduction)?;
        total += l.loss;
        grads.push(l.grad);
    }
    Ok((total, grads))
}

/// The batch targets matching each of the model's outputs.
pub fn targets_for<'a, T: Real>(
    outputs: &MultiScaleOutput<T>,
    batch: &'a TrainBatch<T>,
) -> Result<Vec<&'a Tensor4<T>>> {
    outputs
        .scales
        .iter()
        .map(|&s| {
            batch
                .target(s)
                .ok_or_else(|| Error::InvalidArgument(format!("batch has no target for scale {s}")))
        })
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SgdConfig {
    pub momentum: f64,
    pub weight_decay: f64,
    pub grad_clip: Option<f64>,
}

impl From<&TrainConfig> for SgdConfig {
    fn from(c: &TrainConfig) -> Self {
        Self { momentum: c.momentum, weight_decay: c.weight_decay, grad_clip: c.grad_clip }
    }
}

/// One momentum-SGD update over named parameters, then zeroes gradients.
///
/// Per parameter: `g' = grad + wd·value` (weights only), `m ← μ·m + g'`,
/// `value ← value − lr·m`. Nothing is updated if any gradient is non-finite.
pub fn sgd_step<T: Real>(params: &mut [(String, &mut Parameter<T>)], cfg: &SgdConfig, lr: f64) -> Result<()> {
    for (name, p) in params.iter() {
        if !p.grad.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient in parameter '{name}'")));
        }
    }
    let clip_scale = match cfg.grad_clip {
        Some(max_norm) => {
            let norm = params
                .iter()
                .flat_map(|(_, p)| p.grad.data().iter().map(|g| g.as_f64() * g.as_f64()))
                .sum::<f64>()
                .sqrt();
            if norm > max_norm {
                max_norm / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    for (_, p) in params.iter_mut() {
        let decay = match p.role {
            ParamRole::Weight => cfg.weight_decay,
            ParamRole::Bias => 0.0,
        };
        let Parameter { value, grad, momentum, .. } = &mut **p;
        for ((v, g), m) in value.data_mut().iter_mut().zip(grad.data()).zip(momentum.data_mut()) {
            let g = clip_scale * g.as_f64() + decay * v.as_f64();
            let mv = cfg.momentum * m.as_f64() + g;
            *m = T::from_f64(mv);
            *v = T::from_f64(v.as_f64() - lr * mv);
        }
        p.zero_grad();
    }
    Ok(())
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub iter: usize,
    pub loss: f64,
    pub lr: f64,
    pub wall_ms: f64,
}

impl TrainLogRecord {
    pub const CSV_HEADER: &'static str = "epoch,iter,loss,lr,wall_ms";

    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{},{:.3}", self.epoch, self.iter, self.loss, self.lr, self.wall_ms)
    }
}

/// Where training batches come from.
pub trait BatchSource<T> {
    fn next_batch(&mut self) -> Result<TrainBatch<T>>;
}

impl<T: Real> BatchSource<T> for PatchSampler {
    fn next_batch(&mut self) -> Result<TrainBatch<T>> {
        PatchSampler::next_batch(self)
    }
}

/// Replays the same batch every iteration.
#[derive(Clone, Debug)]
pub struct FixedBatch<T>(pub TrainBatch<T>);

impl<T: Real> BatchSource<T> for FixedBatch<T> {
    fn next_batch(&mut self) -> Result<TrainBatch<T>> {
        Ok(self.0.clone())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Hooks invoked by [`train`]. Both default to doing nothing.
pub trait TrainObserver<T> {
    fn on_iteration(&mut self, _record: &TrainLogRecord) -> Result<Control> {
        Ok(Control::Continue)
    }

    fn on_epoch_end(&mut self, _epoch: usize, _model: &LapSrn<T>) -> Result<Control> {
        Ok(Control::Continue)
    }
}

/// Observer that ignores every event.
pub struct NoObserver;

impl<T> TrainObserver<T> for NoObserver {}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The unfloored learning rate fell below `lr_floor`.
    ScheduleExhausted,
    MaxEpochs,
    /// An observer asked to stop.
    Interrupted,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub log: Vec<TrainLogRecord>,
    pub epochs_completed: usize,
    pub stop: StopReason,
}

/// Runs one iteration (forward, loss, backward, update) and returns the loss.
pub fn train_step<T: Real>(
    model: &mut LapSrn<T>,
    batch: &TrainBatch<T>,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<f64> {
    model.zero_grad();
    let (out, trace) = model.forward_train(&batch.lr)?;
    let targets = targets_for(&out, batch)?;
    let mc = model.config();
    let (loss, grads) =
        multiscale_loss(&out.outputs, &targets, mc.loss_kind, mc.charbonnier_eps, cfg.loss_reduction)?;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {loss}")));
    }
    model.backward(&trace, &grads)?;
    sgd_step(&mut model.named_params_mut(), &SgdConfig::from(cfg), lr)?;
    Ok(loss)
}

/// The epoch loop. Stops when the schedule is exhausted, after
/// `max_epochs`, or when the observer returns [`Control::Stop`].
pub fn train<T: Real>(
    model: &mut LapSrn<T>,
    source: &mut dyn BatchSource<T>,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver<T>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut log = Vec::new();
    let mut epochs_completed = 0;
    for epoch in 0..cfg.max_epochs {
        if schedule_exhausted(epoch, cfg) {
            return Ok(TrainReport { log, epochs_completed, stop: StopReason::ScheduleExhausted });
        }
        let lr = lr_schedule(epoch, cfg);
        for iter in 0..cfg.iters_per_epoch {
            let start = Instant::now();
            let batch = source.next_batch()?;
            let loss = train_step(model, &batch, cfg, lr)?;
            let wall_ms = if cfg.log_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let record = TrainLogRecord { epoch, iter, loss, lr, wall_ms };
            let control = observer.on_iteration(&record)?;
            log.push(record);
            if control == Control::Stop {
                return Ok(TrainReport { log, epochs_completed, stop: StopReason::Interrupted });
            }
        }
        epochs_completed = epoch + 1;
        if observer.on_epoch_end(epoch, model)? == Control::Stop {
            return Ok(TrainReport { log, epochs_completed, stop: StopReason::Interrupted });
        }
    }
    Ok(TrainReport { log, epochs_completed, stop: StopReason::MaxEpochs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape4;
    use proptest::prelude::*;

    fn scalar(v: f64, g: f64, m: f64) -> Parameter<f64> {
        let s = Shape4::new(1, 1, 1, 1).unwrap();
        let mut p = Parameter::new(Tensor4::full(s, v), ParamRole::Weight);
        p.grad.fill(g);
        p.momentum.fill(m);
        p
    }

    fn step(p: &mut Parameter<f64>, cfg: SgdConfig, lr: f64) {
        sgd_step(&mut [("w".to_string(), p)], &cfg, lr).unwrap();
    }

    #[test]
    fn schedule_values() {
        let c = TrainConfig::default();
        assert_eq!(lr_schedule(0, &c), 1e-5);
        assert_eq!(lr_schedule(49, &c), 1e-5);
        assert_eq!(lr_schedule(50, &c), 5e-6);
        assert!((lr_schedule(170, &c) - 1.25e-6).abs() < 1e-20);
        assert!(!schedule_exhausted(199, &c));
        assert!((unfloored_lr(200, &c) - 6.25e-7).abs() < 1e-20);
        assert!(schedule_exhausted(200, &c));
        assert_eq!(lr_schedule(200, &c), 1e-6);
    }

    #[test]
    fn zero_everything_is_a_no_op() {
        let mut p = scalar(0.7, 0.0, 0.0);
        step(&mut p, SgdConfig { momentum: 0.9, weight_decay: 0.0, grad_clip: None }, 0.1);
        assert_eq!(p.value.data(), &[0.7]);
    }

    #[test]
    fn momentum_recurrence_by_hand() {
        let cfg = SgdConfig { momentum: 0.9, weight_decay: 0.0, grad_clip: None };
        let mut p = scalar(1.0, 1.0, 0.0);
        step(&mut p, cfg, 0.1);
        assert!((p.momentum.data()[0] - 1.0).abs() < 1e-15);
        assert!((p.value.data()[0] - 0.9).abs() < 1e-15);
        assert_eq!(p.grad.data(), &[0.0]);
        p.grad.fill(1.0);
        step(&mut p, cfg, 0.1);
        assert!((p.momentum.data()[0] - 1.9).abs() < 1e-15);
        assert!((p.value.data()[0] - 0.71).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_term() {
        let mut p = scalar(1.0, 0.0, 0.0);
        step(&mut p, SgdConfig { momentum: 0.9, weight_decay: 1e-4, grad_clip: None }, 1e-5);
        assert!((1.0 - p.value.data()[0] - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn biases_are_not_decayed() {
        let mut p = scalar(1.0, 0.0, 0.0);
        p.role = ParamRole::Bias;
        step(&mut p, SgdConfig { momentum: 0.9, weight_decay: 0.5, grad_clip: None }, 0.1);
        assert_eq!(p.value.data(), &[1.0]);
    }

    #[test]
    fn zero_lr_is_bitwise_no_op() {
        let mut p = scalar(0.123456789, 3.5, -0.25);
        step(&mut p, SgdConfig { momentum: 0.9, weight_decay: 1e-4, grad_clip: None }, 0.0);
        assert_eq!(p.value.data()[0].to_bits(), 0.123456789f64.to_bits());
    }

    #[test]
    fn non_finite_gradient_aborts_and_names_parameter() {
        let mut p = scalar(1.0, f64::NAN, 0.0);
        let err = sgd_step(
            &mut [("level1.conv0.weight".to_string(), &mut p)],
            &SgdConfig { momentum: 0.9, weight_decay: 0.0, grad_clip: None },
            0.1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("level1.conv0.weight"));
        assert_eq!(p.value.data(), &[1.0]);
    }

    #[test]
    fn clipping_bounds_the_step() {
        let mut p = scalar(0.0, 100.0, 0.0);
        step(&mut p, SgdConfig { momentum: 0.0, weight_decay: 0.0, grad_clip: Some(1.0) }, 1.0);
        assert!((p.value.data()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_levels_must_match() {
        let t = Tensor4::<f64>::zeros(Shape4::new(1, 1, 2, 2).unwrap());
        assert!(multiscale_loss(std::slice::from_ref(&t), &[], LossKind::L2, 1e-3, Reduction::Mean).is_err());
        let (l, _) =
            multiscale_loss(&[t.clone(), t.clone()], &[&t, &t], LossKind::Charbonnier, 1e-3, Reduction::Mean)
                .unwrap();
        assert!((l - 2e-3).abs() < 1e-15);
        let (l, _) =
            multiscale_loss(std::slice::from_ref(&t), &[&t], LossKind::L2, 1e-3, Reduction::Mean).unwrap();
        assert_eq!(l, 0.0);
    }

    proptest! {
        #[test]
        fn matches_scalar_reference(
            steps in proptest::collection::vec((-1.0f64..1.0, 1e-4f64..1e-1), 1..20),
            mu in 0.0f64..0.99,
            wd in 0.0f64..1e-2,
        ) {
            let cfg = SgdConfig { momentum: mu, weight_decay: wd, grad_clip: None };
            let mut p = scalar(0.5, 0.0, 0.0);
            let (mut v, mut m) = (0.5f64, 0.0f64);
            for (g, lr) in steps {
                p.grad.fill(g);
                step(&mut p, cfg, lr);
                m = mu * m + (g + wd * v);
                v -= lr * m;
                prop_assert_eq!(p.value.data()[0], v);
                prop_assert_eq!(p.momentum.data()[0], m);
            }
        }
    }
}
