//! Finite-difference verification of every backward pass.
//!
//! Each check compares an analytic gradient with central differences of a
//! scalar objective, in `f64`. Layer checks use `⟨probe, layer(x)⟩` with a
//! random probe so that gradients are O(1) rather than clustered near zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layers::{
    charbonnier_loss_with, conv2d, conv2d_backward, l2_loss_with, leaky_relu, leaky_relu_backward,
    transposed_conv2d, transposed_conv2d_backward, CharbonnierSpec, ConvSpec, LossKind, Reduction,
};
use crate::model::{LapSrn, LapSrnConfig};
use crate::tensor::{
    elementwise_add, elementwise_add_backward, finite_difference_grad, max_relative_error, Shape4, Tensor4,
};
use crate::train::multiscale_loss;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    /// Test hook: checks whose name contains this string get their
    /// analytic gradient perturbed by 1%, simulating a broken backward.
    pub corrupt: Option<String>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { seed: 0, step: DEFAULT_STEP, tolerance: DEFAULT_TOLERANCE, corrupt: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_rel_error: f64,
    pub entries: usize,
    /// Entries left out because a finite-difference step crossed an
    /// activation kink, where the one-sided slopes differ.
    pub skipped: usize,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub results: Vec<CheckResult>,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    pub fn worst(&self) -> f64 {
        self.results.iter().map(|r| r.max_rel_error).fold(0.0, f64::max)
    }
}

struct Suite<'a> {
    opts: &'a GradcheckOptions,
    rng: ChaCha8Rng,
    results: Vec<CheckResult>,
}

impl Suite<'_> {
    fn uniform(&mut self, shape: Shape4) -> Tensor4<f64> {
        Tensor4::from_fn(shape, |_, _, _, _| self.rng.random_range(-1.0..1.0))
    }

    /// `x` plus an [`off_kink`](Self::off_kink) offset, used as a loss
    /// target. Residuals of at least 0.05 keep every loss gradient well
    /// away from zero and Charbonnier curvature small at the step size.
    fn offset(&mut self, x: &Tensor4<f64>) -> Tensor4<f64> {
        let d = self.off_kink(x.shape());
        elementwise_add(x, &d).expect("same shape")
    }

    /// Uniform in `(-1, -0.05] ∪ [0.05, 1)`, away from activation kinks.
    fn off_kink(&mut self, shape: Shape4) -> Tensor4<f64> {
        self.signed(shape, 0.05, 1.0)
    }

    /// Magnitude uniform in `[lo, hi)`, random sign.
    fn signed(&mut self, shape: Shape4, lo: f64, hi: f64) -> Tensor4<f64> {
        Tensor4::from_fn(shape, |_, _, _, _| {
            let v: f64 = self.rng.random_range(lo..hi);
            if self.rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
    }

    fn record(&mut self, name: String, analytic: &[f64], numeric: &Tensor4<f64>) {
        self.record_masked(name, analytic, numeric, &vec![true; analytic.len()]);
    }

    fn record_masked(&mut self, name: String, analytic: &[f64], numeric: &Tensor4<f64>, valid: &[bool]) {
        let corrupt = self.opts.corrupt.as_deref().is_some_and(|c| name.contains(c));
        let (a, n): (Vec<f64>, Vec<f64>) = analytic
            .iter()
            .zip(numeric.data())
            .zip(valid)
            .filter(|(_, &ok)| ok)
            .map(|((&a, &n), _)| (if corrupt { a * 1.01 } else { a }, n))
            .unzip();
        let err = max_relative_error(&a, &n);
        let skipped = analytic.len() - a.len();
        self.results.push(CheckResult {
            passed: err < self.opts.tolerance && !a.is_empty(),
            max_rel_error: err,
            entries: analytic.len(),
            skipped,
            name,
        });
    }

    fn fd(&self, f: impl FnMut(&Tensor4<f64>) -> f64, x: &Tensor4<f64>) -> Result<Tensor4<f64>> {
        finite_difference_grad(f, x, self.opts.step)
    }

    fn conv(&mut self) -> Result<()> {
        let spec = ConvSpec::conv3x3(2, 3);
        let x = self.uniform(Shape4::new(2, 2, 5, 6)?);
        let w = self.uniform(Shape4::new(3, 2, 3, 3)?);
        let b = self.uniform(Shape4::new(1, 3, 1, 1)?);
        let probe = self.off_kink(Shape4::new(2, 3, 5, 6)?);
        let grads = conv2d_backward(&x, &w, &probe, &spec)?;
        let n = self.fd(|x| conv2d(x, &w, b.data(), &spec).unwrap().dot(&probe).unwrap(), &x)?;
        self.record("conv3x3.input".into(), grads.input.data(), &n);
        let n = self.fd(|w| conv2d(&x, w, b.data(), &spec).unwrap().dot(&probe).unwrap(), &w)?;
        self.record("conv3x3.weight".into(), grads.weights.data(), &n);
        let n = self.fd(|b| conv2d(&x, &w, b.data(), &spec).unwrap().dot(&probe).unwrap(), &b)?;
        self.record("conv3x3.bias".into(), grads.bias.as_deref().unwrap_or_default(), &n);
        Ok(())
    }

    fn transposed(&mut self, factor: usize) -> Result<()> {
        let spec = ConvSpec::upsample(2, 2, factor);
        let x = self.uniform(Shape4::new(2, 2, 3, 4)?);
        let w = self.uniform(Shape4::new(2, 2, spec.kernel, spec.kernel)?);
        let probe = self.off_kink(Shape4::new(2, 2, 3 * factor, 4 * factor)?);
        let grads = transposed_conv2d_backward(&x, &w, &probe, &spec)?;
        let n = self.fd(|x| transposed_conv2d(x, &w, &spec).unwrap().dot(&probe).unwrap(), &x)?;
        self.record(format!("upsample_x{factor}.input"), grads.input.data(), &n);
        let n = self.fd(|w| transposed_conv2d(&x, w, &spec).unwrap().dot(&probe).unwrap(), &w)?;
        self.record(format!("upsample_x{factor}.weight"), grads.weights.data(), &n);
        Ok(())
    }

    fn activation(&mut self) -> Result<()> {
        let shape = Shape4::new(2, 3, 4, 4)?;
        let x = self.off_kink(shape);
        let probe = self.off_kink(shape);
        let a = leaky_relu_backward(&x, &probe, 0.2)?;
        let n = self.fd(|x| leaky_relu(x, 0.2).dot(&probe).unwrap(), &x)?;
        self.record("leaky_relu".into(), a.data(), &n);
        Ok(())
    }

    fn add(&mut self) -> Result<()> {
        let shape = Shape4::new(2, 1, 3, 3)?;
        let (a, b, probe) = (self.uniform(shape), self.uniform(shape), self.off_kink(shape));
        let (ga, gb) = elementwise_add_backward(&probe);
        let n = self.fd(|a| elementwise_add(a, &b).unwrap().dot(&probe).unwrap(), &a)?;
        self.record("add.lhs".into(), ga.data(), &n);
        let n = self.fd(|b| elementwise_add(&a, b).unwrap().dot(&probe).unwrap(), &b)?;
        self.record("add.rhs".into(), gb.data(), &n);
        Ok(())
    }

    fn losses(&mut self) -> Result<()> {
        let shape = Shape4::new(2, 1, 4, 4)?;
        let spec = CharbonnierSpec::default();
        for reduction in [Reduction::Mean, Reduction::Sum] {
            let p = self.uniform(shape);
            let t = self.offset(&p);
            let a = charbonnier_loss_with(&p, &t, &spec, reduction)?;
            let n = self.fd(|p| charbonnier_loss_with(p, &t, &spec, reduction).unwrap().loss, &p)?;
            self.record(format!("charbonnier_{reduction}"), a.grad.data(), &n);
            let a = l2_loss_with(&p, &t, reduction)?;
            let n = self.fd(|p| l2_loss_with(p, &t, reduction).unwrap().loss, &p)?;
            self.record(format!("l2_{reduction}"), a.grad.data(), &n);
        }
        let s2 = Shape4::new(1, 1, 4, 4)?;
        let s4 = Shape4::new(1, 1, 8, 8)?;
        let (o2, o4) = (self.uniform(s2), self.uniform(s4));
        let (t2, t4) = (self.offset(&o2), self.offset(&o4));
        let objective = |a: &Tensor4<f64>, b: &Tensor4<f64>| {
            multiscale_loss(
                &[a.clone(), b.clone()],
                &[&t2, &t4],
                LossKind::Charbonnier,
                1e-3,
                Reduction::Mean,
            )
            .unwrap()
            .0
        };
        let (_, grads) = multiscale_loss(
            &[o2.clone(), o4.clone()],
            &[&t2, &t4],
            LossKind::Charbonnier,
            1e-3,
            Reduction::Mean,
        )?;
        let n = self.fd(|x| objective(x, &o4), &o2)?;
        self.record("multiscale_loss.level1".into(), grads[0].data(), &n);
        let n = self.fd(|x| objective(&o2, x), &o4)?;
        self.record("multiscale_loss.level2".into(), grads[1].data(), &n);
        Ok(())
    }

    /// Whole-network check on a scale-2, depth-2 model: input and every
    /// parameter, through the Charbonnier objective.
    fn end_to_end(&mut self) -> Result<()> {
        let config = LapSrnConfig::new(2).with_depth(2).with_channels(8);
        let seed = self.rng.random();
        let mut model = LapSrn::<f64>::new(&config, seed)?;
        perturb_biases(&mut model, &mut self.rng);
        let x = Tensor4::from_fn(Shape4::new(1, 1, 6, 6)?, |_, _, _, _| self.rng.random_range(0.0..1.0));
        model.zero_grad();
        let (out, trace) = model.forward_train(&x)?;
        // Residuals of 0.02 to 0.1: far from the Charbonnier kink at the
        // step size, small enough to keep the objective's rounding low.
        let offsets = self.signed(out.outputs[0].shape(), 0.02, 0.1);
        let target = elementwise_add(&out.outputs[0], &offsets)?;
        let (_, grads) =
            multiscale_loss(&out.outputs, &[&target], LossKind::Charbonnier, 1e-3, Reduction::Mean)?;
        let grad_x = model.backward(&trace, &grads)?;
        let pattern = trace.activation_pattern();
        let eps2 = 1e-6;
        let rho = |out: &Tensor4<f64>| -> Vec<f64> {
            out.data().iter().zip(target.data()).map(|(o, t)| ((o - t) * (o - t) + eps2).sqrt()).collect()
        };
        // The Charbonnier loss minus its value at the base point, summed per
        // pixel so the central difference is not swamped by the rounding of
        // the full loss.
        let base = rho(&out.outputs[0]);
        let eval = |m: &LapSrn<f64>, x: &Tensor4<f64>| -> (f64, bool) {
            let (out, trace) = m.forward_train(x).unwrap();
            let delta: f64 = rho(&out.outputs[0]).iter().zip(&base).map(|(r, b)| r - b).sum();
            (delta / base.len() as f64, trace.activation_pattern() == pattern)
        };

        let (n, valid) = self.fd_masked(|x| eval(&model, x), &x);
        self.record_masked("model.input".into(), grad_x.data(), &n, &valid);

        let count = model.named_params().len();
        for i in 0..count {
            let (name, value, analytic) = {
                let params = model.named_params();
                let (name, p) = &params[i];
                (name.clone(), p.value.clone(), p.grad.data().to_vec())
            };
            let mut probe = model.clone();
            let (n, valid) = self.fd_masked(
                |v| {
                    probe.named_params_mut()[i].1.value = v.clone();
                    eval(&probe, &x)
                },
                &value,
            );
            self.record_masked(format!("model.{name}"), &analytic, &n, &valid);
        }
        Ok(())
    }

    /// Central differences of an objective that also reports whether each
    /// evaluation is trustworthy; an entry is valid only if both are.
    fn fd_masked(
        &self,
        mut f: impl FnMut(&Tensor4<f64>) -> (f64, bool),
        x: &Tensor4<f64>,
    ) -> (Tensor4<f64>, Vec<bool>) {
        let h = self.opts.step;
        let mut probe = x.clone();
        let mut grad = Tensor4::zeros(x.shape());
        let mut valid = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + h;
            let (plus, ok_plus) = f(&probe);
            probe.data_mut()[i] = orig - h;
            let (minus, ok_minus) = f(&probe);
            probe.data_mut()[i] = orig;
            grad.data_mut()[i] = (plus - minus) / (2.0 * h);
            valid.push(ok_plus && ok_minus);
        }
        (grad, valid)
    }
}

/// Freshly initialised biases are zero, which parks many pre-activations
/// exactly on the activation kink; small random biases move them off it.
fn perturb_biases(model: &mut LapSrn<f64>, rng: &mut ChaCha8Rng) {
    for (name, p) in model.named_params_mut() {
        if name.ends_with(".bias") {
            for v in p.value.data_mut() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
    }
}

/// Runs every check and reports each one's worst relative error.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut suite = Suite { opts, rng: ChaCha8Rng::seed_from_u64(opts.seed), results: Vec::new() };
    suite.conv()?;
    suite.transposed(2)?;
    suite.transposed(4)?;
    suite.activation()?;
    suite.add()?;
    suite.losses()?;
    suite.end_to_end()?;
    Ok(GradcheckReport { results: suite.results, tolerance: opts.tolerance })
}
