use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::{Real, Tensor4};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharbonnierSpec {
    pub epsilon: f64,
}

impl Default for CharbonnierSpec {
    fn default() -> Self {
        Self { epsilon: 1e-3 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Charbonnier,
    L2,
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "charbonnier" => Ok(Self::Charbonnier),
            "l2" => Ok(Self::L2),
            other => Err(format!("unknown loss '{other}' (expected charbonnier or l2)")),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Charbonnier => "charbonnier",
            Self::L2 => "l2",
        })
    }
}

/// How per-element penalties are combined into the scalar loss.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Average over batch, channels and pixels.
    #[default]
    Mean,
    /// Sum over pixels and channels, averaged over the batch.
    Sum,
}

impl std::str::FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(Self::Mean),
            "sum" => Ok(Self::Sum),
            other => Err(format!("unknown reduction '{other}' (expected mean or sum)")),
        }
    }
}

impl std::fmt::Display for Reduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mean => "mean",
            Self::Sum => "sum",
        })
    }
}

impl Reduction {
    fn divisor<T: Real>(&self, t: &Tensor4<T>) -> f64 {
        match self {
            Self::Mean => t.len() as f64,
            Self::Sum => t.shape().n as f64,
        }
    }
}

/// Scalar loss (accumulated in `f64`) and its gradient with respect to the
/// prediction.
#[derive(Clone, Debug)]
pub struct LossOutput<T> {
    pub loss: f64,
    pub grad: Tensor4<T>,
}

fn check<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>, what: &str) -> Result<()> {
    if pred.shape() != target.shape() {
        return invalid(format!("{what}: prediction {} vs target {}", pred.shape(), target.shape()));
    }
    Ok(())
}

/// Mean of `√((pred − target)² + ε²)` over every element.
pub fn charbonnier_loss<T: Real>(
    pred: &Tensor4<T>,
    target: &Tensor4<T>,
    spec: &CharbonnierSpec,
) -> Result<LossOutput<T>> {
    charbonnier_loss_with(pred, target, spec, Reduction::Mean)
}

pub fn charbonnier_loss_with<T: Real>(
    pred: &Tensor4<T>,
    target: &Tensor4<T>,
    spec: &CharbonnierSpec,
    reduction: Reduction,
) -> Result<LossOutput<T>> {
    check(pred, target, "charbonnier_loss")?;
    // Written this way so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(spec.epsilon > 0.0) {
        return invalid(format!("charbonnier epsilon must be > 0, got {}", spec.epsilon));
    }
    let eps2 = spec.epsilon * spec.epsilon;
    let scale = 1.0 / reduction.divisor(pred);
    let mut total = 0.0f64;
    let mut grad = Tensor4::zeros(pred.shape());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p.as_f64() - t.as_f64();
        let rho = (d * d + eps2).sqrt();
        total += rho;
        *g = T::from_f64(scale * d / rho);
    }
    Ok(LossOutput { loss: total * scale, grad })
}

/// Mean squared difference.
pub fn l2_loss<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<LossOutput<T>> {
    l2_loss_with(pred, target, Reduction::Mean)
}

pub fn l2_loss_with<T: Real>(
    pred: &Tensor4<T>,
    target: &Tensor4<T>,
    reduction: Reduction,
) -> Result<LossOutput<T>> {
    check(pred, target, "l2_loss")?;
    let scale = 1.0 / reduction.divisor(pred);
    let mut total = 0.0f64;
    let mut grad = Tensor4::zeros(pred.shape());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p.as_f64() - t.as_f64();
        total += d * d;
        *g = T::from_f64(2.0 * scale * d);
    }
    Ok(LossOutput { loss: total * scale, grad })
}

impl LossKind {
    pub fn evaluate<T: Real>(
        &self,
        pred: &Tensor4<T>,
        target: &Tensor4<T>,
        epsilon: f64,
        reduction: Reduction,
    ) -> Result<LossOutput<T>> {
        match self {
            Self::Charbonnier => charbonnier_loss_with(pred, target, &CharbonnierSpec { epsilon }, reduction),
            Self::L2 => l2_loss_with(pred, target, reduction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{finite_difference_grad, max_relative_error, Shape4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(v: &[f64]) -> Tensor4<f64> {
        Tensor4::new(Shape4::new(1, 1, 1, v.len()).unwrap(), v.to_vec()).unwrap()
    }

    fn random(shape: Shape4, seed: u64) -> Tensor4<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor4::from_fn(shape, |_, _, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn charbonnier_at_zero_is_epsilon() {
        let x = t(&[0.3, 0.1, -0.7]);
        let out = charbonnier_loss(&x, &x, &CharbonnierSpec::default()).unwrap();
        assert!((out.loss - 1e-3).abs() < 1e-15);
        assert!(out.grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn charbonnier_single_element() {
        let out = charbonnier_loss(&t(&[3e-3]), &t(&[0.0]), &CharbonnierSpec::default()).unwrap();
        assert!((out.loss - 1e-5f64.sqrt()).abs() < 1e-15);
        assert!((out.loss - 3.16228e-3).abs() < 1e-8);
    }

    #[test]
    fn charbonnier_is_l1_for_large_residuals() {
        let out = charbonnier_loss(&t(&[10.0]), &t(&[0.0]), &CharbonnierSpec::default()).unwrap();
        assert!((out.loss - 10.0).abs() < 1e-7);
    }

    #[test]
    fn shape_mismatch() {
        assert!(charbonnier_loss(&t(&[1.0]), &t(&[1.0, 2.0]), &CharbonnierSpec::default()).is_err());
        assert!(l2_loss(&t(&[1.0]), &t(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn l2_values() {
        let x = t(&[0.5, -0.25]);
        assert_eq!(l2_loss(&x, &x).unwrap().loss, 0.0);
        assert_eq!(l2_loss(&t(&[2.0]), &t(&[0.0])).unwrap().loss, 4.0);
    }

    #[test]
    fn sum_reduction_scales_by_pixels() {
        let s = Shape4::new(2, 1, 3, 3).unwrap();
        let (p, q) = (random(s, 1), random(s, 2));
        let mean = l2_loss_with(&p, &q, Reduction::Mean).unwrap();
        let sum = l2_loss_with(&p, &q, Reduction::Sum).unwrap();
        assert!((sum.loss - 9.0 * mean.loss).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = Shape4::new(2, 1, 3, 4).unwrap();
        let target = random(s, 5);
        let pred = random(s, 6);
        for reduction in [Reduction::Mean, Reduction::Sum] {
            let spec = CharbonnierSpec::default();
            let a = charbonnier_loss_with(&pred, &target, &spec, reduction).unwrap();
            let n = finite_difference_grad(
                |x| charbonnier_loss_with(x, &target, &spec, reduction).unwrap().loss,
                &pred,
                1e-5,
            )
            .unwrap();
            assert!(max_relative_error(a.grad.data(), n.data()) < 1e-4);

            let a = l2_loss_with(&pred, &target, reduction).unwrap();
            let n =
                finite_difference_grad(|x| l2_loss_with(x, &target, reduction).unwrap().loss, &pred, 1e-5)
                    .unwrap();
            assert!(max_relative_error(a.grad.data(), n.data()) < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn charbonnier_bounds(
            v in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..24),
            eps in 1e-4f64..1e-1,
        ) {
            let p = t(&v.iter().map(|x| x.0).collect::<Vec<_>>());
            let q = t(&v.iter().map(|x| x.1).collect::<Vec<_>>());
            let spec = CharbonnierSpec { epsilon: eps };
            let out = charbonnier_loss(&p, &q, &spec).unwrap();
            prop_assert!(out.loss >= eps * (1.0 - 1e-12));
            let bound = 1.0 / p.len() as f64;
            for g in out.grad.data() {
                prop_assert!(g.abs() < bound);
            }
        }
    }
}
