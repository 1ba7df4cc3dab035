use crate::error::{invalid, Result};
use crate::tensor::{Real, Tensor4};

pub const DEFAULT_LRELU_SLOPE: f64 = 0.2;

/// `x` for `x ≥ 0`, `slope·x` otherwise.
pub fn leaky_relu<T: Real>(input: &Tensor4<T>, slope: f64) -> Tensor4<T> {
    let a = T::from_f64(slope);
    input.map(|x| if x >= T::zero() { x } else { a * x })
}

/// Gradient of [`leaky_relu`] given the forward *input*. The subgradient at
/// exactly zero is 1.
pub fn leaky_relu_backward<T: Real>(
    input: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    slope: f64,
) -> Result<Tensor4<T>> {
    if input.shape() != grad_out.shape() {
        return invalid(format!(
            "leaky_relu_backward: input {} vs gradient {}",
            input.shape(),
            grad_out.shape()
        ));
    }
    let a = T::from_f64(slope);
    let mut g = grad_out.clone();
    for (d, &x) in g.data_mut().iter_mut().zip(input.data()) {
        if x < T::zero() {
            *d *= a;
        }
    }
    Ok(g)
}
