//! The layer engine on its own: a bilinear transposed convolution doubles an
//! image, then a 3×3 convolution and its backward pass run on a small batch.

use lapsrn::layers::{bilinear_kernel, conv2d, conv2d_backward, transposed_conv2d, ConvSpec};
use lapsrn::{Shape4, Tensor4};

fn main() -> lapsrn::Result<()> {
    let x = Tensor4::from_fn(Shape4::new(1, 1, 3, 3)?, |_, _, h, w| (3 * h + w) as f64);
    let up = ConvSpec::upsample(1, 1, 2);
    let y = transposed_conv2d(&x, &bilinear_kernel(up.kernel, 2, 1)?, &up)?;
    println!("3x3 ramp doubled by the bilinear kernel:");
    for r in 0..y.shape().h {
        let row: Vec<String> = (0..y.shape().w).map(|c| format!("{:5.2}", y.get(0, 0, r, c))).collect();
        println!("  {}", row.join(" "));
    }

    let spec = ConvSpec::conv3x3(2, 4);
    let input = Tensor4::from_fn(Shape4::new(2, 2, 6, 6)?, |n, c, h, w| ((n + c + h * w) % 5) as f64 / 5.0);
    let weight =
        Tensor4::from_fn(Shape4::new(4, 2, 3, 3)?, |o, i, h, w| ((o + 2 * i + h + w) % 3) as f64 - 1.0);
    let bias = [0.1, 0.0, -0.1, 0.2];
    let out = conv2d(&input, &weight, &bias, &spec)?;
    let grads = conv2d_backward(&input, &weight, &Tensor4::ones(out.shape()), &spec)?;
    println!("conv3x3 {} -> {}, sum of outputs {:.3}", input.shape(), out.shape(), out.sum());
    println!("d(sum)/d(bias) = {:?}", grads.bias.unwrap());
    Ok(())
}
