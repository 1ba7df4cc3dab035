//! Overfits a 2× model to a single 64×64 image and compares it with bicubic.
//!
//! ```text
//! cargo run --release --example overfit -- [image] [iters] [lr] [mean|sum] [clip]
//! ```
//!
//! An empty image argument selects the bundled test image, e.g.
//!
//! ```text
//! cargo run --release --example overfit -- "" 500 3e-6 sum
//! ```

use lapsrn::data::{extract_y, load_image, TrainBatch};
use lapsrn::eval::{evaluate_image, Bicubic, EvalProtocol, ModelResolver};
use lapsrn::layers::Reduction;
use lapsrn::train::{train_step, TrainConfig};
use lapsrn::{build_model, LapSrnConfig};

fn main() -> lapsrn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = match args.first() {
        Some(p) if !p.is_empty() => p.clone(),
        _ => concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/chelsea_64.png").into(),
    };
    let iters: usize = args.get(1).map_or(500, |s| s.parse().unwrap());
    let lr: f64 = args.get(2).map_or(1e-4, |s| s.parse().unwrap());
    let reduction: Reduction = args.get(3).map_or(Reduction::Mean, |s| s.parse().unwrap());
    let clip: Option<f64> = args.get(4).map(|s| s.parse().unwrap());

    let hr = extract_y(&load_image(&path)?)?;
    let batch = TrainBatch::<f32>::from_patches(std::slice::from_ref(&hr), 2)?;
    let mut model = build_model::<f32>(&LapSrnConfig::new(2).with_depth(2), 0)?;
    let cfg = TrainConfig { loss_reduction: reduction, grad_clip: clip, ..TrainConfig::default() };

    let first = train_step(&mut model, &batch, &cfg, lr)?;
    let mut last = first;
    for i in 1..iters {
        last = train_step(&mut model, &batch, &cfg, lr)?;
        if i % 100 == 0 {
            println!("iter {i:4}  loss {last:.6}");
        }
    }

    let protocol = EvalProtocol::new(2);
    let (net_psnr, net_ssim, _) = evaluate_image(&ModelResolver::new(&model), &hr, &protocol)?;
    let (bic_psnr, bic_ssim, _) = evaluate_image(&Bicubic, &hr, &protocol)?;
    println!("loss     {first:.6} -> {last:.6} ({:.1}% of initial)", 100.0 * last / first);
    println!("network  {net_psnr:.2} dB  SSIM {net_ssim:.4}");
    println!("bicubic  {bic_psnr:.2} dB  SSIM {bic_ssim:.4}");
    Ok(())
}
