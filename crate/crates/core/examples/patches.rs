//! Draws one augmented training batch and writes every patch and its
//! pyramid targets as PNGs.

use lapsrn::data::{load_image, save_image, ImageBuffer, PatchSampler, SamplerConfig, TrainBatch};

fn main() -> lapsrn::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let corpus =
        vec![load_image(format!("{data}/chelsea_64.png"))?, load_image(format!("{data}/camera_64.png"))?];
    let cfg = SamplerConfig { batch: 4, patch: 32, scale: 4, augment: true };
    let mut sampler = PatchSampler::new(&corpus, cfg, 7)?;
    let batch: TrainBatch<f32> = sampler.next_batch()?;

    let out = std::env::temp_dir().join("lapsrn-patches");
    std::fs::create_dir_all(&out).expect("temp dir is writable");
    for n in 0..cfg.batch {
        save_image(&ImageBuffer::from_tensor(&batch.lr, n)?, out.join(format!("p{n}_lr.png")))?;
        for scale in [2, 4] {
            let t = batch.target(scale).unwrap();
            save_image(&ImageBuffer::from_tensor(t, n)?, out.join(format!("p{n}_x{scale}.png")))?;
        }
    }
    println!(
        "input {}, targets {} and {}",
        batch.lr.shape(),
        batch.targets[0].shape(),
        batch.targets[1].shape()
    );
    println!("wrote {} images to {}", 3 * cfg.batch, out.display());
    Ok(())
}
