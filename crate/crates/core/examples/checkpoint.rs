//! Saves a model, peeks at the file header and loads it back.

use lapsrn::checkpoint::{load_checkpoint, save_checkpoint};
use lapsrn::{build_model, LapSrnConfig, Shape4, Tensor4};

fn main() -> lapsrn::Result<()> {
    let model = build_model::<f32>(&LapSrnConfig::new(8).with_depth(3), 42)?;
    let dir = std::env::temp_dir().join("lapsrn-checkpoint-example");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let path = dir.join("x8.lpsr");
    save_checkpoint(&model, &path)?;

    let bytes = std::fs::read(&path).expect("just written");
    let header_len = u64::from_le_bytes(bytes[5..13].try_into().unwrap()) as usize;
    let header: serde_json::Value = serde_json::from_slice(&bytes[13..13 + header_len]).expect("JSON header");
    println!(
        "{} bytes, magic {:?}, version {}",
        bytes.len(),
        std::str::from_utf8(&bytes[..4]).unwrap(),
        bytes[4]
    );
    println!("config {}", header["config"]);
    println!("{} tensors, first {}", header["tensors"].as_array().unwrap().len(), header["tensors"][0]);

    let restored = load_checkpoint::<f32>(&path)?;
    let x = Tensor4::full(Shape4::new(1, 1, 8, 8)?, 0.5f32);
    let (a, b) = (model.forward(&x)?, restored.forward(&x)?);
    println!("outputs identical after reload: {}", a == b);
    Ok(())
}
