//! One 8× model, three outputs. Asking for 2× or 4× stops the pass early and
//! yields exactly the intermediate image of the full pass.

use std::time::Instant;

use lapsrn::data::{extract_y, load_image};
use lapsrn::{build_model, LapSrnConfig};

fn main() -> lapsrn::Result<()> {
    let model = build_model::<f32>(&LapSrnConfig::new(8), 0)?;
    let img = extract_y(&load_image(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/chelsea_64.png"))?)?;
    let x = img.crop(16, 16, 32, 32)?.to_tensor::<f32>()?;

    let t = Instant::now();
    let full = model.forward(&x)?;
    println!("full pass: {:?} in {:.1?}", full.scales, t.elapsed());

    for scale in [2, 4, 8] {
        let t = Instant::now();
        let out = model.forward_scale(&x, scale)?;
        let same = out
            .data()
            .iter()
            .zip(full.at_scale(scale).unwrap().data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        println!(
            "{scale}x alone: {} in {:.1?}, bitwise equal to the full pass: {same}",
            out.shape(),
            t.elapsed()
        );
    }
    Ok(())
}
