//! Scores plain bicubic upscaling on a folder of HR images at 2×, 4× and 8×.
//!
//! ```text
//! cargo run --release --example bicubic_baseline -- path/to/Set5
//! ```
//!
//! Without an argument it runs on the bundled test images.

use std::path::PathBuf;

use lapsrn::data::list_images;
use lapsrn::eval::{evaluate_dataset, Bicubic, EvalProtocol};

fn main() -> lapsrn::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data").into());
    let paths = list_images(&dir)?;
    println!("{} images in {}", paths.len(), dir.display());
    for scale in [2, 4, 8] {
        let summary = evaluate_dataset(&Bicubic, &paths, &EvalProtocol::new(scale))?;
        println!("\n{scale}x\n{}", summary.to_csv());
    }
    Ok(())
}
