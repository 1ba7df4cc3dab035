//! The training loop with a custom observer: log every tenth iteration and
//! stop early once the loss drops below a threshold.

use lapsrn::data::{load_image, PatchSampler, SamplerConfig};
use lapsrn::train::{train, Control, TrainConfig, TrainLogRecord, TrainObserver};
use lapsrn::{build_model, LapSrn, LapSrnConfig};

struct Progress {
    target: f64,
}

impl TrainObserver<f32> for Progress {
    fn on_iteration(&mut self, r: &TrainLogRecord) -> lapsrn::Result<Control> {
        if r.iter.is_multiple_of(10) {
            println!("epoch {} iter {:3} loss {:.5} lr {:e}", r.epoch, r.iter, r.loss, r.lr);
        }
        Ok(if r.loss < self.target { Control::Stop } else { Control::Continue })
    }

    fn on_epoch_end(&mut self, epoch: usize, model: &LapSrn<f32>) -> lapsrn::Result<Control> {
        println!("epoch {epoch} done, {} parameters", model.param_count());
        Ok(Control::Continue)
    }
}

fn main() -> lapsrn::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let corpus =
        vec![load_image(format!("{data}/chelsea_64.png"))?, load_image(format!("{data}/camera_64.png"))?];
    let cfg = TrainConfig {
        lr_init: 1e-3,
        iters_per_epoch: 50,
        max_epochs: 4,
        batch_n: 8,
        patch_size: 32,
        ..TrainConfig::default()
    };
    let sampler_cfg =
        SamplerConfig { batch: cfg.batch_n, patch: cfg.patch_size, scale: 2, augment: cfg.augment };
    let mut sampler = PatchSampler::new(&corpus, sampler_cfg, cfg.seed)?;
    let mut model = build_model::<f32>(&LapSrnConfig::new(2).with_depth(2).with_channels(16), cfg.seed)?;
    let report = train(&mut model, &mut sampler, &cfg, &mut Progress { target: 0.02 })?;
    println!("{:?} after {} iterations", report.stop, report.log.len());
    Ok(())
}
