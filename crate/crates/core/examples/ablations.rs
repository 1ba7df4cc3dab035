//! Prints the layer stacks of the full 4× model and its three ablations.

use lapsrn::layers::LossKind;
use lapsrn::{build_model, LapSrnConfig};

fn main() -> lapsrn::Result<()> {
    let full = LapSrnConfig::new(4).with_depth(3).with_channels(16);
    let variants = [
        ("full model", full.clone()),
        ("l2 loss", LapSrnConfig { loss_kind: LossKind::L2, ..full.clone() }),
        ("no residual learning", LapSrnConfig { use_residual: false, ..full.clone() }),
        ("no pyramid", LapSrnConfig { use_pyramid: false, ..full.clone() }),
    ];
    for (name, cfg) in variants {
        let model = build_model::<f32>(&cfg, 0)?;
        println!(
            "{name}: {} layers, {} parameters, loss {}",
            model.count_layers(),
            model.param_count(),
            cfg.loss_kind
        );
        for l in model.layer_list() {
            let s = l.spec;
            println!(
                "  {:<18} {:?} {}->{} k{} s{}{}",
                l.name,
                l.kind,
                s.in_channels,
                s.out_channels,
                s.kernel,
                s.stride,
                if l.activation { " +lrelu" } else { "" }
            );
        }
    }
    Ok(())
}
