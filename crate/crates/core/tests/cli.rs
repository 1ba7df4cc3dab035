mod common;

use std::fs;
use std::path::Path;

use lapsrn::checkpoint::{load_checkpoint, save_checkpoint};
use lapsrn::data::{extract_y, load_image, save_image, ImageBuffer};
use lapsrn::eval::{evaluate_image, EvalProtocol, ModelResolver};
use lapsrn::{build_model, LapSrnConfig};

use common::{cli, cli_with_env, fixture};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_model(dir: &Path, scale: usize) -> std::path::PathBuf {
    let cfg = LapSrnConfig::new(scale).with_depth(2).with_channels(8);
    let path = dir.join(format!("x{scale}.lpsr"));
    save_checkpoint(&build_model::<f32>(&cfg, 1).unwrap(), &path).unwrap();
    path
}

fn train_args<'a>(data: &'a Path, out: &'a Path) -> Vec<&'a str> {
    vec![
        "train",
        "--data",
        s(data),
        "--out",
        s(out),
        "--scale",
        "2",
        "--depth",
        "1",
        "--channels",
        "8",
        "--patch",
        "16",
        "--batch",
        "2",
        "--iters-per-epoch",
        "4",
        "--max-epochs",
        "2",
        "--seed",
        "3",
        "--no-wall-time",
    ]
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["eval", "--manifest", "m.txt", "--scale", "2"]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn gradcheck_passes_and_catches_corruption() {
    let ok = cli(&["gradcheck"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("all 27 checks passed"));
    let bad = cli(&["gradcheck", "--corrupt", "conv3x3.weight"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL   conv3x3.weight"));
}

#[test]
fn info_reports_layer_count() {
    let o = cli(&["info", "--scale", "4", "--depth", "10"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("layers 27"), "{}", stdout(&o));
    let o = cli(&["info", "--scale", "4", "--depth", "10", "--no-residual"]);
    assert!(stdout(&o).contains("layers 25"));
}

#[test]
fn training_logs_and_checkpoints_replay_exactly() {
    let data = tempfile::tempdir().unwrap();
    fs::copy(fixture("chelsea_64.png"), data.path().join("a.png")).unwrap();
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let o = cli_with_env(&train_args(data.path(), out.path()), &[("LAPSR_THREADS", "1")]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    let csv = |d: &tempfile::TempDir| fs::read_to_string(d.path().join("train.csv")).unwrap();
    let (a, b) = (csv(&runs[0]), csv(&runs[1]));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "epoch,iter,loss,lr,wall_ms");
    assert_eq!(lines.len(), 1 + 2 * 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0.000")), "{a}");
    for name in ["epoch_0001.lpsr", "epoch_0002.lpsr"] {
        let x = fs::read(runs[0].path().join(name)).unwrap();
        assert_eq!(x, fs::read(runs[1].path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let data = tempfile::tempdir().unwrap();
    fs::copy(fixture("camera_64.png"), data.path().join("a.png")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# smoke run\ndata = {}\nscale = 2\ndepth = 3\nchannels = 4\nloss = l2\npatch_size = 16\n\
             batch_n = 1\niters_per_epoch = 1\nmax_epochs = 1\n",
            data.path().display()
        ),
    )
    .unwrap();
    let o = cli(&["train", "--config", s(&cfg), "--out", s(out.path()), "--depth", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = load_checkpoint::<f32>(out.path().join("epoch_0001.lpsr")).unwrap();
    assert_eq!((m.config().depth, m.config().channels), (1, 4));
    assert_eq!(m.config().loss_kind.to_string(), "l2");

    fs::write(&cfg, "scale = 2\nwhatever = 1\n").unwrap();
    let o = cli(&["train", "--config", s(&cfg), "--data", s(data.path()), "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_training_data_is_a_data_error() {
    let out = tempfile::tempdir().unwrap();
    let empty = tempfile::tempdir().unwrap();
    let o = cli(&["train", "--data", s(empty.path()), "--out", s(out.path()), "--scale", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sr_all_scales_writes_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), 8);
    let lr = extract_y(&load_image(fixture("chelsea_64.png")).unwrap()).unwrap().crop(0, 0, 16, 16).unwrap();
    let input = dir.path().join("in.png");
    save_image(&lr, &input).unwrap();
    let out = dir.path().join("out");
    let o = cli(&["sr", "--model", s(&model), "--input", s(&input), "--output", s(&out), "--all-scales"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for scale in [2, 4, 8] {
        let img = load_image(out.join(format!("in_x{scale}.png"))).unwrap();
        assert_eq!((img.height(), img.width()), (16 * scale, 16 * scale));
    }
}

#[test]
fn sr_on_colour_input_keeps_colour() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), 2);
    let input = dir.path().join("c.png");
    save_image(&load_image(fixture("chelsea_64.png")).unwrap().crop(0, 0, 20, 24).unwrap(), &input).unwrap();
    let out = dir.path().join("out");
    let o = cli(&["sr", "--model", s(&model), "--input", s(&input), "--output", s(&out)]);
    assert!(o.status.success());
    let img = load_image(out.join("c_x2.png")).unwrap();
    assert_eq!((img.height(), img.width(), img.channels()), (40, 48, 3));
}

#[test]
fn sr_beyond_the_model_scale_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), 2);
    let o = cli(&[
        "sr",
        "--model",
        s(&model),
        "--input",
        s(&fixture("camera_64.png")),
        "--output",
        s(dir.path()),
        "--scale",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sr_output_matches_the_evaluated_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_model(dir.path(), 2);
    let model = load_checkpoint::<f32>(&path).unwrap();
    let hr = load_image(fixture("camera_64.png")).unwrap();
    let lr = lapsrn::data::downscale(&hr, 2).unwrap();
    let input = dir.path().join("lr.png");
    save_image(&lr, &input).unwrap();
    let out = dir.path().join("out");
    assert!(cli(&["sr", "--model", s(&path), "--input", s(&input), "--output", s(&out)]).status.success());
    let written = load_image(out.join("lr_x2.png")).unwrap();

    // The evaluation harness scores the same forward pass the CLI writes.
    let reloaded_lr = load_image(&input).unwrap();
    let tensor = model.forward_scale(&reloaded_lr.to_tensor::<f32>().unwrap(), 2).unwrap();
    let expected = ImageBuffer::from_tensor(&tensor, 0).unwrap();
    let expected_path = dir.path().join("expected.png");
    save_image(&expected, &expected_path).unwrap();
    assert_eq!(written, load_image(&expected_path).unwrap());

    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, format!("{}\n", fixture("camera_64.png").display())).unwrap();
    let o = cli(&["eval", "--model", s(&path), "--manifest", s(&manifest), "--scale", "2", "--json"]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (want, _, _) = evaluate_image(&ModelResolver::new(&model), &hr, &EvalProtocol::new(2)).unwrap();
    assert_eq!(rows[0]["psnr_db"].as_f64().unwrap(), want);
}

#[test]
fn eval_bicubic_csv_and_manifest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.txt");
    fs::write(&manifest, "# nothing\n\n").unwrap();
    let o = cli(&["eval", "--baseline", "bicubic", "--manifest", s(&manifest), "--scale", "2"]);
    assert_eq!(o.status.code(), Some(2));

    fs::copy(fixture("camera_64.png"), dir.path().join("camera.png")).unwrap();
    fs::write(&manifest, "camera.png\nmissing.png\n").unwrap();
    let o = cli(&["eval", "--baseline", "bicubic", "--manifest", s(&manifest), "--scale", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("image,psnr_db,ssim,ms\ncamera.png,"), "{text}");
    assert!(text.lines().last().unwrap().starts_with("MEAN,"));
    let strict =
        cli(&["eval", "--baseline", "bicubic", "--manifest", s(&manifest), "--scale", "4", "--strict"]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn downsample_keeps_constant_images_constant() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    fs::create_dir(&src).unwrap();
    save_image(&ImageBuffer::filled(30, 22, 3, 100.0 / 255.0).unwrap(), src.join("flat.png")).unwrap();
    let out = dir.path().join("out");
    let o = cli(&["downsample", "--input", s(&src), "--output", s(&out), "--scale", "4"]);
    assert!(o.status.success());
    let img = load_image(out.join("flat.png")).unwrap();
    // Cropped to 28x20 first, then shrunk.
    assert_eq!((img.height(), img.width(), img.channels()), (7, 5, 3));
    assert!(img.data().iter().all(|&v| v == 100.0 / 255.0));
}
