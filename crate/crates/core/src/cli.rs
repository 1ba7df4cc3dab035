//! The `lapsrn` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 data error, 4 numeric abort.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::data::{
    downscale, list_images, load_image, read_manifest, rgb_to_ycbcr, save_image, ImageBuffer, PatchSampler,
    SamplerConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_dataset, recombine, super_resolve_image, Bicubic, EvalProtocol, ModelResolver, SuperResolver,
};
use crate::gradcheck::{run_gradcheck, GradcheckOptions};
use crate::layers::LossKind;
use crate::model::{count_layers, LapSrn, LapSrnConfig};
use crate::train::{parse_config, train, Control, TrainConfig, TrainLogRecord, TrainObserver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "lapsrn", version, about = "Laplacian pyramid super-resolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a directory of images
    Train(TrainArgs),
    /// Super-resolve an image or every image in a directory
    Sr(SrArgs),
    /// Score a model or the bicubic baseline on a manifest of images
    Eval(EvalArgs),
    /// Write bicubic-downscaled copies of every image in a directory
    Downsample(DownsampleArgs),
    /// Run the finite-difference gradient suite
    Gradcheck(GradcheckArgs),
    /// Describe a checkpoint or configuration
    Info(InfoArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// key = value file; flags override its settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training images (config key: data)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for checkpoints and train.csv (config key: out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    scale: Option<usize>,
    /// Convolutions per pyramid level
    #[arg(long)]
    depth: Option<usize>,
    /// Feature channels
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, value_parser = ["charbonnier", "l2"])]
    loss: Option<String>,
    /// Predict the HR image directly instead of a residual
    #[arg(long)]
    no_residual: bool,
    /// Upsample in one step instead of a 2x pyramid
    #[arg(long)]
    no_pyramid: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial learning rate (config key: lr_init)
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    iters_per_epoch: Option<usize>,
    /// Patches per batch (config key: batch_n)
    #[arg(long)]
    batch: Option<usize>,
    /// HR patch side (config key: patch_size)
    #[arg(long)]
    patch: Option<usize>,
    /// Disable scale/rotation/flip augmentation (config key: augment)
    #[arg(long)]
    no_augment: bool,
    /// Write 0 in the wall_ms column (config key: log_wall_time)
    #[arg(long)]
    no_wall_time: bool,
}

#[derive(Args, Debug)]
struct SrArgs {
    #[arg(long)]
    model: PathBuf,
    /// Image file or directory of images
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Output scale; defaults to the model's
    #[arg(long)]
    scale: Option<usize>,
    /// Write every intermediate scale up to --scale
    #[arg(long)]
    all_scales: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("method").required(true).args(["model", "baseline"]))]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_parser = ["bicubic"])]
    baseline: Option<String>,
    /// Newline-separated image paths, relative to the manifest
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    scale: usize,
    /// Border pixels ignored by the metrics; defaults to the scale
    #[arg(long)]
    shave: Option<usize>,
    #[arg(long)]
    json: bool,
    /// Fail with exit 3 if any image cannot be evaluated
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct DownsampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    scale: usize,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb the analytic gradient of matching checks (negative control)
    #[arg(long, hide = true)]
    corrupt: Option<String>,
}

#[derive(Args, Debug)]
struct InfoArgs {
    /// Checkpoint to describe; without it the flags below describe a fresh model
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    scale: usize,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    no_residual: bool,
    #[arg(long)]
    no_pyramid: bool,
}

/// Maps a library error onto the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Capability(_) => EXIT_USAGE,
        Error::Io { .. } | Error::Image { .. } | Error::Checkpoint(_) => EXIT_DATA,
        Error::Numeric(_) => EXIT_NUMERIC,
    }
}

fn data_err(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Io {
            path: PathBuf::new(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, m),
        },
        other => other,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sr(a) => cmd_sr(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Downsample(a) => cmd_downsample(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Info(a) => cmd_info(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("LAPSR_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => warn!("ignoring LAPSR_THREADS={v}: expected a positive integer"),
        }
    }
}

struct TrainPlan {
    model: LapSrnConfig,
    train: TrainConfig,
    data: PathBuf,
    out: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn plan_training(a: &TrainArgs) -> Result<TrainPlan> {
    let mut model = LapSrnConfig::new(a.scale.unwrap_or(4));
    let mut train = TrainConfig::default();
    let (mut data, mut out) = (None, None);
    let mut depth_set = false;
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
        let entries = parse_config(&text)?;
        // Scale first so the depth default follows it.
        if let Some(e) = entries.iter().find(|e| e.key == "scale") {
            model =
                LapSrnConfig::new(e.value.parse().map_err(|_| usage(format!("bad scale '{}'", e.value)))?);
        }
        for e in &entries {
            match e.key.as_str() {
                "data" => data = Some(PathBuf::from(&e.value)),
                "out" => out = Some(PathBuf::from(&e.value)),
                k => {
                    depth_set |= k == "depth";
                    if !(model.set(k, &e.value)? || train.set(k, &e.value)?) {
                        return Err(usage(format!("config line {}: unknown key '{k}'", e.line)));
                    }
                }
            }
        }
    }
    if let Some(s) = a.scale {
        let depth = model.depth;
        model.scale = s;
        model.depth = if depth_set { depth } else { LapSrnConfig::new(s).depth };
    }
    if let Some(d) = a.depth {
        model.depth = d;
    }
    if let Some(c) = a.channels {
        model.channels = c;
    }
    if let Some(l) = &a.loss {
        model.loss_kind = l.parse::<LossKind>().map_err(usage)?;
    }
    if a.no_residual {
        model.use_residual = false;
    }
    if a.no_pyramid {
        model.use_pyramid = false;
    }
    if let Some(s) = a.seed {
        train.seed = s;
    }
    if let Some(v) = a.lr {
        train.lr_init = v;
    }
    if let Some(v) = a.max_epochs {
        train.max_epochs = v;
    }
    if let Some(v) = a.iters_per_epoch {
        train.iters_per_epoch = v;
    }
    if let Some(v) = a.batch {
        train.batch_n = v;
    }
    if let Some(v) = a.patch {
        train.patch_size = v;
    }
    if a.no_augment {
        train.augment = false;
    }
    if a.no_wall_time {
        train.log_wall_time = false;
    }
    if let Some(d) = &a.data {
        data = Some(d.clone());
    }
    if let Some(o) = &a.out {
        out = Some(o.clone());
    }
    model.validate()?;
    train.validate()?;
    Ok(TrainPlan {
        model,
        train,
        data: data.ok_or_else(|| usage("--data (or config key 'data') is required"))?,
        out: out.ok_or_else(|| usage("--out (or config key 'out') is required"))?,
    })
}

/// Writes the CSV log, per-epoch checkpoints, and stops on Ctrl-C.
struct CliObserver {
    out: PathBuf,
    log: fs::File,
    interrupted: Arc<AtomicBool>,
}

impl CliObserver {
    fn io(&self, source: std::io::Error) -> Error {
        Error::Io { path: self.out.join("train.csv"), source }
    }
}

impl TrainObserver<f32> for CliObserver {
    fn on_iteration(&mut self, r: &TrainLogRecord) -> Result<Control> {
        writeln!(self.log, "{}", r.to_csv_row()).map_err(|e| self.io(e))?;
        if r.iter.is_multiple_of(100) {
            info!("epoch {} iter {} loss {:.6} lr {:e}", r.epoch, r.iter, r.loss, r.lr);
        }
        Ok(if self.interrupted.load(Ordering::SeqCst) { Control::Stop } else { Control::Continue })
    }

    fn on_epoch_end(&mut self, epoch: usize, model: &LapSrn<f32>) -> Result<Control> {
        self.log.flush().map_err(|e| self.io(e))?;
        save_checkpoint(model, self.out.join(format!("epoch_{:04}.lpsr", epoch + 1)))?;
        Ok(Control::Continue)
    }
}

fn load_corpus(dir: &Path) -> Result<Vec<ImageBuffer>> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::Image { path: dir.to_path_buf(), message: "no PNG or BMP images found".into() });
    }
    paths.iter().map(load_image).collect()
}

fn cmd_train(a: TrainArgs) -> Result<i32> {
    let plan = plan_training(&a)?;
    let corpus = load_corpus(&plan.data)?;
    let sampler_cfg = SamplerConfig {
        batch: plan.train.batch_n,
        patch: plan.train.patch_size,
        scale: plan.model.scale,
        augment: plan.train.augment,
    };
    let mut sampler = PatchSampler::new(&corpus, sampler_cfg, plan.train.seed).map_err(data_err)?;
    let mut model = LapSrn::<f32>::new(&plan.model, plan.train.seed)?;
    fs::create_dir_all(&plan.out).map_err(|source| Error::Io { path: plan.out.clone(), source })?;
    let log_path = plan.out.join("train.csv");
    let mut log =
        fs::File::create(&log_path).map_err(|source| Error::Io { path: log_path.clone(), source })?;
    writeln!(log, "{}", TrainLogRecord::CSV_HEADER)
        .map_err(|source| Error::Io { path: log_path.clone(), source })?;
    let interrupted = Arc::new(AtomicBool::new(false));
    {
        let flag = interrupted.clone();
        if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
            warn!("Ctrl-C handler not installed: {e}");
        }
    }
    info!(
        "training {}x depth {} ({} layers, {} parameters) on {} images",
        plan.model.scale,
        plan.model.depth,
        count_layers(&plan.model),
        model.param_count(),
        corpus.len()
    );
    let mut observer = CliObserver { out: plan.out.clone(), log, interrupted: interrupted.clone() };
    let report = train(&mut model, &mut sampler, &plan.train, &mut observer);
    observer.log.flush().map_err(|e| observer.io(e))?;
    let report = report?;
    if interrupted.load(Ordering::SeqCst) {
        save_checkpoint(&model, plan.out.join("interrupt.lpsr"))?;
        info!("interrupted; wrote interrupt.lpsr");
    }
    info!("stopped after {} epochs: {:?}", report.epochs_completed, report.stop);
    Ok(EXIT_OK)
}

fn sr_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        list_images(input)
    } else if input.is_file() {
        Ok(vec![input.to_path_buf()])
    } else {
        Err(Error::Io {
            path: input.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        })
    }
}

fn output_name(path: &Path, scale: usize) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!("{stem}_x{scale}.png")
}

fn cmd_sr(a: SrArgs) -> Result<i32> {
    let model = load_checkpoint::<f32>(&a.model)?;
    let scale = a.scale.unwrap_or(model.config().scale);
    model.levels_for_scale(scale)?;
    let inputs = sr_inputs(&a.input)?;
    fs::create_dir_all(&a.output).map_err(|source| Error::Io { path: a.output.clone(), source })?;
    let resolver = ModelResolver::new(&model);
    inputs.par_iter().try_for_each(|path| -> Result<()> {
        let img = load_image(path)?;
        if a.all_scales {
            let ycc = (img.channels() == 3).then(|| rgb_to_ycbcr(&img)).transpose()?;
            let y = match &ycc {
                Some(ycc) => ycc.channel(0)?,
                None => img.clone(),
            };
            for (s, out_y) in resolver.all_scales(&y, scale)? {
                let out = match &ycc {
                    Some(ycc) => recombine(&out_y, ycc, s)?,
                    None => out_y,
                };
                save_image(&out, a.output.join(output_name(path, s)))?;
            }
        } else {
            let out = super_resolve_image(&resolver, &img, scale)?;
            save_image(&out, a.output.join(output_name(path, scale)))?;
        }
        Ok(())
    })?;
    info!("wrote {} image(s) to {}", inputs.len(), a.output.display());
    Ok(EXIT_OK)
}

fn cmd_eval(a: EvalArgs) -> Result<i32> {
    let paths = read_manifest(&a.manifest)?;
    if paths.is_empty() {
        return Err(usage(format!("manifest {} lists no images", a.manifest.display())));
    }
    let mut protocol = EvalProtocol::new(a.scale);
    if let Some(s) = a.shave {
        protocol = protocol.with_shave(s);
    }
    let model = a.model.as_ref().map(load_checkpoint::<f32>).transpose()?;
    let resolver: Box<dyn SuperResolver + '_> = match &model {
        Some(m) => {
            m.levels_for_scale(a.scale)?;
            Box::new(ModelResolver::new(m))
        }
        None => Box::new(Bicubic),
    };
    let summary = evaluate_dataset(resolver.as_ref(), &paths, &protocol)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary.to_json()).expect("serializable"));
    } else {
        print!("{}", summary.to_csv());
    }
    if summary.incomplete() {
        eprintln!(
            "warning: {} of {} images could not be evaluated; means are incomplete",
            summary.skipped.len(),
            paths.len()
        );
        if a.strict {
            return Ok(EXIT_DATA);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_downsample(a: DownsampleArgs) -> Result<i32> {
    if a.scale < 1 {
        return Err(usage("--scale must be >= 1"));
    }
    let inputs = list_images(&a.input)?;
    fs::create_dir_all(&a.output).map_err(|source| Error::Io { path: a.output.clone(), source })?;
    inputs.par_iter().try_for_each(|path| -> Result<()> {
        let img = load_image(path)?
            .crop_to_multiple(a.scale)
            .map_err(|e| Error::Image { path: path.clone(), message: e.to_string() })?;
        let name = path.file_name().expect("listed files have names");
        save_image(&downscale(&img, a.scale)?, a.output.join(name))
    })?;
    info!("downscaled {} image(s) by {}", inputs.len(), a.scale);
    Ok(EXIT_OK)
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<i32> {
    let opts = GradcheckOptions { seed: a.seed, corrupt: a.corrupt, ..Default::default() };
    let report = run_gradcheck(&opts)?;
    for r in &report.results {
        println!(
            "{:<6} {:<36} max rel err {:.3e} ({} entries{})",
            if r.passed { "ok" } else { "FAIL" },
            r.name,
            r.max_rel_error,
            r.entries,
            if r.skipped > 0 { format!(", {} at kinks skipped", r.skipped) } else { String::new() }
        );
    }
    if report.passed() {
        println!("all {} checks passed (tolerance {:e})", report.results.len(), report.tolerance);
        Ok(EXIT_OK)
    } else {
        for r in report.failures() {
            eprintln!("gradient check failed: {} max rel err {:e}", r.name, r.max_rel_error);
        }
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_info(a: InfoArgs) -> Result<i32> {
    let model = match &a.model {
        Some(p) => load_checkpoint::<f32>(p)?,
        None => {
            let mut c = LapSrnConfig::new(a.scale);
            if let Some(d) = a.depth {
                c.depth = d;
            }
            c.use_residual = !a.no_residual;
            c.use_pyramid = !a.no_pyramid;
            LapSrn::new(&c, 0)?
        }
    };
    let c = model.config();
    println!("scale {}x, depth {}, channels {}, loss {}", c.scale, c.depth, c.channels, c.loss_kind);
    println!("pyramid {}, residual {}, levels {}", c.use_pyramid, c.use_residual, c.levels());
    println!("layers {}, parameters {}", model.count_layers(), model.param_count());
    for l in model.layer_list() {
        println!(
            "  {:<24} {:?} {}->{} k{} s{} p{}{}{}",
            l.name,
            l.kind,
            l.spec.in_channels,
            l.spec.out_channels,
            l.spec.kernel,
            l.spec.stride,
            l.spec.pad,
            if l.activation { " lrelu" } else { "" },
            if l.bilinear_init { " bilinear-init" } else { "" }
        );
    }
    Ok(EXIT_OK)
}
