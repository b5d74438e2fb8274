use std::path::{Path, PathBuf};
use std::time::Instant;

use tdsmrp::eval::ModelKind;
use tdsmrp::io::{
    folds_from_str, read_dataset, stats_from_str, write_checkpoint, write_train_log, RunManifest,
};
use tdsmrp::train::{train, TrainConfig, TrainData, TrainError, TrainedSeed};

use super::{parse_seed_set, read_to_string, AnchorFlags, CliError, ModelFlags};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Candidate family: td or sup1|sup3|sup7|sup14|sup28.
    #[arg(long)]
    pub mode: String,
    /// Class-balanced cross-entropy (normalized inverse class frequency).
    #[arg(long)]
    pub balanced: bool,
    /// Next-state delay x in hours (4|16|24|48|72|120).
    #[arg(long, default_value_t = 24.0)]
    pub delay_x: f64,
    /// Seeds, e.g. `0..4` or `0,1,2`.
    #[arg(long, default_value = "0..4")]
    pub seeds: String,
    /// Target-network sync rate.
    #[arg(long, default_value_t = 0.99)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    /// Learning-rate override (default: 1/n_params).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Weight-decay override (default: 1/(lr * batches_per_epoch)).
    #[arg(long)]
    pub wd: Option<f64>,
    #[command(flatten)]
    pub anchors: AnchorFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long)]
    pub folds: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub(crate) fn training_error(e: TrainError) -> CliError {
    match e {
        TrainError::Pipeline(p) => CliError::Input(p.to_string()),
        TrainError::BadConfig(m) => CliError::Input(m),
        other => CliError::Training(other.to_string()),
    }
}

pub(crate) fn build_config(args: &Args, feature_vocab: usize) -> Result<TrainConfig, CliError> {
    let mode = ModelKind::parse(&args.mode)
        .ok_or_else(|| CliError::Input(format!("bad mode {:?}", args.mode)))?;
    let mut cfg = TrainConfig::new(mode, args.model.to_config(feature_vocab)?);
    cfg.balanced = args.balanced;
    cfg.delay_hours = args.delay_x;
    cfg.alpha = args.alpha;
    cfg.max_epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.seeds = parse_seed_set(&args.seeds)?;
    cfg.anchor_sampling = args.anchors.sampling();
    cfg.lr_override = args.lr;
    cfg.wd_override = args.wd;
    Ok(cfg)
}

pub(crate) fn write_outputs(
    out_dir: &Path,
    mode_label: &str,
    trained: &[TrainedSeed],
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(CliError::input)?;
    let mut log_records = Vec::new();
    for t in trained {
        let path = out_dir.join(format!("{mode_label}_seed{}.ckpt", t.seed));
        write_checkpoint(&path, &t.model)?;
        manifest.add_output(&path)?;
        log_records.extend(t.log.iter().cloned());
    }
    let log_path = out_dir.join(format!("{mode_label}_train_log.jsonl"));
    write_train_log(&log_path, &log_records)?;
    Ok(())
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let started = Instant::now();
    let dataset = read_dataset(&args.dataset)?;
    let stats = stats_from_str(
        &args.stats.display().to_string(),
        &read_to_string(&args.stats)?,
        &dataset.registry,
    )?;
    let folds = folds_from_str(
        &args.folds.display().to_string(),
        &read_to_string(&args.folds)?,
    )?;
    let cfg = build_config(args, dataset.registry.len())?;
    let data = TrainData::from_folds(&dataset.episodes, &dataset.registry, &stats, &folds);
    let trained = train(&cfg, &data).map_err(training_error)?;

    let mut manifest = RunManifest::new("train", cfg.seeds.clone());
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&args.stats)?;
    manifest.add_input(&args.folds)?;
    write_outputs(&args.out_dir, &cfg.mode.label(), &trained, &mut manifest)?;
    manifest.seal(&format!(
        "train --mode {} --balanced {} --delay-x {} --alpha {} --epochs {} --batch {} --lr {:?} --wd {:?} {} {}",
        args.mode,
        args.balanced,
        args.delay_x,
        args.alpha,
        args.epochs,
        args.batch,
        args.lr,
        args.wd,
        args.anchors.describe(),
        args.model.describe()
    ));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&args.out_dir.join(format!("{}_manifest.json", cfg.mode.label())))?;
    for t in &trained {
        log::info!(
            "seed {}: best epoch {} with validation AUROC {:.4}",
            t.seed,
            t.best_epoch,
            t.best_val_metric
        );
    }
    Ok(())
}
