use std::path::PathBuf;
use std::time::Instant;

use tdsmrp::eval::ModelKind;
use tdsmrp::io::{folds_from_str, read_dataset, stats_from_str, RunManifest};
use tdsmrp::report::{sweep_svg, sweep_tsv};
use tdsmrp::train::{sweep_delay, TrainConfig, TrainData};

use super::train::training_error;
use super::{parse_seed_set, read_to_string, AnchorFlags, CliError, ModelFlags};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Delays to sweep, hours.
    #[arg(long, default_value = "4,16,24,48,72,120")]
    pub delays: String,
    /// Seeds per delay (sweeps usually run one).
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long, default_value_t = 0.99)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long)]
    pub lr: Option<f64>,
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

pub fn run(args: &Args) -> Result<(), CliError> {
    let started = Instant::now();
    let delays: Vec<f64> = args
        .delays
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("bad delay list {:?}", args.delays)))?;
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
    let mut cfg = TrainConfig::new(ModelKind::Td, args.model.to_config(dataset.registry.len())?);
    cfg.alpha = args.alpha;
    cfg.max_epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.seeds = parse_seed_set(&args.seeds)?;
    cfg.anchor_sampling = args.anchors.sampling();
    cfg.lr_override = args.lr;
    cfg.wd_override = args.wd;
    let data = TrainData::from_folds(&dataset.episodes, &dataset.registry, &stats, &folds);
    let result = sweep_delay(&cfg, &delays, &data).map_err(training_error)?;

    std::fs::create_dir_all(&args.out_dir).map_err(CliError::input)?;
    let tsv_path = args.out_dir.join("sweep.tsv");
    let svg_path = args.out_dir.join("sweep.svg");
    std::fs::write(&tsv_path, sweep_tsv(&result)).map_err(CliError::input)?;
    std::fs::write(&svg_path, sweep_svg(&result)).map_err(CliError::input)?;

    let mut manifest = RunManifest::new("sweep", cfg.seeds.clone());
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&args.stats)?;
    manifest.add_input(&args.folds)?;
    manifest.add_output(&tsv_path)?;
    manifest.add_output(&svg_path)?;
    manifest.seal(&format!(
        "sweep --delays {} --epochs {} --batch {} --lr {:?} --wd {:?} {} {}",
        args.delays,
        args.epochs,
        args.batch,
        args.lr,
        args.wd,
        args.anchors.describe(),
        args.model.describe()
    ));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&args.out_dir.join("sweep_manifest.json"))?;
    println!("selected delay: {}h", result.selected_delay_hours);
    Ok(())
}
