use std::path::PathBuf;
use std::time::Instant;

use tdsmrp::io::{folds_to_string, read_dataset, stats_to_string, RunManifest};
use tdsmrp::pipeline::{fit_standardization, split_patients, FitConfig, Fold};

use super::{AnchorFlags, CliError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Dataset to split and fit.
    pub dataset: PathBuf,
    /// Train/validation/test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: String,
    /// Patient-shuffle seed.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub anchors: AnchorFlags,
    /// Output stats file (fitted on the train fold only).
    #[arg(long)]
    pub out_stats: PathBuf,
    /// Output patient->fold map.
    #[arg(long)]
    pub out_folds: PathBuf,
}

fn parse_split(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("bad split {s:?}")))?;
    if parts.len() != 3 {
        return Err(CliError::Input(format!(
            "split needs three fractions, got {s:?}"
        )));
    }
    Ok((parts[0], parts[1], parts[2]))
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let started = Instant::now();
    let fractions = parse_split(&args.split)?;
    let dataset = read_dataset(&args.dataset)?;
    let folds = split_patients(&dataset.episodes, fractions, args.seed).map_err(CliError::input)?;
    let train_idx = folds.episodes_in(&dataset.episodes, Fold::Train);
    let train_episodes: Vec<_> = train_idx
        .iter()
        .map(|&i| dataset.episodes[i].clone())
        .collect();
    let fit_cfg = FitConfig {
        anchor_sampling: args.anchors.sampling(),
        ..FitConfig::default()
    };
    let (stats, report) =
        fit_standardization(&train_episodes, &dataset.registry, &fit_cfg).map_err(CliError::input)?;
    for (id, reason) in &report.flagged {
        log::warn!("feature {}: {reason}", dataset.registry.name(*id));
    }
    std::fs::write(&args.out_stats, stats_to_string(&stats, &dataset.registry))
        .map_err(CliError::input)?;
    std::fs::write(&args.out_folds, folds_to_string(&folds)).map_err(CliError::input)?;

    let mut manifest = RunManifest::new("prepare", vec![args.seed]);
    manifest.add_input(&args.dataset)?;
    manifest.add_output(&args.out_stats)?;
    manifest.add_output(&args.out_folds)?;
    manifest.seal(&format!(
        "prepare --split {} --seed {} {}",
        args.split,
        args.seed,
        args.anchors.describe()
    ));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&args.out_stats.with_extension("manifest.json"))?;
    log::info!(
        "fitted stats on {} train episodes ({} anchors)",
        report.n_episodes,
        report.n_anchors
    );
    Ok(())
}
