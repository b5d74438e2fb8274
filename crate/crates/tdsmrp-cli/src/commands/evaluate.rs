use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tdsmrp::eval::{build_eval_set, evaluate_all, CandidateSet, EvalSet, ModelKind};
use tdsmrp::io::{folds_from_str, read_checkpoint, read_dataset, stats_from_str, RunManifest};
use tdsmrp::pipeline::Fold;
use tdsmrp::report::{oracle_tsv, report_svg, report_tsv};

use super::{read_to_string, AnchorFlags, CliError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory of `<model>_seed<k>.ckpt` checkpoints.
    #[arg(long)]
    pub checkpoints: PathBuf,
    /// Internal dataset; its test fold is scored.
    #[arg(long)]
    pub internal: PathBuf,
    /// External-analog dataset; scored in full.
    #[arg(long)]
    pub external: PathBuf,
    /// Standardization stats fitted on the internal train fold.
    #[arg(long)]
    pub stats: PathBuf,
    /// Fold map of the internal dataset.
    #[arg(long)]
    pub folds: PathBuf,
    #[command(flatten)]
    pub anchors: AnchorFlags,
    /// False-discovery-rate level for the BY rejections.
    #[arg(long, default_value_t = 0.05)]
    pub fdr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Scans the checkpoint directory for `<model>_seed<k>.ckpt` files.
fn discover_checkpoints(
    dir: &Path,
) -> Result<Vec<(ModelKind, Vec<(u64, PathBuf)>)>, CliError> {
    let mut by_model: BTreeMap<ModelKind, Vec<(u64, PathBuf)>> = BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Evaluation(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(CliError::input)?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        let Some(stem) = name.strip_suffix(".ckpt") else {
            continue;
        };
        let Some((model, seed)) = stem.rsplit_once("_seed") else {
            continue;
        };
        let Some(kind) = ModelKind::parse(model) else {
            continue;
        };
        let Ok(seed) = seed.parse::<u64>() else {
            continue;
        };
        by_model.entry(kind).or_default().push((seed, path));
    }
    if by_model.is_empty() {
        return Err(CliError::Evaluation(format!(
            "no checkpoints matching <model>_seed<k>.ckpt under {}",
            dir.display()
        )));
    }
    let mut out: Vec<(ModelKind, Vec<(u64, PathBuf)>)> = by_model.into_iter().collect();
    for (_, seeds) in &mut out {
        seeds.sort_by_key(|(s, _)| *s);
    }
    Ok(out)
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let started = Instant::now();
    let internal = read_dataset(&args.internal)?;
    let external = read_dataset(&args.external)?;
    let stats = stats_from_str(
        &args.stats.display().to_string(),
        &read_to_string(&args.stats)?,
        &internal.registry,
    )?;
    let folds = folds_from_str(
        &args.folds.display().to_string(),
        &read_to_string(&args.folds)?,
    )?;

    let discovered = discover_checkpoints(&args.checkpoints)?;
    let mut manifest = RunManifest::new("evaluate", vec![]);
    manifest.add_input(&args.internal)?;
    manifest.add_input(&args.external)?;
    manifest.add_input(&args.stats)?;
    manifest.add_input(&args.folds)?;
    let mut candidates = Vec::new();
    for (kind, seed_paths) in discovered {
        let mut seeds = Vec::new();
        for (seed, path) in seed_paths {
            manifest.add_input(&path)?;
            let model = read_checkpoint(&path)
                .map_err(|e| CliError::Evaluation(e.to_string()))?;
            seeds.push((seed, model));
        }
        candidates.push(CandidateSet { kind, seeds });
    }

    let sampling = args.anchors.sampling();
    let test_idx = folds.episodes_in(&internal.episodes, Fold::Test);
    let internal_set = build_eval_set(
        "internal-test",
        &internal.episodes,
        &test_idx,
        &internal.registry,
        &stats,
        &sampling,
        internal.state_oracle.as_deref(),
    );
    let all_external: Vec<usize> = (0..external.episodes.len()).collect();
    let external_set = build_eval_set(
        "shifted-external",
        &external.episodes,
        &all_external,
        &internal.registry,
        &stats,
        &sampling,
        external.state_oracle.as_deref(),
    );
    let datasets: Vec<EvalSet> = vec![internal_set, external_set];
    let report = evaluate_all(&candidates, &datasets, args.fdr)
        .map_err(|e| CliError::Evaluation(e.to_string()))?;

    std::fs::create_dir_all(&args.out).map_err(CliError::input)?;
    let tsv_path = args.out.join("report.tsv");
    std::fs::write(&tsv_path, report_tsv(&report)).map_err(CliError::input)?;
    manifest.add_output(&tsv_path)?;
    if let Some(tsv) = oracle_tsv(&report) {
        let path = args.out.join("oracle.tsv");
        std::fs::write(&path, tsv).map_err(CliError::input)?;
        manifest.add_output(&path)?;
    }
    for ds in &report.datasets {
        let path = args.out.join(format!("report_{ds}.svg"));
        std::fs::write(&path, report_svg(&report, ds)).map_err(CliError::input)?;
        manifest.add_output(&path)?;
    }
    manifest.seal(&format!(
        "evaluate --fdr {} {}",
        args.fdr,
        args.anchors.describe()
    ));
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&args.out.join("evaluate_manifest.json"))?;
    println!(
        "evaluated {} models x {} seeds on {} internal-test and {} external windows",
        report.models.len(),
        report.seeds.len(),
        datasets[0].windows.len(),
        datasets[1].windows.len()
    );
    Ok(())
}
