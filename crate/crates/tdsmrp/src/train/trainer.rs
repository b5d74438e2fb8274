//! The per-seed training loop, multi-seed orchestration and the delay sweep.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    default_learning_rate, default_weight_decay, optimizer_step, supervised_target,
    EpochLogRecord, OptimizerState, TrainConfig, TrainError, TD_TERMINAL_HORIZON_DAYS,
};
use crate::domain::{Episode, FeatureRegistry, RewardSpec};
use crate::eval::{auroc, build_eval_set, EvalSet, ModelKind, HORIZONS_DAYS};
use crate::model::{batch_forward, soft_update, ModelError, ValueModel};
use crate::pipeline::{
    assemble_window, build_sample_specs, class_weights, Fold, FoldMap, NextSpec, NextStateRule,
    ObservationWindow, SampleSpec, StandardizationStats,
};

/// Episodes plus fold bookkeeping for one training campaign.
pub struct TrainData<'a> {
    pub episodes: &'a [Episode],
    pub registry: &'a FeatureRegistry,
    pub stats: &'a StandardizationStats,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

impl<'a> TrainData<'a> {
    pub fn from_folds(
        episodes: &'a [Episode],
        registry: &'a FeatureRegistry,
        stats: &'a StandardizationStats,
        folds: &FoldMap,
    ) -> Self {
        TrainData {
            episodes,
            registry,
            stats,
            train_indices: folds.episodes_in(episodes, Fold::Train),
            val_indices: folds.episodes_in(episodes, Fold::Validation),
        }
    }
}

/// Outcome of one seed: the best-validation checkpoint and the epoch log.
pub struct TrainedSeed {
    pub seed: u64,
    pub model: ValueModel,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub log: Vec<EpochLogRecord>,
}

pub use super::EpochLogRecord as EpochRecord;

/// Trains one checkpoint per seed, fully deterministically: main and target
/// networks start identical, every batch computes targets (bootstrap via
/// the target network in TD mode, observed labels otherwise), takes one
/// AdamW step, then softly syncs the target network; the best per-epoch
/// validation AUROC picks the returned checkpoint.
pub fn train(config: &TrainConfig, data: &TrainData) -> Result<Vec<TrainedSeed>, TrainError> {
    config.validate()?;
    let horizon = config.validation_horizon_days();
    if !HORIZONS_DAYS.contains(&horizon) {
        return Err(TrainError::BadConfig(format!(
            "horizon {horizon}d outside the evaluation set {HORIZONS_DAYS:?}"
        )));
    }
    let rule = NextStateRule::new(config.delay_hours)?;
    let specs = build_sample_specs(
        data.episodes,
        &data.train_indices,
        data.registry,
        &config.anchor_sampling,
        &rule,
        &RewardSpec::default(),
    );
    if specs.is_empty() {
        return Err(TrainError::BadConfig("no training anchors".into()));
    }
    let sup_labels: Option<Vec<f64>> = match config.mode {
        ModelKind::Supervised { horizon_days } => Some(spec_labels(
            data.episodes,
            &specs,
            horizon_days,
        )),
        ModelKind::Td => None,
    };
    let weights = if config.balanced {
        let horizon_days = match config.mode {
            ModelKind::Supervised { horizon_days } => horizon_days,
            ModelKind::Td => TD_TERMINAL_HORIZON_DAYS,
        };
        let labels: Vec<bool> = spec_labels(data.episodes, &specs, horizon_days)
            .iter()
            .map(|&l| l == 1.0)
            .collect();
        class_weights(&labels)?
    } else {
        (1.0, 1.0)
    };
    let val_set = build_eval_set(
        "validation",
        data.episodes,
        &data.val_indices,
        data.registry,
        data.stats,
        &config.anchor_sampling,
        None,
    );
    if val_set.windows.is_empty() {
        return Err(TrainError::BadConfig("no validation anchors".into()));
    }
    let val_label_idx = HORIZONS_DAYS.iter().position(|&h| h == horizon).unwrap();

    let results: Vec<Result<TrainedSeed, TrainError>> = config
        .seeds
        .par_iter()
        .map(|&seed| train_one_seed(config, data, &specs, &sup_labels, weights, &val_set, val_label_idx, seed))
        .collect();
    results.into_iter().collect()
}

fn spec_labels(episodes: &[Episode], specs: &[SampleSpec], horizon_days: u32) -> Vec<f64> {
    specs
        .iter()
        .map(|s| {
            let ep = &episodes[s.episode_idx];
            supervised_target(ep, ep.events[s.anchor_idx].time, horizon_days)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn train_one_seed(
    config: &TrainConfig,
    data: &TrainData,
    specs: &[SampleSpec],
    sup_labels: &Option<Vec<f64>>,
    weights: (f64, f64),
    val_set: &EvalSet,
    val_label_idx: usize,
    seed: u64,
) -> Result<TrainedSeed, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ValueModel::init(config.model.clone(), &mut rng)?;
    let mut target_net = model.clone();
    let n_batches = specs.len().div_ceil(config.batch_size);
    let lr = config
        .lr_override
        .unwrap_or_else(|| default_learning_rate(model.n_params()));
    let wd = config
        .wd_override
        .unwrap_or_else(|| default_weight_decay(lr, n_batches));
    let mut opt = OptimizerState::new(model.n_params(), lr, wd);
    let mut order: Vec<usize> = (0..specs.len()).collect();
    let mut log = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, ValueModel)> = None;
    let started = Instant::now();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let (windows, targets) = materialize_batch(
                config, data, specs, sup_labels, &target_net, chunk,
            )
            .map_err(|e| divergence_of(e, seed, epoch))?;
            let (loss, grad) = model
                .backward_batch(&windows, &targets, weights)
                .map_err(|e| divergence_of(TrainError::Model(e), seed, epoch))?;
            loss_sum += loss;
            optimizer_step(&mut model, &grad, &mut opt)?;
            if config.mode == ModelKind::Td {
                soft_update(&mut target_net, &model, config.alpha)?;
            }
        }
        let scores = batch_forward(&model, &val_set.windows)?;
        let val_metric = auroc(&scores, &val_set.labels[val_label_idx])?;
        if !val_metric.is_finite() {
            return Err(TrainError::Divergence {
                seed,
                epoch,
                detail: "validation metric non-finite".into(),
            });
        }
        log.push(EpochLogRecord {
            seed,
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_metric,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        let improved = best.as_ref().map_or(true, |(bv, _, _)| val_metric > *bv);
        if improved {
            best = Some((val_metric, epoch, model.clone()));
        }
    }
    let (best_val_metric, best_epoch, model) = best.expect("max_epochs >= 1");
    Ok(TrainedSeed {
        seed,
        model,
        best_epoch,
        best_val_metric,
        log,
    })
}

fn divergence_of(e: TrainError, seed: u64, epoch: usize) -> TrainError {
    match e {
        TrainError::Model(ModelError::NonFiniteLoss(detail)) => TrainError::Divergence {
            seed,
            epoch,
            detail,
        },
        other => other,
    }
}

/// Assembles one batch: current windows plus per-sample regression targets
/// (bootstrap values or observed labels).
fn materialize_batch(
    config: &TrainConfig,
    data: &TrainData,
    specs: &[SampleSpec],
    sup_labels: &Option<Vec<f64>>,
    target_net: &ValueModel,
    chunk: &[usize],
) -> Result<(Vec<ObservationWindow>, Vec<f64>), TrainError> {
    match config.mode {
        ModelKind::Supervised { .. } => {
            let labels = sup_labels.as_ref().expect("labels precomputed");
            let windows: Vec<ObservationWindow> = chunk
                .par_iter()
                .map(|&i| {
                    let s = &specs[i];
                    assemble_window(
                        &data.episodes[s.episode_idx],
                        data.registry,
                        s.anchor_idx,
                        data.stats,
                    )
                })
                .collect::<Result<_, _>>()?;
            let targets = chunk.iter().map(|&i| labels[i]).collect();
            Ok((windows, targets))
        }
        ModelKind::Td => {
            enum Pending {
                Fixed(f64),
                Bootstrap(usize), // index into the next-window batch
            }
            let realized: Vec<(ObservationWindow, Option<ObservationWindow>)> = chunk
                .par_iter()
                .map(|&i| {
                    let s = &specs[i];
                    let ep = &data.episodes[s.episode_idx];
                    let current = assemble_window(ep, data.registry, s.anchor_idx, data.stats)?;
                    let next = match s.next {
                        NextSpec::Continue { anchor_idx, .. } => {
                            Some(assemble_window(ep, data.registry, anchor_idx, data.stats)?)
                        }
                        NextSpec::Terminal { .. } => None,
                    };
                    Ok((current, next))
                })
                .collect::<Result<_, crate::pipeline::PipelineError>>()?;
            let mut windows = Vec::with_capacity(chunk.len());
            let mut pending = Vec::with_capacity(chunk.len());
            let mut next_windows = Vec::new();
            for (&i, (current, next)) in chunk.iter().zip(realized) {
                windows.push(current);
                match (next, &specs[i].next) {
                    (Some(w), NextSpec::Continue { .. }) => {
                        pending.push(Pending::Bootstrap(next_windows.len()));
                        next_windows.push(w);
                    }
                    (None, NextSpec::Terminal { reward }) => {
                        pending.push(Pending::Fixed(*reward));
                    }
                    _ => unreachable!("next window presence mirrors the spec"),
                }
            }
            let bootstrap = batch_forward(target_net, &next_windows)?;
            let targets = pending
                .into_iter()
                .map(|p| match p {
                    Pending::Fixed(r) => r,
                    Pending::Bootstrap(j) => bootstrap[j],
                })
                .collect();
            Ok((windows, targets))
        }
    }
}

// ---------------------------------------------------------------------------
// Delay sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub delay_hours: f64,
    /// Mean validation AUROC over seeds, one entry per horizon.
    pub val_auroc: [f64; 5],
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub selected_delay_hours: f64,
}

/// Argmax by 28-day validation AUROC; ties go to the smallest delay.
pub fn select_delay(rows: &[SweepRow]) -> f64 {
    let mut best: Option<(f64, f64)> = None; // (delay, 28d auroc)
    for r in rows {
        let score = r.val_auroc[4];
        let better = match best {
            None => true,
            Some((bd, bs)) => score > bs || (score == bs && r.delay_hours < bd),
        };
        if better {
            best = Some((r.delay_hours, score));
        }
    }
    best.expect("nonempty sweep").0
}

/// Trains one TD model per delay and reports per-horizon validation AUROC;
/// the returned selection is the 28-day argmax.
pub fn sweep_delay(
    base: &TrainConfig,
    delays_hours: &[f64],
    data: &TrainData,
) -> Result<SweepResult, TrainError> {
    if base.mode != ModelKind::Td {
        return Err(TrainError::BadConfig("delay sweeps train TD models".into()));
    }
    if delays_hours.is_empty() {
        return Err(TrainError::BadConfig("empty delay list".into()));
    }
    let val_set = build_eval_set(
        "validation",
        data.episodes,
        &data.val_indices,
        data.registry,
        data.stats,
        &base.anchor_sampling,
        None,
    );
    let mut rows = Vec::with_capacity(delays_hours.len());
    for &x in delays_hours {
        let mut cfg = base.clone();
        cfg.delay_hours = x;
        let trained = train(&cfg, data)?;
        let mut acc = [0.0_f64; 5];
        for t in &trained {
            let scores = batch_forward(&t.model, &val_set.windows)?;
            for (hi, a) in acc.iter_mut().enumerate() {
                *a += auroc(&scores, &val_set.labels[hi])?;
            }
        }
        for a in &mut acc {
            *a /= trained.len() as f64;
        }
        rows.push(SweepRow {
            delay_hours: x,
            val_auroc: acc,
        });
    }
    let selected_delay_hours = select_delay(&rows);
    Ok(SweepResult {
        rows,
        selected_delay_hours,
    })
}
