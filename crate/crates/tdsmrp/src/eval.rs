//! Discrimination metrics and statistics: multi-horizon AUROC, one-tailed
//! paired t-tests across seeds, Benjamini-Yekutieli adjustment, and the
//! evaluation-report grid with oracle value-accuracy metrics.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::domain::{mortality_within, Episode, FeatureRegistry};
use crate::model::{batch_forward, ModelError, ValueModel};
use crate::pipeline::{assemble_window, enumerate_anchors, AnchorSampling, ObservationWindow,
    StandardizationStats};

/// Mortality horizons evaluated throughout, in days.
pub const HORIZONS_DAYS: [u32; 5] = [1, 3, 7, 14, 28];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric needs both classes present")]
    SingleClass,
    #[error("paired test needs two equal-length series of at least 2, got {0} and {1}")]
    BadPairedInput(usize, usize),
    #[error("lengths differ: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("candidate {0} is missing seeds {1:?}")]
    MissingSeed(String, Vec<u64>),
    #[error("evaluation needs at least one candidate, dataset and seed")]
    EmptyInput,
    #[error("p-value {0} outside [0, 1]")]
    BadPValue(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// AUROC
// ---------------------------------------------------------------------------

/// Probability that a random positive outranks a random negative, ties
/// counted half: the rank-statistic (Mann-Whitney) formulation.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks across tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

// ---------------------------------------------------------------------------
// Paired t-test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct PairedTResult {
    pub t_stat: f64,
    pub p_value: f64,
    /// Zero-variance differences with a nonzero mean: p collapses to 0 or 1.
    pub degenerate: bool,
}

/// One-tailed paired Student's t-test with alternative `mean(a) > mean(b)`.
pub fn paired_t_one_tailed(a: &[f64], b: &[f64]) -> Result<PairedTResult, EvalError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(EvalError::BadPairedInput(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        let (p, degenerate) = if mean > 0.0 {
            (0.0, true)
        } else if mean < 0.0 {
            (1.0, true)
        } else {
            (0.5, false)
        };
        if degenerate {
            log::warn!("paired t-test degenerate: zero variance, mean difference {mean}");
        }
        return Ok(PairedTResult {
            t_stat: if mean == 0.0 { 0.0 } else { f64::INFINITY * mean.signum() },
            p_value: p,
            degenerate,
        });
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2");
    Ok(PairedTResult {
        t_stat: t,
        p_value: 1.0 - dist.cdf(t),
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// Benjamini-Yekutieli
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ByResult {
    pub adjusted: Vec<f64>,
    pub rejected: Vec<bool>,
}

/// Step-up false-discovery-rate control under arbitrary dependence:
/// adjusted `p_(i) = min over j >= i of min(1, m c(m) p_(j) / j)` with
/// `c(m)` the harmonic sum; rejections where adjusted p <= q.
pub fn benjamini_yekutieli(p_values: &[f64], q: f64) -> Result<ByResult, EvalError> {
    let m = p_values.len();
    if m == 0 {
        return Ok(ByResult {
            adjusted: vec![],
            rejected: vec![],
        });
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(EvalError::BadPValue(p));
        }
    }
    let c_m: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for rank in (1..=m).rev() {
        let i = order[rank - 1];
        let step = (p_values[i] * c_m * m as f64 / rank as f64).min(1.0);
        running = running.min(step);
        adjusted[i] = running;
    }
    let rejected = adjusted.iter().map(|&p| p <= q).collect();
    Ok(ByResult { adjusted, rejected })
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Supervised { horizon_days: u32 },
    Td,
}

impl ModelKind {
    pub fn label(&self) -> String {
        match self {
            ModelKind::Td => "td".into(),
            ModelKind::Supervised { horizon_days } => format!("sup{horizon_days}"),
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        if s == "td" {
            return Some(ModelKind::Td);
        }
        s.strip_prefix("sup")
            .and_then(|h| h.parse().ok())
            .map(|horizon_days| ModelKind::Supervised { horizon_days })
    }
}

/// Windows plus per-horizon labels (and oracle values on simulator data).
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub name: String,
    pub windows: Vec<ObservationWindow>,
    /// `labels[h][w]` for horizon index h, window w.
    pub labels: Vec<Vec<bool>>,
    /// Exact absorption probability at each window's anchor, when known.
    pub oracle: Option<Vec<f64>>,
}

/// Builds an evaluation census over the given episode indices: anchors per
/// the provided subsampling, labels at every horizon, oracle values when
/// the episodes carry latent ground truth and `state_oracle` is given.
pub fn build_eval_set(
    name: &str,
    episodes: &[Episode],
    indices: &[usize],
    registry: &FeatureRegistry,
    stats: &StandardizationStats,
    sampling: &AnchorSampling,
    state_oracle: Option<&[f64]>,
) -> EvalSet {
    struct PerEpisode {
        windows: Vec<ObservationWindow>,
        labels: Vec<[bool; 5]>,
        oracle: Vec<Option<f64>>,
    }
    let parts: Vec<PerEpisode> = indices
        .par_iter()
        .map(|&ei| {
            let ep = &episodes[ei];
            let anchors = enumerate_anchors(ep, registry, sampling);
            let mut out = PerEpisode {
                windows: Vec::with_capacity(anchors.len()),
                labels: Vec::with_capacity(anchors.len()),
                oracle: Vec::with_capacity(anchors.len()),
            };
            for a in anchors {
                let w = assemble_window(ep, registry, a, stats)
                    .expect("anchor indices come from enumerate_anchors");
                let t = ep.events[a].time;
                let mut lab = [false; 5];
                for (hi, h) in HORIZONS_DAYS.iter().enumerate() {
                    lab[hi] = mortality_within(ep, t, *h as f64);
                }
                let orc = match (state_oracle, w.true_latent) {
                    (Some(vec), Some(s)) => vec.get(s as usize).copied(),
                    _ => None,
                };
                out.windows.push(w);
                out.labels.push(lab);
                out.oracle.push(orc);
            }
            out
        })
        .collect();
    let mut windows = Vec::new();
    let mut labels: Vec<Vec<bool>> = vec![Vec::new(); HORIZONS_DAYS.len()];
    let mut oracle: Vec<Option<f64>> = Vec::new();
    for p in parts {
        for (w, (lab, orc)) in p
            .windows
            .into_iter()
            .zip(p.labels.into_iter().zip(p.oracle))
        {
            windows.push(w);
            for (hi, l) in lab.iter().enumerate() {
                labels[hi].push(*l);
            }
            oracle.push(orc);
        }
    }
    let oracle = if !oracle.is_empty() && oracle.iter().all(|o| o.is_some()) {
        Some(oracle.into_iter().map(|o| o.unwrap()).collect())
    } else {
        None
    };
    EvalSet {
        name: name.into(),
        windows,
        labels,
        oracle,
    }
}

/// Checkpoints of one candidate model across seeds.
pub struct CandidateSet {
    pub kind: ModelKind,
    pub seeds: Vec<(u64, ValueModel)>,
}

#[derive(Debug, Clone)]
pub struct AurocCell {
    pub model: ModelKind,
    pub dataset: String,
    pub horizon_days: u32,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct PValueCell {
    pub baseline: ModelKind,
    pub dataset: String,
    pub horizon_days: u32,
    pub t_stat: f64,
    pub raw: f64,
    pub adjusted: f64,
    pub rejected: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct OracleCell {
    pub dataset: String,
    pub per_seed_mae: Vec<f64>,
    pub mean_mae: f64,
    pub per_seed_max: Vec<f64>,
    pub mean_max: f64,
}

/// The full evaluation grid plus TD-vs-baseline statistics.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub seeds: Vec<u64>,
    pub datasets: Vec<String>,
    pub models: Vec<ModelKind>,
    pub auroc: Vec<AurocCell>,
    pub p_values: Vec<PValueCell>,
    pub oracle: Vec<OracleCell>,
    pub fdr_level: f64,
}

impl EvalReport {
    pub fn auroc_cell(&self, model: ModelKind, dataset: &str, horizon_days: u32) -> &AurocCell {
        self.auroc
            .iter()
            .find(|c| c.model == model && c.dataset == dataset && c.horizon_days == horizon_days)
            .expect("complete grid")
    }

    pub fn p_cell(&self, baseline: ModelKind, dataset: &str, horizon_days: u32) -> &PValueCell {
        self.p_values
            .iter()
            .find(|c| {
                c.baseline == baseline && c.dataset == dataset && c.horizon_days == horizon_days
            })
            .expect("complete comparison family")
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scores every window once per candidate and seed, computes the AUROC
/// grid, runs TD-vs-baseline one-tailed paired t-tests with BY adjustment
/// across the whole comparison family (no baseline-vs-baseline tests), and
/// adds TD-vs-oracle value accuracy on datasets carrying ground truth.
pub fn evaluate_all(
    candidates: &[CandidateSet],
    datasets: &[EvalSet],
    fdr_level: f64,
) -> Result<EvalReport, EvalError> {
    if candidates.is_empty() || datasets.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let seeds: Vec<u64> = candidates[0].seeds.iter().map(|(s, _)| *s).collect();
    if seeds.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    for c in candidates {
        let got: Vec<u64> = c.seeds.iter().map(|(s, _)| *s).collect();
        if got != seeds {
            let missing: Vec<u64> = seeds.iter().filter(|s| !got.contains(s)).copied().collect();
            return Err(EvalError::MissingSeed(c.kind.label(), missing));
        }
    }

    let mut auroc_cells = Vec::new();
    let mut oracle_cells = Vec::new();
    // per (candidate, dataset, horizon): per-seed aurocs, kept for the tests
    for cand in candidates {
        for ds in datasets {
            let mut per_seed_scores = Vec::with_capacity(seeds.len());
            for (_, model) in &cand.seeds {
                per_seed_scores.push(batch_forward(model, &ds.windows)?);
            }
            for (hi, &h) in HORIZONS_DAYS.iter().enumerate() {
                let per_seed: Vec<f64> = per_seed_scores
                    .iter()
                    .map(|scores| auroc(scores, &ds.labels[hi]))
                    .collect::<Result<_, _>>()?;
                let (mean, std) = mean_std(&per_seed);
                auroc_cells.push(AurocCell {
                    model: cand.kind,
                    dataset: ds.name.clone(),
                    horizon_days: h,
                    per_seed,
                    mean,
                    std,
                });
            }
            if cand.kind == ModelKind::Td {
                if let Some(oracle) = &ds.oracle {
                    let mut per_seed_mae = Vec::new();
                    let mut per_seed_max = Vec::new();
                    for scores in &per_seed_scores {
                        let mut abs_sum = 0.0;
                        let mut abs_max = 0.0_f64;
                        for (s, o) in scores.iter().zip(oracle) {
                            let d = (s - o).abs();
                            abs_sum += d;
                            abs_max = abs_max.max(d);
                        }
                        per_seed_mae.push(abs_sum / scores.len() as f64);
                        per_seed_max.push(abs_max);
                    }
                    let (mean_mae, _) = mean_std(&per_seed_mae);
                    let (mean_max, _) = mean_std(&per_seed_max);
                    oracle_cells.push(OracleCell {
                        dataset: ds.name.clone(),
                        per_seed_mae,
                        mean_mae,
                        per_seed_max,
                        mean_max,
                    });
                }
            }
        }
    }

    // TD vs every baseline, all horizons and datasets: one BY family.
    let mut p_values = Vec::new();
    let has_td = candidates.iter().any(|c| c.kind == ModelKind::Td);
    if has_td && seeds.len() >= 2 {
        let lookup = |model: ModelKind, dataset: &str, h: u32| -> &AurocCell {
            auroc_cells
                .iter()
                .find(|c| c.model == model && c.dataset == dataset && c.horizon_days == h)
                .expect("grid cell")
        };
        let mut raw = Vec::new();
        let mut keys = Vec::new();
        for cand in candidates.iter().filter(|c| c.kind != ModelKind::Td) {
            for ds in datasets {
                for &h in &HORIZONS_DAYS {
                    let td = lookup(ModelKind::Td, &ds.name, h);
                    let base = lookup(cand.kind, &ds.name, h);
                    let res = paired_t_one_tailed(&td.per_seed, &base.per_seed)?;
                    raw.push(res.p_value);
                    keys.push((cand.kind, ds.name.clone(), h, res));
                }
            }
        }
        let by = benjamini_yekutieli(&raw, fdr_level)?;
        for (((baseline, dataset, horizon_days, res), adjusted), rejected) in
            keys.into_iter().zip(by.adjusted).zip(by.rejected)
        {
            p_values.push(PValueCell {
                baseline,
                dataset,
                horizon_days,
                t_stat: res.t_stat,
                raw: res.p_value,
                adjusted,
                rejected,
                degenerate: res.degenerate,
            });
        }
    }

    Ok(EvalReport {
        seeds,
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        models: candidates.iter().map(|c| c.kind).collect(),
        auroc: auroc_cells,
        p_values,
        oracle: oracle_cells,
        fdr_level,
    })
}
