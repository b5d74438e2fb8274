//! Episode-to-sample machinery: anchor enumeration, observation-window
//! assembly with overflow prioritization, delayed next-state selection,
//! standardization fitting, patient splits and class weights.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{
    make_tuple, Episode, FeatureId, FeatureKind, FeatureRegistry, MeasurementTuple, RawEvent,
    RewardSpec, Sex, LOOKBACK_HOURS,
};

/// Hard cap on tuples per observation window (the anchor counts toward it).
pub const WINDOW_BUDGET: usize = 400;

/// Eligibility-window length for next-state selection, hours.
pub const ELIGIBILITY_WINDOW_HOURS: f64 = 24.0;

/// The sanctioned delay sweep, hours.
pub const DELAY_SWEEP_HOURS: [f64; 6] = [4.0, 16.0, 24.0, 48.0, 72.0, 120.0];

/// Weight imputed when never recorded, kg.
pub const IMPUTED_WEIGHT_FEMALE: f64 = 74.0;
pub const IMPUTED_WEIGHT_MALE: f64 = 86.0;

const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("anchor index {index} out of range for episode with {len} events")]
    AnchorOutOfRange { index: usize, len: usize },
    #[error("empty training set")]
    EmptyTrainSet,
    #[error("split fractions {0:?} must sum to 1")]
    BadFractions([f64; 3]),
    #[error("need at least {need} patients to fill every fold, got {got}")]
    TooFewPatients { need: usize, got: usize },
    #[error("class weights need both classes present")]
    SingleClass,
    #[error("next-state delay {0}h is not in the sweep set {DELAY_SWEEP_HOURS:?}")]
    InvalidDelay(f64),
}

pub fn imputed_weight(sex: Sex) -> f64 {
    match sex {
        Sex::Female => IMPUTED_WEIGHT_FEMALE,
        Sex::Male => IMPUTED_WEIGHT_MALE,
    }
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct FeatureStats {
    pub v_mean: f64,
    pub v_std: f64,
    pub dv_mean: f64,
    pub dv_std: f64,
    /// Outlier clip bounds from train quantiles; demographics have none.
    pub clip: Option<(f64, f64)>,
    /// True when the feature had too little data and stds were floored.
    pub flagged: bool,
}

impl FeatureStats {
    fn identity() -> Self {
        FeatureStats {
            v_mean: 0.0,
            v_std: 1.0,
            dv_mean: 0.0,
            dv_std: 1.0,
            clip: None,
            flagged: false,
        }
    }
}

/// Per-feature moments for v/Δv, pooled moments for t/Δt, clip bounds.
#[derive(Debug, Clone)]
pub struct StandardizationStats {
    features: Vec<FeatureStats>,
    pub t_mean: f64,
    pub t_std: f64,
    pub dt_mean: f64,
    pub dt_std: f64,
}

impl StandardizationStats {
    /// No-op stats (zero means, unit stds, no clipping); test scaffolding.
    pub fn identity(n_features: usize) -> Self {
        StandardizationStats {
            features: vec![FeatureStats::identity(); n_features],
            t_mean: 0.0,
            t_std: 1.0,
            dt_mean: 0.0,
            dt_std: 1.0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, id: FeatureId) -> &FeatureStats {
        &self.features[id.idx()]
    }

    pub fn feature_mut(&mut self, id: FeatureId) -> &mut FeatureStats {
        &mut self.features[id.idx()]
    }

    pub fn set_value_moments(&mut self, id: FeatureId, mean: f64, std: f64) {
        let f = self.feature_mut(id);
        f.v_mean = mean;
        f.v_std = std;
    }

    pub fn set_delta_value_moments(&mut self, id: FeatureId, mean: f64, std: f64) {
        let f = self.feature_mut(id);
        f.dv_mean = mean;
        f.dv_std = std;
    }

    pub fn set_time_moments(&mut self, mean: f64, std: f64) {
        self.t_mean = mean;
        self.t_std = std;
    }

    pub fn set_delta_time_moments(&mut self, mean: f64, std: f64) {
        self.dt_mean = mean;
        self.dt_std = std;
    }

    /// Clamps a raw value into the feature's outlier bounds, if any.
    pub fn clip(&self, id: FeatureId, value: f64) -> f64 {
        match self.features[id.idx()].clip {
            Some((lo, hi)) => value.clamp(lo, hi),
            None => value,
        }
    }

    pub fn standardize_value(&self, id: FeatureId, raw: f64) -> f64 {
        let f = &self.features[id.idx()];
        (raw - f.v_mean) / f.v_std
    }

    pub fn destandardize_value(&self, id: FeatureId, std: f64) -> f64 {
        let f = &self.features[id.idx()];
        std * f.v_std + f.v_mean
    }

    pub fn standardize_delta_value(&self, id: FeatureId, raw: f64) -> f64 {
        let f = &self.features[id.idx()];
        (raw - f.dv_mean) / f.dv_std
    }

    pub fn destandardize_delta_value(&self, id: FeatureId, std: f64) -> f64 {
        let f = &self.features[id.idx()];
        std * f.dv_std + f.dv_mean
    }

    pub fn standardize_time_offset(&self, raw: f64) -> f64 {
        (raw - self.t_mean) / self.t_std
    }

    pub fn destandardize_time_offset(&self, std: f64) -> f64 {
        std * self.t_std + self.t_mean
    }

    pub fn standardize_delta_time(&self, raw: f64) -> f64 {
        (raw - self.dt_mean) / self.dt_std
    }

    pub fn destandardize_delta_time(&self, std: f64) -> f64 {
        std * self.dt_std + self.dt_mean
    }
}

/// Quantile configuration and the anchor census used for pooled t moments.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub lab_quantiles: (f64, f64),
    pub drug_quantiles: (f64, f64),
    /// Anchors used to build the time-offset population; recorded so the
    /// stats are reproducible.
    pub anchor_sampling: AnchorSampling,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lab_quantiles: (0.001, 0.999),
            drug_quantiles: (0.005, 0.995),
            anchor_sampling: AnchorSampling::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FitReport {
    /// Features whose stds had to be floored (no or constant observations).
    pub flagged: Vec<(FeatureId, String)>,
    pub n_episodes: usize,
    pub n_values: usize,
    pub n_anchors: usize,
}

#[derive(Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Episode events plus a synthetic time-0 weight event when the episode
/// never recorded one; fitting and assembly both see the imputed value.
fn effective_events<'a>(
    episode: &'a Episode,
    registry: &FeatureRegistry,
) -> impl Iterator<Item = RawEvent> + 'a {
    let weight_id = registry.id_by_name("weight");
    let missing = match weight_id {
        Some(wid) => !episode.events.iter().any(|e| e.feature == wid),
        None => false,
    };
    let synthetic = missing.then(|| RawEvent {
        time: 0.0,
        feature: weight_id.unwrap(),
        value: imputed_weight(episode.sex),
    });
    synthetic.into_iter().chain(episode.events.iter().copied())
}

/// Order statistic at quantile `q`: the `max(1, ceil(q*n))`-th smallest.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Fits outlier bounds and standardization moments on the train episodes.
///
/// Bounds come from per-feature kind quantiles (labs 0.001/0.999, drug
/// doses 0.005/0.995, demographics unbounded); means and stds are computed
/// after clipping. v/Δv moments are per feature, t/Δt pooled across
/// features. Missing weight is imputed (74 kg female / 86 kg male) before
/// fitting. Δ populations pair consecutive same-feature events no more
/// than the lookback apart; the t population comes from the configured
/// anchor census.
pub fn fit_standardization(
    episodes: &[Episode],
    registry: &FeatureRegistry,
    cfg: &FitConfig,
) -> Result<(StandardizationStats, FitReport), PipelineError> {
    if episodes.is_empty() {
        return Err(PipelineError::EmptyTrainSet);
    }
    let nf = registry.len();
    let mut report = FitReport {
        n_episodes: episodes.len(),
        ..FitReport::default()
    };

    // Pass 1: gather raw values per feature (with weight imputation).
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); nf];
    for ep in episodes {
        for e in effective_events(ep, registry) {
            raw[e.feature.idx()].push(e.value);
        }
    }
    report.n_values = raw.iter().map(|v| v.len()).sum();

    let mut stats = StandardizationStats::identity(nf);
    for id in registry.ids() {
        let vals = &mut raw[id.idx()];
        let kind = registry.kind(id);
        let q = match kind {
            FeatureKind::Lab => Some(cfg.lab_quantiles),
            FeatureKind::InfusionRate | FeatureKind::Bolus => Some(cfg.drug_quantiles),
            FeatureKind::Demographic => None,
        };
        if let (Some((ql, qh)), false) = (q, vals.is_empty()) {
            vals.sort_by(f64::total_cmp);
            stats.feature_mut(id).clip = Some((quantile(vals, ql), quantile(vals, qh)));
        }
    }

    // Pass 2: clipped moments for v per feature, Δv per feature, Δt pooled.
    let mut v_acc: Vec<Welford> = (0..nf).map(|_| Welford::default()).collect();
    let mut dv_acc: Vec<Welford> = (0..nf).map(|_| Welford::default()).collect();
    let mut dt_acc = Welford::default();
    let mut last_seen: Vec<Option<(f64, f64)>> = vec![None; nf];
    for ep in episodes {
        last_seen.iter_mut().for_each(|s| *s = None);
        for e in effective_events(ep, registry) {
            let v = stats.clip(e.feature, e.value);
            v_acc[e.feature.idx()].push(v);
            if let Some((pt, pv)) = last_seen[e.feature.idx()] {
                // strictly-earlier pairs only, mirroring window deltas
                if e.time > pt && e.time - pt <= LOOKBACK_HOURS {
                    dv_acc[e.feature.idx()].push(v - pv);
                    dt_acc.push(e.time - pt);
                }
            }
            last_seen[e.feature.idx()] = Some((e.time, v));
        }
    }

    // Pass 3: pooled time-offset population over the anchor census.
    let mut t_acc = Welford::default();
    for ep in episodes {
        let anchors = enumerate_anchors(ep, registry, &cfg.anchor_sampling);
        report.n_anchors += anchors.len();
        for &a in &anchors {
            let anchor_time = ep.events[a].time;
            for c in gather_candidates(ep, registry, anchor_time) {
                t_acc.push(c.time - anchor_time);
            }
        }
    }

    for id in registry.ids() {
        let f = stats.feature_mut(id);
        let acc = &v_acc[id.idx()];
        if acc.n == 0 {
            f.flagged = true;
            f.v_std = STD_FLOOR;
            report
                .flagged
                .push((id, "no observations in train set".into()));
        } else {
            f.v_mean = acc.mean;
            f.v_std = acc.std();
            if f.v_std < STD_FLOOR {
                f.v_std = STD_FLOOR;
                f.flagged = true;
                report.flagged.push((id, "constant values; std floored".into()));
            }
        }
        let dacc = &dv_acc[id.idx()];
        if dacc.n > 0 {
            f.dv_mean = dacc.mean;
            f.dv_std = dacc.std().max(STD_FLOOR);
        } else {
            f.dv_std = STD_FLOOR.max(f.dv_std);
        }
    }
    if t_acc.n > 0 {
        stats.t_mean = t_acc.mean;
        stats.t_std = t_acc.std().max(STD_FLOOR);
    }
    if dt_acc.n > 0 {
        stats.dt_mean = dt_acc.mean;
        stats.dt_std = dt_acc.std().max(STD_FLOOR);
    }
    Ok((stats, report))
}

// ---------------------------------------------------------------------------
// Anchors and windows
// ---------------------------------------------------------------------------

/// How many state markers per episode enter training/evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnchorSampling {
    /// Every non-demographic event is an anchor.
    All,
    /// Deterministic uniform subsample without replacement per episode.
    Uniform { max_per_episode: usize, seed: u64 },
}

impl Default for AnchorSampling {
    fn default() -> Self {
        AnchorSampling::Uniform {
            max_per_episode: 32,
            seed: 0,
        }
    }
}

/// Indices (into `episode.events`) of the selected anchor events, ascending.
pub fn enumerate_anchors(
    episode: &Episode,
    registry: &FeatureRegistry,
    sampling: &AnchorSampling,
) -> Vec<usize> {
    let eligible: Vec<usize> = episode
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| !registry.is_demographic(e.feature))
        .map(|(i, _)| i)
        .collect();
    match *sampling {
        AnchorSampling::All => eligible,
        AnchorSampling::Uniform {
            max_per_episode,
            seed,
        } => {
            if eligible.len() <= max_per_episode {
                return eligible;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(episode.patient_id);
            let mut pool = eligible;
            pool.shuffle(&mut rng);
            pool.truncate(max_per_episode);
            pool.sort_unstable();
            pool
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Effective time: demographics older than the lookback are carried at
    /// the window start (the oldest admissible offset).
    time: f64,
    feature: FeatureId,
    value: f64,
}

/// All events visible from `anchor_time`: the closed 7-day lookback plus
/// demographics (always visible, offset clamped to the window start) and an
/// imputed weight event when the episode never recorded one.
fn gather_candidates(
    episode: &Episode,
    registry: &FeatureRegistry,
    anchor_time: f64,
) -> Vec<Candidate> {
    let window_start = anchor_time - LOOKBACK_HOURS;
    let mut out = Vec::new();
    let mut weight_seen = false;
    let weight_id = registry.id_by_name("weight");
    for e in &episode.events {
        if e.time > anchor_time {
            break;
        }
        let demo = registry.is_demographic(e.feature);
        if demo && Some(e.feature) == weight_id {
            weight_seen = true;
        }
        if e.time >= window_start {
            out.push(Candidate {
                time: e.time,
                feature: e.feature,
                value: e.value,
            });
        } else if demo {
            out.push(Candidate {
                time: window_start,
                feature: e.feature,
                value: e.value,
            });
        }
    }
    if let (Some(wid), false) = (weight_id, weight_seen) {
        out.push(Candidate {
            time: window_start.max(0.0).min(anchor_time),
            feature: wid,
            value: imputed_weight(episode.sex),
        });
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.feature.cmp(&b.feature)));
    out
}

/// Identifies the episode a window came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRef {
    pub patient_id: u64,
    pub anchor_event_idx: usize,
}

/// A standardized model input: the anchor plus its 7-day retrospective
/// measurement sequence, at most [`WINDOW_BUDGET`] tuples, ascending time.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub anchor_time: f64,
    pub tuples: Vec<MeasurementTuple>,
    pub anchor_feature: FeatureId,
    pub episode_ref: EpisodeRef,
    /// Ground-truth latent state at the anchor (simulator data only).
    pub true_latent: Option<u16>,
}

impl ObservationWindow {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Builds the observation window for the anchor at `anchor_idx`.
///
/// Candidates are outlier-clipped, then reduced to the budget in priority
/// order — demographics, latest rate per infusion feature, novelty-then-
/// recency for the rest — and emitted in ascending time order with deltas
/// taken against the previous same-feature candidate in the window.
pub fn assemble_window(
    episode: &Episode,
    registry: &FeatureRegistry,
    anchor_idx: usize,
    stats: &StandardizationStats,
) -> Result<ObservationWindow, PipelineError> {
    let anchor = episode
        .events
        .get(anchor_idx)
        .ok_or(PipelineError::AnchorOutOfRange {
            index: anchor_idx,
            len: episode.events.len(),
        })?;
    let anchor_time = anchor.time;
    let mut cands = gather_candidates(episode, registry, anchor_time);
    for c in &mut cands {
        c.value = stats.clip(c.feature, c.value);
    }

    // Novelty = number of earlier same-feature candidates in the window.
    let n = cands.len();
    let mut novelty = vec![0usize; n];
    {
        let mut seen: HashMap<FeatureId, usize> = HashMap::new();
        for (i, c) in cands.iter().enumerate() {
            let cnt = seen.entry(c.feature).or_insert(0);
            novelty[i] = *cnt;
            *cnt += 1;
        }
    }

    let keep: Vec<usize> = if n <= WINDOW_BUDGET {
        (0..n).collect()
    } else {
        let mut picked = vec![false; n];
        let mut kept = Vec::with_capacity(WINDOW_BUDGET);
        // (1) demographics
        for (i, c) in cands.iter().enumerate() {
            if registry.is_demographic(c.feature) && kept.len() < WINDOW_BUDGET {
                picked[i] = true;
                kept.push(i);
            }
        }
        // (2) most recent value of every infusion-rate feature
        let mut latest_inf: HashMap<FeatureId, usize> = HashMap::new();
        for (i, c) in cands.iter().enumerate() {
            if registry.kind(c.feature) == FeatureKind::InfusionRate {
                latest_inf.insert(c.feature, i); // ascending scan keeps the last
            }
        }
        let mut latest: Vec<usize> = latest_inf.into_values().collect();
        latest.sort_unstable();
        for i in latest {
            if !picked[i] && kept.len() < WINDOW_BUDGET {
                picked[i] = true;
                kept.push(i);
            }
        }
        // (3) novelty ascending, then newest first
        let mut rest: Vec<usize> = (0..n).filter(|&i| !picked[i]).collect();
        rest.sort_by(|&a, &b| {
            novelty[a]
                .cmp(&novelty[b])
                .then(cands[b].time.total_cmp(&cands[a].time))
                .then(cands[a].feature.cmp(&cands[b].feature))
        });
        for i in rest {
            if kept.len() >= WINDOW_BUDGET {
                break;
            }
            kept.push(i);
        }
        kept.sort_unstable();
        kept
    };

    // Deltas look back to the previous same-feature candidate (not only the
    // kept ones): truncation is a budget device, history is history.
    let mut last_of: HashMap<FeatureId, usize> = HashMap::new();
    let mut prev_idx = vec![None; n];
    for (i, c) in cands.iter().enumerate() {
        if let Some(&j) = last_of.get(&c.feature) {
            prev_idx[i] = Some(j);
        }
        last_of.insert(c.feature, i);
    }

    let mut tuples = Vec::with_capacity(keep.len());
    for &i in &keep {
        let c = &cands[i];
        let event = RawEvent {
            time: c.time,
            feature: c.feature,
            value: c.value,
        };
        let prev = prev_idx[i].and_then(|j| {
            let p = &cands[j];
            // Equal effective times can occur for clamped demographics;
            // deltas need strictly earlier history.
            (p.time < c.time).then_some(RawEvent {
                time: p.time,
                feature: p.feature,
                value: p.value,
            })
        });
        let tuple = make_tuple(&event, anchor_time, prev.as_ref(), stats)
            .expect("candidates satisfy tuple preconditions");
        tuples.push(tuple);
    }

    Ok(ObservationWindow {
        anchor_time,
        tuples,
        anchor_feature: anchor.feature,
        episode_ref: EpisodeRef {
            patient_id: episode.patient_id,
            anchor_event_idx: anchor_idx,
        },
        true_latent: episode.latent_state_at(anchor_time),
    })
}

// ---------------------------------------------------------------------------
// Next-state selection and transition samples
// ---------------------------------------------------------------------------

/// The delayed eligibility window: `[anchor + delay, anchor + delay + 24h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NextStateRule {
    pub delay_hours: f64,
    pub window_hours: f64,
}

impl NextStateRule {
    pub fn new(delay_hours: f64) -> Result<Self, PipelineError> {
        if !DELAY_SWEEP_HOURS.contains(&delay_hours) {
            return Err(PipelineError::InvalidDelay(delay_hours));
        }
        Ok(NextStateRule {
            delay_hours,
            window_hours: ELIGIBILITY_WINDOW_HOURS,
        })
    }
}

/// Outcome of scanning the eligibility window after an anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextState {
    /// Earliest eligible event (ties broken by ascending feature id).
    Next {
        event_idx: usize,
        interval_hours: f64,
    },
    /// No measurement in the window: the anchor is in the terminal tail.
    Terminal,
}

/// Scans non-demographic events inside the closed eligibility window and
/// returns the earliest, or [`NextState::Terminal`] when the window is silent.
pub fn select_next_state(
    episode: &Episode,
    registry: &FeatureRegistry,
    anchor_idx: usize,
    rule: &NextStateRule,
) -> Result<NextState, PipelineError> {
    let anchor = episode
        .events
        .get(anchor_idx)
        .ok_or(PipelineError::AnchorOutOfRange {
            index: anchor_idx,
            len: episode.events.len(),
        })?;
    let lo = anchor.time + rule.delay_hours;
    let hi = lo + rule.window_hours;
    let mut best: Option<(usize, &RawEvent)> = None;
    for (i, e) in episode.events.iter().enumerate() {
        if e.time < lo || registry.is_demographic(e.feature) {
            continue;
        }
        if e.time > hi {
            break;
        }
        match best {
            None => best = Some((i, e)),
            Some((_, b)) => {
                if e.time < b.time || (e.time == b.time && e.feature < b.feature) {
                    best = Some((i, e));
                }
            }
        }
    }
    Ok(match best {
        Some((i, e)) => NextState::Next {
            event_idx: i,
            interval_hours: e.time - anchor.time,
        },
        None => NextState::Terminal,
    })
}

/// Lightweight description of one training sample; windows are assembled
/// lazily from it so epochs can re-materialize batches cheaply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub episode_idx: usize,
    pub anchor_idx: usize,
    pub next: NextSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextSpec {
    Continue {
        anchor_idx: usize,
        interval_hours: f64,
    },
    Terminal {
        reward: f64,
    },
}

/// A fully materialized transition: the TD training unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSample {
    pub current: ObservationWindow,
    pub next: TransitionNext,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionNext {
    Continue {
        window: ObservationWindow,
        interval_hours: f64,
    },
    Terminal {
        reward: f64,
    },
}

/// Enumerates anchors and resolves each one's next state for the selected
/// episodes; deterministic order (episodes in `indices` order, anchors by
/// time). `episode_idx` in the result refers into the full `episodes` slice.
pub fn build_sample_specs(
    episodes: &[Episode],
    indices: &[usize],
    registry: &FeatureRegistry,
    sampling: &AnchorSampling,
    rule: &NextStateRule,
    rewards: &RewardSpec,
) -> Vec<SampleSpec> {
    let per_episode: Vec<Vec<SampleSpec>> = indices
        .par_iter()
        .map(|&epi| {
            let ep = &episodes[epi];
            enumerate_anchors(ep, registry, sampling)
                .into_iter()
                .map(|a| {
                    let next = match select_next_state(ep, registry, a, rule)
                        .expect("anchor index from enumerate_anchors")
                    {
                        NextState::Next {
                            event_idx,
                            interval_hours,
                        } => NextSpec::Continue {
                            anchor_idx: event_idx,
                            interval_hours,
                        },
                        NextState::Terminal => NextSpec::Terminal {
                            reward: rewards.terminal_reward(ep.outcome),
                        },
                    };
                    SampleSpec {
                        episode_idx: epi,
                        anchor_idx: a,
                        next,
                    }
                })
                .collect()
        })
        .collect();
    per_episode.into_iter().flatten().collect()
}

/// Materializes one sample spec into windows.
pub fn realize_sample(
    episodes: &[Episode],
    registry: &FeatureRegistry,
    stats: &StandardizationStats,
    spec: &SampleSpec,
) -> Result<TransitionSample, PipelineError> {
    let ep = &episodes[spec.episode_idx];
    let current = assemble_window(ep, registry, spec.anchor_idx, stats)?;
    let next = match spec.next {
        NextSpec::Continue {
            anchor_idx,
            interval_hours,
        } => TransitionNext::Continue {
            window: assemble_window(ep, registry, anchor_idx, stats)?,
            interval_hours,
        },
        NextSpec::Terminal { reward } => TransitionNext::Terminal { reward },
    };
    Ok(TransitionSample { current, next })
}

// ---------------------------------------------------------------------------
// Splits and class weights
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fold {
    Train,
    Validation,
    Test,
}

impl Fold {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fold::Train => "train",
            Fold::Validation => "validation",
            Fold::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Fold> {
        match s {
            "train" => Some(Fold::Train),
            "validation" => Some(Fold::Validation),
            "test" => Some(Fold::Test),
            _ => None,
        }
    }
}

/// Patient-level fold assignment; every episode of a patient shares a fold.
#[derive(Debug, Clone, Default)]
pub struct FoldMap {
    assignments: Vec<(u64, Fold)>,
    index: HashMap<u64, Fold>,
}

impl FoldMap {
    pub fn from_assignments(assignments: Vec<(u64, Fold)>) -> Self {
        let index = assignments.iter().cloned().collect();
        FoldMap { assignments, index }
    }

    pub fn fold_of(&self, patient_id: u64) -> Option<Fold> {
        self.index.get(&patient_id).copied()
    }

    pub fn assignments(&self) -> &[(u64, Fold)] {
        &self.assignments
    }

    /// Indices of episodes belonging to `fold`, in dataset order.
    pub fn episodes_in<'a>(&'a self, episodes: &'a [Episode], fold: Fold) -> Vec<usize> {
        episodes
            .iter()
            .enumerate()
            .filter(|(_, e)| self.fold_of(e.patient_id) == Some(fold))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Splits patients (not episodes) into train/validation/test folds.
pub fn split_patients(
    episodes: &[Episode],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<FoldMap, PipelineError> {
    let (ft, fv, fs) = fractions;
    if (ft + fv + fs - 1.0).abs() > 1e-9 || ft < 0.0 || fv < 0.0 || fs < 0.0 {
        return Err(PipelineError::BadFractions([ft, fv, fs]));
    }
    let mut ids: Vec<u64> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for ep in episodes {
        if seen.insert(ep.patient_id) {
            ids.push(ep.patient_id);
        }
    }
    let n = ids.len();
    if n < 3 {
        return Err(PipelineError::TooFewPatients { need: 3, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_val = ((fv * n as f64).floor() as usize).max(1);
    let n_test = ((fs * n as f64).floor() as usize).max(1);
    if n_val + n_test >= n {
        return Err(PipelineError::TooFewPatients {
            need: n_val + n_test + 1,
            got: n,
        });
    }
    let n_train = n - n_val - n_test;
    let mut assignments = Vec::with_capacity(n);
    for (i, id) in ids.into_iter().enumerate() {
        let fold = if i < n_train {
            Fold::Train
        } else if i < n_train + n_val {
            Fold::Validation
        } else {
            Fold::Test
        };
        assignments.push((id, fold));
    }
    assignments.sort_by_key(|(id, _)| *id);
    Ok(FoldMap::from_assignments(assignments))
}

/// Normalized inverse class frequencies `(w_neg, w_pos)`, summing to 1.
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64), PipelineError> {
    let n = labels.len();
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == n {
        return Err(PipelineError::SingleClass);
    }
    let f_pos = pos as f64 / n as f64;
    let f_neg = 1.0 - f_pos;
    let inv_sum = 1.0 / f_neg + 1.0 / f_pos;
    Ok(((1.0 / f_neg) / inv_sum, (1.0 / f_pos) / inv_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureDef, LatentState, LatentStep, Outcome};

    fn registry_with(n_labs: usize, n_inf: usize) -> FeatureRegistry {
        let mut defs = Vec::new();
        for i in 0..n_labs {
            defs.push(FeatureDef {
                name: format!("lab{i}"),
                kind: FeatureKind::Lab,
            });
        }
        for i in 0..n_inf {
            defs.push(FeatureDef {
                name: format!("inf{i}"),
                kind: FeatureKind::InfusionRate,
            });
        }
        for (name, _) in [("age", 0), ("sex", 0), ("weight", 0)] {
            defs.push(FeatureDef {
                name: name.into(),
                kind: FeatureKind::Demographic,
            });
        }
        FeatureRegistry::new(defs).unwrap()
    }

    fn demo_events(reg: &FeatureRegistry, ep: &Episode) -> Vec<RawEvent> {
        let mut v = vec![
            RawEvent {
                time: 0.0,
                feature: reg.id_by_name("age").unwrap(),
                value: ep.age,
            },
            RawEvent {
                time: 0.0,
                feature: reg.id_by_name("sex").unwrap(),
                value: 0.0,
            },
        ];
        if let Some(w) = ep.weight {
            v.push(RawEvent {
                time: 0.0,
                feature: reg.id_by_name("weight").unwrap(),
                value: w,
            });
        }
        v
    }

    fn episode_with(reg: &FeatureRegistry, events: Vec<RawEvent>, end_time: f64) -> Episode {
        let mut ep = Episode {
            patient_id: 7,
            sex: Sex::Male,
            age: 55.0,
            weight: Some(80.0),
            events: vec![],
            outcome: Outcome::Discharge,
            end_time,
            latent_path: None,
        };
        let mut all = demo_events(reg, &ep);
        all.extend(events);
        all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.feature.cmp(&b.feature)));
        ep.events = all;
        ep
    }

    fn lab_event(reg: &FeatureRegistry, i: usize, time: f64, value: f64) -> RawEvent {
        RawEvent {
            time,
            feature: reg.id_by_name(&format!("lab{i}")).unwrap(),
            value,
        }
    }

    #[test]
    fn anchors_exclude_demographics() {
        let reg = registry_with(2, 0);
        let events = (0..10)
            .map(|i| lab_event(&reg, i % 2, 1.0 + i as f64, 5.0))
            .collect();
        let ep = episode_with(&reg, events, 20.0);
        let anchors = enumerate_anchors(&ep, &reg, &AnchorSampling::All);
        assert_eq!(anchors.len(), 10);
        for a in anchors {
            assert!(!reg.is_demographic(ep.events[a].feature));
        }
    }

    #[test]
    fn anchors_uniform_subsample_is_deterministic() {
        let reg = registry_with(2, 0);
        let events = (0..50)
            .map(|i| lab_event(&reg, i % 2, 1.0 + i as f64, 5.0))
            .collect();
        let ep = episode_with(&reg, events, 100.0);
        let s = AnchorSampling::Uniform {
            max_per_episode: 3,
            seed: 9,
        };
        let a1 = enumerate_anchors(&ep, &reg, &s);
        let a2 = enumerate_anchors(&ep, &reg, &s);
        assert_eq!(a1.len(), 3);
        assert_eq!(a1, a2);
        assert!(a1.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn demographics_only_episode_has_no_anchors() {
        let reg = registry_with(1, 0);
        let ep = episode_with(&reg, vec![], 10.0);
        assert!(enumerate_anchors(&ep, &reg, &AnchorSampling::All).is_empty());
    }

    #[test]
    fn window_keeps_all_candidates_when_under_budget() {
        let reg = registry_with(2, 0);
        let events: Vec<RawEvent> = (0..47)
            .map(|i| lab_event(&reg, i % 2, 1.0 + i as f64, i as f64))
            .collect();
        let ep = episode_with(&reg, events, 100.0);
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep.events.len() - 1;
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        // 47 labs + age + sex + weight
        assert_eq!(w.len(), 50);
        let offsets: Vec<f64> = w
            .tuples
            .iter()
            .map(|t| stats.destandardize_time_offset(t.time_offset))
            .collect();
        assert!(offsets.windows(2).all(|p| p[0] <= p[1]));
        assert!(offsets.iter().all(|&t| (-LOOKBACK_HOURS..=0.0).contains(&t)));
    }

    #[test]
    fn window_overflow_keeps_demographics_and_latest_infusions() {
        let reg = registry_with(3, 5);
        let mut events = Vec::new();
        // 5 infusion features, several rates each
        for i in 0..5 {
            for k in 0..4 {
                events.push(RawEvent {
                    time: 10.0 + k as f64 * 20.0 + i as f64,
                    feature: reg.id_by_name(&format!("inf{i}")).unwrap(),
                    value: k as f64,
                });
            }
        }
        // flood with labs to overflow the budget
        for k in 0..430 {
            events.push(lab_event(&reg, k % 3, 11.0 + k as f64 * 0.3, k as f64));
        }
        let ep = episode_with(&reg, events, 200.0);
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep.events.len() - 1;
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        assert_eq!(w.len(), WINDOW_BUDGET);
        for name in ["age", "sex", "weight"] {
            let id = reg.id_by_name(name).unwrap();
            assert!(
                w.tuples.iter().any(|t| t.feature == id),
                "demographic {name} dropped"
            );
        }
        for i in 0..5 {
            let id = reg.id_by_name(&format!("inf{i}")).unwrap();
            let latest_raw = 3.0;
            assert!(
                w.tuples
                    .iter()
                    .any(|t| t.feature == id && t.value == latest_raw),
                "latest rate of inf{i} dropped"
            );
        }
    }

    #[test]
    fn window_excludes_events_outside_lookback() {
        let reg = registry_with(1, 0);
        let events = vec![
            lab_event(&reg, 0, 1.0, 111.0), // anchor-169h: outside
            lab_event(&reg, 0, 2.0, 222.0), // anchor-168h: boundary, included
            lab_event(&reg, 0, 170.0, 333.0),
        ];
        let ep = episode_with(&reg, events, 200.0);
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep
            .events
            .iter()
            .position(|e| e.value == 333.0)
            .unwrap();
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        let values: Vec<f64> = w
            .tuples
            .iter()
            .filter(|t| t.feature == reg.id_by_name("lab0").unwrap())
            .map(|t| t.value)
            .collect();
        assert_eq!(values, vec![222.0, 333.0]);
    }

    #[test]
    fn window_clamps_old_demographics_to_window_start() {
        let reg = registry_with(1, 0);
        let events = vec![lab_event(&reg, 0, 300.0, 1.0)];
        let ep = episode_with(&reg, events, 400.0);
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep.events.iter().position(|e| e.time == 300.0).unwrap();
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        let age = reg.id_by_name("age").unwrap();
        let t = w.tuples.iter().find(|t| t.feature == age).unwrap();
        assert_eq!(stats.destandardize_time_offset(t.time_offset), -168.0);
    }

    #[test]
    fn window_imputes_missing_weight_by_sex() {
        let reg = registry_with(1, 0);
        let mut ep = episode_with(&reg, vec![lab_event(&reg, 0, 5.0, 1.0)], 10.0);
        ep.weight = None;
        ep.events.retain(|e| Some(e.feature) != reg.id_by_name("weight"));
        ep.sex = Sex::Female;
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep.events.iter().position(|e| e.time == 5.0).unwrap();
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        let wid = reg.id_by_name("weight").unwrap();
        let t = w.tuples.iter().find(|t| t.feature == wid).unwrap();
        assert_eq!(t.value, IMPUTED_WEIGHT_FEMALE);
    }

    #[test]
    fn next_state_picks_earliest_in_window() {
        let reg = registry_with(2, 0);
        let events = vec![
            lab_event(&reg, 0, 10.0, 1.0),
            lab_event(&reg, 1, 35.0, 2.0),
            lab_event(&reg, 0, 40.0, 3.0),
        ];
        let ep = episode_with(&reg, events, 100.0);
        let rule = NextStateRule::new(24.0).unwrap();
        let anchor = ep.events.iter().position(|e| e.time == 10.0).unwrap();
        match select_next_state(&ep, &reg, anchor, &rule).unwrap() {
            NextState::Next {
                event_idx,
                interval_hours,
            } => {
                assert_eq!(ep.events[event_idx].time, 35.0);
                assert!((interval_hours - 25.0).abs() < 1e-12);
            }
            NextState::Terminal => panic!("expected a next state"),
        }
    }

    #[test]
    fn next_state_terminal_when_window_silent() {
        let reg = registry_with(1, 0);
        let events = vec![
            lab_event(&reg, 0, 10.0, 1.0),
            lab_event(&reg, 0, 100.0, 2.0),
        ];
        let ep = episode_with(&reg, events, 150.0);
        let rule = NextStateRule::new(24.0).unwrap();
        let anchor = ep.events.iter().position(|e| e.time == 10.0).unwrap();
        assert_eq!(
            select_next_state(&ep, &reg, anchor, &rule).unwrap(),
            NextState::Terminal
        );
    }

    #[test]
    fn next_state_terminal_when_event_precedes_window() {
        let reg = registry_with(1, 0);
        let events = vec![
            lab_event(&reg, 0, 10.0, 1.0),
            lab_event(&reg, 0, 13.0, 2.0), // anchor+3h, before the 4h delay
        ];
        let ep = episode_with(&reg, events, 50.0);
        let rule = NextStateRule::new(4.0).unwrap();
        let anchor = ep.events.iter().position(|e| e.time == 10.0).unwrap();
        assert_eq!(
            select_next_state(&ep, &reg, anchor, &rule).unwrap(),
            NextState::Terminal
        );
    }

    #[test]
    fn next_state_breaks_time_ties_by_feature_id() {
        let reg = registry_with(2, 0);
        let events = vec![
            lab_event(&reg, 0, 10.0, 1.0),
            lab_event(&reg, 1, 36.0, 2.0),
            lab_event(&reg, 0, 36.0, 3.0),
        ];
        let ep = episode_with(&reg, events, 100.0);
        let rule = NextStateRule::new(24.0).unwrap();
        let anchor = ep.events.iter().position(|e| e.time == 10.0).unwrap();
        match select_next_state(&ep, &reg, anchor, &rule).unwrap() {
            NextState::Next { event_idx, .. } => {
                assert_eq!(ep.events[event_idx].feature, FeatureId(0));
            }
            NextState::Terminal => panic!(),
        }
    }

    #[test]
    fn fit_imputes_weight_and_floors_constant_features() {
        let reg = registry_with(2, 0);
        let mut episodes = Vec::new();
        for pid in 0..20u64 {
            let mut events = vec![
                lab_event(&reg, 0, 1.0, pid as f64),
                lab_event(&reg, 0, 2.0, pid as f64 + 1.0),
                lab_event(&reg, 1, 3.0, 42.0), // constant feature
            ];
            let mut ep = episode_with(&reg, std::mem::take(&mut events), 10.0);
            ep.patient_id = pid;
            ep.sex = Sex::Female;
            ep.weight = None;
            ep.events
                .retain(|e| Some(e.feature) != reg.id_by_name("weight"));
            episodes.push(ep);
        }
        let (stats, report) =
            fit_standardization(&episodes, &reg, &FitConfig::default()).unwrap();
        let wid = reg.id_by_name("weight").unwrap();
        assert_eq!(stats.feature(wid).v_mean, IMPUTED_WEIGHT_FEMALE);
        let lab1 = reg.id_by_name("lab1").unwrap();
        assert_eq!(stats.feature(lab1).v_std, STD_FLOOR);
        assert!(stats.feature(lab1).flagged);
        assert!(report.flagged.iter().any(|(id, _)| *id == lab1));
        // standardized constant values are 0 by the floor convention
        assert_eq!(stats.standardize_value(lab1, 42.0), 0.0);
    }

    #[test]
    fn fit_quantile_bounds_are_order_statistics() {
        let reg = registry_with(1, 0);
        let mut episodes = Vec::new();
        // 1000 values 1..=1000 across many episodes
        let mut v = 0;
        for pid in 0..100u64 {
            let events: Vec<RawEvent> = (0..10)
                .map(|k| {
                    v += 1;
                    lab_event(&reg, 0, 1.0 + k as f64, v as f64)
                })
                .collect();
            let mut ep = episode_with(&reg, events, 20.0);
            ep.patient_id = pid;
            episodes.push(ep);
        }
        let (stats, _) = fit_standardization(&episodes, &reg, &FitConfig::default()).unwrap();
        let id = reg.id_by_name("lab0").unwrap();
        let (lo, hi) = stats.feature(id).clip.unwrap();
        assert_eq!(lo, 1.0); // ceil(0.001*1000)=1st order stat
        assert_eq!(hi, 999.0); // ceil(0.999*1000)=999th
    }

    #[test]
    fn fit_standardizes_train_values_to_zero_mean_unit_var() {
        let reg = registry_with(3, 1);
        let mut episodes = Vec::new();
        let mut x = 0.37_f64;
        for pid in 0..200u64 {
            let mut events = Vec::new();
            for k in 0..12 {
                x = (x * 1103.51).fract();
                events.push(lab_event(&reg, k % 3, 1.0 + k as f64, 10.0 * x + pid as f64 % 7.0));
            }
            x = (x * 997.3).fract();
            events.push(RawEvent {
                time: 2.0,
                feature: reg.id_by_name("inf0").unwrap(),
                value: 5.0 * x,
            });
            let mut ep = episode_with(&reg, events, 20.0);
            ep.patient_id = pid;
            episodes.push(ep);
        }
        let (stats, _) = fit_standardization(&episodes, &reg, &FitConfig::default()).unwrap();
        for id in reg.ids().filter(|&id| !reg.is_demographic(id)) {
            let mut acc = Welford::default();
            for ep in &episodes {
                for e in &ep.events {
                    if e.feature == id {
                        acc.push(stats.standardize_value(id, stats.clip(id, e.value)));
                    }
                }
            }
            assert!(acc.mean.abs() < 1e-6, "feature {id:?} mean {}", acc.mean);
            assert!((acc.std() - 1.0).abs() < 1e-3, "feature {id:?} std {}", acc.std());
        }
    }

    #[test]
    fn split_fractions_and_determinism() {
        let reg = registry_with(1, 0);
        let episodes: Vec<Episode> = (0..10u64)
            .map(|pid| {
                let mut ep = episode_with(&reg, vec![lab_event(&reg, 0, 1.0, 1.0)], 5.0);
                ep.patient_id = pid;
                ep
            })
            .collect();
        let folds = split_patients(&episodes, (0.8, 0.1, 0.1), 3).unwrap();
        let count = |f: Fold| {
            folds
                .assignments()
                .iter()
                .filter(|(_, g)| *g == f)
                .count()
        };
        assert_eq!(count(Fold::Train), 8);
        assert_eq!(count(Fold::Validation), 1);
        assert_eq!(count(Fold::Test), 1);
        let again = split_patients(&episodes, (0.8, 0.1, 0.1), 3).unwrap();
        assert_eq!(folds.assignments(), again.assignments());
    }

    #[test]
    fn split_keeps_patient_episodes_together() {
        let reg = registry_with(1, 0);
        let mut episodes = Vec::new();
        for pid in 0..6u64 {
            for _ in 0..3 {
                let mut ep = episode_with(&reg, vec![lab_event(&reg, 0, 1.0, 1.0)], 5.0);
                ep.patient_id = pid;
                episodes.push(ep);
            }
        }
        let folds = split_patients(&episodes, (0.8, 0.1, 0.1), 11).unwrap();
        for ep in &episodes {
            assert_eq!(folds.fold_of(ep.patient_id), folds.fold_of(ep.patient_id));
        }
        assert_eq!(folds.assignments().len(), 6);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let reg = registry_with(1, 0);
        let episodes: Vec<Episode> = (0..5u64)
            .map(|pid| {
                let mut ep = episode_with(&reg, vec![lab_event(&reg, 0, 1.0, 1.0)], 5.0);
                ep.patient_id = pid;
                ep
            })
            .collect();
        assert!(matches!(
            split_patients(&episodes, (0.5, 0.2, 0.2), 1),
            Err(PipelineError::BadFractions(_))
        ));
    }

    #[test]
    fn class_weight_formula() {
        let half: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let (wn, wp) = class_weights(&half).unwrap();
        assert!((wn - 0.5).abs() < 1e-12 && (wp - 0.5).abs() < 1e-12);

        let ten_pct: Vec<bool> = (0..10).map(|i| i == 0).collect();
        let (wn, wp) = class_weights(&ten_pct).unwrap();
        assert!((wn - 0.1).abs() < 1e-12, "w_neg {wn}");
        assert!((wp - 0.9).abs() < 1e-12, "w_pos {wp}");

        let quarter: Vec<bool> = (0..20).map(|i| i < 5).collect();
        let (wn, wp) = class_weights(&quarter).unwrap();
        assert!((wn - 0.25).abs() < 1e-12 && (wp - 0.75).abs() < 1e-12);

        assert!(class_weights(&[true, true]).is_err());
    }

    #[test]
    fn interval_k_stays_in_eligibility_range() {
        let reg = registry_with(2, 0);
        let mut episodes = Vec::new();
        let mut t = 0.31_f64;
        for pid in 0..50u64 {
            let mut events = Vec::new();
            let mut clock = 1.0;
            for k in 0..60 {
                t = (t * 913.7).fract();
                clock += 0.2 + 8.0 * t;
                events.push(lab_event(&reg, k % 2, clock, t));
            }
            let mut ep = episode_with(&reg, events, clock + 1.0);
            ep.patient_id = pid;
            episodes.push(ep);
        }
        let rule = NextStateRule::new(24.0).unwrap();
        let all: Vec<usize> = (0..episodes.len()).collect();
        let specs = build_sample_specs(
            &episodes,
            &all,
            &reg,
            &AnchorSampling::All,
            &rule,
            &RewardSpec::default(),
        );
        let mut continues = 0;
        for s in &specs {
            if let NextSpec::Continue { interval_hours, .. } = s.next {
                continues += 1;
                assert!(
                    (rule.delay_hours..=rule.delay_hours + rule.window_hours)
                        .contains(&interval_hours),
                    "interval {interval_hours}"
                );
            }
        }
        assert!(continues > 0);
    }

    #[test]
    fn latent_occupancy_exposed_on_windows() {
        let reg = registry_with(1, 0);
        let mut ep = episode_with(&reg, vec![lab_event(&reg, 0, 5.0, 1.0)], 10.0);
        ep.latent_path = Some(vec![
            LatentStep {
                enter_time: 0.0,
                state: LatentState::Transient(1),
            },
            LatentStep {
                enter_time: 10.0,
                state: LatentState::Death,
            },
        ]);
        let stats = StandardizationStats::identity(reg.len());
        let anchor = ep.events.iter().position(|e| e.time == 5.0).unwrap();
        let w = assemble_window(&ep, &reg, anchor, &stats).unwrap();
        assert_eq!(w.true_latent, Some(1));
    }
}
