//! Core domain types: features, events, episodes, measurement tuples and
//! the label arithmetic built on them.
//!
//! Everything here is immutable plain data; all types are `Send + Sync` and
//! cheap to share across worker threads.

use thiserror::Error;

use crate::pipeline::StandardizationStats;

/// Hours in a day; horizons are expressed in days, timestamps in hours.
pub const HOURS_PER_DAY: f64 = 24.0;

/// Lookback horizon of an observation window, in hours (7 days).
pub const LOOKBACK_HOURS: f64 = 168.0;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("event at t={event_time}h lies after the anchor at t={anchor_time}h")]
    EventAfterAnchor { event_time: f64, anchor_time: f64 },
    #[error("previous event at t={prev_time}h is not strictly earlier than t={event_time}h")]
    PrevNotEarlier { prev_time: f64, event_time: f64 },
    #[error("previous event has feature {prev:?}, expected {expected:?}")]
    PrevFeatureMismatch { prev: FeatureId, expected: FeatureId },
    #[error("feature registry invalid: {0}")]
    InvalidRegistry(String),
}

/// What a feature measures; drives outlier quantiles and window priorities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Lab,
    InfusionRate,
    Bolus,
    Demographic,
}

impl FeatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::Lab => "lab",
            FeatureKind::InfusionRate => "infusion",
            FeatureKind::Bolus => "bolus",
            FeatureKind::Demographic => "demographic",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s {
            "lab" => Some(FeatureKind::Lab),
            "infusion" => Some(FeatureKind::InfusionRate),
            "bolus" => Some(FeatureKind::Bolus),
            "demographic" => Some(FeatureKind::Demographic),
            _ => None,
        }
    }
}

/// Dense index into a [`FeatureRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub u16);

impl FeatureId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
}

/// Registry of all features; ids are the dense positions `0..len`.
///
/// The demographic kind, when present, is exactly `age`, `sex`, `weight`.
#[derive(Debug, Clone)]
pub struct FeatureRegistry {
    defs: Vec<FeatureDef>,
}

pub const DEMOGRAPHIC_NAMES: [&str; 3] = ["age", "sex", "weight"];

impl FeatureRegistry {
    pub fn new(defs: Vec<FeatureDef>) -> Result<Self, DomainError> {
        let mut seen = std::collections::HashSet::new();
        let mut demo = Vec::new();
        for d in &defs {
            if d.name.is_empty() || d.name.chars().any(|c| c.is_whitespace()) {
                return Err(DomainError::InvalidRegistry(format!(
                    "feature name {:?} must be non-empty and whitespace-free",
                    d.name
                )));
            }
            if !seen.insert(d.name.clone()) {
                return Err(DomainError::InvalidRegistry(format!(
                    "duplicate feature name {:?}",
                    d.name
                )));
            }
            if d.kind == FeatureKind::Demographic {
                demo.push(d.name.clone());
            }
        }
        if !demo.is_empty() {
            let mut got = demo.clone();
            got.sort();
            let mut want: Vec<String> = DEMOGRAPHIC_NAMES.iter().map(|s| s.to_string()).collect();
            want.sort();
            if got != want {
                return Err(DomainError::InvalidRegistry(format!(
                    "demographic features must be exactly {DEMOGRAPHIC_NAMES:?}, got {demo:?}"
                )));
            }
        }
        Ok(FeatureRegistry { defs })
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn def(&self, id: FeatureId) -> &FeatureDef {
        &self.defs[id.idx()]
    }

    pub fn kind(&self, id: FeatureId) -> FeatureKind {
        self.defs[id.idx()].kind
    }

    pub fn name(&self, id: FeatureId) -> &str {
        &self.defs[id.idx()].name
    }

    pub fn is_demographic(&self, id: FeatureId) -> bool {
        self.kind(id) == FeatureKind::Demographic
    }

    pub fn ids(&self) -> impl Iterator<Item = FeatureId> + '_ {
        (0..self.defs.len()).map(|i| FeatureId(i as u16))
    }

    pub fn id_by_name(&self, name: &str) -> Option<FeatureId> {
        self.defs
            .iter()
            .position(|d| d.name == name)
            .map(|i| FeatureId(i as u16))
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, &FeatureDef)> {
        self.defs
            .iter()
            .enumerate()
            .map(|(i, d)| (FeatureId(i as u16), d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Death,
    Discharge,
}

/// One observed measurement: absolute time in hours since admission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEvent {
    pub time: f64,
    pub feature: FeatureId,
    pub value: f64,
}

/// Latent simulator state; `Transient` indices come from the cohort config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentState {
    Transient(u16),
    Death,
    Discharged,
}

impl LatentState {
    pub fn is_absorbing(&self) -> bool {
        !matches!(self, LatentState::Transient(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentStep {
    pub enter_time: f64,
    pub state: LatentState,
}

/// One synthetic admission: the event stream plus its terminal outcome.
///
/// `latent_path`, when present, is simulator ground truth: it starts at
/// time 0 and its last step is the absorbing state entered at `end_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub patient_id: u64,
    pub sex: Sex,
    pub age: f64,
    pub weight: Option<f64>,
    pub events: Vec<RawEvent>,
    pub outcome: Outcome,
    pub end_time: f64,
    pub latent_path: Option<Vec<LatentStep>>,
}

impl Episode {
    /// Checks the structural invariants; used by dataset readers and tests.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.events.windows(2) {
            if w[1].time < w[0].time {
                return Err(format!(
                    "events out of order at t={} > t={}",
                    w[0].time, w[1].time
                ));
            }
        }
        if let Some(e) = self.events.iter().find(|e| e.time > self.end_time) {
            return Err(format!(
                "event at t={} lies after end_time={}",
                e.time, self.end_time
            ));
        }
        if let Some(path) = &self.latent_path {
            if path.is_empty() {
                return Err("latent path present but empty".into());
            }
            if path[0].enter_time != 0.0 {
                return Err("latent path must start at time 0".into());
            }
            for w in path.windows(2) {
                if w[1].enter_time < w[0].enter_time {
                    return Err("latent path times out of order".into());
                }
            }
            let last = path.last().unwrap();
            if !last.state.is_absorbing() || last.enter_time != self.end_time {
                return Err("latent path must end in an absorbing state at end_time".into());
            }
        }
        Ok(())
    }

    /// Transient latent state occupied at `time`, when ground truth is known.
    pub fn latent_state_at(&self, time: f64) -> Option<u16> {
        let path = self.latent_path.as_ref()?;
        let mut current = None;
        for step in path {
            if step.enter_time <= time {
                current = Some(step.state);
            } else {
                break;
            }
        }
        match current {
            Some(LatentState::Transient(s)) => Some(s),
            _ => None,
        }
    }
}

/// Reward structure: terminal mortality only, undiscounted.
#[derive(Debug, Clone, Copy)]
pub struct RewardSpec {
    pub gamma: f64,
    pub interim_reward: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            gamma: 1.0,
            interim_reward: 0.0,
        }
    }
}

impl RewardSpec {
    pub fn terminal_reward(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Death => 1.0,
            Outcome::Discharge => 0.0,
        }
    }
}

/// One observed event encoded for the model, all components standardized.
///
/// `has_delta == false` means no earlier same-feature measurement was in
/// scope; both deltas are then the 0.0 sentinel and the model substitutes a
/// learned no-history embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementTuple {
    pub value: f64,
    pub time_offset: f64,
    pub feature: FeatureId,
    pub delta_value: f64,
    pub delta_time: f64,
    pub has_delta: bool,
}

/// Encodes one event relative to an anchor, standardizing every component.
///
/// `prev` is the latest earlier measurement of the same feature that the
/// caller wants deltas computed against; value clipping is the caller's
/// responsibility (window assembly clips before encoding).
pub fn make_tuple(
    event: &RawEvent,
    anchor_time: f64,
    prev: Option<&RawEvent>,
    stats: &StandardizationStats,
) -> Result<MeasurementTuple, DomainError> {
    if event.time > anchor_time {
        return Err(DomainError::EventAfterAnchor {
            event_time: event.time,
            anchor_time,
        });
    }
    if let Some(p) = prev {
        if p.feature != event.feature {
            return Err(DomainError::PrevFeatureMismatch {
                prev: p.feature,
                expected: event.feature,
            });
        }
        if p.time >= event.time {
            return Err(DomainError::PrevNotEarlier {
                prev_time: p.time,
                event_time: event.time,
            });
        }
    }
    let raw_t = event.time - anchor_time;
    let (delta_value, delta_time, has_delta) = match prev {
        Some(p) => (
            stats.standardize_delta_value(event.feature, event.value - p.value),
            stats.standardize_delta_time(event.time - p.time),
            true,
        ),
        None => (0.0, 0.0, false),
    };
    Ok(MeasurementTuple {
        value: stats.standardize_value(event.feature, event.value),
        time_offset: stats.standardize_time_offset(raw_t),
        feature: event.feature,
        delta_value,
        delta_time,
        has_delta,
    })
}

/// True iff the episode ends in death no more than `horizon_days` after
/// `state_time`. Discharge is the negative class at every horizon.
pub fn mortality_within(episode: &Episode, state_time: f64, horizon_days: f64) -> bool {
    debug_assert!(state_time >= 0.0 && state_time <= episode.end_time);
    episode.outcome == Outcome::Death
        && episode.end_time - state_time <= horizon_days * HOURS_PER_DAY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::StandardizationStats;

    fn f(i: u16) -> FeatureId {
        FeatureId(i)
    }

    fn ev(time: f64, feature: u16, value: f64) -> RawEvent {
        RawEvent {
            time,
            feature: f(feature),
            value,
        }
    }

    fn identity_stats(n_features: usize) -> StandardizationStats {
        StandardizationStats::identity(n_features)
    }

    fn episode(outcome: Outcome, end_time: f64) -> Episode {
        Episode {
            patient_id: 1,
            sex: Sex::Female,
            age: 60.0,
            weight: Some(70.0),
            events: vec![],
            outcome,
            end_time,
            latent_path: None,
        }
    }

    #[test]
    fn tuple_at_anchor_without_history() {
        let stats = identity_stats(2);
        let t = make_tuple(&ev(10.0, 0, 5.0), 10.0, None, &stats).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.time_offset, 0.0);
        assert_eq!(t.delta_value, 0.0);
        assert_eq!(t.delta_time, 0.0);
        assert!(!t.has_delta);
    }

    #[test]
    fn tuple_with_history_has_definitional_deltas() {
        let stats = identity_stats(2);
        let prev = ev(4.0, 1, 5.0);
        let t = make_tuple(&ev(8.0, 1, 7.0), 10.0, Some(&prev), &stats).unwrap();
        assert_eq!(t.value, 7.0);
        assert_eq!(t.time_offset, -2.0);
        assert_eq!(t.delta_value, 2.0);
        assert_eq!(t.delta_time, 4.0);
        assert!(t.has_delta);
    }

    #[test]
    fn tuple_value_is_z_scored() {
        let mut stats = identity_stats(1);
        stats.set_value_moments(f(0), 6.0, 2.0);
        let t = make_tuple(&ev(0.0, 0, 7.0), 0.0, None, &stats).unwrap();
        assert!((t.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tuple_rejects_prev_with_later_time() {
        let stats = identity_stats(1);
        let prev = ev(9.0, 0, 1.0);
        let err = make_tuple(&ev(8.0, 0, 2.0), 10.0, Some(&prev), &stats);
        assert!(matches!(err, Err(DomainError::PrevNotEarlier { .. })));
    }

    #[test]
    fn tuple_rejects_event_after_anchor() {
        let stats = identity_stats(1);
        let err = make_tuple(&ev(11.0, 0, 2.0), 10.0, None, &stats);
        assert!(matches!(err, Err(DomainError::EventAfterAnchor { .. })));
    }

    #[test]
    fn tuple_round_trip_recovers_raw_values() {
        let mut stats = identity_stats(1);
        stats.set_value_moments(f(0), 3.2, 1.7);
        stats.set_delta_value_moments(f(0), -0.4, 2.3);
        stats.set_time_moments(-60.0, 40.0);
        stats.set_delta_time_moments(12.0, 9.0);
        let prev = ev(1.0, 0, 2.25);
        let raw = ev(5.5, 0, 9.75);
        let t = make_tuple(&raw, 8.0, Some(&prev), &stats).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        assert!(rel(stats.destandardize_value(t.feature, t.value), 9.75) < 1e-9);
        assert!(rel(stats.destandardize_time_offset(t.time_offset), -2.5) < 1e-9);
        assert!(rel(stats.destandardize_delta_value(t.feature, t.delta_value), 7.5) < 1e-9);
        assert!(rel(stats.destandardize_delta_time(t.delta_time), 4.5) < 1e-9);
    }

    #[test]
    fn mortality_label_examples() {
        let death = episode(Outcome::Death, 300.0);
        // death 10 days after the state, 7-day horizon
        assert!(!mortality_within(&death, 300.0 - 240.0, 7.0));
        // death 2 days after the state, 3-day horizon
        assert!(mortality_within(&death, 300.0 - 48.0, 3.0));
        let disc = episode(Outcome::Discharge, 300.0);
        for h in [0.0, 1.0, 7.0, 28.0] {
            assert!(!mortality_within(&disc, 10.0, h));
        }
    }

    #[test]
    fn mortality_monotone_in_horizon() {
        let death = episode(Outcome::Death, 500.0);
        let horizons = [0.5, 1.0, 3.0, 7.0, 14.0, 28.0];
        for t in [0.0, 100.0, 350.0, 499.0] {
            let labels: Vec<bool> = horizons
                .iter()
                .map(|&h| mortality_within(&death, t, h))
                .collect();
            for w in labels.windows(2) {
                assert!(!w[0] || w[1], "label must stay true as horizon grows");
            }
        }
    }

    #[test]
    fn mortality_at_end_time_equals_outcome() {
        let death = episode(Outcome::Death, 77.0);
        let disc = episode(Outcome::Discharge, 77.0);
        for h in [0.0, 1.0, 28.0] {
            assert!(mortality_within(&death, 77.0, h));
            assert!(!mortality_within(&disc, 77.0, h));
        }
    }

    #[test]
    fn registry_demographics_must_be_exact() {
        let defs = vec![
            FeatureDef {
                name: "lactate".into(),
                kind: FeatureKind::Lab,
            },
            FeatureDef {
                name: "age".into(),
                kind: FeatureKind::Demographic,
            },
        ];
        assert!(FeatureRegistry::new(defs).is_err());
    }

    #[test]
    fn latent_state_lookup_uses_enclosing_interval() {
        let mut ep = episode(Outcome::Death, 10.0);
        ep.latent_path = Some(vec![
            LatentStep {
                enter_time: 0.0,
                state: LatentState::Transient(0),
            },
            LatentStep {
                enter_time: 4.0,
                state: LatentState::Transient(2),
            },
            LatentStep {
                enter_time: 10.0,
                state: LatentState::Death,
            },
        ]);
        ep.validate().unwrap();
        assert_eq!(ep.latent_state_at(0.0), Some(0));
        assert_eq!(ep.latent_state_at(3.999), Some(0));
        assert_eq!(ep.latent_state_at(4.0), Some(2));
        assert_eq!(ep.latent_state_at(9.9), Some(2));
        assert_eq!(ep.latent_state_at(10.0), None);
    }

    #[test]
    fn core_types_are_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Episode>();
        assert_send_sync::<MeasurementTuple>();
        assert_send_sync::<FeatureRegistry>();
        assert_send_sync::<RewardSpec>();
    }
}
