//! Synthetic cohort generation: a continuous-time Markov chain over latent
//! severity states with death/discharge absorption, state-conditional
//! Poisson observation processes, an exact absorption-probability oracle,
//! and a dataset-shift generator for external-validation analogs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{
    Episode, FeatureDef, FeatureKind, FeatureRegistry, LatentState, LatentStep, Outcome, RawEvent,
    Sex,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cohort config invalid: {0}")]
    InvalidConfig(String),
    #[error("absorption system is singular: some transient state cannot reach absorption")]
    SingularSystem,
    #[error("shift references unknown feature {0:?}")]
    UnknownFeature(String),
}

/// One observable feature: per-latent-state event rate and value moments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Events per hour while in each latent state.
    pub rates: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemographicsDist {
    pub age_mean: f64,
    pub age_std: f64,
    pub female_fraction: f64,
    pub weight_mean_female: f64,
    pub weight_std_female: f64,
    pub weight_mean_male: f64,
    pub weight_std_male: f64,
    pub weight_missing_prob: f64,
}

/// Generator of the latent process plus everything observable from it.
///
/// `rate_matrix` is the `(n_latent + 2)²` CTMC generator: rows sum to zero
/// with nonpositive diagonal, the two absorbing rows (death at column
/// `n_latent`, discharge at `n_latent + 1`) are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub n_latent: usize,
    pub rate_matrix: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
    pub features: Vec<FeatureSpec>,
    pub demographics: DemographicsDist,
    pub max_duration: f64,
}

impl CohortConfig {
    pub fn death_col(&self) -> usize {
        self.n_latent
    }

    pub fn discharge_col(&self) -> usize {
        self.n_latent + 1
    }

    /// Sets each transient diagonal to minus the off-diagonal row sum.
    pub fn normalize_diagonal(&mut self) {
        let n = self.n_latent;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n + 2 {
                if j != i {
                    sum += self.rate_matrix[i][j];
                }
            }
            self.rate_matrix[i][i] = -sum;
        }
    }

    /// Registry view: configured features followed by age/sex/weight.
    pub fn registry(&self) -> Result<FeatureRegistry, SimError> {
        let mut defs: Vec<FeatureDef> = self
            .features
            .iter()
            .map(|f| FeatureDef {
                name: f.name.clone(),
                kind: f.kind,
            })
            .collect();
        for name in ["age", "sex", "weight"] {
            defs.push(FeatureDef {
                name: name.into(),
                kind: FeatureKind::Demographic,
            });
        }
        FeatureRegistry::new(defs).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.n_latent;
        let m = n + 2;
        let err = |msg: String| Err(SimError::InvalidConfig(msg));
        if n == 0 {
            return err("need at least one transient state".into());
        }
        if self.rate_matrix.len() != m || self.rate_matrix.iter().any(|r| r.len() != m) {
            return err(format!("rate matrix must be {m}x{m}"));
        }
        for (i, row) in self.rate_matrix.iter().enumerate() {
            if i >= n {
                if row.iter().any(|&q| q != 0.0) {
                    return err(format!("absorbing row {i} must be all zero"));
                }
                continue;
            }
            let mut off = 0.0;
            for (j, &q) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if q < 0.0 || !q.is_finite() {
                    return err(format!("rate [{i}][{j}] = {q} must be finite nonnegative"));
                }
                off += q;
            }
            if (row[i] + off).abs() > 1e-9 * off.abs().max(1.0) {
                return err(format!("row {i} does not sum to zero"));
            }
            if off <= 0.0 {
                return err(format!("transient state {i} has no exit rate"));
            }
        }
        if self.initial_dist.len() != n {
            return err("initial distribution length must equal n_latent".into());
        }
        if self.initial_dist.iter().any(|&p| p < 0.0) {
            return err("initial distribution must be nonnegative".into());
        }
        let total: f64 = self.initial_dist.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return err(format!("initial distribution sums to {total}, not 1"));
        }
        // absorption reachability from every transient state
        let mut reach_absorb = vec![false; n];
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                if reach_absorb[i] {
                    continue;
                }
                let row = &self.rate_matrix[i];
                let direct = row[self.death_col()] > 0.0 || row[self.discharge_col()] > 0.0;
                let via = (0..n).any(|j| j != i && row[j] > 0.0 && reach_absorb[j]);
                if direct || via {
                    reach_absorb[i] = true;
                    changed = true;
                }
            }
        }
        if let Some(i) = reach_absorb.iter().position(|&r| !r) {
            return err(format!("transient state {i} cannot reach absorption"));
        }
        for f in &self.features {
            if f.kind == FeatureKind::Demographic {
                return err(format!(
                    "feature {:?}: demographics are implicit, not configured",
                    f.name
                ));
            }
            if f.rates.len() != n || f.means.len() != n || f.stds.len() != n {
                return err(format!("feature {:?} needs {n} per-state entries", f.name));
            }
            if f.rates.iter().any(|&r| r < 0.0 || !r.is_finite()) {
                return err(format!("feature {:?} has a negative rate", f.name));
            }
            if f.stds.iter().any(|&s| s < 0.0 || !s.is_finite()) {
                return err(format!("feature {:?} has a negative std", f.name));
            }
        }
        let d = &self.demographics;
        if !(0.0..=1.0).contains(&d.female_fraction)
            || !(0.0..=1.0).contains(&d.weight_missing_prob)
        {
            return err("demographic probabilities must lie in [0, 1]".into());
        }
        if d.age_std < 0.0 || d.weight_std_female < 0.0 || d.weight_std_male < 0.0 {
            return err("demographic stds must be nonnegative".into());
        }
        if !(self.max_duration > 0.0) {
            return err("max_duration must be positive".into());
        }
        self.registry()?;
        Ok(())
    }
}

/// What changes between the internal cohort and its external-analog twin.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    /// Additive offset applied to every latent state's emission mean.
    pub emission_mean_shift: Vec<(String, f64)>,
    /// Multiplier on every observation rate.
    pub rate_scale: f64,
    pub initial_dist_override: Option<Vec<f64>>,
    pub death_scale: f64,
    pub discharge_scale: f64,
}

impl ShiftSpec {
    pub fn identity() -> Self {
        ShiftSpec {
            emission_mean_shift: Vec::new(),
            rate_scale: 1.0,
            initial_dist_override: None,
            death_scale: 1.0,
            discharge_scale: 1.0,
        }
    }
}

/// Returns the perturbed config; the original is untouched.
pub fn apply_shift(config: &CohortConfig, shift: &ShiftSpec) -> Result<CohortConfig, SimError> {
    let mut out = config.clone();
    for (name, off) in &shift.emission_mean_shift {
        let f = out
            .features
            .iter_mut()
            .find(|f| &f.name == name)
            .ok_or_else(|| SimError::UnknownFeature(name.clone()))?;
        for m in &mut f.means {
            *m += off;
        }
    }
    for f in &mut out.features {
        for r in &mut f.rates {
            *r *= shift.rate_scale;
        }
    }
    let death = out.death_col();
    let discharge = out.discharge_col();
    for i in 0..out.n_latent {
        out.rate_matrix[i][death] *= shift.death_scale;
        out.rate_matrix[i][discharge] *= shift.discharge_scale;
    }
    out.normalize_diagonal();
    if let Some(dist) = &shift.initial_dist_override {
        out.initial_dist = dist.clone();
    }
    out.validate()?;
    Ok(out)
}

/// Exact probability of absorption in the death state from each transient
/// state: solves `(I - T) p = b` for the embedded jump chain.
pub fn absorption_probability(config: &CohortConfig) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let n = config.n_latent;
    let death = config.death_col();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let exit = -config.rate_matrix[i][i];
        a[i][i] = 1.0;
        for j in 0..n {
            if j != i {
                a[i][j] = -config.rate_matrix[i][j] / exit;
            }
        }
        b[i] = config.rate_matrix[i][death] / exit;
    }
    solve_dense(a, b).ok_or(SimError::SingularSystem)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Samples one episode. Identical `(config, seed)` pairs produce
/// bit-identical episodes; the seed doubles as the patient id.
pub fn sample_episode(config: &CohortConfig, seed: u64) -> Result<Episode, SimError> {
    config.validate()?;
    let registry = config.registry()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_episode_rng(config, &registry, &mut rng, seed))
}

/// Samples a cohort: episode `i` draws from an independent counter-based
/// stream of `base_seed`, so generation parallelizes without changing
/// results. Patient ids are `id_offset + i`.
pub fn sample_cohort(
    config: &CohortConfig,
    base_seed: u64,
    n: usize,
    id_offset: u64,
) -> Result<Vec<Episode>, SimError> {
    config.validate()?;
    let registry = config.registry()?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
            rng.set_stream(i as u64 + 1);
            sample_episode_rng(config, &registry, &mut rng, id_offset + i as u64)
        })
        .collect())
}

fn sample_episode_rng(
    config: &CohortConfig,
    registry: &FeatureRegistry,
    rng: &mut ChaCha8Rng,
    patient_id: u64,
) -> Episode {
    let d = &config.demographics;
    let age = gaussian(rng, d.age_mean, d.age_std).clamp(18.0, 95.0);
    let sex = if rng.random_range(0.0..1.0) < d.female_fraction {
        Sex::Female
    } else {
        Sex::Male
    };
    let weight = if rng.random_range(0.0..1.0) < d.weight_missing_prob {
        None
    } else {
        let (m, s) = match sex {
            Sex::Female => (d.weight_mean_female, d.weight_std_female),
            Sex::Male => (d.weight_mean_male, d.weight_std_male),
        };
        Some(gaussian(rng, m, s).clamp(35.0, 200.0))
    };

    // Latent path by competing exponentials.
    let n = config.n_latent;
    let mut state = categorical(rng, &config.initial_dist);
    let mut path = vec![LatentStep {
        enter_time: 0.0,
        state: LatentState::Transient(state as u16),
    }];
    let mut t = 0.0;
    let (end_time, outcome) = loop {
        let row = &config.rate_matrix[state];
        let exit = -row[state];
        let dt = Exp::new(exit).expect("validated exit rate").sample(rng);
        if t + dt >= config.max_duration {
            // censoring guard: coded as survival
            path.push(LatentStep {
                enter_time: config.max_duration,
                state: LatentState::Discharged,
            });
            break (config.max_duration, Outcome::Discharge);
        }
        t += dt;
        let mut weights = Vec::with_capacity(n + 2);
        for (j, &q) in row.iter().enumerate() {
            weights.push(if j == state { 0.0 } else { q });
        }
        let dest = categorical(rng, &weights);
        if dest == config.death_col() {
            path.push(LatentStep {
                enter_time: t,
                state: LatentState::Death,
            });
            break (t, Outcome::Death);
        } else if dest == config.discharge_col() {
            path.push(LatentStep {
                enter_time: t,
                state: LatentState::Discharged,
            });
            break (t, Outcome::Discharge);
        } else {
            path.push(LatentStep {
                enter_time: t,
                state: LatentState::Transient(dest as u16),
            });
            state = dest;
        }
    };

    // Observations: per-feature Poisson within each latent interval,
    // state-conditional Gaussian values. Demographics are emitted once at
    // admission so window assembly treats them uniformly.
    let mut events: Vec<RawEvent> = Vec::new();
    events.push(RawEvent {
        time: 0.0,
        feature: registry.id_by_name("age").unwrap(),
        value: age,
    });
    events.push(RawEvent {
        time: 0.0,
        feature: registry.id_by_name("sex").unwrap(),
        value: if sex == Sex::Female { 1.0 } else { 0.0 },
    });
    if let Some(w) = weight {
        events.push(RawEvent {
            time: 0.0,
            feature: registry.id_by_name("weight").unwrap(),
            value: w,
        });
    }
    for (fi, feat) in config.features.iter().enumerate() {
        let feature = registry.id_by_name(&feat.name).unwrap();
        debug_assert_eq!(feature.idx(), fi);
        for win in path.windows(2) {
            let s = match win[0].state {
                LatentState::Transient(s) => s as usize,
                _ => continue,
            };
            let (t0, t1) = (win[0].enter_time, win[1].enter_time);
            if t1 <= t0 {
                continue;
            }
            let lambda = feat.rates[s] * (t1 - t0);
            if lambda <= 0.0 {
                continue;
            }
            let count = Poisson::new(lambda).expect("positive lambda").sample(rng) as usize;
            for _ in 0..count {
                let time = rng.random_range(t0..t1);
                let value = gaussian(rng, feat.means[s], feat.stds[s]);
                events.push(RawEvent {
                    time,
                    feature,
                    value,
                });
            }
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.feature.cmp(&b.feature)));

    let ep = Episode {
        patient_id,
        sex,
        age,
        weight,
        events,
        outcome,
        end_time,
        latent_path: Some(path),
    };
    debug_assert!(ep.validate().is_ok(), "{:?}", ep.validate());
    ep
}

fn gaussian(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    Normal::new(mean, std).expect("validated std").sample(rng)
}

fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn single_state_config(death: f64, discharge: f64) -> CohortConfig {
        let mut cfg = CohortConfig {
            n_latent: 1,
            rate_matrix: vec![
                vec![0.0, death, discharge],
                vec![0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
            ],
            initial_dist: vec![1.0],
            features: vec![FeatureSpec {
                name: "marker".into(),
                kind: FeatureKind::Lab,
                rates: vec![0.5],
                means: vec![1.0],
                stds: vec![0.2],
            }],
            demographics: DemographicsDist {
                age_mean: 60.0,
                age_std: 10.0,
                female_fraction: 0.5,
                weight_mean_female: 74.0,
                weight_std_female: 10.0,
                weight_mean_male: 86.0,
                weight_std_male: 10.0,
                weight_missing_prob: 0.0,
            },
            max_duration: 5000.0,
        };
        cfg.normalize_diagonal();
        cfg
    }

    #[test]
    fn symmetric_single_state_absorbs_at_exactly_one_half() {
        let cfg = single_state_config(0.01, 0.01);
        let p = absorption_probability(&cfg).unwrap();
        assert_eq!(p, vec![0.5]);
    }

    #[test]
    fn competing_rates_give_ratio() {
        let cfg = single_state_config(1.0, 3.0);
        let p = absorption_probability(&cfg).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_death_rate_never_dies() {
        let mut cfg = single_state_config(0.0, 0.02);
        cfg.normalize_diagonal();
        for seed in 0..200 {
            let ep = sample_episode(&cfg, seed).unwrap();
            assert_eq!(ep.outcome, Outcome::Discharge);
        }
        let p = absorption_probability(&cfg).unwrap();
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = fixtures::default_cohort();
        let a = sample_episode(&cfg, 1234).unwrap();
        let b = sample_episode(&cfg, 1234).unwrap();
        assert_eq!(a, b);
        let c = sample_cohort(&cfg, 99, 8, 0).unwrap();
        let d = sample_cohort(&cfg, 99, 8, 0).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn mean_duration_matches_exponential_oracle() {
        // single transient state, exit rate 0.02/h: mean end time 50h
        let cfg = single_state_config(0.01, 0.01);
        let n = 100_000;
        let eps = sample_cohort(&cfg, 7, n, 0).unwrap();
        let mean: f64 = eps.iter().map(|e| e.end_time).sum::<f64>() / n as f64;
        // exponential: mean 50, std 50; 3 sigma of the sample mean
        let tol = 3.0 * 50.0 / (n as f64).sqrt();
        assert!((mean - 50.0).abs() < tol, "mean {mean} outside 50 +- {tol}");
    }

    #[test]
    fn death_frequency_matches_absorption_oracle() {
        let cfg = fixtures::three_state_cohort();
        let oracle = absorption_probability(&cfg).unwrap();
        let p_init: f64 = cfg
            .initial_dist
            .iter()
            .zip(&oracle)
            .map(|(w, p)| w * p)
            .sum();
        let n = 100_000;
        let eps = sample_cohort(&cfg, 11, n, 0).unwrap();
        let deaths = eps.iter().filter(|e| e.outcome == Outcome::Death).count();
        let freq = deaths as f64 / n as f64;
        let sigma = (p_init * (1.0 - p_init) / n as f64).sqrt();
        assert!(
            (freq - p_init).abs() < 3.0 * sigma,
            "freq {freq} vs oracle {p_init} (3 sigma {})",
            3.0 * sigma
        );
    }

    #[test]
    fn emission_means_match_config_by_state() {
        let cfg = fixtures::three_state_cohort();
        let reg = cfg.registry().unwrap();
        let eps = sample_cohort(&cfg, 13, 4000, 0).unwrap();
        let fid = reg.id_by_name(&cfg.features[0].name).unwrap();
        for s in 0..cfg.n_latent {
            let mut vals = Vec::new();
            for ep in &eps {
                for e in &ep.events {
                    if e.feature == fid && ep.latent_state_at(e.time) == Some(s as u16) {
                        vals.push(e.value);
                    }
                }
            }
            assert!(vals.len() > 100, "state {s} undersampled");
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let want = cfg.features[0].means[s];
            let sigma = cfg.features[0].stds[s] / (vals.len() as f64).sqrt();
            assert!(
                (mean - want).abs() < 3.0 * sigma.max(1e-3),
                "state {s}: mean {mean} want {want}"
            );
        }
    }

    #[test]
    fn latent_occupancy_covers_every_event() {
        let cfg = fixtures::default_cohort();
        for ep in sample_cohort(&cfg, 17, 50, 0).unwrap() {
            for e in &ep.events {
                assert!(
                    ep.latent_state_at(e.time).is_some(),
                    "event at {} outside transient occupancy (end {})",
                    e.time,
                    ep.end_time
                );
            }
        }
    }

    #[test]
    fn identity_shift_is_a_no_op() {
        let cfg = fixtures::default_cohort();
        let shifted = apply_shift(&cfg, &ShiftSpec::identity()).unwrap();
        assert_eq!(cfg, shifted);
    }

    #[test]
    fn halved_death_rates_lower_absorption_everywhere() {
        let cfg = fixtures::default_cohort();
        let shift = ShiftSpec {
            death_scale: 0.5,
            ..ShiftSpec::identity()
        };
        let shifted = apply_shift(&cfg, &shift).unwrap();
        let before = absorption_probability(&cfg).unwrap();
        let after = absorption_probability(&shifted).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!(a < b, "absorption must drop: {a} !< {b}");
        }
    }

    #[test]
    fn doubled_rates_double_observation_counts() {
        let base = fixtures::three_state_cohort();
        let shift = ShiftSpec {
            rate_scale: 2.0,
            ..ShiftSpec::identity()
        };
        let doubled = apply_shift(&base, &shift).unwrap();
        let n = 50_000;
        let count_obs = |cfg: &CohortConfig, seed: u64| -> (f64, f64) {
            let reg = cfg.registry().unwrap();
            let eps = sample_cohort(cfg, seed, n, 0).unwrap();
            let counts: Vec<f64> = eps
                .iter()
                .map(|ep| {
                    ep.events
                        .iter()
                        .filter(|e| !reg.is_demographic(e.feature))
                        .count() as f64
                })
                .collect();
            let mean = counts.iter().sum::<f64>() / n as f64;
            let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n as f64;
            (mean, (var / n as f64).sqrt())
        };
        let (m1, s1) = count_obs(&base, 19);
        let (m2, s2) = count_obs(&doubled, 23);
        let diff = m2 - 2.0 * m1;
        let sigma = (s2 * s2 + 4.0 * s1 * s1).sqrt();
        assert!(
            diff.abs() < 3.0 * sigma,
            "mean counts {m1} -> {m2}, expected doubling within {}",
            3.0 * sigma
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = single_state_config(0.01, 0.01);
        cfg.initial_dist = vec![0.7];
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig(_))));

        let mut cfg = single_state_config(0.0, 0.0);
        cfg.normalize_diagonal();
        // no exit rate at all
        assert!(cfg.validate().is_err());

        let mut cfg = single_state_config(0.01, 0.01);
        cfg.rate_matrix[1][0] = 0.5; // absorbing row must stay zero
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn censoring_is_rare_and_coded_as_discharge() {
        let mut cfg = single_state_config(0.01, 0.01);
        cfg.max_duration = 40.0; // force frequent censoring
        cfg.normalize_diagonal();
        let eps = sample_cohort(&cfg, 29, 2000, 0).unwrap();
        let censored: Vec<&Episode> = eps.iter().filter(|e| e.end_time == 40.0).collect();
        assert!(!censored.is_empty());
        for ep in censored {
            assert_eq!(ep.outcome, Outcome::Discharge);
            let last = ep.latent_path.as_ref().unwrap().last().unwrap();
            assert_eq!(last.state, LatentState::Discharged);
        }
    }
}
