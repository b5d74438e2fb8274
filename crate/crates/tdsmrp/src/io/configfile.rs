//! Flat key/value text with one section level: cohort configs, shift
//! specs, standardization stats and fold maps all share the same parser.

use std::collections::HashMap;

use super::{parse_f64, IoError};
use crate::domain::{FeatureKind, FeatureRegistry};
use crate::pipeline::{Fold, FoldMap, StandardizationStats};
use crate::sim::{CohortConfig, DemographicsDist, FeatureSpec, ShiftSpec};

#[derive(Debug, Clone)]
pub struct KvSection {
    pub name: String,
    pub entries: Vec<(String, String)>,
    pub line: usize,
}

impl KvSection {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, label: &str, key: &str) -> Result<&str, IoError> {
        self.get(key).ok_or_else(|| {
            IoError::malformed(label, self.line, format!("[{}] missing key {key:?}", self.name))
        })
    }

    fn require_f64(&self, label: &str, key: &str) -> Result<f64, IoError> {
        parse_f64(label, self.line, self.require(label, key)?)
    }

    fn require_vec(&self, label: &str, key: &str) -> Result<Vec<f64>, IoError> {
        self.require(label, key)?
            .split_whitespace()
            .map(|s| parse_f64(label, self.line, s))
            .collect()
    }
}

/// Parses `[section]` / `key = value` text; `#` starts a comment line.
pub fn parse_kv(label: &str, text: &str) -> Result<Vec<KvSection>, IoError> {
    let mut sections: Vec<KvSection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| IoError::malformed(label, lineno, "unterminated section header"))?
                .trim()
                .to_string();
            sections.push(KvSection {
                name,
                entries: Vec::new(),
                line: lineno,
            });
        } else if let Some((k, v)) = line.split_once('=') {
            let section = sections
                .last_mut()
                .ok_or_else(|| IoError::malformed(label, lineno, "key before any [section]"))?;
            section
                .entries
                .push((k.trim().to_string(), v.trim().to_string()));
        } else {
            return Err(IoError::malformed(
                label,
                lineno,
                format!("expected `key = value`, got {line:?}"),
            ));
        }
    }
    Ok(sections)
}

fn find<'a>(sections: &'a [KvSection], name: &str) -> Option<&'a KvSection> {
    sections.iter().find(|s| s.name == name)
}

// ---------------------------------------------------------------------------
// Cohort config
// ---------------------------------------------------------------------------

pub fn cohort_from_str(label: &str, text: &str) -> Result<CohortConfig, IoError> {
    let sections = parse_kv(label, text)?;
    let cohort = find(&sections, "cohort")
        .ok_or_else(|| IoError::malformed(label, 1, "missing [cohort] section"))?;
    let n: usize = cohort
        .require(label, "states")?
        .parse()
        .map_err(|_| IoError::malformed(label, cohort.line, "bad states count"))?;
    let max_duration = cohort.require_f64(label, "max_duration")?;
    let initial_dist = cohort.require_vec(label, "initial_dist")?;

    let transitions = find(&sections, "transitions")
        .ok_or_else(|| IoError::malformed(label, 1, "missing [transitions] section"))?;
    let mut rate_matrix = vec![vec![0.0; n + 2]; n + 2];
    for (key, value) in &transitions.entries {
        let (from, to) = key.split_once("->").ok_or_else(|| {
            IoError::malformed(label, transitions.line, format!("bad transition key {key:?}"))
        })?;
        let from: usize = from.trim().parse().map_err(|_| {
            IoError::malformed(label, transitions.line, format!("bad source state {from:?}"))
        })?;
        let to = match to.trim() {
            "death" => n,
            "discharge" => n + 1,
            idx => idx.parse().map_err(|_| {
                IoError::malformed(label, transitions.line, format!("bad destination {idx:?}"))
            })?,
        };
        if from >= n || to >= n + 2 {
            return Err(IoError::malformed(
                label,
                transitions.line,
                format!("transition {key:?} outside the state space"),
            ));
        }
        rate_matrix[from][to] = parse_f64(label, transitions.line, value)?;
    }

    let demo = find(&sections, "demographics")
        .ok_or_else(|| IoError::malformed(label, 1, "missing [demographics] section"))?;
    let demographics = DemographicsDist {
        age_mean: demo.require_f64(label, "age_mean")?,
        age_std: demo.require_f64(label, "age_std")?,
        female_fraction: demo.require_f64(label, "female_fraction")?,
        weight_mean_female: demo.require_f64(label, "weight_mean_female")?,
        weight_std_female: demo.require_f64(label, "weight_std_female")?,
        weight_mean_male: demo.require_f64(label, "weight_mean_male")?,
        weight_std_male: demo.require_f64(label, "weight_std_male")?,
        weight_missing_prob: demo.require_f64(label, "weight_missing_prob")?,
    };

    let mut features = Vec::new();
    for s in &sections {
        if let Some(name) = s.name.strip_prefix("feature ") {
            let kind = FeatureKind::parse(s.require(label, "kind")?).ok_or_else(|| {
                IoError::malformed(label, s.line, "kind must be lab|infusion|bolus")
            })?;
            features.push(FeatureSpec {
                name: name.trim().to_string(),
                kind,
                rates: s.require_vec(label, "rate")?,
                means: s.require_vec(label, "mean")?,
                stds: s.require_vec(label, "std")?,
            });
        }
    }

    let mut cfg = CohortConfig {
        n_latent: n,
        rate_matrix,
        initial_dist,
        features,
        demographics,
        max_duration,
    };
    cfg.normalize_diagonal();
    cfg.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
    Ok(cfg)
}

fn push_vec(out: &mut String, key: &str, vals: &[f64]) {
    out.push_str(key);
    out.push_str(" =");
    for v in vals {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
}

pub fn cohort_to_string(cfg: &CohortConfig) -> String {
    let mut out = String::new();
    out.push_str("[cohort]\n");
    out.push_str(&format!("states = {}\n", cfg.n_latent));
    out.push_str(&format!("max_duration = {}\n", cfg.max_duration));
    push_vec(&mut out, "initial_dist", &cfg.initial_dist);
    out.push_str("\n[transitions]\n");
    for from in 0..cfg.n_latent {
        for to in 0..cfg.n_latent + 2 {
            if to == from {
                continue;
            }
            let q = cfg.rate_matrix[from][to];
            if q != 0.0 {
                let dest = if to == cfg.death_col() {
                    "death".to_string()
                } else if to == cfg.discharge_col() {
                    "discharge".to_string()
                } else {
                    to.to_string()
                };
                out.push_str(&format!("{from}->{dest} = {q}\n"));
            }
        }
    }
    let d = &cfg.demographics;
    out.push_str("\n[demographics]\n");
    out.push_str(&format!("age_mean = {}\n", d.age_mean));
    out.push_str(&format!("age_std = {}\n", d.age_std));
    out.push_str(&format!("female_fraction = {}\n", d.female_fraction));
    out.push_str(&format!("weight_mean_female = {}\n", d.weight_mean_female));
    out.push_str(&format!("weight_std_female = {}\n", d.weight_std_female));
    out.push_str(&format!("weight_mean_male = {}\n", d.weight_mean_male));
    out.push_str(&format!("weight_std_male = {}\n", d.weight_std_male));
    out.push_str(&format!("weight_missing_prob = {}\n", d.weight_missing_prob));
    for f in &cfg.features {
        out.push_str(&format!("\n[feature {}]\n", f.name));
        out.push_str(&format!("kind = {}\n", f.kind.as_str()));
        push_vec(&mut out, "rate", &f.rates);
        push_vec(&mut out, "mean", &f.means);
        push_vec(&mut out, "std", &f.stds);
    }
    out
}

// ---------------------------------------------------------------------------
// Shift spec
// ---------------------------------------------------------------------------

pub fn shift_from_str(label: &str, text: &str) -> Result<ShiftSpec, IoError> {
    let sections = parse_kv(label, text)?;
    let mut spec = ShiftSpec::identity();
    if let Some(s) = find(&sections, "shift") {
        if let Some(v) = s.get("rate_scale") {
            spec.rate_scale = parse_f64(label, s.line, v)?;
        }
        if let Some(v) = s.get("death_scale") {
            spec.death_scale = parse_f64(label, s.line, v)?;
        }
        if let Some(v) = s.get("discharge_scale") {
            spec.discharge_scale = parse_f64(label, s.line, v)?;
        }
        if s.get("initial_dist").is_some() {
            spec.initial_dist_override = Some(s.require_vec(label, "initial_dist")?);
        }
    }
    if let Some(s) = find(&sections, "mean_shift") {
        for (k, v) in &s.entries {
            spec.emission_mean_shift
                .push((k.clone(), parse_f64(label, s.line, v)?));
        }
    }
    Ok(spec)
}

pub fn shift_to_string(spec: &ShiftSpec) -> String {
    let mut out = String::new();
    out.push_str("[shift]\n");
    out.push_str(&format!("rate_scale = {}\n", spec.rate_scale));
    out.push_str(&format!("death_scale = {}\n", spec.death_scale));
    out.push_str(&format!("discharge_scale = {}\n", spec.discharge_scale));
    if let Some(dist) = &spec.initial_dist_override {
        push_vec(&mut out, "initial_dist", dist);
    }
    if !spec.emission_mean_shift.is_empty() {
        out.push_str("\n[mean_shift]\n");
        for (name, off) in &spec.emission_mean_shift {
            out.push_str(&format!("{name} = {off}\n"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Standardization stats
// ---------------------------------------------------------------------------

pub fn stats_to_string(stats: &StandardizationStats, registry: &FeatureRegistry) -> String {
    let mut out = String::new();
    out.push_str("[global]\n");
    out.push_str(&format!("t_mean = {}\n", stats.t_mean));
    out.push_str(&format!("t_std = {}\n", stats.t_std));
    out.push_str(&format!("dt_mean = {}\n", stats.dt_mean));
    out.push_str(&format!("dt_std = {}\n", stats.dt_std));
    for (id, def) in registry.iter() {
        let f = stats.feature(id);
        out.push_str(&format!("\n[feature {}]\n", def.name));
        out.push_str(&format!("v_mean = {}\n", f.v_mean));
        out.push_str(&format!("v_std = {}\n", f.v_std));
        out.push_str(&format!("dv_mean = {}\n", f.dv_mean));
        out.push_str(&format!("dv_std = {}\n", f.dv_std));
        if let Some((lo, hi)) = f.clip {
            out.push_str(&format!("clip = {lo} {hi}\n"));
        }
        if f.flagged {
            out.push_str("flagged = true\n");
        }
    }
    out
}

pub fn stats_from_str(
    label: &str,
    text: &str,
    registry: &FeatureRegistry,
) -> Result<StandardizationStats, IoError> {
    let sections = parse_kv(label, text)?;
    let global = find(&sections, "global")
        .ok_or_else(|| IoError::malformed(label, 1, "missing [global] section"))?;
    let mut stats = StandardizationStats::identity(registry.len());
    stats.set_time_moments(
        global.require_f64(label, "t_mean")?,
        global.require_f64(label, "t_std")?,
    );
    stats.set_delta_time_moments(
        global.require_f64(label, "dt_mean")?,
        global.require_f64(label, "dt_std")?,
    );
    let mut seen = vec![false; registry.len()];
    for s in &sections {
        if let Some(name) = s.name.strip_prefix("feature ") {
            let id = registry.id_by_name(name.trim()).ok_or_else(|| {
                IoError::malformed(label, s.line, format!("unknown feature {name:?}"))
            })?;
            seen[id.idx()] = true;
            let f = stats.feature_mut(id);
            f.v_mean = s.require_f64(label, "v_mean")?;
            f.v_std = s.require_f64(label, "v_std")?;
            f.dv_mean = s.require_f64(label, "dv_mean")?;
            f.dv_std = s.require_f64(label, "dv_std")?;
            if let Some(v) = s.get("clip") {
                let parts: Vec<f64> = v
                    .split_whitespace()
                    .map(|x| parse_f64(label, s.line, x))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 2 {
                    return Err(IoError::malformed(label, s.line, "clip needs two bounds"));
                }
                f.clip = Some((parts[0], parts[1]));
            }
            f.flagged = s.get("flagged") == Some("true");
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(IoError::Invalid(format!(
            "{label}: stats missing feature {:?}",
            registry.name(crate::domain::FeatureId(missing as u16))
        )));
    }
    Ok(stats)
}

// ---------------------------------------------------------------------------
// Fold maps
// ---------------------------------------------------------------------------

const FOLDS_MAGIC: &str = "#tdsmrp-folds v1";

pub fn folds_to_string(folds: &FoldMap) -> String {
    let mut out = String::from(FOLDS_MAGIC);
    out.push('\n');
    for (pid, fold) in folds.assignments() {
        out.push_str(&format!("{pid} {}\n", fold.as_str()));
    }
    out
}

pub fn folds_from_str(label: &str, text: &str) -> Result<FoldMap, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == FOLDS_MAGIC => {}
        _ => return Err(IoError::malformed(label, 1, format!("expected {FOLDS_MAGIC:?}"))),
    }
    let mut assignments = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let (pid, fold) = line
            .split_once(' ')
            .ok_or_else(|| IoError::malformed(label, lineno, "expected `<patient> <fold>`"))?;
        let pid: u64 = pid
            .parse()
            .map_err(|_| IoError::malformed(label, lineno, "bad patient id"))?;
        let fold = Fold::parse(fold)
            .ok_or_else(|| IoError::malformed(label, lineno, format!("bad fold {fold:?}")))?;
        if seen.insert(pid, fold).is_some() {
            return Err(IoError::malformed(
                label,
                lineno,
                format!("patient {pid} assigned twice"),
            ));
        }
        assignments.push((pid, fold));
    }
    Ok(FoldMap::from_assignments(assignments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pipeline::{fit_standardization, split_patients, FitConfig};
    use crate::sim::sample_cohort;

    #[test]
    fn cohort_round_trips_exactly() {
        for cfg in [fixtures::default_cohort(), fixtures::three_state_cohort()] {
            let text = cohort_to_string(&cfg);
            let back = cohort_from_str("test", &text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn shift_round_trips_exactly() {
        let spec = fixtures::external_shift();
        let text = shift_to_string(&spec);
        let back = shift_from_str("test", &text).unwrap();
        assert_eq!(back, spec);
        let bare = shift_from_str("test", "[shift]\n").unwrap();
        assert_eq!(bare, ShiftSpec::identity());
    }

    #[test]
    fn stats_round_trip_preserves_standardization() {
        let cfg = fixtures::three_state_cohort();
        let registry = cfg.registry().unwrap();
        let episodes = sample_cohort(&cfg, 71, 120, 0).unwrap();
        let (stats, _) = fit_standardization(&episodes, &registry, &FitConfig::default()).unwrap();
        let text = stats_to_string(&stats, &registry);
        let back = stats_from_str("test", &text, &registry).unwrap();
        assert_eq!(back.t_mean, stats.t_mean);
        assert_eq!(back.dt_std, stats.dt_std);
        for id in registry.ids() {
            let (a, b) = (stats.feature(id), back.feature(id));
            assert_eq!(a.v_mean, b.v_mean);
            assert_eq!(a.v_std, b.v_std);
            assert_eq!(a.dv_mean, b.dv_mean);
            assert_eq!(a.dv_std, b.dv_std);
            assert_eq!(a.clip, b.clip);
            assert_eq!(a.flagged, b.flagged);
        }
    }

    #[test]
    fn folds_round_trip() {
        let cfg = fixtures::three_state_cohort();
        let episodes = sample_cohort(&cfg, 73, 30, 0).unwrap();
        let folds = split_patients(&episodes, (0.8, 0.1, 0.1), 9).unwrap();
        let text = folds_to_string(&folds);
        let back = folds_from_str("test", &text).unwrap();
        assert_eq!(back.assignments(), folds.assignments());
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(parse_kv("t", "key = 1\n").is_err()); // key before section
        assert!(parse_kv("t", "[open\n").is_err());
        assert!(parse_kv("t", "[s]\nnot a pair\n").is_err());
        assert!(cohort_from_str("t", "[cohort]\nstates = 1\n").is_err());
    }
}
