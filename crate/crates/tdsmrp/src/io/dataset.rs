//! Line-delimited dataset files: a header with the format version, feature
//! registry and optional per-state oracle, then one episode per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{parse_f64, IoError};
use crate::domain::{
    Episode, FeatureDef, FeatureId, FeatureKind, FeatureRegistry, LatentState, LatentStep,
    Outcome, RawEvent, Sex,
};

const MAGIC: &str = "#tdsmrp-dataset v1";

/// A dataset file in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub registry: FeatureRegistry,
    pub episodes: Vec<Episode>,
    /// Absorption probability per latent state of the generating cohort.
    pub state_oracle: Option<Vec<f64>>,
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), IoError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "#features {}", dataset.registry.len())?;
    for (id, def) in dataset.registry.iter() {
        writeln!(w, "#feature {} {} {}", id.0, def.kind.as_str(), def.name)?;
    }
    if let Some(oracle) = &dataset.state_oracle {
        write!(w, "#oracle")?;
        for p in oracle {
            write!(w, " {p}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "#episodes {}", dataset.episodes.len())?;
    for ep in &dataset.episodes {
        write_episode(&mut w, ep)?;
    }
    w.flush()?;
    Ok(())
}

fn write_episode<W: Write>(w: &mut W, ep: &Episode) -> Result<(), IoError> {
    let sex = match ep.sex {
        Sex::Female => "F",
        Sex::Male => "M",
    };
    let outcome = match ep.outcome {
        Outcome::Death => "death",
        Outcome::Discharge => "discharge",
    };
    write!(w, "{}|{}|{}|", ep.patient_id, sex, ep.age)?;
    match ep.weight {
        Some(kg) => write!(w, "{kg}")?,
        None => write!(w, "-")?,
    }
    write!(w, "|{}|{}|", outcome, ep.end_time)?;
    for (i, e) in ep.events.iter().enumerate() {
        if i > 0 {
            write!(w, ";")?;
        }
        write!(w, "{}:{}:{}", e.time, e.feature.0, e.value)?;
    }
    write!(w, "|")?;
    match &ep.latent_path {
        None => write!(w, "-")?,
        Some(path) => {
            for (i, step) in path.iter().enumerate() {
                if i > 0 {
                    write!(w, ";")?;
                }
                let s = match step.state {
                    LatentState::Transient(s) => s.to_string(),
                    LatentState::Death => "D".into(),
                    LatentState::Discharged => "C".into(),
                };
                write!(w, "{}:{}", step.enter_time, s)?;
            }
        }
    }
    writeln!(w)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let pname = path.display().to_string();
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| IoError::malformed(&pname, 1, "empty file"))?;
    if first? != MAGIC {
        return Err(IoError::malformed(&pname, 1, format!("expected {MAGIC:?}")));
    }

    let mut defs: Vec<Option<FeatureDef>> = Vec::new();
    let mut n_features = None;
    let mut state_oracle = None;
    let mut n_episodes = None;
    let mut episodes = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#features ") {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| IoError::malformed(&pname, lineno, "bad feature count"))?;
            n_features = Some(n);
            defs = vec![None; n];
        } else if let Some(rest) = line.strip_prefix("#feature ") {
            let mut parts = rest.splitn(3, ' ');
            let id: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| IoError::malformed(&pname, lineno, "bad feature id"))?;
            let kind = parts
                .next()
                .and_then(FeatureKind::parse)
                .ok_or_else(|| IoError::malformed(&pname, lineno, "bad feature kind"))?;
            let name = parts
                .next()
                .ok_or_else(|| IoError::malformed(&pname, lineno, "missing feature name"))?
                .to_string();
            if id >= defs.len() {
                return Err(IoError::malformed(
                    &pname,
                    lineno,
                    format!("feature id {id} outside declared count"),
                ));
            }
            defs[id] = Some(FeatureDef { name, kind });
        } else if let Some(rest) = line.strip_prefix("#oracle") {
            let vals: Result<Vec<f64>, _> = rest
                .split_whitespace()
                .map(|s| parse_f64(&pname, lineno, s))
                .collect();
            state_oracle = Some(vals?);
        } else if let Some(rest) = line.strip_prefix("#episodes ") {
            n_episodes = Some(rest.trim().parse::<usize>().map_err(|_| {
                IoError::malformed(&pname, lineno, "bad episode count")
            })?);
        } else if line.starts_with('#') {
            continue; // forward-compatible headers
        } else {
            episodes.push(parse_episode(&pname, lineno, &line)?);
        }
    }
    let n_features =
        n_features.ok_or_else(|| IoError::malformed(&pname, 0, "missing #features header"))?;
    let defs: Vec<FeatureDef> = defs
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| IoError::malformed(&pname, 0, format!("feature {i} undeclared"))))
        .collect::<Result<_, _>>()?;
    debug_assert_eq!(defs.len(), n_features);
    let registry = FeatureRegistry::new(defs).map_err(|e| IoError::Invalid(e.to_string()))?;
    if let Some(expected) = n_episodes {
        if episodes.len() != expected {
            return Err(IoError::Invalid(format!(
                "{pname}: header promises {expected} episodes, found {}",
                episodes.len()
            )));
        }
    }
    for ep in &episodes {
        ep.validate()
            .map_err(|e| IoError::Invalid(format!("{pname}: patient {}: {e}", ep.patient_id)))?;
        if let Some(e) = ep
            .events
            .iter()
            .find(|e| e.feature.idx() >= registry.len())
        {
            return Err(IoError::Invalid(format!(
                "{pname}: patient {}: feature id {} outside registry",
                ep.patient_id, e.feature.0
            )));
        }
    }
    Ok(Dataset {
        registry,
        episodes,
        state_oracle,
    })
}

fn parse_episode(pname: &str, lineno: usize, line: &str) -> Result<Episode, IoError> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 8 {
        return Err(IoError::malformed(
            pname,
            lineno,
            format!("expected 8 |-separated fields, got {}", fields.len()),
        ));
    }
    let patient_id: u64 = fields[0]
        .parse()
        .map_err(|_| IoError::malformed(pname, lineno, "bad patient id"))?;
    let sex = match fields[1] {
        "F" => Sex::Female,
        "M" => Sex::Male,
        other => {
            return Err(IoError::malformed(pname, lineno, format!("bad sex {other:?}")));
        }
    };
    let age = parse_f64(pname, lineno, fields[2])?;
    let weight = match fields[3] {
        "-" => None,
        s => Some(parse_f64(pname, lineno, s)?),
    };
    let outcome = match fields[4] {
        "death" => Outcome::Death,
        "discharge" => Outcome::Discharge,
        other => {
            return Err(IoError::malformed(
                pname,
                lineno,
                format!("bad outcome {other:?}"),
            ));
        }
    };
    let end_time = parse_f64(pname, lineno, fields[5])?;
    let mut events = Vec::new();
    if !fields[6].is_empty() {
        for item in fields[6].split(';') {
            let mut parts = item.split(':');
            let (t, f, v) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(f), Some(v), None) => (t, f, v),
                _ => {
                    return Err(IoError::malformed(
                        pname,
                        lineno,
                        format!("bad event {item:?}"),
                    ));
                }
            };
            events.push(RawEvent {
                time: parse_f64(pname, lineno, t)?,
                feature: FeatureId(
                    f.parse()
                        .map_err(|_| IoError::malformed(pname, lineno, "bad feature id"))?,
                ),
                value: parse_f64(pname, lineno, v)?,
            });
        }
    }
    let latent_path = match fields[7] {
        "-" => None,
        text => {
            let mut path = Vec::new();
            for item in text.split(';') {
                let (t, s) = item.split_once(':').ok_or_else(|| {
                    IoError::malformed(pname, lineno, format!("bad latent step {item:?}"))
                })?;
                let state = match s {
                    "D" => LatentState::Death,
                    "C" => LatentState::Discharged,
                    idx => LatentState::Transient(idx.parse().map_err(|_| {
                        IoError::malformed(pname, lineno, format!("bad latent state {idx:?}"))
                    })?),
                };
                path.push(LatentStep {
                    enter_time: parse_f64(pname, lineno, t)?,
                    state,
                });
            }
            Some(path)
        }
    };
    Ok(Episode {
        patient_id,
        sex,
        age,
        weight,
        events,
        outcome,
        end_time,
        latent_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sim::{absorption_probability, sample_cohort};

    #[test]
    fn dataset_round_trips_exactly() {
        let cfg = fixtures::three_state_cohort();
        let episodes = sample_cohort(&cfg, 61, 40, 0).unwrap();
        let ds = Dataset {
            registry: cfg.registry().unwrap(),
            episodes,
            state_oracle: Some(absorption_probability(&cfg).unwrap()),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cohort.ds");
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.episodes, ds.episodes);
        assert_eq!(back.state_oracle, ds.state_oracle);
        assert_eq!(back.registry.len(), ds.registry.len());
        for (id, def) in ds.registry.iter() {
            assert_eq!(back.registry.name(id), def.name);
            assert_eq!(back.registry.kind(id), def.kind);
        }
        // byte-identical rewrite
        let path2 = dir.path().join("cohort2.ds");
        write_dataset(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn empty_dataset_has_valid_header() {
        let cfg = fixtures::three_state_cohort();
        let ds = Dataset {
            registry: cfg.registry().unwrap(),
            episodes: vec![],
            state_oracle: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.ds");
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert!(back.episodes.is_empty());
    }

    #[test]
    fn malformed_lines_are_rejected_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ds");
        std::fs::write(
            &path,
            "#tdsmrp-dataset v1\n#features 1\n#feature 0 lab x\n#episodes 1\n1|F|60|70|death\n",
        )
        .unwrap();
        match read_dataset(&path) {
            Err(IoError::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn episode_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.ds");
        std::fs::write(
            &path,
            "#tdsmrp-dataset v1\n#features 1\n#feature 0 lab x\n#episodes 2\n1|F|60|70|death|5|0:0:1|-\n",
        )
        .unwrap();
        assert!(matches!(read_dataset(&path), Err(IoError::Invalid(_))));
    }
}
