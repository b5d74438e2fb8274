//! Canonical cohort and shift configurations. The same values ship as
//! config files under `fixtures/` at the workspace root; a CLI test keeps
//! the two in sync.
//!
//! The default cohort has four transient severity states on a ladder:
//!
//! * state 0 — mild: mostly discharges,
//! * state 1 — acute crisis: high short-term death rate but usually
//!   recovers quickly, so its long-run mortality stays moderate,
//! * state 2 — chronic decline: almost no immediate death risk but a poor
//!   long-run prognosis through state 3,
//! * state 3 — critical: high death rate.
//!
//! States 1 and 2 therefore rank differently under short- and long-horizon
//! mortality, which is what separates horizon-specific supervised targets
//! from the bootstrap target.

use crate::domain::FeatureKind;
use crate::sim::{CohortConfig, DemographicsDist, FeatureSpec, ShiftSpec};

fn feature(
    name: &str,
    kind: FeatureKind,
    rates: &[f64],
    means: &[f64],
    stds: &[f64],
) -> FeatureSpec {
    FeatureSpec {
        name: name.into(),
        kind,
        rates: rates.to_vec(),
        means: means.to_vec(),
        stds: stds.to_vec(),
    }
}

fn default_demographics() -> DemographicsDist {
    DemographicsDist {
        age_mean: 64.0,
        age_std: 16.0,
        female_fraction: 0.45,
        weight_mean_female: 74.0,
        weight_std_female: 14.0,
        weight_mean_male: 86.0,
        weight_std_male: 15.0,
        weight_missing_prob: 0.05,
    }
}

/// Builds a generator matrix from sparse transient rows
/// `(from, to, rate)` where `to` may be a transient index, `n` (death) or
/// `n + 1` (discharge).
fn generator(n: usize, entries: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n + 2]; n + 2];
    for &(from, to, rate) in entries {
        m[from][to] = rate;
    }
    m
}

/// The default 4-state fixture: 12 synthetic features (8 lab-like, 3
/// infusion-like, 1 bolus-like), ~30% overall mortality, mean stay around
/// two days. Small enough for desk-scale training runs.
pub fn default_cohort() -> CohortConfig {
    let n = 4;
    let death = n;
    let discharge = n + 1;
    let rate_matrix = generator(
        n,
        &[
            (0, 1, 0.015),
            (0, death, 0.0005),
            (0, discharge, 0.045),
            (1, 0, 0.080),
            (1, 2, 0.008),
            (1, death, 0.020),
            (1, discharge, 0.012),
            (2, 1, 0.008),
            (2, 3, 0.012),
            (2, death, 0.002),
            (3, 2, 0.030),
            (3, death, 0.040),
        ],
    );
    let lab = FeatureKind::Lab;
    let inf = FeatureKind::InfusionRate;
    let bol = FeatureKind::Bolus;
    let features = vec![
        feature("lactate", lab, &[0.14, 0.17, 0.18, 0.21], &[1.0, 3.5, 5.0, 8.0], &[0.5, 1.0, 1.2, 1.8]),
        feature("creatinine", lab, &[0.10, 0.13, 0.14, 0.15], &[0.9, 1.4, 2.6, 3.6], &[0.3, 0.5, 0.8, 1.0]),
        feature("wbc", lab, &[0.08, 0.10, 0.11, 0.13], &[8.0, 13.0, 15.0, 20.0], &[2.0, 3.0, 3.0, 4.0]),
        feature("platelets", lab, &[0.07, 0.08, 0.09, 0.10], &[250.0, 200.0, 140.0, 90.0], &[40.0, 40.0, 35.0, 30.0]),
        feature("bicarbonate", lab, &[0.08, 0.10, 0.11, 0.13], &[24.0, 20.0, 17.0, 13.0], &[2.0, 2.0, 2.0, 2.0]),
        feature("bilirubin", lab, &[0.06, 0.07, 0.08, 0.08], &[0.7, 1.1, 2.2, 3.8], &[0.3, 0.5, 0.8, 1.2]),
        feature("ph", lab, &[0.07, 0.10, 0.11, 0.14], &[7.40, 7.33, 7.28, 7.18], &[0.03, 0.05, 0.05, 0.07]),
        feature("glucose", lab, &[0.07, 0.08, 0.08, 0.10], &[110.0, 150.0, 160.0, 180.0], &[25.0, 40.0, 40.0, 50.0]),
        feature("pressor_rate", inf, &[0.04, 0.12, 0.18, 0.30], &[0.5, 3.0, 8.0, 16.0], &[0.5, 1.5, 3.0, 5.0]),
        feature("sedation_rate", inf, &[0.05, 0.10, 0.15, 0.20], &[10.0, 30.0, 45.0, 60.0], &[5.0, 10.0, 12.0, 15.0]),
        feature("fluid_rate", inf, &[0.06, 0.10, 0.12, 0.16], &[40.0, 80.0, 110.0, 150.0], &[15.0, 25.0, 30.0, 40.0]),
        feature("abx_bolus", bol, &[0.02, 0.05, 0.08, 0.12], &[1.0, 1.0, 1.0, 1.0], &[0.05, 0.05, 0.05, 0.05]),
    ];
    let mut cfg = CohortConfig {
        n_latent: n,
        rate_matrix,
        initial_dist: vec![0.45, 0.25, 0.20, 0.10],
        features,
        demographics: default_demographics(),
        max_duration: 1500.0,
    };
    cfg.normalize_diagonal();
    debug_assert!(cfg.validate().is_ok(), "{:?}", cfg.validate());
    cfg
}

/// A 3-state ladder with sparse observations: cheap enough for six-figure
/// Monte-Carlo cross-checks of the absorption solve.
pub fn three_state_cohort() -> CohortConfig {
    let n = 3;
    let death = n;
    let discharge = n + 1;
    let rate_matrix = generator(
        n,
        &[
            (0, 1, 0.02),
            (0, death, 0.001),
            (0, discharge, 0.05),
            (1, 0, 0.03),
            (1, 2, 0.025),
            (1, death, 0.008),
            (1, discharge, 0.01),
            (2, 1, 0.02),
            (2, death, 0.05),
        ],
    );
    let features = vec![
        feature(
            "marker_a",
            FeatureKind::Lab,
            &[0.08, 0.10, 0.12],
            &[1.0, 2.0, 4.0],
            &[0.4, 0.6, 0.9],
        ),
        feature(
            "marker_b",
            FeatureKind::Lab,
            &[0.06, 0.08, 0.10],
            &[10.0, 8.0, 5.0],
            &[2.0, 2.0, 2.0],
        ),
        feature(
            "support_rate",
            FeatureKind::InfusionRate,
            &[0.03, 0.06, 0.10],
            &[2.0, 6.0, 12.0],
            &[1.0, 2.0, 3.0],
        ),
    ];
    let mut cfg = CohortConfig {
        n_latent: n,
        rate_matrix,
        initial_dist: vec![0.5, 0.3, 0.2],
        features,
        demographics: default_demographics(),
        max_duration: 2000.0,
    };
    cfg.normalize_diagonal();
    debug_assert!(cfg.validate().is_ok(), "{:?}", cfg.validate());
    cfg
}

/// External-validation analog of the default cohort: calibration offsets on
/// several emissions, sparser measurement, lower mortality and a healthier
/// admission mix.
pub fn external_shift() -> ShiftSpec {
    ShiftSpec {
        emission_mean_shift: vec![
            ("lactate".into(), 0.4),
            ("creatinine".into(), 0.2),
            ("wbc".into(), 1.0),
            ("platelets".into(), -15.0),
            ("bicarbonate".into(), -1.0),
            ("ph".into(), -0.01),
            ("glucose".into(), 15.0),
            ("pressor_rate".into(), 1.0),
        ],
        rate_scale: 0.85,
        initial_dist_override: Some(vec![0.55, 0.22, 0.16, 0.07]),
        death_scale: 0.6,
        discharge_scale: 1.15,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{absorption_probability, apply_shift};

    #[test]
    fn fixtures_validate() {
        default_cohort().validate().unwrap();
        three_state_cohort().validate().unwrap();
        apply_shift(&default_cohort(), &external_shift())
            .unwrap()
            .validate()
            .unwrap();
    }

    #[test]
    fn default_cohort_reverses_short_and_long_horizon_risk_between_states_1_and_2() {
        // long-run mortality must order 1 < 2 while the immediate death
        // hazard orders 1 > 2; this separates the supervised horizons
        let cfg = default_cohort();
        let p = absorption_probability(&cfg).unwrap();
        assert!(p[0] < p[1] && p[1] < p[2] && p[2] < p[3], "{p:?}");
        let death = cfg.death_col();
        assert!(cfg.rate_matrix[1][death] > cfg.rate_matrix[2][death]);
    }

    #[test]
    fn shifted_cohort_is_healthier() {
        let cfg = default_cohort();
        let shifted = apply_shift(&cfg, &external_shift()).unwrap();
        let p = absorption_probability(&cfg).unwrap();
        let q = absorption_probability(&shifted).unwrap();
        let mix = |d: &[f64], p: &[f64]| d.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        let internal = mix(&cfg.initial_dist, &p);
        let external = mix(&shifted.initial_dist, &q);
        assert!(
            external < internal,
            "external mortality {external} should sit below internal {internal}"
        );
    }
}
