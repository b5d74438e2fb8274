use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domain::{FeatureId, MeasurementTuple};
use crate::pipeline::{EpisodeRef, ObservationWindow};

fn small_config() -> ModelConfig {
    ModelConfig {
        feature_vocab: 5,
        embed_dim: 8,
        conv: vec![ConvStageConfig {
            kernel: 3,
            stride: 2,
            channels: 10,
        }],
        recurrent_hidden: 10,
        decoder_hidden: 8,
    }
}

fn window_from_tuples(tuples: Vec<MeasurementTuple>) -> ObservationWindow {
    ObservationWindow {
        anchor_time: 0.0,
        tuples,
        anchor_feature: FeatureId(0),
        episode_ref: EpisodeRef {
            patient_id: 0,
            anchor_event_idx: 0,
        },
        true_latent: None,
    }
}

fn random_window(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> ObservationWindow {
    let tuples = (0..len)
        .map(|i| {
            let has_delta = rng.random_range(0.0..1.0) < 0.6 && i > 0;
            MeasurementTuple {
                value: rng.random_range(-2.0..2.0),
                time_offset: rng.random_range(-2.0..0.5),
                feature: FeatureId(rng.random_range(0..vocab as u16)),
                delta_value: if has_delta {
                    rng.random_range(-1.5..1.5)
                } else {
                    0.0
                },
                delta_time: if has_delta {
                    rng.random_range(0.1..2.0)
                } else {
                    0.0
                },
                has_delta,
            }
        })
        .collect();
    window_from_tuples(tuples)
}

/// Init plus a uniform perturbation of every parameter, so biases are
/// nonzero and no rectifier sits exactly on its kink.
fn jittered_model(cfg: ModelConfig, seed: u64) -> ValueModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ValueModel::init(cfg, &mut rng).unwrap();
    for v in m.params_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    m
}

fn central_diff(
    model: &ValueModel,
    windows: &[ObservationWindow],
    targets: &[f64],
    weights: (f64, f64),
    idx: usize,
    h: f64,
) -> f64 {
    let mut m = model.clone();
    m.params_mut()[idx] += h;
    let up = m.batch_loss(windows, targets, weights).unwrap();
    m.params_mut()[idx] -= 2.0 * h;
    let down = m.batch_loss(windows, targets, weights).unwrap();
    (up - down) / (2.0 * h)
}

fn max_rel_err_over(
    model: &ValueModel,
    windows: &[ObservationWindow],
    targets: &[f64],
    weights: (f64, f64),
    range: std::ops::Range<usize>,
) -> f64 {
    let (_, grad) = model.backward_batch(windows, targets, weights).unwrap();
    let mut worst = 0.0_f64;
    for idx in range {
        let fd = central_diff(model, windows, targets, weights, idx, 1e-5);
        let rel = (grad[idx] - fd).abs() / grad[idx].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn embed_zero_tuple_is_zero_with_zero_biases() {
    // At init every bias, the no-history vectors included, is zero; the
    // feature row acts as the lookup's per-feature bias, so zero it too.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = ValueModel::init(small_config(), &mut rng).unwrap();
    let e = m.config().embed_dim;
    let base = m.layout.feature_table;
    for v in &mut m.params_mut()[base..base + e] {
        *v = 0.0;
    }
    let zero = MeasurementTuple {
        value: 0.0,
        time_offset: 0.0,
        feature: FeatureId(0),
        delta_value: 0.0,
        delta_time: 0.0,
        has_delta: false,
    };
    let out = m.embed(&zero).unwrap();
    assert!(out.iter().all(|&v| v == 0.0), "{out:?}");
    let zero_with_history = MeasurementTuple {
        has_delta: true,
        ..zero
    };
    let out = m.embed(&zero_with_history).unwrap();
    assert!(out.iter().all(|&v| v == 0.0), "{out:?}");
}

#[test]
fn embed_is_additive_in_the_feature_component() {
    let m = jittered_model(small_config(), 2);
    let e = m.config().embed_dim;
    let t1 = MeasurementTuple {
        value: 0.7,
        time_offset: -0.3,
        feature: FeatureId(1),
        delta_value: 0.2,
        delta_time: 0.9,
        has_delta: true,
    };
    let t2 = MeasurementTuple {
        feature: FeatureId(3),
        ..t1
    };
    let d: Vec<f64> = m
        .embed(&t1)
        .unwrap()
        .iter()
        .zip(m.embed(&t2).unwrap())
        .map(|(a, b)| a - b)
        .collect();
    let base = m.layout.feature_table;
    for r in 0..e {
        let want = m.params()[base + e + r] - m.params()[base + 3 * e + r];
        assert!((d[r] - want).abs() < 1e-12);
    }
}

#[test]
fn embed_output_dimension_matches_config() {
    let m = jittered_model(small_config(), 3);
    for len in [1, 2, 7] {
        let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
        let w = random_window(&mut rng, 5, len);
        for t in &w.tuples {
            assert_eq!(m.embed(t).unwrap().len(), m.config().embed_dim);
        }
    }
}

#[test]
fn forward_output_strictly_inside_unit_interval() {
    let m = jittered_model(small_config(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for len in [1, 2, 3, 5, 20, 60] {
        let w = random_window(&mut rng, 5, len);
        let y = m.forward(&w).unwrap();
        assert!(y > 0.0 && y < 1.0, "y={y} at len={len}");
    }
}

#[test]
fn forward_handles_length_one_window() {
    // kernel 3 > length 1: the left pad covers the gap
    let m = jittered_model(small_config(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = random_window(&mut rng, 5, 1);
    m.forward(&w).unwrap();
}

#[test]
fn forward_rejects_empty_window() {
    let m = jittered_model(small_config(), 8);
    let w = window_from_tuples(vec![]);
    assert!(matches!(m.forward(&w), Err(ModelError::EmptyWindow)));
}

#[test]
fn forward_is_deterministic() {
    let m = jittered_model(small_config(), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let w = random_window(&mut rng, 5, 17);
    assert_eq!(m.forward(&w).unwrap(), m.forward(&w).unwrap());
}

#[test]
fn batched_scoring_matches_single_scoring() {
    let m = jittered_model(small_config(), 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let windows: Vec<ObservationWindow> = (0..32)
        .map(|i| random_window(&mut rng, 5, 1 + (i % 9)))
        .collect();
    let batched = batch_forward(&m, &windows).unwrap();
    for (w, &b) in windows.iter().zip(&batched) {
        let single = m.forward(w).unwrap();
        assert!((single - b).abs() <= 1e-12);
    }
}

#[test]
fn gradient_matches_finite_differences_per_layer() {
    let cfg = small_config();
    let m = jittered_model(cfg, 13);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let windows: Vec<ObservationWindow> =
        (0..6).map(|i| random_window(&mut rng, 5, 1 + i * 4)).collect();
    let targets: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
    let weights = (0.4, 0.6);
    let lay = &m.layout;
    let e = m.config().embed_dim;
    let segments: Vec<(&str, std::ops::Range<usize>)> = vec![
        ("value embedder", lay.value_emb.w1..lay.value_emb.b2 + e),
        ("time embedder", lay.time_emb.w1..lay.time_emb.b2 + e),
        (
            "feature table",
            lay.feature_table..lay.feature_table + m.config().feature_vocab * e,
        ),
        ("delta-value embedder", lay.dvalue_emb.w1..lay.dvalue_emb.b2 + e),
        ("no-history vectors", lay.dvalue_no_history..lay.dvalue_no_history + e),
        ("conv stage", lay.conv[0].weights..lay.conv[0].bias + lay.conv[0].out_channels),
        ("recurrent cell", lay.lstm_w..lay.lstm_b + 4 * m.config().recurrent_hidden),
        ("decoder", lay.dec_w1..lay.dec_b2 + 1),
    ];
    for (name, range) in segments {
        let worst = max_rel_err_over(&m, &windows, &targets, weights, range);
        assert!(worst < 1e-4, "{name}: max rel err {worst}");
    }
}

#[test]
fn gradient_matches_finite_differences_without_conv() {
    let cfg = ModelConfig {
        feature_vocab: 4,
        embed_dim: 6,
        conv: vec![],
        recurrent_hidden: 7,
        decoder_hidden: 5,
    };
    let m = jittered_model(cfg, 15);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let windows: Vec<ObservationWindow> =
        (0..4).map(|i| random_window(&mut rng, 4, 1 + i * 3)).collect();
    let targets = vec![1.0, 0.0, 0.3, 0.8];
    let worst = max_rel_err_over(&m, &windows, &targets, (1.0, 1.0), 0..m.n_params());
    assert!(worst < 1e-4, "max rel err {worst}");
}

#[test]
fn gradient_matches_finite_differences_with_masked_positions() {
    // kernel 2, stride 4 on short windows forces all-pad outputs that the
    // recurrent pass must skip
    let cfg = ModelConfig {
        feature_vocab: 4,
        embed_dim: 5,
        conv: vec![ConvStageConfig {
            kernel: 2,
            stride: 4,
            channels: 6,
        }],
        recurrent_hidden: 6,
        decoder_hidden: 4,
    };
    let m = jittered_model(cfg, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let windows: Vec<ObservationWindow> =
        (0..5).map(|i| random_window(&mut rng, 4, 3 + i)).collect();
    let targets = vec![0.0, 1.0, 0.5, 0.2, 0.9];
    let worst = max_rel_err_over(&m, &windows, &targets, (0.7, 0.3), 0..m.n_params());
    assert!(worst < 1e-4, "max rel err {worst}");
}

#[test]
fn zero_weight_batch_has_zero_gradient_and_loss() {
    let m = jittered_model(small_config(), 19);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let windows: Vec<ObservationWindow> = (0..3).map(|_| random_window(&mut rng, 5, 8)).collect();
    let (loss, grad) = m
        .backward_batch(&windows, &[1.0, 0.0, 0.5], (0.0, 0.0))
        .unwrap();
    assert_eq!(loss, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));
}

#[test]
fn loss_at_even_odds_is_ln_two() {
    let mut m = jittered_model(small_config(), 21);
    let lay = m.layout.clone();
    let d = m.config().decoder_hidden;
    for v in &mut m.params_mut()[lay.dec_w2..lay.dec_w2 + d] {
        *v = 0.0;
    }
    m.params_mut()[lay.dec_b2] = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let w = random_window(&mut rng, 5, 6);
    assert_eq!(m.forward(&w).unwrap(), 0.5);
    let loss = m.batch_loss(&[w], &[1.0], (1.0, 1.0)).unwrap();
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn param_count_formula_matches_layout_for_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let n_conv = rng.random_range(0..3);
        let cfg = ModelConfig {
            feature_vocab: rng.random_range(1..20),
            embed_dim: rng.random_range(1..12),
            conv: (0..n_conv)
                .map(|_| ConvStageConfig {
                    kernel: rng.random_range(1..5),
                    stride: rng.random_range(1..4),
                    channels: rng.random_range(1..16),
                })
                .collect(),
            recurrent_hidden: rng.random_range(1..16),
            decoder_hidden: rng.random_range(1..16),
        };
        let m = ValueModel::init(cfg.clone(), &mut rng).unwrap();
        assert_eq!(param_count(&cfg), m.n_params(), "config {cfg:?}");
    }
}

#[test]
fn soft_update_examples() {
    let cfg = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut target = ValueModel::init(cfg.clone(), &mut rng).unwrap();
    let mut main = target.clone();
    for v in target.params_mut() {
        *v = 0.0;
    }
    for v in main.params_mut() {
        *v = 1.0;
    }
    let snapshot = target.clone();

    let mut t = snapshot.clone();
    soft_update(&mut t, &main, 0.99).unwrap();
    assert!(t.params().iter().all(|&v| (v - 0.01).abs() < 1e-12));

    let mut t = snapshot.clone();
    soft_update(&mut t, &main, 1.0).unwrap();
    assert_eq!(t.params(), snapshot.params());

    let mut t = snapshot.clone();
    soft_update(&mut t, &main, 0.0).unwrap();
    assert_eq!(t.params(), main.params());

    let other = ValueModel::init(
        ModelConfig {
            embed_dim: 4,
            ..small_config()
        },
        &mut rng,
    )
    .unwrap();
    let mut t = snapshot.clone();
    assert!(matches!(
        soft_update(&mut t, &other, 0.5),
        Err(ModelError::ShapeMismatch(_))
    ));
    assert!(matches!(
        soft_update(&mut t, &main, 1.5),
        Err(ModelError::BadAlpha(_))
    ));
}

#[test]
fn orthogonal_init_blocks_are_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let h = 10;
    let q = super::orthogonal(h, &mut rng);
    for a in 0..h {
        for b in 0..h {
            let dot: f64 = (0..h).map(|r| q[r * h + a] * q[r * h + b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-9, "cols {a},{b}: {dot}");
        }
    }
}

#[test]
fn rejects_feature_outside_vocab() {
    let m = jittered_model(small_config(), 26);
    let w = window_from_tuples(vec![MeasurementTuple {
        value: 0.0,
        time_offset: 0.0,
        feature: FeatureId(99),
        delta_value: 0.0,
        delta_time: 0.0,
        has_delta: false,
    }]);
    assert!(matches!(
        m.forward(&w),
        Err(ModelError::FeatureOutOfVocab { .. })
    ));
}
