//! The differentiable value function V(window): per-component tuple
//! embeddings summed, convolutional length reduction, a recurrent pass, and
//! a two-layer decoder onto a logistic risk output.
//!
//! Parameters live in one flat `Vec<f64>` whose segment order is fixed (and
//! is the checkpoint order): value/time embedders, feature table, Δ-value
//! and Δ-time embedders with their no-history vectors, conv stages, the
//! recurrent cell, the decoder. Gradients are exact reverse-mode
//! derivatives computed by hand in `net.rs`.

mod loss;
mod net;

pub(crate) use loss::bce_term;
pub use loss::PRED_CLAMP;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::pipeline::ObservationWindow;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("observation window is empty")]
    EmptyWindow,
    #[error("feature id {got} outside embedding vocabulary {vocab}")]
    FeatureOutOfVocab { got: usize, vocab: usize },
    #[error("parameter shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("model config invalid: {0}")]
    BadConfig(String),
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("soft-update rate {0} outside [0, 1]")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvStageConfig {
    pub kernel: usize,
    pub stride: usize,
    pub channels: usize,
}

/// Architecture hyperparameters. Widths are artifact choices; the topology
/// (five embedders summed, conv length reduction, recurrent aggregation,
/// two-layer decoder) is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub feature_vocab: usize,
    pub embed_dim: usize,
    pub conv: Vec<ConvStageConfig>,
    pub recurrent_hidden: usize,
    pub decoder_hidden: usize,
}

impl ModelConfig {
    /// Default widths (32/64/64/64) sized for desk-scale runs.
    pub fn with_defaults(feature_vocab: usize) -> Self {
        ModelConfig {
            feature_vocab,
            embed_dim: 32,
            conv: vec![
                ConvStageConfig {
                    kernel: 4,
                    stride: 2,
                    channels: 64,
                },
                ConvStageConfig {
                    kernel: 4,
                    stride: 2,
                    channels: 64,
                },
            ],
            recurrent_hidden: 64,
            decoder_hidden: 64,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.feature_vocab == 0
            || self.embed_dim == 0
            || self.recurrent_hidden == 0
            || self.decoder_hidden == 0
        {
            return Err(ModelError::BadConfig("all widths must be >= 1".into()));
        }
        for (i, s) in self.conv.iter().enumerate() {
            if s.kernel == 0 || s.stride == 0 || s.channels == 0 {
                return Err(ModelError::BadConfig(format!(
                    "conv stage {i} must have kernel, stride, channels >= 1"
                )));
            }
        }
        Ok(())
    }

    /// Channels feeding the recurrent cell.
    pub(crate) fn recurrent_input(&self) -> usize {
        self.conv.last().map(|s| s.channels).unwrap_or(self.embed_dim)
    }
}

/// One scalar-to-vector embedder: affine, rectifier, affine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScalarEmbedderLayout {
    pub w1: usize, // E
    pub b1: usize, // E
    pub w2: usize, // E*E row-major
    pub b2: usize, // E
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ConvLayout {
    pub weights: usize, // out * (in+1) * k; the +1 channel is the pad mask
    pub bias: usize,    // out
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ParamLayout {
    pub value_emb: ScalarEmbedderLayout,
    pub time_emb: ScalarEmbedderLayout,
    pub feature_table: usize, // F*E row-major
    pub dvalue_emb: ScalarEmbedderLayout,
    pub dvalue_no_history: usize, // E
    pub dtime_emb: ScalarEmbedderLayout,
    pub dtime_no_history: usize, // E
    pub conv: Vec<ConvLayout>,
    pub lstm_w: usize, // 4H*C, gate blocks i,f,g,o
    pub lstm_u: usize, // 4H*H
    pub lstm_b: usize, // 4H
    pub dec_w1: usize, // D*H
    pub dec_b1: usize, // D
    pub dec_w2: usize, // D
    pub dec_b2: usize, // 1
    pub total: usize,
}

fn scalar_embedder_layout(cursor: &mut usize, e: usize) -> ScalarEmbedderLayout {
    let w1 = *cursor;
    let b1 = w1 + e;
    let w2 = b1 + e;
    let b2 = w2 + e * e;
    *cursor = b2 + e;
    ScalarEmbedderLayout { w1, b1, w2, b2 }
}

impl ParamLayout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let e = cfg.embed_dim;
        let mut cur = 0usize;
        let value_emb = scalar_embedder_layout(&mut cur, e);
        let time_emb = scalar_embedder_layout(&mut cur, e);
        let feature_table = cur;
        cur += cfg.feature_vocab * e;
        let dvalue_emb = scalar_embedder_layout(&mut cur, e);
        let dvalue_no_history = cur;
        cur += e;
        let dtime_emb = scalar_embedder_layout(&mut cur, e);
        let dtime_no_history = cur;
        cur += e;
        let mut conv = Vec::with_capacity(cfg.conv.len());
        let mut in_ch = e;
        for s in &cfg.conv {
            let weights = cur;
            cur += s.channels * (in_ch + 1) * s.kernel;
            let bias = cur;
            cur += s.channels;
            conv.push(ConvLayout {
                weights,
                bias,
                in_channels: in_ch,
                out_channels: s.channels,
                kernel: s.kernel,
                stride: s.stride,
            });
            in_ch = s.channels;
        }
        let h = cfg.recurrent_hidden;
        let c = cfg.recurrent_input();
        let lstm_w = cur;
        cur += 4 * h * c;
        let lstm_u = cur;
        cur += 4 * h * h;
        let lstm_b = cur;
        cur += 4 * h;
        let d = cfg.decoder_hidden;
        let dec_w1 = cur;
        cur += d * h;
        let dec_b1 = cur;
        cur += d;
        let dec_w2 = cur;
        cur += d;
        let dec_b2 = cur;
        cur += 1;
        ParamLayout {
            value_emb,
            time_emb,
            feature_table,
            dvalue_emb,
            dvalue_no_history,
            dtime_emb,
            dtime_no_history,
            conv,
            lstm_w,
            lstm_u,
            lstm_b,
            dec_w1,
            dec_b1,
            dec_w2,
            dec_b2,
            total: cur,
        }
    }
}

/// Trainable parameter count, in closed form.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let e = cfg.embed_dim;
    let scalar_emb = e * e + 3 * e;
    let mut n = 4 * scalar_emb + cfg.feature_vocab * e + 2 * e;
    let mut in_ch = e;
    for s in &cfg.conv {
        n += s.channels * (in_ch + 1) * s.kernel + s.channels;
        in_ch = s.channels;
    }
    let h = cfg.recurrent_hidden;
    n += 4 * h * in_ch + 4 * h * h + 4 * h;
    let d = cfg.decoder_hidden;
    n += d * h + d + d + 1;
    n
}

/// The value network: configuration plus the flat parameter vector.
///
/// Immutable during forward/backward; cloning snapshots the parameters, so
/// target networks are plain clones.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueModel {
    config: ModelConfig,
    pub(crate) layout: ParamLayout,
    pub(crate) params: Vec<f64>,
}

impl ValueModel {
    /// Initializes parameters: uniform fan-in scaling for affine maps,
    /// orthogonal recurrence blocks, zero biases except a forget-gate bias
    /// of 1, zero no-history vectors.
    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        let mut params = vec![0.0; layout.total];
        let e = config.embed_dim;

        for emb in [
            layout.value_emb,
            layout.time_emb,
            layout.dvalue_emb,
            layout.dtime_emb,
        ] {
            fill_uniform(&mut params[emb.w1..emb.w1 + e], 1, rng);
            fill_uniform(&mut params[emb.w2..emb.w2 + e * e], e, rng);
        }
        fill_uniform(
            &mut params[layout.feature_table..layout.feature_table + config.feature_vocab * e],
            1,
            rng,
        );
        for cl in &layout.conv {
            let len = cl.out_channels * (cl.in_channels + 1) * cl.kernel;
            fill_uniform(
                &mut params[cl.weights..cl.weights + len],
                (cl.in_channels + 1) * cl.kernel,
                rng,
            );
        }
        let h = config.recurrent_hidden;
        let c = config.recurrent_input();
        fill_uniform(&mut params[layout.lstm_w..layout.lstm_w + 4 * h * c], c, rng);
        for gate in 0..4 {
            let q = orthogonal(h, rng);
            let base = layout.lstm_u + gate * h * h;
            params[base..base + h * h].copy_from_slice(&q);
        }
        // forget-gate bias block
        for v in &mut params[layout.lstm_b + h..layout.lstm_b + 2 * h] {
            *v = 1.0;
        }
        let d = config.decoder_hidden;
        fill_uniform(&mut params[layout.dec_w1..layout.dec_w1 + d * h], h, rng);
        fill_uniform(&mut params[layout.dec_w2..layout.dec_w2 + d], d, rng);

        Ok(ValueModel {
            config,
            layout,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(ValueModel {
            config,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }
}

fn fill_uniform<R: Rng>(slice: &mut [f64], fan_in: usize, rng: &mut R) {
    let a = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in slice.iter_mut() {
        *v = rng.random_range(-a..a);
    }
}

/// Orthogonal n×n matrix (row-major) via modified Gram-Schmidt on a random
/// Gaussian matrix.
fn orthogonal<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut m: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    for col in 0..n {
        for prev in 0..col {
            let mut dot = 0.0;
            for r in 0..n {
                dot += m[r * n + col] * m[r * n + prev];
            }
            for r in 0..n {
                m[r * n + col] -= dot * m[r * n + prev];
            }
        }
        let norm: f64 = (0..n).map(|r| m[r * n + col] * m[r * n + col]).sum::<f64>().sqrt();
        // a random Gaussian matrix is full rank almost surely
        let inv = 1.0 / norm.max(1e-12);
        for r in 0..n {
            m[r * n + col] *= inv;
        }
    }
    m
}

/// `target <- alpha * target + (1 - alpha) * main`, elementwise.
pub fn soft_update(target: &mut ValueModel, main: &ValueModel, alpha: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ModelError::BadAlpha(alpha));
    }
    if target.config != main.config || target.params.len() != main.params.len() {
        return Err(ModelError::ShapeMismatch(
            "target and main networks differ in architecture".into(),
        ));
    }
    for (t, m) in target.params.iter_mut().zip(&main.params) {
        *t = alpha * *t + (1.0 - alpha) * *m;
    }
    Ok(())
}

/// Scores many windows; per-sample results are identical to calling
/// [`ValueModel::forward`] one window at a time.
pub fn batch_forward(
    model: &ValueModel,
    windows: &[ObservationWindow],
) -> Result<Vec<f64>, ModelError> {
    use rayon::prelude::*;
    windows
        .par_iter()
        .map(|w| model.forward(w))
        .collect::<Result<Vec<_>, _>>()
}

#[cfg(test)]
mod tests;
