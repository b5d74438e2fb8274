//! The six candidate trainers (TD plus five supervised horizons): target
//! construction, class-balanced cross-entropy, the AdamW schedule, epoch
//! selection and multi-seed orchestration.

mod trainer;

pub use trainer::{sweep_delay, train, EpochRecord, SweepResult, SweepRow, TrainData, TrainedSeed};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{mortality_within, Episode};
use crate::eval::{EvalError, ModelKind};
use crate::model::{bce_term, ModelConfig, ModelError, ValueModel};
use crate::pipeline::{AnchorSampling, PipelineError, TransitionNext, TransitionSample};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("seed {seed} diverged at epoch {epoch}: {detail}")]
    Divergence { seed: u64, epoch: usize, detail: String },
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGrad { index: usize },
    #[error("training config invalid: {0}")]
    BadConfig(String),
}

/// Default mortality horizon defining the TD terminal reward, days.
pub const TD_TERMINAL_HORIZON_DAYS: u32 = 28;

/// Everything one training campaign needs to know.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mode: ModelKind,
    /// Class-balanced loss; applies to supervised modes and optionally TD.
    pub balanced: bool,
    /// Next-state delay x, hours.
    pub delay_hours: f64,
    /// Target-network sync rate.
    pub alpha: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    /// Fixed at 1: the value is an undiscounted mortality probability.
    pub gamma: f64,
    pub anchor_sampling: AnchorSampling,
    pub model: ModelConfig,
    /// Overrides for the prescribed schedules (lr = 1/n_params,
    /// wd = 1/(lr * n_batches)); the formulas produce impractically small
    /// steps at desk scale, so runs may pin their own values.
    pub lr_override: Option<f64>,
    pub wd_override: Option<f64>,
}

impl TrainConfig {
    pub fn new(mode: ModelKind, model: ModelConfig) -> Self {
        TrainConfig {
            mode,
            balanced: matches!(mode, ModelKind::Supervised { .. }),
            delay_hours: 24.0,
            alpha: 0.99,
            max_epochs: 10,
            batch_size: 256,
            seeds: (0..5).collect(),
            gamma: 1.0,
            anchor_sampling: AnchorSampling::default(),
            model,
            lr_override: None,
            wd_override: None,
        }
    }

    /// Horizon whose AUROC drives epoch selection: the supervised target
    /// horizon, or the terminal-reward horizon for TD.
    pub fn validation_horizon_days(&self) -> u32 {
        match self.mode {
            ModelKind::Td => TD_TERMINAL_HORIZON_DAYS,
            ModelKind::Supervised { horizon_days } => horizon_days,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.gamma != 1.0 {
            return Err(TrainError::BadConfig(
                "gamma is fixed at 1 for terminal-mortality values".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(TrainError::BadConfig(format!("alpha {} not in [0,1]", self.alpha)));
        }
        if self.max_epochs == 0 || self.batch_size == 0 || self.seeds.is_empty() {
            return Err(TrainError::BadConfig(
                "need at least one epoch, batch element and seed".into(),
            ));
        }
        self.model.validate()?;
        Ok(())
    }
}

/// Prescribed learning rate: one over the trainable parameter count.
pub fn default_learning_rate(n_params: usize) -> f64 {
    1.0 / n_params as f64
}

/// Prescribed decoupled weight decay: `1 / (lr * n_batches_per_epoch)`.
pub fn default_weight_decay(learning_rate: f64, n_batches_per_epoch: usize) -> f64 {
    1.0 / (learning_rate * n_batches_per_epoch as f64)
}

/// AdamW accumulators; lr/wd are fixed for a run.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(n_params: usize, learning_rate: f64, weight_decay: f64) -> Self {
        OptimizerState {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step: 0,
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One AdamW update: adaptive moments with decoupled weight decay,
/// `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta`.
pub fn optimizer_step(
    model: &mut ValueModel,
    grad: &[f64],
    state: &mut OptimizerState,
) -> Result<(), TrainError> {
    let params = model.params_mut();
    if grad.len() != params.len() || grad.len() != state.first_moment.len() {
        return Err(TrainError::BadConfig(format!(
            "gradient length {} does not match {} parameters",
            grad.len(),
            params.len()
        )));
    }
    if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGrad { index });
    }
    state.step += 1;
    let b1 = state.beta1;
    let b2 = state.beta2;
    let bc1 = 1.0 - b1.powi(state.step as i32);
    let bc2 = 1.0 - b2.powi(state.step as i32);
    let lr = state.learning_rate;
    let wd = state.weight_decay;
    for i in 0..params.len() {
        let g = grad[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon) + lr * wd * params[i];
    }
    Ok(())
}

/// Bootstrap target for one transition: the terminal reward, or the target
/// network's value of the next observation window (gamma = 1, no interim
/// rewards, and no gradient flows into the target network).
pub fn td_target(sample: &TransitionSample, target_net: &ValueModel) -> Result<f64, ModelError> {
    match &sample.next {
        TransitionNext::Terminal { reward } => Ok(*reward),
        TransitionNext::Continue { window, .. } => target_net.forward(window),
    }
}

/// Observed mortality label for a state at the given horizon.
pub fn supervised_target(episode: &Episode, anchor_time: f64, horizon_days: u32) -> f64 {
    if mortality_within(episode, anchor_time, horizon_days as f64) {
        1.0
    } else {
        0.0
    }
}

/// Mean weighted binary cross-entropy; `class_weights` is `(w_neg, w_pos)`
/// and soft targets interpolate the weights. Out-of-range predictions are
/// clamped (and logged) rather than rejected.
pub fn weighted_bce(preds: &[f64], targets: &[f64], class_weights: (f64, f64)) -> f64 {
    debug_assert_eq!(preds.len(), targets.len());
    let (w_neg, w_pos) = class_weights;
    let mut clamped = 0usize;
    let mut total = 0.0;
    for (&p, &t) in preds.iter().zip(targets) {
        let term = bce_term(p, 0.0, t, w_pos, w_neg);
        clamped += term.clamped as usize;
        total += term.loss;
    }
    if clamped > 0 {
        log::warn!("{clamped}/{} predictions clamped in weighted_bce", preds.len());
    }
    total / preds.len() as f64
}

/// One line of the training log, emitted per epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLogRecord {
    pub seed: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    pub wall_time_s: f64,
}
