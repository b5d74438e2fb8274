//! Weighted binary cross-entropy primitives shared by the network backward
//! pass and the training module's public loss function.

/// Predictions are clamped into `[PRED_CLAMP, 1 - PRED_CLAMP]` before the
/// logarithms; a clamped prediction contributes zero gradient.
pub const PRED_CLAMP: f64 = 1e-7;

/// Logit magnitude cap keeping the sigmoid strictly inside (0, 1) in f64.
pub(crate) const LOGIT_CLAMP: f64 = 36.0;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) struct BceTerm {
    pub loss: f64,
    /// d loss / d logit, already zero when the prediction or logit clamped.
    pub dloss_du: f64,
    pub clamped: bool,
}

/// One sample's weighted cross-entropy against a (possibly soft) target:
/// `-(w_pos * t * ln p + w_neg * (1-t) * ln(1-p))`.
///
/// `u` is the pre-clamp logit that produced `pred`; the derivative is taken
/// through the exact forward computation, so flat (clamped) regions yield
/// zero.
pub(crate) fn bce_term(pred: f64, u: f64, target: f64, w_pos: f64, w_neg: f64) -> BceTerm {
    let p = pred.clamp(PRED_CLAMP, 1.0 - PRED_CLAMP);
    let clamped = p != pred || u.abs() >= LOGIT_CLAMP;
    let loss = -(w_pos * target * p.ln() + w_neg * (1.0 - target) * (1.0 - p).ln());
    let dloss_du = if clamped {
        0.0
    } else {
        // d/du of the loss at p = sigmoid(u)
        w_neg * (1.0 - target) * p - w_pos * target * (1.0 - p)
    };
    BceTerm {
        loss,
        dloss_du,
        clamped,
    }
}
