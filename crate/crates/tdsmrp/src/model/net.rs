//! Forward and exact reverse-mode passes through the value network.
//!
//! Layout conventions: sequences are channel-major (`[channel * len + pos]`).
//! Each conv stage consumes its input left-padded to stride alignment with
//! an extra mask channel flagging the synthetic positions (1 = pad); an
//! output position whose whole receptive field is padding is masked out of
//! the recurrent pass. Rectifier derivatives use the `pre > 0` convention.

use rayon::prelude::*;

use super::loss::{bce_term, sigmoid, LOGIT_CLAMP};
use super::{ModelError, ScalarEmbedderLayout, ValueModel};
use crate::domain::MeasurementTuple;
use crate::pipeline::ObservationWindow;

/// Fixed gradient-accumulation fan-out; keeps batch reductions independent
/// of the worker-thread count so training is bit-reproducible.
const GRAD_CHUNKS: usize = 8;

struct ConvCache {
    /// Augmented padded input actually convolved: `(in+1) * lp`.
    aug: Vec<f64>,
    lp: usize,
    pad: usize,
    /// Pre-activations, `out * l_out`.
    pre: Vec<f64>,
    l_out: usize,
}

struct LstmCache {
    /// Positions of the conv output consumed, ascending.
    steps: Vec<usize>,
    /// Post-activation gates per step: i, f, g, o blocks of H.
    gates: Vec<f64>,
    cs: Vec<f64>,
    tanh_cs: Vec<f64>,
    hs: Vec<f64>,
}

struct SampleCache {
    len: usize,
    /// Summed embeddings, `E * len`.
    x0: Vec<f64>,
    /// Scalar-embedder pre-activations, each `E * len`.
    pre_v: Vec<f64>,
    pre_t: Vec<f64>,
    pre_dv: Vec<f64>,
    pre_dt: Vec<f64>,
    conv: Vec<ConvCache>,
    lstm: LstmCache,
    dec_z_pre: Vec<f64>,
    /// Pre-clamp logit.
    u: f64,
    /// Risk output.
    y: f64,
}

fn pad_for(l_in: usize, kernel: usize, stride: usize) -> usize {
    let base = kernel.saturating_sub(l_in);
    let rem = (l_in + base - kernel) % stride;
    if rem == 0 {
        base
    } else {
        base + stride - rem
    }
}

impl ValueModel {
    /// Risk prediction in (0, 1) for one observation window.
    pub fn forward(&self, window: &ObservationWindow) -> Result<f64, ModelError> {
        Ok(self.forward_cached(window)?.y)
    }

    /// Embeds one tuple: the five component embeddings summed. Tuples
    /// without history substitute the learned no-history vectors for the
    /// Δ embedders.
    pub fn embed(&self, tuple: &MeasurementTuple) -> Result<Vec<f64>, ModelError> {
        let e = self.config.embed_dim;
        let lay = &self.layout;
        let f = tuple.feature.idx();
        if f >= self.config.feature_vocab {
            return Err(ModelError::FeatureOutOfVocab {
                got: f,
                vocab: self.config.feature_vocab,
            });
        }
        let mut out = vec![0.0; e];
        let mut scratch = vec![0.0; e];
        self.scalar_embed(&lay.value_emb, tuple.value, &mut scratch, &mut out, 1);
        self.scalar_embed(&lay.time_emb, tuple.time_offset, &mut scratch, &mut out, 1);
        let row = lay.feature_table + f * e;
        for r in 0..e {
            out[r] += self.params[row + r];
        }
        if tuple.has_delta {
            self.scalar_embed(&lay.dvalue_emb, tuple.delta_value, &mut scratch, &mut out, 1);
            self.scalar_embed(&lay.dtime_emb, tuple.delta_time, &mut scratch, &mut out, 1);
        } else {
            for r in 0..e {
                out[r] +=
                    self.params[lay.dvalue_no_history + r] + self.params[lay.dtime_no_history + r];
            }
        }
        Ok(out)
    }

    fn scalar_embed(
        &self,
        emb: &ScalarEmbedderLayout,
        x: f64,
        pre_out: &mut [f64],
        acc: &mut [f64],
        stride: usize,
    ) {
        let e = self.config.embed_dim;
        let p = &self.params;
        for c in 0..e {
            pre_out[c] = p[emb.w1 + c] * x + p[emb.b1 + c];
        }
        for r in 0..e {
            let row = emb.w2 + r * e;
            let mut acc_r = p[emb.b2 + r];
            for c in 0..e {
                let h = pre_out[c].max(0.0);
                acc_r += p[row + c] * h;
            }
            acc[r * stride] += acc_r;
        }
    }

    fn forward_cached(&self, window: &ObservationWindow) -> Result<SampleCache, ModelError> {
        let len = window.tuples.len();
        if len == 0 {
            return Err(ModelError::EmptyWindow);
        }
        let e = self.config.embed_dim;
        let p = &self.params;
        let lay = &self.layout;

        let mut x0 = vec![0.0; e * len];
        let mut pre_v = vec![0.0; e * len];
        let mut pre_t = vec![0.0; e * len];
        let mut pre_dv = vec![0.0; e * len];
        let mut pre_dt = vec![0.0; e * len];
        let mut scratch = vec![0.0; e];
        for (n, t) in window.tuples.iter().enumerate() {
            let f = t.feature.idx();
            if f >= self.config.feature_vocab {
                return Err(ModelError::FeatureOutOfVocab {
                    got: f,
                    vocab: self.config.feature_vocab,
                });
            }
            // embeddings accumulate into column n of x0 (stride = len)
            let col = &mut x0[n..];
            self.scalar_embed(&lay.value_emb, t.value, &mut scratch, col, len);
            pre_v[n * e..(n + 1) * e].copy_from_slice(&scratch);
            self.scalar_embed(&lay.time_emb, t.time_offset, &mut scratch, col, len);
            pre_t[n * e..(n + 1) * e].copy_from_slice(&scratch);
            let row = lay.feature_table + f * e;
            for r in 0..e {
                col[r * len] += p[row + r];
            }
            if t.has_delta {
                self.scalar_embed(&lay.dvalue_emb, t.delta_value, &mut scratch, col, len);
                pre_dv[n * e..(n + 1) * e].copy_from_slice(&scratch);
                self.scalar_embed(&lay.dtime_emb, t.delta_time, &mut scratch, col, len);
                pre_dt[n * e..(n + 1) * e].copy_from_slice(&scratch);
            } else {
                for r in 0..e {
                    col[r * len] +=
                        p[lay.dvalue_no_history + r] + p[lay.dtime_no_history + r];
                }
            }
        }

        // Conv stages; `data`/`mask` always hold the current sequence.
        let mut data = x0.clone();
        let mut mask = vec![0.0; len];
        let mut cur_len = len;
        let mut conv_caches = Vec::with_capacity(lay.conv.len());
        for cl in &lay.conv {
            let ci = cl.in_channels;
            let ci1 = ci + 1;
            let k = cl.kernel;
            let s = cl.stride;
            let pad = pad_for(cur_len, k, s);
            let lp = cur_len + pad;
            let l_out = (lp - k) / s + 1;
            let mut aug = vec![0.0; ci1 * lp];
            for c in 0..ci {
                aug[c * lp + pad..(c + 1) * lp]
                    .copy_from_slice(&data[c * cur_len..(c + 1) * cur_len]);
            }
            {
                let mrow = &mut aug[ci * lp..];
                mrow[..pad].fill(1.0);
                mrow[pad..lp].copy_from_slice(&mask[..cur_len]);
            }
            let mut pre = vec![0.0; cl.out_channels * l_out];
            for o in 0..cl.out_channels {
                let bias = p[cl.bias + o];
                for j in 0..l_out {
                    let start = j * s;
                    let mut acc = bias;
                    for i in 0..ci1 {
                        let wbase = cl.weights + (o * ci1 + i) * k;
                        let abase = i * lp + start;
                        for tau in 0..k {
                            acc += p[wbase + tau] * aug[abase + tau];
                        }
                    }
                    pre[o * l_out + j] = acc;
                }
            }
            let mut mask_out = vec![0.0; l_out];
            let mrow = &aug[ci * lp..];
            for (j, m) in mask_out.iter_mut().enumerate() {
                let start = j * s;
                if mrow[start..start + k].iter().all(|&v| v == 1.0) {
                    *m = 1.0;
                }
            }
            data = pre.iter().map(|&z| z.max(0.0)).collect();
            mask = mask_out;
            cur_len = l_out;
            conv_caches.push(ConvCache {
                aug,
                lp,
                pad,
                pre,
                l_out,
            });
        }

        // Recurrent pass over unmasked positions, oldest first.
        let h_dim = self.config.recurrent_hidden;
        let c_dim = self.config.recurrent_input();
        let steps: Vec<usize> = (0..cur_len).filter(|&j| mask[j] == 0.0).collect();
        debug_assert!(
            !steps.is_empty(),
            "left padding always leaves the newest position unmasked"
        );
        let n_steps = steps.len();
        let mut gates = vec![0.0; n_steps * 4 * h_dim];
        let mut cs = vec![0.0; n_steps * h_dim];
        let mut tanh_cs = vec![0.0; n_steps * h_dim];
        let mut hs = vec![0.0; n_steps * h_dim];
        let mut h_prev = vec![0.0; h_dim];
        let mut c_prev = vec![0.0; h_dim];
        let mut xbuf = vec![0.0; c_dim];
        for (idx, &j) in steps.iter().enumerate() {
            for c in 0..c_dim {
                xbuf[c] = data[c * cur_len + j];
            }
            let g4 = &mut gates[idx * 4 * h_dim..(idx + 1) * 4 * h_dim];
            for r in 0..4 * h_dim {
                let mut acc = p[lay.lstm_b + r];
                let wrow = lay.lstm_w + r * c_dim;
                for c in 0..c_dim {
                    acc += p[wrow + c] * xbuf[c];
                }
                let urow = lay.lstm_u + r * h_dim;
                for hh in 0..h_dim {
                    acc += p[urow + hh] * h_prev[hh];
                }
                g4[r] = acc;
            }
            for r in 0..h_dim {
                let i_g = sigmoid(g4[r]);
                let f_g = sigmoid(g4[h_dim + r]);
                let g_g = g4[2 * h_dim + r].tanh();
                let o_g = sigmoid(g4[3 * h_dim + r]);
                g4[r] = i_g;
                g4[h_dim + r] = f_g;
                g4[2 * h_dim + r] = g_g;
                g4[3 * h_dim + r] = o_g;
                let c_new = f_g * c_prev[r] + i_g * g_g;
                let tc = c_new.tanh();
                cs[idx * h_dim + r] = c_new;
                tanh_cs[idx * h_dim + r] = tc;
                hs[idx * h_dim + r] = o_g * tc;
            }
            c_prev.copy_from_slice(&cs[idx * h_dim..(idx + 1) * h_dim]);
            h_prev.copy_from_slice(&hs[idx * h_dim..(idx + 1) * h_dim]);
        }

        // Decoder.
        let d_dim = self.config.decoder_hidden;
        let mut dec_z_pre = vec![0.0; d_dim];
        for d in 0..d_dim {
            let mut acc = p[lay.dec_b1 + d];
            let row = lay.dec_w1 + d * h_dim;
            for hh in 0..h_dim {
                acc += p[row + hh] * h_prev[hh];
            }
            dec_z_pre[d] = acc;
        }
        let mut u = p[lay.dec_b2];
        for d in 0..d_dim {
            u += p[lay.dec_w2 + d] * dec_z_pre[d].max(0.0);
        }
        let y = sigmoid(u.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));

        Ok(SampleCache {
            len,
            x0,
            pre_v,
            pre_t,
            pre_dv,
            pre_dt,
            conv: conv_caches,
            lstm: LstmCache {
                steps,
                gates,
                cs,
                tanh_cs,
                hs,
            },
            dec_z_pre,
            u,
            y,
        })
    }

    fn scalar_embed_backward(
        &self,
        emb: &ScalarEmbedderLayout,
        x: f64,
        pre: &[f64],
        dout: &[f64],
        grad: &mut [f64],
    ) {
        let e = self.config.embed_dim;
        let p = &self.params;
        for r in 0..e {
            grad[emb.b2 + r] += dout[r];
        }
        for c in 0..e {
            let h = pre[c].max(0.0);
            let mut dh = 0.0;
            for r in 0..e {
                grad[emb.w2 + r * e + c] += dout[r] * h;
                dh += p[emb.w2 + r * e + c] * dout[r];
            }
            if pre[c] > 0.0 {
                grad[emb.w1 + c] += dh * x;
                grad[emb.b1 + c] += dh;
            }
        }
    }

    /// Accumulates `dloss_du * d u / d theta` for one sample into `grad`.
    fn backward_sample(
        &self,
        window: &ObservationWindow,
        cache: &SampleCache,
        dloss_du: f64,
        grad: &mut [f64],
    ) {
        if dloss_du == 0.0 {
            return;
        }
        let p = &self.params;
        let lay = &self.layout;
        let e = self.config.embed_dim;
        let h_dim = self.config.recurrent_hidden;
        let c_dim = self.config.recurrent_input();
        let d_dim = self.config.decoder_hidden;

        // Decoder.
        grad[lay.dec_b2] += dloss_du;
        let mut dzpre = vec![0.0; d_dim];
        for d in 0..d_dim {
            let z = cache.dec_z_pre[d].max(0.0);
            grad[lay.dec_w2 + d] += dloss_du * z;
            if cache.dec_z_pre[d] > 0.0 {
                dzpre[d] = dloss_du * p[lay.dec_w2 + d];
            }
        }
        let n_steps = cache.lstm.steps.len();
        let h_final = &cache.lstm.hs[(n_steps - 1) * h_dim..n_steps * h_dim];
        let mut dh = vec![0.0; h_dim];
        for d in 0..d_dim {
            if dzpre[d] == 0.0 {
                continue;
            }
            grad[lay.dec_b1 + d] += dzpre[d];
            let row = lay.dec_w1 + d * h_dim;
            for hh in 0..h_dim {
                grad[row + hh] += dzpre[d] * h_final[hh];
                dh[hh] += p[row + hh] * dzpre[d];
            }
        }

        // Recurrent pass, reversed. dY collects gradients w.r.t. the conv
        // output (post-rectifier), channel-major.
        let (last_pre, last_lout) = match cache.conv.last() {
            Some(cc) => (Some(&cc.pre), cc.l_out),
            None => (None, cache.len),
        };
        let mut d_y = vec![0.0; c_dim * last_lout];
        let mut dc = vec![0.0; h_dim];
        let mut dpre = vec![0.0; 4 * h_dim];
        let mut xbuf = vec![0.0; c_dim];
        for idx in (0..n_steps).rev() {
            let j = cache.lstm.steps[idx];
            let g4 = &cache.lstm.gates[idx * 4 * h_dim..(idx + 1) * 4 * h_dim];
            for r in 0..h_dim {
                let i_g = g4[r];
                let f_g = g4[h_dim + r];
                let g_g = g4[2 * h_dim + r];
                let o_g = g4[3 * h_dim + r];
                let tc = cache.lstm.tanh_cs[idx * h_dim + r];
                let c_prev = if idx > 0 {
                    cache.lstm.cs[(idx - 1) * h_dim + r]
                } else {
                    0.0
                };
                let d_o = dh[r] * tc;
                let dcr = dc[r] + dh[r] * o_g * (1.0 - tc * tc);
                let d_i = dcr * g_g;
                let d_f = dcr * c_prev;
                let d_g = dcr * i_g;
                dpre[r] = d_i * i_g * (1.0 - i_g);
                dpre[h_dim + r] = d_f * f_g * (1.0 - f_g);
                dpre[2 * h_dim + r] = d_g * (1.0 - g_g * g_g);
                dpre[3 * h_dim + r] = d_o * o_g * (1.0 - o_g);
                dc[r] = dcr * f_g;
            }
            match last_pre {
                Some(pre) => {
                    for c in 0..c_dim {
                        xbuf[c] = pre[c * last_lout + j].max(0.0);
                    }
                }
                None => {
                    for c in 0..c_dim {
                        xbuf[c] = cache.x0[c * cache.len + j];
                    }
                }
            }
            let h_prev_slice = if idx > 0 {
                Some(&cache.lstm.hs[(idx - 1) * h_dim..idx * h_dim])
            } else {
                None
            };
            dh.fill(0.0);
            for r in 0..4 * h_dim {
                let dp = dpre[r];
                if dp == 0.0 {
                    continue;
                }
                grad[lay.lstm_b + r] += dp;
                let wrow = lay.lstm_w + r * c_dim;
                for c in 0..c_dim {
                    grad[wrow + c] += dp * xbuf[c];
                    d_y[c * last_lout + j] += p[wrow + c] * dp;
                }
                let urow = lay.lstm_u + r * h_dim;
                if let Some(hp) = h_prev_slice {
                    for hh in 0..h_dim {
                        grad[urow + hh] += dp * hp[hh];
                        dh[hh] += p[urow + hh] * dp;
                    }
                } else {
                    // h_prev is zero at the first step: only dh would
                    // accumulate, and it is discarded afterwards.
                }
            }
        }

        // Conv stages, reversed. `d_out` holds gradients w.r.t. the
        // post-rectifier output of the stage being processed.
        let mut d_out = d_y;
        for (si, cl) in lay.conv.iter().enumerate().rev() {
            let cc = &cache.conv[si];
            let ci = cl.in_channels;
            let ci1 = ci + 1;
            let k = cl.kernel;
            let s = cl.stride;
            let mut d_aug = vec![0.0; ci * cc.lp]; // mask-row grads dropped
            for o in 0..cl.out_channels {
                for j in 0..cc.l_out {
                    let z = cc.pre[o * cc.l_out + j];
                    if z <= 0.0 {
                        continue;
                    }
                    let dz = d_out[o * cc.l_out + j];
                    if dz == 0.0 {
                        continue;
                    }
                    grad[cl.bias + o] += dz;
                    let start = j * s;
                    for i in 0..ci1 {
                        let wbase = cl.weights + (o * ci1 + i) * k;
                        let abase = i * cc.lp + start;
                        if i < ci {
                            for tau in 0..k {
                                grad[wbase + tau] += dz * cc.aug[abase + tau];
                                d_aug[abase + tau] += dz * p[wbase + tau];
                            }
                        } else {
                            for tau in 0..k {
                                grad[wbase + tau] += dz * cc.aug[abase + tau];
                            }
                        }
                    }
                }
            }
            // strip padding; the result is the gradient w.r.t. this stage's
            // input, i.e. the previous stage's post-rectifier output.
            let l_in = cc.lp - cc.pad;
            let mut d_in = vec![0.0; ci * l_in];
            for c in 0..ci {
                d_in[c * l_in..(c + 1) * l_in]
                    .copy_from_slice(&d_aug[c * cc.lp + cc.pad..(c + 1) * cc.lp]);
            }
            if si > 0 {
                let prev = &cache.conv[si - 1];
                debug_assert_eq!(l_in, prev.l_out);
                for (v, z) in d_in.iter_mut().zip(prev.pre.iter()) {
                    if *z <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            d_out = d_in;
        }

        // Embedders: d_out is now the gradient w.r.t. x0 (E x len).
        let d_x0 = d_out;
        let len = cache.len;
        let mut dcol = vec![0.0; e];
        for (n, t) in window.tuples.iter().enumerate() {
            let mut any = false;
            for r in 0..e {
                dcol[r] = d_x0[r * len + n];
                any |= dcol[r] != 0.0;
            }
            if !any {
                continue;
            }
            self.scalar_embed_backward(
                &lay.value_emb,
                t.value,
                &cache.pre_v[n * e..(n + 1) * e],
                &dcol,
                grad,
            );
            self.scalar_embed_backward(
                &lay.time_emb,
                t.time_offset,
                &cache.pre_t[n * e..(n + 1) * e],
                &dcol,
                grad,
            );
            let row = lay.feature_table + t.feature.idx() * e;
            for r in 0..e {
                grad[row + r] += dcol[r];
            }
            if t.has_delta {
                self.scalar_embed_backward(
                    &lay.dvalue_emb,
                    t.delta_value,
                    &cache.pre_dv[n * e..(n + 1) * e],
                    &dcol,
                    grad,
                );
                self.scalar_embed_backward(
                    &lay.dtime_emb,
                    t.delta_time,
                    &cache.pre_dt[n * e..(n + 1) * e],
                    &dcol,
                    grad,
                );
            } else {
                for r in 0..e {
                    grad[lay.dvalue_no_history + r] += dcol[r];
                    grad[lay.dtime_no_history + r] += dcol[r];
                }
            }
        }
    }

    /// Mean weighted binary cross-entropy over the batch and its exact
    /// gradient with respect to every parameter.
    ///
    /// `class_weights` is `(w_neg, w_pos)`; soft targets interpolate the
    /// weights. The gradient reduction uses a fixed chunk fan-out, so the
    /// result does not depend on the number of worker threads.
    pub fn backward_batch(
        &self,
        windows: &[ObservationWindow],
        targets: &[f64],
        class_weights: (f64, f64),
    ) -> Result<(f64, Vec<f64>), ModelError> {
        if windows.is_empty() || windows.len() != targets.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "batch of {} windows with {} targets",
                windows.len(),
                targets.len()
            )));
        }
        let (w_neg, w_pos) = class_weights;
        let n = windows.len();
        let inv_n = 1.0 / n as f64;
        let chunk = n.div_ceil(GRAD_CHUNKS);
        let pieces: Vec<Result<(f64, usize, Vec<f64>), ModelError>> = windows
            .par_chunks(chunk)
            .zip(targets.par_chunks(chunk))
            .map(|(ws, ts)| {
                let mut grad = vec![0.0; self.params.len()];
                let mut loss = 0.0;
                let mut clamped = 0usize;
                for (w, &t) in ws.iter().zip(ts) {
                    let cache = self.forward_cached(w)?;
                    let term = bce_term(cache.y, cache.u, t, w_pos, w_neg);
                    if !term.loss.is_finite() {
                        return Err(ModelError::NonFiniteLoss(format!(
                            "sample for patient {} anchor {} produced pred={} target={t}",
                            w.episode_ref.patient_id, w.episode_ref.anchor_event_idx, cache.y
                        )));
                    }
                    clamped += term.clamped as usize;
                    loss += term.loss;
                    self.backward_sample(w, &cache, term.dloss_du * inv_n, &mut grad);
                }
                Ok((loss, clamped, grad))
            })
            .collect();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut clamped = 0usize;
        for piece in pieces {
            let (l, c, g) = piece?;
            loss += l;
            clamped += c;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        loss *= inv_n;
        if clamped > 0 {
            log::warn!("{clamped}/{n} predictions hit the probability clamp this batch");
        }
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss(format!(
                "batch of {n} windows, mean loss non-finite"
            )));
        }
        Ok((loss, grad))
    }
}

impl ValueModel {
    /// Mean weighted cross-entropy of the batch without gradients; the same
    /// quantity [`ValueModel::backward_batch`] reports, so finite-difference
    /// oracles can differentiate it directly.
    pub fn batch_loss(
        &self,
        windows: &[ObservationWindow],
        targets: &[f64],
        class_weights: (f64, f64),
    ) -> Result<f64, ModelError> {
        if windows.is_empty() || windows.len() != targets.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "batch of {} windows with {} targets",
                windows.len(),
                targets.len()
            )));
        }
        let (w_neg, w_pos) = class_weights;
        let mut loss = 0.0;
        for (w, &t) in windows.iter().zip(targets) {
            let cache = self.forward_cached(w)?;
            loss += bce_term(cache.y, cache.u, t, w_pos, w_neg).loss;
        }
        Ok(loss / windows.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_alignment_cases() {
        // (l, k, s) -> pad keeps the newest element in the last field
        assert_eq!(pad_for(1, 4, 2), 3);
        assert_eq!(pad_for(50, 4, 2), 0);
        assert_eq!(pad_for(51, 4, 2), 1);
        assert_eq!(pad_for(2, 2, 4), 0);
        assert_eq!(pad_for(3, 2, 4), 3);
        for l in 1..200 {
            for (k, s) in [(4, 2), (3, 1), (5, 3), (2, 4)] {
                let p = pad_for(l, k, s);
                assert!(l + p >= k);
                assert_eq!((l + p - k) % s, 0);
                assert!(p < k.max(s) + s, "pad {p} too large for l={l} k={k} s={s}");
            }
        }
    }
}
