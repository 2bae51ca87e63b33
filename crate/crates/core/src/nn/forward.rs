//! Forward pass, loss, and full backpropagation through time.

use num_traits::Float;

use super::{sigmoid, ModelParams, NnError};
use crate::data::EncodedSeq;

/// Intermediate activations recorded by [`forward`], sufficient for exact
/// backpropagation. Per-(timestep, layer) quantities are stored flat and
/// indexed `(t * layers + l) * hidden + k`.
#[derive(Clone, Debug)]
pub struct Tape<F> {
    steps: usize,
    layers: usize,
    hidden: usize,
    /// Projected inputs, `steps × embed`.
    embed: Vec<F>,
    gate_i: Vec<F>,
    gate_f: Vec<F>,
    gate_g: Vec<F>,
    gate_o: Vec<F>,
    cell: Vec<F>,
    cell_tanh: Vec<F>,
    hidden_state: Vec<F>,
    pub logits: Vec<F>,
    pub probs: Vec<F>,
}

impl<F: Float> Tape<F> {
    fn new(steps: usize, layers: usize, hidden: usize, embed_width: usize, classes: usize) -> Tape<F> {
        let per_state = steps * layers * hidden;
        Tape {
            steps,
            layers,
            hidden,
            embed: vec![F::zero(); steps * embed_width],
            gate_i: vec![F::zero(); per_state],
            gate_f: vec![F::zero(); per_state],
            gate_g: vec![F::zero(); per_state],
            gate_o: vec![F::zero(); per_state],
            cell: vec![F::zero(); per_state],
            cell_tanh: vec![F::zero(); per_state],
            hidden_state: vec![F::zero(); per_state],
            logits: vec![F::zero(); classes],
            probs: vec![F::zero(); classes],
        }
    }

    fn state_range(&self, t: usize, l: usize) -> std::ops::Range<usize> {
        let base = (t * self.layers + l) * self.hidden;
        base..base + self.hidden
    }
}

fn check_shapes<F: Float>(params: &ModelParams<F>, seq: &EncodedSeq<F>) -> Result<(), NnError> {
    if seq.steps() == 0 {
        return Err(NnError::Shape("sequence has no timesteps".into()));
    }
    if seq.width() != params.input_width() {
        return Err(NnError::Shape(format!(
            "sequence width {} != input width {}",
            seq.width(),
            params.input_width()
        )));
    }
    Ok(())
}

fn softmax_from_logits<F: Float>(logits: &[F], probs: &mut [F]) {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let mut sum = F::zero();
    for (p, &l) in probs.iter_mut().zip(logits) {
        *p = (l - max).exp();
        sum = sum + *p;
    }
    for p in probs.iter_mut() {
        *p = *p / sum;
    }
}

/// Runs the network over a sequence, returning class probabilities and the
/// activation tape needed for backpropagation.
///
/// Probabilities are positive and sum to one; a non-finite activation is
/// reported as an error rather than propagated.
pub fn forward<F: Float>(
    params: &ModelParams<F>,
    seq: &EncodedSeq<F>,
) -> Result<(Vec<F>, Tape<F>), NnError> {
    check_shapes(params, seq)?;
    let steps = seq.steps();
    let layers = params.num_layers();
    let hidden = params.hidden_width();
    let embed = params.embed_width();

    let mut tape = Tape::new(steps, layers, hidden, embed, params.num_classes());

    // Working state per layer, plus a scratch buffer for [input ‖ h_prev].
    let mut h = vec![vec![F::zero(); hidden]; layers];
    let mut c = vec![vec![F::zero(); hidden]; layers];
    let mut concat: Vec<F> = Vec::new();

    for t in 0..steps {
        {
            let embed_row = &mut tape.embed[t * embed..(t + 1) * embed];
            params.proj_w.apply(seq.row(t), &params.proj_b, embed_row);
        }

        for l in 0..layers {
            let layer = &params.layers[l];

            concat.clear();
            if l == 0 {
                concat.extend_from_slice(&tape.embed[t * embed..(t + 1) * embed]);
            } else {
                concat.extend_from_slice(&h[l - 1]);
            }
            concat.extend_from_slice(&h[l]);

            let range = tape.state_range(t, l);
            layer.wi.apply(&concat, &layer.bi, &mut tape.gate_i[range.clone()]);
            layer.wf.apply(&concat, &layer.bf, &mut tape.gate_f[range.clone()]);
            layer.wc.apply(&concat, &layer.bc, &mut tape.gate_g[range.clone()]);
            layer.wo.apply(&concat, &layer.bo, &mut tape.gate_o[range.clone()]);

            for k in 0..hidden {
                let at = range.start + k;
                let i = sigmoid(tape.gate_i[at]);
                let f = sigmoid(tape.gate_f[at]);
                let g = tape.gate_g[at].tanh();
                let o = sigmoid(tape.gate_o[at]);
                let cell = f * c[l][k] + i * g;
                let cell_tanh = cell.tanh();
                let hk = o * cell_tanh;
                if !cell.is_finite() || !hk.is_finite() {
                    return Err(NnError::NonFinite { what: "activation" });
                }
                tape.gate_i[at] = i;
                tape.gate_f[at] = f;
                tape.gate_g[at] = g;
                tape.gate_o[at] = o;
                tape.cell[at] = cell;
                tape.cell_tanh[at] = cell_tanh;
                tape.hidden_state[at] = hk;
                c[l][k] = cell;
                h[l][k] = hk;
            }
        }
    }

    params.head_w.apply(&h[layers - 1], &params.head_b, &mut tape.logits);
    softmax_from_logits(&tape.logits, &mut tape.probs);
    if tape.probs.iter().any(|p| !p.is_finite()) {
        return Err(NnError::NonFinite { what: "output probabilities" });
    }
    Ok((tape.probs.clone(), tape))
}

/// Tape-free forward pass for evaluation.
pub fn predict<F: Float>(params: &ModelParams<F>, seq: &EncodedSeq<F>) -> Result<Vec<F>, NnError> {
    check_shapes(params, seq)?;
    let layers = params.num_layers();
    let hidden = params.hidden_width();

    let mut h = vec![vec![F::zero(); hidden]; layers];
    let mut c = vec![vec![F::zero(); hidden]; layers];
    let mut embed_row = vec![F::zero(); params.embed_width()];
    let mut concat: Vec<F> = Vec::new();
    let mut pre_i = vec![F::zero(); hidden];
    let mut pre_f = vec![F::zero(); hidden];
    let mut pre_g = vec![F::zero(); hidden];
    let mut pre_o = vec![F::zero(); hidden];

    for t in 0..seq.steps() {
        params.proj_w.apply(seq.row(t), &params.proj_b, &mut embed_row);
        for l in 0..layers {
            let layer = &params.layers[l];
            concat.clear();
            if l == 0 {
                concat.extend_from_slice(&embed_row);
            } else {
                concat.extend_from_slice(&h[l - 1]);
            }
            concat.extend_from_slice(&h[l]);

            layer.wi.apply(&concat, &layer.bi, &mut pre_i);
            layer.wf.apply(&concat, &layer.bf, &mut pre_f);
            layer.wc.apply(&concat, &layer.bc, &mut pre_g);
            layer.wo.apply(&concat, &layer.bo, &mut pre_o);

            for k in 0..hidden {
                let cell = sigmoid(pre_f[k]) * c[l][k] + sigmoid(pre_i[k]) * pre_g[k].tanh();
                c[l][k] = cell;
                h[l][k] = sigmoid(pre_o[k]) * cell.tanh();
            }
        }
    }

    let mut logits = vec![F::zero(); params.num_classes()];
    params.head_w.apply(&h[layers - 1], &params.head_b, &mut logits);
    let mut probs = vec![F::zero(); logits.len()];
    softmax_from_logits(&logits, &mut probs);
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(NnError::NonFinite { what: "output probabilities" });
    }
    Ok(probs)
}

/// Backpropagates one sequence's logit gradient into `grads`.
fn backward<F: Float>(
    params: &ModelParams<F>,
    seq: &EncodedSeq<F>,
    tape: &Tape<F>,
    dlogits: &[F],
    grads: &mut ModelParams<F>,
) {
    let steps = tape.steps;
    let layers = tape.layers;
    let hidden = tape.hidden;
    let embed = params.embed_width();

    // Head: dW = dlogits ⊗ h_top(final), db = dlogits, plus the gradient
    // flowing into the final top-layer hidden state.
    let h_top_final = &tape.hidden_state[tape.state_range(steps - 1, layers - 1)];
    grads.head_w.add_outer(dlogits, h_top_final);
    for (gb, &d) in grads.head_b.iter_mut().zip(dlogits) {
        *gb = *gb + d;
    }

    // Gradient arriving at each h(t, l) from the structure above: for the
    // top layer that is the head (final timestep only); for lower layers it
    // is the input gradient of the layer above, filled in as we descend.
    let mut from_above = vec![F::zero(); steps * hidden];
    params
        .head_w
        .add_t_apply(dlogits, 0, hidden, &mut from_above[(steps - 1) * hidden..]);

    let mut concat: Vec<F> = Vec::new();
    let mut d_i = vec![F::zero(); hidden];
    let mut d_f = vec![F::zero(); hidden];
    let mut d_g = vec![F::zero(); hidden];
    let mut d_o = vec![F::zero(); hidden];

    for l in (0..layers).rev() {
        let layer = &params.layers[l];
        let input_width = layer.input_width();

        // Gradients flowing backward in time into h(t-1) and c(t-1).
        let mut dh_future = vec![F::zero(); hidden];
        let mut dc_future = vec![F::zero(); hidden];
        let mut dh_prev = vec![F::zero(); hidden];
        let mut dc_prev = vec![F::zero(); hidden];
        let mut dx_all = vec![F::zero(); steps * input_width];

        for t in (0..steps).rev() {
            let range = tape.state_range(t, l);

            // Rebuild this step's gate input [u ‖ h_prev].
            concat.clear();
            if l == 0 {
                concat.extend_from_slice(&tape.embed[t * embed..(t + 1) * embed]);
            } else {
                concat.extend_from_slice(&tape.hidden_state[tape.state_range(t, l - 1)]);
            }
            if t == 0 {
                concat.resize(input_width + hidden, F::zero());
            } else {
                concat.extend_from_slice(&tape.hidden_state[tape.state_range(t - 1, l)]);
            }

            for k in 0..hidden {
                let at = range.start + k;
                let i = tape.gate_i[at];
                let f = tape.gate_f[at];
                let g = tape.gate_g[at];
                let o = tape.gate_o[at];
                let cell_tanh = tape.cell_tanh[at];
                let c_prev = if t == 0 {
                    F::zero()
                } else {
                    tape.cell[tape.state_range(t - 1, l).start + k]
                };

                let dh = from_above[t * hidden + k] + dh_future[k];
                let dc = dh * o * (F::one() - cell_tanh * cell_tanh) + dc_future[k];

                d_i[k] = dc * g * i * (F::one() - i);
                d_f[k] = dc * c_prev * f * (F::one() - f);
                d_g[k] = dc * i * (F::one() - g * g);
                d_o[k] = dh * cell_tanh * o * (F::one() - o);
                dc_prev[k] = dc * f;
            }

            let gl = &mut grads.layers[l];
            gl.wi.add_outer(&d_i, &concat);
            gl.wf.add_outer(&d_f, &concat);
            gl.wc.add_outer(&d_g, &concat);
            gl.wo.add_outer(&d_o, &concat);
            for k in 0..hidden {
                gl.bi[k] = gl.bi[k] + d_i[k];
                gl.bf[k] = gl.bf[k] + d_f[k];
                gl.bc[k] = gl.bc[k] + d_g[k];
                gl.bo[k] = gl.bo[k] + d_o[k];
            }

            // Route raw gate gradients to the layer input and to h(t-1).
            let dx_t = &mut dx_all[t * input_width..(t + 1) * input_width];
            dh_prev.fill(F::zero());
            for (w, d_raw) in [(&layer.wi, &d_i), (&layer.wf, &d_f), (&layer.wc, &d_g), (&layer.wo, &d_o)]
            {
                w.add_t_apply(d_raw, 0, input_width, dx_t);
                w.add_t_apply(d_raw, input_width, input_width + hidden, &mut dh_prev);
            }

            std::mem::swap(&mut dh_future, &mut dh_prev);
            std::mem::swap(&mut dc_future, &mut dc_prev);
        }

        if l == 0 {
            // Projection gradients from the per-timestep embed gradients.
            for t in 0..steps {
                let dx_t = &dx_all[t * input_width..(t + 1) * input_width];
                grads.proj_w.add_outer(dx_t, seq.row(t));
                for (gb, &d) in grads.proj_b.iter_mut().zip(dx_t) {
                    *gb = *gb + d;
                }
            }
        } else {
            from_above = dx_all;
        }
    }
}

/// Mean cross-entropy of the true labels over a batch along with exact
/// gradients for every parameter, via full backpropagation through time.
pub fn loss_and_gradients<F: Float>(
    params: &ModelParams<F>,
    batch: &[(EncodedSeq<F>, bool)],
) -> Result<(F, ModelParams<F>), NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut grads = params.zeros_like();
    let scale = F::one() / F::from(batch.len()).unwrap();
    let mut loss_sum = F::zero();

    for (seq, label) in batch {
        let (_, tape) = forward(params, seq)?;
        let y = *label as usize;

        // Log-sum-exp form of -log p(y).
        let max = tape.logits.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for &l in &tape.logits {
            sum = sum + (l - max).exp();
        }
        loss_sum = loss_sum + sum.ln() + max - tape.logits[y];

        let mut dlogits: Vec<F> = tape.probs.iter().map(|&p| p * scale).collect();
        dlogits[y] = dlogits[y] - scale;
        backward(params, seq, &tape, &dlogits, &mut grads);
    }

    let loss = loss_sum * scale;
    if !loss.is_finite() {
        return Err(NnError::NonFinite { what: "loss" });
    }
    if !grads.all_finite() {
        return Err(NnError::NonFinite { what: "gradient" });
    }
    Ok((loss, grads))
}
