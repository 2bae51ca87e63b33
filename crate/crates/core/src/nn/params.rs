//! Parameter tensors and their initialization.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NetConfig;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Mat<F> {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    /// out = W·x + bias. Lengths must match the matrix shape.
    pub fn apply(&self, x: &[F], bias: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(bias.len(), self.rows);
        debug_assert_eq!(out.len(), self.rows);
        for (r, out_r) in out.iter_mut().enumerate() {
            let mut acc = bias[r];
            for (w, xv) in self.row(r).iter().zip(x) {
                acc = acc + *w * *xv;
            }
            *out_r = acc;
        }
    }

    /// Rank-1 update W += y ⊗ x, the weight-gradient accumulation step.
    pub fn add_outer(&mut self, y: &[F], x: &[F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yv) in y.iter().enumerate() {
            for (w, &xv) in self.row_mut(r).iter_mut().zip(x) {
                *w = *w + yv * xv;
            }
        }
    }

    /// out += Wᵀ·y restricted to columns [lo, hi), used to route gate
    /// gradients back to either the layer input or the previous hidden state.
    pub fn add_t_apply(&self, y: &[F], lo: usize, hi: usize, out: &mut [F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), hi - lo);
        for (r, &yv) in y.iter().enumerate() {
            let row = &self.row(r)[lo..hi];
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + w * yv;
            }
        }
    }

    fn fill_uniform(&mut self, rng: &mut ChaCha8Rng, limit: f64) {
        for v in &mut self.data {
            *v = F::from(rng.gen_range(-limit..limit)).unwrap();
        }
    }
}

/// One stacked-LSTM layer: four gate matrices over the concatenation of the
/// layer input and the previous hidden state, plus four gate biases.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams<F> {
    pub wi: Mat<F>,
    pub wf: Mat<F>,
    pub wc: Mat<F>,
    pub wo: Mat<F>,
    pub bi: Vec<F>,
    pub bf: Vec<F>,
    pub bc: Vec<F>,
    pub bo: Vec<F>,
}

impl<F: Float> LstmLayerParams<F> {
    fn zeros(input: usize, hidden: usize) -> LstmLayerParams<F> {
        let cols = input + hidden;
        LstmLayerParams {
            wi: Mat::zeros(hidden, cols),
            wf: Mat::zeros(hidden, cols),
            wc: Mat::zeros(hidden, cols),
            wo: Mat::zeros(hidden, cols),
            bi: vec![F::zero(); hidden],
            bf: vec![F::zero(); hidden],
            bc: vec![F::zero(); hidden],
            bo: vec![F::zero(); hidden],
        }
    }

    /// Width of this layer's input (embed width for layer 0, hidden width
    /// above).
    pub fn input_width(&self) -> usize {
        self.wi.cols() - self.wi.rows()
    }
}

/// All trainable tensors: input projection, stacked LSTM layers, classifier
/// head.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F> {
    pub proj_w: Mat<F>,
    pub proj_b: Vec<F>,
    pub layers: Vec<LstmLayerParams<F>>,
    pub head_w: Mat<F>,
    pub head_b: Vec<F>,
}

impl<F: Float> ModelParams<F> {
    /// All-zero parameters of the configured shape.
    pub fn zeros(cfg: &NetConfig) -> ModelParams<F> {
        cfg.assert_valid();
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for l in 0..cfg.num_layers {
            let input = if l == 0 { cfg.embed_width } else { cfg.hidden_width };
            layers.push(LstmLayerParams::zeros(input, cfg.hidden_width));
        }
        ModelParams {
            proj_w: Mat::zeros(cfg.embed_width, cfg.input_width),
            proj_b: vec![F::zero(); cfg.embed_width],
            layers,
            head_w: Mat::zeros(cfg.num_classes, cfg.hidden_width),
            head_b: vec![F::zero(); cfg.num_classes],
        }
    }

    /// Zero tensors with the same shapes as `self` (gradient and moment
    /// buffers).
    pub fn zeros_like(&self) -> ModelParams<F> {
        let mut out = self.clone();
        for t in out.tensor_slices_mut() {
            t.fill(F::zero());
        }
        out
    }

    pub fn input_width(&self) -> usize {
        self.proj_w.cols()
    }

    pub fn embed_width(&self) -> usize {
        self.proj_w.rows()
    }

    pub fn hidden_width(&self) -> usize {
        self.head_w.cols()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_classes(&self) -> usize {
        self.head_w.rows()
    }

    /// Flat views of every tensor in the canonical order (the checkpoint
    /// key order): proj.w, proj.b, per layer wi/wf/wc/wo/bi/bf/bc/bo,
    /// head.w, head.b.
    pub fn tensor_slices(&self) -> Vec<&[F]> {
        let mut out: Vec<&[F]> = vec![self.proj_w.data(), &self.proj_b];
        for layer in &self.layers {
            out.push(layer.wi.data());
            out.push(layer.wf.data());
            out.push(layer.wc.data());
            out.push(layer.wo.data());
            out.push(&layer.bi);
            out.push(&layer.bf);
            out.push(&layer.bc);
            out.push(&layer.bo);
        }
        out.push(self.head_w.data());
        out.push(&self.head_b);
        out
    }

    /// Mutable counterpart of [`tensor_slices`](Self::tensor_slices), same
    /// order.
    pub fn tensor_slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = vec![self.proj_w.data_mut(), &mut self.proj_b];
        for layer in &mut self.layers {
            out.push(layer.wi.data_mut());
            out.push(layer.wf.data_mut());
            out.push(layer.wc.data_mut());
            out.push(layer.wo.data_mut());
            out.push(&mut layer.bi);
            out.push(&mut layer.bf);
            out.push(&mut layer.bc);
            out.push(&mut layer.bo);
        }
        out.push(self.head_w.data_mut());
        out.push(&mut self.head_b);
        out
    }

    /// Checkpoint keys matching the [`tensor_slices`](Self::tensor_slices)
    /// order.
    pub fn tensor_names(num_layers: usize) -> Vec<String> {
        let mut names = vec!["proj.w".to_string(), "proj.b".to_string()];
        for l in 0..num_layers {
            for part in ["wi", "wf", "wc", "wo", "bi", "bf", "bc", "bo"] {
                names.push(format!("lstm.{l}.{part}"));
            }
        }
        names.push("head.w".to_string());
        names.push("head.b".to_string());
        names
    }

    /// True when every component of every tensor is finite.
    pub fn all_finite(&self) -> bool {
        self.tensor_slices().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-style fan-based uniform limit.
fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Initializes parameters from the config seed: weights uniform in the
/// fan-based symmetric range, biases zero except forget-gate biases at 1.
pub fn init_params<F: Float>(cfg: &NetConfig) -> ModelParams<F> {
    cfg.assert_valid();
    let mut params = ModelParams::zeros(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let limit = cfg.init_gain * glorot_limit(cfg.input_width, cfg.embed_width);
    params.proj_w.fill_uniform(&mut rng, limit);

    for layer in &mut params.layers {
        let limit = cfg.init_gain * glorot_limit(layer.wi.cols(), cfg.hidden_width);
        layer.wi.fill_uniform(&mut rng, limit);
        layer.wf.fill_uniform(&mut rng, limit);
        layer.wc.fill_uniform(&mut rng, limit);
        layer.wo.fill_uniform(&mut rng, limit);
        layer.bf.fill(F::from(cfg.forget_bias).unwrap());
    }

    let limit = cfg.init_gain * glorot_limit(cfg.hidden_width, cfg.num_classes);
    params.head_w.fill_uniform(&mut rng, limit);

    params
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let cfg = NetConfig { seed: 11, ..NetConfig::default() };
        let a: ModelParams<f64> = init_params(&cfg);
        let b: ModelParams<f64> = init_params(&cfg);
        assert_eq!(a, b);

        let c: ModelParams<f64> = init_params(&NetConfig { seed: 12, ..cfg });
        assert_ne!(a, c);
    }

    #[test]
    fn forget_gate_biases_follow_config_and_others_are_zero() {
        let params: ModelParams<f64> = init_params(&NetConfig::default());
        for layer in &params.layers {
            assert!(layer.bf.iter().all(|&b| b == NetConfig::default().forget_bias));
            assert!(layer.bi.iter().all(|&b| b == 0.0));
            assert!(layer.bc.iter().all(|&b| b == 0.0));
            assert!(layer.bo.iter().all(|&b| b == 0.0));
        }
        assert!(params.proj_b.iter().all(|&b| b == 0.0));
        assert!(params.head_b.iter().all(|&b| b == 0.0));

        let unit = NetConfig { forget_bias: 1.0, ..NetConfig::default() };
        let params: ModelParams<f64> = init_params(&unit);
        for layer in &params.layers {
            assert!(layer.bf.iter().all(|&b| b == 1.0));
        }
    }

    #[test]
    fn weights_respect_fan_based_limits() {
        let cfg = NetConfig { seed: 3, ..NetConfig::default() };
        let params: ModelParams<f64> = init_params(&cfg);

        let limit = cfg.init_gain * glorot_limit(cfg.input_width, cfg.embed_width);
        assert!(params.proj_w.data().iter().all(|w| w.abs() <= limit));

        for layer in &params.layers {
            let limit = cfg.init_gain * glorot_limit(layer.wi.cols(), cfg.hidden_width);
            for mat in [&layer.wi, &layer.wf, &layer.wc, &layer.wo] {
                assert!(mat.data().iter().all(|w| w.abs() <= limit));
            }
        }

        let limit = cfg.init_gain * glorot_limit(cfg.hidden_width, cfg.num_classes);
        assert!(params.head_w.data().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn tensor_order_matches_names() {
        let params: ModelParams<f64> = init_params(&NetConfig::default());
        let names = ModelParams::<f64>::tensor_names(params.num_layers());
        assert_eq!(names.len(), params.tensor_slices().len());
        assert_eq!(names[0], "proj.w");
        assert_eq!(names[2], "lstm.0.wi");
        assert_eq!(names[names.len() - 1], "head.b");
    }

    #[test]
    fn layer_shapes_follow_config() {
        let cfg = NetConfig {
            embed_width: 5,
            hidden_width: 3,
            num_layers: 2,
            ..NetConfig::default()
        };
        let params: ModelParams<f64> = init_params(&cfg);
        assert_eq!(params.layers[0].wi.cols(), 5 + 3);
        assert_eq!(params.layers[0].input_width(), 5);
        assert_eq!(params.layers[1].wi.cols(), 3 + 3);
        assert_eq!(params.layers[1].input_width(), 3);
        assert_eq!(params.head_w.rows(), 2);
        assert_eq!(params.head_w.cols(), 3);
    }
}
