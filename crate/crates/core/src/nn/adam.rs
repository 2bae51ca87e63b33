//! Adaptive-moment parameter updates with bias correction.

use num_traits::Float;

use super::{ModelParams, TrainConfig};

/// First and second moment estimates, shaped like the parameters.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    m: ModelParams<F>,
    v: ModelParams<F>,
    step: u64,
}

impl<F: Float> AdamState<F> {
    pub fn new(params: &ModelParams<F>) -> AdamState<F> {
        AdamState { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Rescales gradients so their global L2 norm does not exceed `max_norm`.
pub fn clip_global_norm<F: Float>(grads: &mut ModelParams<F>, max_norm: f64) {
    let mut sum_sq = F::zero();
    for t in grads.tensor_slices() {
        for &g in t {
            sum_sq = sum_sq + g * g;
        }
    }
    let norm = sum_sq.sqrt();
    let max_norm = F::from(max_norm).unwrap();
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in grads.tensor_slices_mut() {
            for g in t {
                *g = *g * scale;
            }
        }
    }
}

/// One bias-corrected adaptive-moment update:
///
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², θ ← θ − lr·m̂ / (√v̂ + ε).
pub fn optimizer_step<F: Float>(
    state: &mut AdamState<F>,
    params: &mut ModelParams<F>,
    grads: &ModelParams<F>,
    cfg: &TrainConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let lr = F::from(cfg.learning_rate).unwrap();
    let beta1 = F::from(cfg.beta1).unwrap();
    let beta2 = F::from(cfg.beta2).unwrap();
    let eps = F::from(cfg.adam_eps).unwrap();
    let bc1 = F::one() - F::from(cfg.beta1.powi(t)).unwrap();
    let bc2 = F::one() - F::from(cfg.beta2.powi(t)).unwrap();

    let mut p_slices = params.tensor_slices_mut();
    let mut m_slices = state.m.tensor_slices_mut();
    let mut v_slices = state.v.tensor_slices_mut();
    let g_slices = grads.tensor_slices();
    debug_assert_eq!(p_slices.len(), g_slices.len());

    for i in 0..p_slices.len() {
        let p = &mut p_slices[i];
        let m = &mut m_slices[i];
        let v = &mut v_slices[i];
        let g = g_slices[i];
        debug_assert_eq!(p.len(), g.len());
        for j in 0..p.len() {
            m[j] = beta1 * m[j] + (F::one() - beta1) * g[j];
            v[j] = beta2 * v[j] + (F::one() - beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
