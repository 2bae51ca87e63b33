//! Independent numerical oracles for the test suites.
//!
//! Nothing here is used by the library itself: the quadrature CDF avoids
//! both the incomplete-beta continued fraction and the log-gamma series the
//! stats module relies on, and the finite-difference gradients exercise only
//! the forward pass. Enabled by the `testutil` feature.

use crate::data::EncodedSeq;
use crate::nn::{forward, ModelParams};

/// Adaptive Simpson integration of `f` over `[a, b]` to tolerance `tol`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Central Student-t distribution function by quadrature.
///
/// Substituting x = √ν·tanθ turns the density integral into
/// ∫ cos^(ν−1)θ dθ over a finite interval, and the normalizing constant is
/// the same integral over the full half-circle, so no gamma function is
/// involved anywhere.
pub fn t_cdf_quadrature(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    let v = df as f64;
    let density = move |theta: f64| theta.cos().powf(v - 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let upper = (t / v.sqrt()).atan();
    let numerator = integrate(&density, -half_pi, upper, 1e-14);
    let denominator = integrate(&density, -half_pi, half_pi, 1e-14);
    numerator / denominator
}

/// Mean negative log-probability of the true labels, computed from the
/// forward pass alone.
pub fn batch_loss(params: &ModelParams<f64>, batch: &[(EncodedSeq<f64>, bool)]) -> f64 {
    let mut sum = 0.0;
    for (seq, label) in batch {
        let (probs, _) = forward(params, seq).expect("finite forward pass");
        sum -= probs[*label as usize].ln();
    }
    sum / batch.len() as f64
}

/// Central finite-difference gradient of [`batch_loss`] for every parameter
/// component.
pub fn finite_difference_gradients(
    params: &ModelParams<f64>,
    batch: &[(EncodedSeq<f64>, bool)],
    step: f64,
) -> ModelParams<f64> {
    let mut fd = params.zeros_like();
    let mut work = params.clone();
    let tensor_count = fd.tensor_slices().len();
    for ti in 0..tensor_count {
        let len = fd.tensor_slices()[ti].len();
        for j in 0..len {
            let origin = work.tensor_slices()[ti][j];
            work.tensor_slices_mut()[ti][j] = origin + step;
            let plus = batch_loss(&work, batch);
            work.tensor_slices_mut()[ti][j] = origin - step;
            let minus = batch_loss(&work, batch);
            work.tensor_slices_mut()[ti][j] = origin;
            fd.tensor_slices_mut()[ti][j] = (plus - minus) / (2.0 * step);
        }
    }
    fd
}

/// Worst relative disagreement between two gradient sets, with a small
/// floor so that jointly-vanishing components compare as equal.
pub fn gradient_mismatch(analytic: &ModelParams<f64>, numeric: &ModelParams<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (a_t, n_t) in analytic.tensor_slices().iter().zip(numeric.tensor_slices()) {
        for (&a, &n) in a_t.iter().zip(n_t.iter()) {
            let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}
