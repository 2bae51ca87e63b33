//! Paired t-tests over trial accuracies with Bonferroni correction.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::experiment::{AccuracyRecord, ConditionId, Split};
use crate::quant::Quantifier;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("paired test needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("records contain no shared (condition, run, trial, step) keys for {qa} and {qb}")]
    NoSharedKeys { qa: Quantifier, qb: Quantifier },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Two matched accuracy samples, one entry per trial at a fixed step.
#[derive(Clone, Debug)]
pub struct PairedSamples {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSamples {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<PairedSamples, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch { xs: xs.len(), ys: ys.len() });
        }
        Ok(PairedSamples { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// t statistic, degrees of freedom, and two-tailed p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

/// Family-wise significance budget: per-test level is alpha0 / m, kept
/// exact (no rounding).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionPlan {
    pub alpha0: f64,
    pub m: usize,
    pub alpha: f64,
}

/// Bonferroni correction for m hypotheses at family-wise level alpha0.
pub fn bonferroni(alpha0: f64, m: usize) -> CorrectionPlan {
    assert!(m >= 1, "hypothesis count must be positive");
    assert!(alpha0 > 0.0 && alpha0 <= 1.0, "alpha0 must be in (0, 1]");
    CorrectionPlan { alpha0, m, alpha: alpha0 / m as f64 }
}

/// Number of hypotheses for the step-wise analysis: one per (condition,
/// evaluation step).
pub fn hypothesis_count(conditions: usize, eval_steps: usize) -> usize {
    assert!(conditions >= 1 && eval_steps >= 1);
    conditions * eval_steps
}

/// Paired t-test on matched samples: t = mean(d) / (sd(d)/√n) with the
/// sample standard deviation (n−1 denominator), two-tailed p.
pub fn paired_t_test(samples: &PairedSamples) -> Result<TTestResult, StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let diffs: Vec<f64> = samples.xs.iter().zip(&samples.ys).map(|(x, y)| x - y).collect();
    if diffs.iter().all(|&d| d == diffs[0]) {
        return Err(StatsError::ZeroVariance);
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = n - 1;
    let p = 2.0 * (1.0 - t_cdf(t.abs(), df));
    Ok(TTestResult { t, df, p })
}

/// Central Student-t distribution function via the regularized incomplete
/// beta function. Absolute error stays within 1e-10 over |t| ≤ 50,
/// df ≤ 1000.
pub fn t_cdf(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    let v = df as f64;
    let x = v / (v + t * t);
    let tail_half = 0.5 * betai(0.5 * v, 0.5, x);
    if t >= 0.0 {
        1.0 - tail_half
    } else {
        tail_half
    }
}

// Log-gamma via the Lanczos approximation (g = 7, 9 terms), accurate to
// ~1e-14 relative for positive arguments.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

// Continued fraction for the incomplete beta function (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

// Regularized incomplete beta I_x(a, b), switching to the symmetric form
// where the continued fraction converges fastest.
fn betai(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Outcome of one step's paired test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Tested { t: f64, p: f64, significant: bool },
    /// All paired differences identical; no test statistic exists.
    Degenerate,
}

/// One row of the per-step comparison table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepComparison {
    pub step: u32,
    pub pairs: usize,
    pub df: usize,
    pub outcome: StepOutcome,
}

impl StepComparison {
    pub fn significant(&self) -> bool {
        matches!(self.outcome, StepOutcome::Tested { significant: true, .. })
    }

    pub fn degenerate(&self) -> bool {
        matches!(self.outcome, StepOutcome::Degenerate)
    }
}

/// Runs the paired t-test between two quantifiers' test accuracies at every
/// step, pairing by (condition, run, trial). A step whose differences have
/// zero variance is marked degenerate rather than significant.
pub fn compare_pair(
    records: &[AccuracyRecord],
    qa: Quantifier,
    qb: Quantifier,
    plan: &CorrectionPlan,
) -> Result<Vec<StepComparison>, StatsError> {
    type TrialKey = (ConditionId, u32, u32);
    type StepSlots = BTreeMap<TrialKey, (Option<f64>, Option<f64>)>;
    let mut by_step: BTreeMap<u32, StepSlots> = BTreeMap::new();
    for r in records {
        if r.split != Split::Test || (r.quantifier != qa && r.quantifier != qb) {
            continue;
        }
        let slot = by_step
            .entry(r.step)
            .or_default()
            .entry((r.condition, r.run, r.trial))
            .or_insert((None, None));
        if r.quantifier == qa {
            slot.0 = Some(r.accuracy);
        } else {
            slot.1 = Some(r.accuracy);
        }
    }

    let mut table = Vec::new();
    for (step, trials) in &by_step {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (x, y) in trials.values() {
            if let (Some(x), Some(y)) = (x, y) {
                xs.push(*x);
                ys.push(*y);
            }
        }
        if xs.is_empty() {
            continue;
        }
        let n = xs.len();
        let samples = PairedSamples::new(xs, ys)?;
        let outcome = match paired_t_test(&samples) {
            Ok(result) => StepOutcome::Tested {
                t: result.t,
                p: result.p,
                significant: result.p < plan.alpha,
            },
            Err(StatsError::ZeroVariance) => StepOutcome::Degenerate,
            Err(e) => return Err(e),
        };
        table.push(StepComparison { step: *step, pairs: n, df: n - 1, outcome });
    }

    if table.is_empty() {
        return Err(StatsError::NoSharedKeys { qa, qb });
    }
    Ok(table)
}

/// Writes a comparison table as CSV: step,t,df,p,alpha,significant,degenerate
/// with p (and alpha) in scientific notation at 10 significant digits.
/// Degenerate rows print NA for t and p.
pub fn write_significance(
    path: &Path,
    table: &[StepComparison],
    plan: &CorrectionPlan,
) -> Result<(), StatsError> {
    let csv_err = |source| StatsError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["step", "t", "df", "p", "alpha", "significant", "degenerate"])
        .map_err(csv_err)?;
    for row in table {
        let (t_text, p_text, significant) = match row.outcome {
            StepOutcome::Tested { t, p, significant } => {
                (format!("{t:.6}"), format!("{p:.9e}"), significant)
            }
            StepOutcome::Degenerate => ("NA".to_string(), "NA".to_string(), false),
        };
        w.write_record([
            row.step.to_string(),
            t_text,
            row.df.to_string(),
            p_text,
            format!("{:.9e}", plan.alpha),
            significant.to_string(),
            row.degenerate().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| StatsError::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_reproduces_published_thresholds() {
        let plan = bonferroni(0.05, 305);
        assert!((plan.alpha - 0.05 / 305.0).abs() == 0.0);
        assert_eq!(format!("{:.6}", plan.alpha), "0.000164");

        let plan = bonferroni(0.05, 183);
        assert_eq!(format!("{:.6}", plan.alpha), "0.000273");

        assert_eq!(bonferroni(0.05, 1).alpha, 0.05);
    }

    #[test]
    fn bonferroni_never_rounds() {
        for m in [1usize, 7, 61, 183, 305, 1000] {
            let plan = bonferroni(0.05, m);
            let recovered = plan.alpha * m as f64;
            assert!((recovered - 0.05).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn hypothesis_counts_match_design() {
        assert_eq!(hypothesis_count(5, 61), 305);
        assert_eq!(hypothesis_count(3, 61), 183);
        assert_eq!(hypothesis_count(1, 1), 1);
    }

    #[test]
    fn t_cdf_known_values() {
        assert_eq!(t_cdf(0.0, 1), 0.5);
        assert_eq!(t_cdf(0.0, 29), 0.5);
        // Cauchy closed form: F(1) = 1/2 + atan(1)/pi = 0.75.
        assert!((t_cdf(1.0, 1) - 0.75).abs() < 1e-14);
        // Frozen from the quadrature oracle (30-digit arithmetic).
        assert!((t_cdf(3.0 * 2f64.sqrt(), 4) - 0.993_382_200_218_158_7).abs() < 1e-12);
        assert!((t_cdf(-0.5, 2) - (1.0 / 3.0)).abs() < 1e-12);
        assert!((t_cdf(2.0, 29) - 0.972_528_181_408_516_4).abs() < 1e-12);
        assert!((t_cdf(10.0, 60) - 0.999_999_999_999_989_3).abs() < 1e-13);
    }

    #[test]
    fn t_cdf_is_monotone_and_symmetric() {
        for &df in &[1usize, 2, 4, 29, 60, 1000] {
            let mut prev = 0.0;
            let mut t = -50.0;
            while t <= 50.0 {
                let p = t_cdf(t, df);
                assert!(p >= prev, "df={df} t={t}");
                assert!((t_cdf(-t, df) - (1.0 - p)).abs() < 1e-10, "df={df} t={t}");
                prev = p;
                t += 0.5;
            }
        }
    }

    #[test]
    fn paired_t_test_matches_frozen_example() {
        // Differences 1..5: t = 3/(sd/sqrt(5)) = 3*sqrt(2), df = 4.
        let samples =
            PairedSamples::new(vec![2.0, 4.0, 6.0, 8.0, 10.0], vec![1.0, 2.0, 3.0, 4.0, 5.0])
                .unwrap();
        let result = paired_t_test(&samples).unwrap();
        assert!((result.t - 4.242640687119285).abs() < 1e-12);
        assert_eq!(result.df, 4);
        assert!((result.p - 0.013235599563682684).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_tiny_samples_error() {
        let same = PairedSamples::new(vec![0.4, 0.5, 0.6], vec![0.4, 0.5, 0.6]).unwrap();
        assert!(matches!(paired_t_test(&same), Err(StatsError::ZeroVariance)));

        let shifted = PairedSamples::new(vec![0.5, 0.6], vec![0.4, 0.5]).unwrap();
        assert!(matches!(paired_t_test(&shifted), Err(StatsError::ZeroVariance)));

        let one = PairedSamples::new(vec![0.5], vec![0.4]).unwrap();
        assert!(matches!(paired_t_test(&one), Err(StatsError::TooFewSamples(1))));

        assert!(matches!(
            PairedSamples::new(vec![0.5], vec![]),
            Err(StatsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn zero_mean_differences_give_p_one() {
        let samples = PairedSamples::new(vec![0.6, 0.4], vec![0.4, 0.6]).unwrap();
        let result = paired_t_test(&samples).unwrap();
        assert_eq!(result.t, 0.0);
        assert!((result.p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn swapping_samples_negates_t_and_keeps_p() {
        let xs = vec![0.9, 0.85, 0.88, 0.95];
        let ys = vec![0.7, 0.8, 0.75, 0.72];
        let fwd = paired_t_test(&PairedSamples::new(xs.clone(), ys.clone()).unwrap()).unwrap();
        let rev = paired_t_test(&PairedSamples::new(ys, xs).unwrap()).unwrap();
        assert!((fwd.t + rev.t).abs() < 1e-12);
        assert!((fwd.p - rev.p).abs() < 1e-12);
    }

    fn synthetic_records(
        trials: u32,
        accuracy: impl Fn(Quantifier, u32, u32) -> f64,
    ) -> Vec<AccuracyRecord> {
        let mut records = Vec::new();
        for trial in 1..=trials {
            for step in [1u32, 51, 101] {
                for q in [Quantifier::AllAb, Quantifier::OnlyAb] {
                    records.push(AccuracyRecord {
                        condition: ConditionId::A,
                        run: 1,
                        trial,
                        step,
                        quantifier: q,
                        split: Split::Test,
                        accuracy: accuracy(q, trial, step),
                    });
                }
            }
        }
        records
    }

    #[test]
    fn identical_accuracies_are_degenerate_not_significant() {
        let records = synthetic_records(4, |_, trial, step| 0.5 + 0.01 * (trial + step) as f64 % 0.4);
        let plan = bonferroni(0.05, 305);
        let table = compare_pair(&records, Quantifier::AllAb, Quantifier::OnlyAb, &plan).unwrap();
        assert_eq!(table.len(), 3);
        assert!(table.iter().all(|row| row.degenerate()));
        assert!(table.iter().all(|row| !row.significant()));
    }

    #[test]
    fn a_constant_offset_with_tiny_noise_is_significant_everywhere() {
        // qa sits 0.2 above qb across 30 trials with per-trial jitter well
        // below the offset.
        let records = synthetic_records(30, |q, trial, step| {
            let noise = 1e-4 * ((trial * 31 + step) % 17) as f64;
            match q {
                Quantifier::AllAb => 0.7 + noise,
                _ => 0.5 + 0.5 * noise,
            }
        });
        let plan = bonferroni(0.05, 305);
        assert_eq!(format!("{:.6}", plan.alpha), "0.000164");
        let table = compare_pair(&records, Quantifier::AllAb, Quantifier::OnlyAb, &plan).unwrap();
        assert_eq!(table.len(), 3);
        for row in &table {
            assert!(row.significant(), "step {} not significant: {row:?}", row.step);
            match row.outcome {
                StepOutcome::Tested { p, .. } => assert!(p < plan.alpha),
                StepOutcome::Degenerate => panic!("unexpected degenerate step"),
            }
        }
    }

    #[test]
    fn compare_pair_errors_without_shared_keys() {
        let mut records = synthetic_records(3, |_, _, _| 0.5);
        records.retain(|r| r.quantifier == Quantifier::AllAb);
        let plan = bonferroni(0.05, 10);
        assert!(matches!(
            compare_pair(&records, Quantifier::AllAb, Quantifier::OnlyAb, &plan),
            Err(StatsError::NoSharedKeys { .. })
        ));
    }

    #[test]
    fn shifting_both_samples_changes_nothing() {
        let xs = vec![0.9, 0.85, 0.88, 0.95];
        let ys = vec![0.7, 0.8, 0.75, 0.72];
        let base = paired_t_test(&PairedSamples::new(xs.clone(), ys.clone()).unwrap()).unwrap();
        let shift = 0.03125; // power of two keeps the shift exact
        let xs2: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| y + shift).collect();
        let shifted = paired_t_test(&PairedSamples::new(xs2, ys2).unwrap()).unwrap();
        assert_eq!(base.t, shifted.t);
        assert_eq!(base.p, shifted.p);
    }
}
