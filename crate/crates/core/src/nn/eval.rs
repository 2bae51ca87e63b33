//! Per-quantifier accuracy over labeled examples.

use std::collections::BTreeMap;

use num_traits::Float;
use rayon::prelude::*;

use super::{predict, ModelParams, NnError};
use crate::data::{build_sequence, EncodedSeq, Example};
use crate::quant::Quantifier;

/// Per-quantifier tallies; integer sums keep the parallel reduction
/// order-independent.
#[derive(Clone, Copy, Default)]
struct Tally {
    correct: [u64; 10],
    total: [u64; 10],
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for q in 0..10 {
            self.correct[q] += other.correct[q];
            self.total[q] += other.total[q];
        }
        self
    }
}

/// Computes accuracy per quantifier: prediction is the argmax class, with
/// an exact probability tie predicting false. Quantifiers absent from
/// `examples` are omitted from the map.
pub fn evaluate_accuracy<F: Float + Send + Sync>(
    params: &ModelParams<F>,
    examples: &[Example],
) -> Result<BTreeMap<Quantifier, f64>, NnError> {
    let tally = examples
        .par_iter()
        .try_fold(
            || (Tally::default(), EncodedSeq::<F>::zeros(0, 0)),
            |(mut tally, mut buf), ex| {
                build_sequence(ex.quantifier, &ex.scene).encode_into(&mut buf);
                let probs = predict(params, &buf)?;
                let predicted = probs[1] > probs[0];
                let q = ex.quantifier.index();
                tally.total[q] += 1;
                if predicted == ex.label {
                    tally.correct[q] += 1;
                }
                Ok((tally, buf))
            },
        )
        .map(|r: Result<_, NnError>| r.map(|(t, _)| t))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let mut map = BTreeMap::new();
    for q in Quantifier::ALL {
        let total = tally.total[q.index()];
        if total > 0 {
            map.insert(q, tally.correct[q.index()] as f64 / total as f64);
        }
    }
    Ok(map)
}
