//! The five distribution conditions, seeded trial execution, and accuracy
//! curve aggregation.
//!
//! A condition fixes which four quantifiers get abundant training data and
//! in what conservative/non-conservative ratio; the scarce pair all_ab and
//! only_ab is shared by every condition. Trials are pure functions of their
//! plan: the trial seed (a stable mix of base seed, condition, run, trial)
//! drives dataset generation, parameter init, and epoch shuffling through
//! separate derived streams.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{generate_dataset, DataError, DatasetSpec, EncodedSeq, Example, SceneDistribution};
use crate::nn::{
    clip_global_norm, evaluate_accuracy, init_params, loss_and_gradients, optimizer_step,
    AdamState, NetConfig, NnError, TrainConfig,
};
use crate::quant::Quantifier;
use crate::seeds;
use crate::Scalar;

/// Identifier of one of the five experimental conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionId {
    A,
    B,
    C,
    D,
    E,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] =
        [ConditionId::A, ConditionId::B, ConditionId::C, ConditionId::D, ConditionId::E];

    pub fn letter(self) -> &'static str {
        match self {
            ConditionId::A => "a",
            ConditionId::B => "b",
            ConditionId::C => "c",
            ConditionId::D => "d",
            ConditionId::E => "e",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

impl FromStr for ConditionId {
    type Err = String;

    fn from_str(s: &str) -> Result<ConditionId, String> {
        ConditionId::ALL
            .into_iter()
            .find(|c| c.letter() == s)
            .ok_or_else(|| format!("unknown condition {s:?} (expected a..e)"))
    }
}

/// The scarce pair probed in every condition.
pub const TESTING_QUANTIFIERS: [Quantifier; 2] = [Quantifier::AllAb, Quantifier::OnlyAb];

/// A condition's quantifier assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Condition {
    pub id: ConditionId,
    /// Four abundantly-trained quantifiers.
    pub training: [Quantifier; 4],
    /// The scarce pair, identical across conditions.
    pub testing: [Quantifier; 2],
}

impl Condition {
    /// Conservative : non-conservative counts among the training four.
    pub fn c_nc_ratio(&self) -> (usize, usize) {
        let conservative = self.training.iter().filter(|q| q.conservative()).count();
        (conservative, 4 - conservative)
    }

    /// All six quantifiers of the condition, training first.
    pub fn quantifiers(&self) -> [Quantifier; 6] {
        [
            self.training[0],
            self.training[1],
            self.training[2],
            self.training[3],
            self.testing[0],
            self.testing[1],
        ]
    }
}

/// Fixed condition table, a) 4C:0NC through e) 0C:4NC.
///
/// The mixed conditions are pinned so that d and e are the dual images of b
/// and a, c is self-dual, and the pairs (not_all_ab, most_ab) and
/// (not_only_ab, most_ba) each co-occur in exactly three conditions.
pub fn condition_spec(id: ConditionId) -> Condition {
    use Quantifier::*;
    let training = match id {
        ConditionId::A => [NotAllAb, MostAb, MostANonb, ExactlyHalfAb],
        ConditionId::B => [NotAllAb, MostAb, MostANonb, ExactlyHalfBa],
        ConditionId::C => [NotAllAb, MostAb, NotOnlyAb, MostBa],
        ConditionId::D => [NotOnlyAb, MostBa, MostBNona, ExactlyHalfAb],
        ConditionId::E => [NotOnlyAb, MostBa, MostBNona, ExactlyHalfBa],
    };
    Condition { id, training, testing: TESTING_QUANTIFIERS }
}

/// Which split an accuracy was measured on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Test,
    Train,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Test => "test",
            Split::Train => "train",
        }
    }

    pub fn from_name(s: &str) -> Option<Split> {
        match s {
            "test" => Some(Split::Test),
            "train" => Some(Split::Train),
            _ => None,
        }
    }
}

/// One measured accuracy: a (condition, run, trial, step, quantifier,
/// split) cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyRecord {
    pub condition: ConditionId,
    pub run: u32,
    pub trial: u32,
    pub step: u32,
    pub quantifier: Quantifier,
    pub split: Split,
    pub accuracy: f64,
}

/// Per-quantifier dataset sizes and sampling distribution for one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataProfile {
    /// Training items per abundant ("training") quantifier.
    pub train_per_training: usize,
    /// Training items per scarce ("testing") quantifier.
    pub train_per_testing: usize,
    /// Test items per quantifier, all six alike.
    pub test_per: usize,
    /// Target fraction of true labels.
    pub balance: f64,
    /// How scenes are drawn for a target label.
    pub distribution: SceneDistribution,
}

impl DataProfile {
    /// Full-scale sizes: 4×6000 + 2×750 training, 6×750 test.
    pub fn paper() -> DataProfile {
        DataProfile {
            train_per_training: 6000,
            train_per_testing: 750,
            test_per: 750,
            balance: 0.5,
            distribution: SceneDistribution::SlotIid,
        }
    }

    /// Desk-scale sizes (one tenth of full scale).
    pub fn desk() -> DataProfile {
        DataProfile { train_per_training: 600, train_per_testing: 75, test_per: 75, ..DataProfile::paper() }
    }

    /// Dataset spec for one condition at this scale.
    pub fn dataset_spec(&self, condition: &Condition, seed: u64) -> DatasetSpec {
        let mut train_counts = Vec::with_capacity(6);
        for q in condition.training {
            train_counts.push((q, self.train_per_training));
        }
        for q in condition.testing {
            train_counts.push((q, self.train_per_testing));
        }
        let test_counts = condition.quantifiers().iter().map(|&q| (q, self.test_per)).collect();
        DatasetSpec {
            train_counts,
            test_counts,
            seed,
            balance: self.balance,
            distribution: self.distribution,
        }
    }
}

impl Default for DataProfile {
    fn default() -> DataProfile {
        DataProfile::paper()
    }
}

/// Everything a single trial needs; two equal plans produce bit-identical
/// records.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialPlan {
    pub condition: ConditionId,
    pub run: u32,
    pub trial: u32,
    pub base_seed: u64,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub data: DataProfile,
    /// Also record accuracies on the train split.
    pub record_train: bool,
}

impl TrialPlan {
    /// Stable per-trial seed namespace.
    pub fn trial_seed(&self) -> u64 {
        seeds::derive(
            self.base_seed,
            &[seeds::TAG_TRIAL, self.condition.index() as u64, self.run as u64, self.trial as u64],
        )
    }
}

/// Shared experiment settings from which per-trial plans are minted.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseConfig {
    pub base_seed: u64,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub data: DataProfile,
    pub record_train: bool,
}

impl Default for BaseConfig {
    fn default() -> BaseConfig {
        BaseConfig {
            base_seed: 42,
            net: NetConfig::default(),
            train: TrainConfig::default(),
            data: DataProfile::paper(),
            record_train: false,
        }
    }
}

impl BaseConfig {
    pub fn plan(&self, condition: ConditionId, run: u32, trial: u32) -> TrialPlan {
        TrialPlan {
            condition,
            run,
            trial,
            base_seed: self.base_seed,
            net: self.net.clone(),
            train: self.train.clone(),
            data: self.data,
            record_train: self.record_train,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("condition {condition} run {run} trial {trial}: {source}")]
    Trial {
        condition: ConditionId,
        run: u32,
        trial: u32,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("no records match condition {condition} run {run}")]
    EmptySelection { condition: ConditionId, run: u32 },
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
    #[error("{path} line {line}: {message}")]
    RecordParse { path: String, line: usize, message: String },
}

/// Runs one trial: generates the condition's dataset, trains for the
/// configured number of mini-batch steps (train set reshuffled each epoch),
/// and records per-quantifier test accuracy at step 1 and every
/// `eval_every` steps after it.
pub fn run_trial(plan: &TrialPlan) -> Result<Vec<AccuracyRecord>, ExperimentError> {
    let condition = condition_spec(plan.condition);
    let trial_seed = plan.trial_seed();

    let dataset_seed = seeds::derive(trial_seed, &[seeds::TAG_DATA]);
    let dataset = generate_dataset(&plan.data.dataset_spec(&condition, dataset_seed))?;

    let net = NetConfig { seed: seeds::derive(trial_seed, &[seeds::TAG_INIT]), ..plan.net.clone() };
    let mut params = init_params::<Scalar>(&net);
    let mut adam = AdamState::new(&params);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds::derive(trial_seed, &[seeds::TAG_SHUFFLE]));
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    if plan.train.shuffle_each_epoch {
        order.shuffle(&mut shuffle_rng);
    }
    let mut cursor = 0usize;

    let mut batch: Vec<(EncodedSeq<Scalar>, bool)> = Vec::with_capacity(plan.train.batch_size);
    let mut records = Vec::new();

    for step in 1..=plan.train.total_steps {
        batch.clear();
        // Partial batch at the epoch boundary, then reshuffle.
        while batch.len() < plan.train.batch_size && cursor < order.len() {
            let ex = &dataset.train[order[cursor]];
            let seq = crate::data::build_sequence(ex.quantifier, &ex.scene).to_encoded();
            batch.push((seq, ex.label));
            cursor += 1;
        }
        if cursor >= order.len() {
            cursor = 0;
            if plan.train.shuffle_each_epoch {
                order.shuffle(&mut shuffle_rng);
            }
        }
        if batch.is_empty() {
            continue;
        }

        let (_, mut grads) = loss_and_gradients(&params, &batch)?;
        if let Some(max_norm) = plan.train.grad_clip_norm {
            clip_global_norm(&mut grads, max_norm);
        }
        optimizer_step(&mut adam, &mut params, &grads, &plan.train);

        if (step - 1) % plan.train.eval_every == 0 {
            record_split(plan, step, &params, &dataset.test, Split::Test, &mut records)?;
            if plan.record_train {
                record_split(plan, step, &params, &dataset.train, Split::Train, &mut records)?;
            }
        }
    }

    Ok(records)
}

fn record_split(
    plan: &TrialPlan,
    step: u32,
    params: &crate::Model,
    examples: &[Example],
    split: Split,
    records: &mut Vec<AccuracyRecord>,
) -> Result<(), ExperimentError> {
    let accuracy = evaluate_accuracy(params, examples)?;
    for (quantifier, accuracy) in accuracy {
        records.push(AccuracyRecord {
            condition: plan.condition,
            run: plan.run,
            trial: plan.trial,
            step,
            quantifier,
            split,
            accuracy,
        });
    }
    Ok(())
}

/// Runs `runs × trials` independent trials of one condition in parallel and
/// concatenates their records in (run, trial) order.
pub fn run_experiment(
    condition: ConditionId,
    runs: u32,
    trials: u32,
    base: &BaseConfig,
) -> Result<Vec<AccuracyRecord>, ExperimentError> {
    assert!(runs >= 1 && trials >= 1, "runs and trials must be positive");
    let plans: Vec<TrialPlan> = (1..=runs)
        .flat_map(|run| (1..=trials).map(move |trial| (run, trial)))
        .map(|(run, trial)| base.plan(condition, run, trial))
        .collect();

    let results: Result<Vec<Vec<AccuracyRecord>>, ExperimentError> = plans
        .par_iter()
        .map(|plan| {
            run_trial(plan).map_err(|e| ExperimentError::Trial {
                condition: plan.condition,
                run: plan.run,
                trial: plan.trial,
                source: Box::new(e),
            })
        })
        .collect();

    Ok(results?.into_iter().flatten().collect())
}

/// Median accuracy per (quantifier, step) across the trials of one
/// (condition, run) selection, test split only. An even trial count takes
/// the mean of the two middle values.
pub fn median_curves(
    records: &[AccuracyRecord],
    condition: ConditionId,
    run: u32,
) -> Result<BTreeMap<Quantifier, Vec<(u32, f64)>>, ExperimentError> {
    let mut grouped: BTreeMap<(Quantifier, u32), Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.condition == condition && r.run == run && r.split == Split::Test {
            grouped.entry((r.quantifier, r.step)).or_default().push(r.accuracy);
        }
    }
    if grouped.is_empty() {
        return Err(ExperimentError::EmptySelection { condition, run });
    }

    let mut curves: BTreeMap<Quantifier, Vec<(u32, f64)>> = BTreeMap::new();
    for ((quantifier, step), mut values) in grouped {
        values.sort_by(|a, b| a.partial_cmp(b).expect("accuracies are finite"));
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        curves.entry(quantifier).or_default().push((step, median));
    }
    Ok(curves)
}

/// Writes records as CSV, sorted by (condition, run, trial, step,
/// quantifier, split), with accuracies at 6 decimal places.
pub fn write_records(path: &Path, records: &[AccuracyRecord]) -> Result<(), ExperimentError> {
    let csv_err = |source| ExperimentError::Csv { path: path.display().to_string(), source };
    let mut sorted: Vec<&AccuracyRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.condition, r.run, r.trial, r.step, r.quantifier, r.split));

    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["condition", "run", "trial", "step", "quantifier", "split", "accuracy"])
        .map_err(csv_err)?;
    for r in sorted {
        w.write_record([
            r.condition.letter().to_string(),
            r.run.to_string(),
            r.trial.to_string(),
            r.step.to_string(),
            r.quantifier.name().to_string(),
            r.split.name().to_string(),
            format!("{:.6}", r.accuracy),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| ExperimentError::Io { path: path.display().to_string(), source: e })
}

/// Reads a records CSV produced by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<AccuracyRecord>, ExperimentError> {
    let csv_err = |source| ExperimentError::Csv { path: path.display().to_string(), source };
    let parse_err = |line: usize, message: String| ExperimentError::RecordParse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let row = row.map_err(csv_err)?;
        if row.len() != 7 {
            return Err(parse_err(line, format!("expected 7 fields, got {}", row.len())));
        }
        let condition = row[0].parse::<ConditionId>().map_err(|e| parse_err(line, e))?;
        let run = row[1].parse::<u32>().map_err(|e| parse_err(line, e.to_string()))?;
        let trial = row[2].parse::<u32>().map_err(|e| parse_err(line, e.to_string()))?;
        let step = row[3].parse::<u32>().map_err(|e| parse_err(line, e.to_string()))?;
        let quantifier = Quantifier::from_name(&row[4])
            .ok_or_else(|| parse_err(line, format!("unknown quantifier {:?}", &row[4])))?;
        let split = Split::from_name(&row[5])
            .ok_or_else(|| parse_err(line, format!("unknown split {:?}", &row[5])))?;
        let accuracy = row[6].parse::<f64>().map_err(|e| parse_err(line, e.to_string()))?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(parse_err(line, format!("accuracy {accuracy} outside [0, 1]")));
        }
        records.push(AccuracyRecord { condition, run, trial, step, quantifier, split, accuracy });
    }
    Ok(records)
}
