//! Deterministic generation of balanced labeled datasets and their
//! bit-exact encoding into network input sequences.
//!
//! Scenes are sampled uniformly over the zone-count tuples satisfying the
//! requested label, then laid out in a uniformly random slot order. Every
//! per-quantifier stream is derived from the dataset seed, so a spec
//! regenerates byte-identical files forever.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quant::{self, evaluate, zone_counts, Quantifier, Scene, Zone, ZoneCounts, SCENE_SIZE};
use crate::seeds;

/// One-hot width of the quantifier part of each timestep.
pub const QUANTIFIER_DIM: usize = 10;
/// One-hot width of the entity part of each timestep (all-zero for padding).
pub const ENTITY_DIM: usize = 4;
/// Total width of one timestep vector.
pub const INPUT_WIDTH: usize = QUANTIFIER_DIM + ENTITY_DIM;

/// Encodes an entity's zone as a 4-component indicator in zone order
/// (A\B, A∩B, B\A, outside); padding encodes as all zeros.
pub fn encode_entity(zone: Zone) -> [u8; ENTITY_DIM] {
    match zone {
        Zone::AOnly => [1, 0, 0, 0],
        Zone::AAndB => [0, 1, 0, 0],
        Zone::BOnly => [0, 0, 1, 0],
        Zone::Outside => [0, 0, 0, 1],
        Zone::Null => [0, 0, 0, 0],
    }
}

/// One-hot encodes a quantifier at its inventory row index.
pub fn encode_quantifier(q: Quantifier) -> [u8; QUANTIFIER_DIM] {
    let mut v = [0u8; QUANTIFIER_DIM];
    v[q.index()] = 1;
    v
}

/// A 20-timestep sequence of 14-component binary vectors: the quantifier
/// one-hot repeated at every step, concatenated with each slot's entity
/// encoding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InputSequence {
    rows: [[u8; INPUT_WIDTH]; SCENE_SIZE],
}

impl InputSequence {
    pub fn rows(&self) -> &[[u8; INPUT_WIDTH]; SCENE_SIZE] {
        &self.rows
    }

    /// Converts the binary rows to a dense scalar matrix.
    pub fn to_encoded<F: Float>(&self) -> EncodedSeq<F> {
        let mut seq = EncodedSeq::zeros(SCENE_SIZE, INPUT_WIDTH);
        self.encode_into(&mut seq);
        seq
    }

    /// Writes the sequence into an existing buffer, reshaping it as needed.
    pub fn encode_into<F: Float>(&self, out: &mut EncodedSeq<F>) {
        out.resize(SCENE_SIZE, INPUT_WIDTH);
        for (t, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(t);
            for (d, &bit) in dst.iter_mut().zip(row.iter()) {
                *d = if bit == 1 { F::one() } else { F::zero() };
            }
        }
    }
}

/// Builds the network input for a (quantifier, scene) pair: timestep t is
/// the quantifier one-hot followed by the encoding of slot t.
pub fn build_sequence(q: Quantifier, scene: &Scene) -> InputSequence {
    let quant_part = encode_quantifier(q);
    let mut rows = [[0u8; INPUT_WIDTH]; SCENE_SIZE];
    for (row, zone) in rows.iter_mut().zip(scene.slots()) {
        row[..QUANTIFIER_DIM].copy_from_slice(&quant_part);
        row[QUANTIFIER_DIM..].copy_from_slice(&encode_entity(*zone));
    }
    InputSequence { rows }
}

/// Dense row-major (timesteps × width) scalar sequence, the network's
/// input tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSeq<F> {
    steps: usize,
    width: usize,
    data: Vec<F>,
}

impl<F: Float> EncodedSeq<F> {
    pub fn zeros(steps: usize, width: usize) -> EncodedSeq<F> {
        EncodedSeq { steps, width, data: vec![F::zero(); steps * width] }
    }

    /// Builds a sequence from explicit rows; all rows must share one width.
    pub fn from_rows(rows: &[Vec<F>]) -> Option<EncodedSeq<F>> {
        let width = rows.first()?.len();
        if rows.iter().any(|r| r.len() != width) {
            return None;
        }
        let mut seq = EncodedSeq::zeros(rows.len(), width);
        for (t, row) in rows.iter().enumerate() {
            seq.row_mut(t).copy_from_slice(row);
        }
        Some(seq)
    }

    pub fn resize(&mut self, steps: usize, width: usize) {
        self.steps = steps;
        self.width = width;
        self.data.resize(steps * width, F::zero());
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, t: usize) -> &[F] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [F] {
        &mut self.data[t * self.width..(t + 1) * self.width]
    }
}

/// A labeled data point. The label always agrees with the quantifier's
/// relation on the scene's zone counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Example {
    pub quantifier: Quantifier,
    pub scene: Scene,
    pub label: bool,
}

/// Requested per-quantifier item counts for the two splits, plus the seed,
/// the target fraction of true labels, and the scene distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub train_counts: Vec<(Quantifier, usize)>,
    pub test_counts: Vec<(Quantifier, usize)>,
    pub seed: u64,
    pub balance: f64,
    pub distribution: SceneDistribution,
}

impl DatasetSpec {
    pub fn new(
        train_counts: Vec<(Quantifier, usize)>,
        test_counts: Vec<(Quantifier, usize)>,
        seed: u64,
    ) -> DatasetSpec {
        DatasetSpec {
            train_counts,
            test_counts,
            seed,
            balance: 0.5,
            distribution: SceneDistribution::SlotIid,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("balance {0} is outside [0, 1]")]
    InvalidBalance(f64),
    #[error("no scene of {SCENE_SIZE} slots satisfies {quantifier}={target}")]
    UnsatisfiableTarget { quantifier: Quantifier, target: bool },
    #[error("gave up deduplicating {quantifier} after {budget} rejected samples for one item")]
    RetryBudgetExhausted { quantifier: Quantifier, budget: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown quantifier name {name:?}")]
    UnknownQuantifier { line: usize, name: String },
    #[error("line {line}: expected {SCENE_SIZE} slots, got {got}")]
    BadSlotCount { line: usize, got: usize },
    #[error("line {line}: invalid zone code {code}")]
    BadZoneCode { line: usize, code: u8 },
    #[error("line {line}: label must be 0 or 1, got {got}")]
    BadLabel { line: usize, got: u8 },
    #[error("line {line}: label disagrees with the quantifier relation")]
    LabelMismatch { line: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// How scene counts are drawn among the tuples satisfying a target label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneDistribution {
    /// Every satisfying zone-count tuple equally likely.
    UniformCounts,
    /// Each slot independently uniform over the five states (four zones or
    /// padding), conditioned on the target label. Equivalent to weighting
    /// each satisfying tuple by its multinomial coefficient.
    SlotIid,
}

impl SceneDistribution {
    pub fn name(self) -> &'static str {
        match self {
            SceneDistribution::UniformCounts => "uniform_counts",
            SceneDistribution::SlotIid => "slot_iid",
        }
    }

    pub fn from_name(s: &str) -> Option<SceneDistribution> {
        match s {
            "uniform_counts" => Some(SceneDistribution::UniformCounts),
            "slot_iid" => Some(SceneDistribution::SlotIid),
            _ => None,
        }
    }
}

struct SatisfyingTable {
    counts: Vec<ZoneCounts>,
    /// Cumulative multinomial weights for slot-iid sampling.
    cumulative: Vec<f64>,
}

/// Ways to lay `counts` out over the 20 slots. Exact in f64 (max value
/// 20!/(4!)^5 ≈ 3.1e11 < 2^53).
fn multinomial_weight(counts: ZoneCounts) -> f64 {
    let mut remaining = SCENE_SIZE as u64;
    let mut weight = 1u64;
    for n in [counts.a_only, counts.ab, counts.b_only, counts.outside, counts.null] {
        for i in 1..=n as u64 {
            weight = weight * (remaining - i + 1) / i;
        }
        remaining -= n as u64;
    }
    weight as f64
}

/// Count tuples at total 20 satisfying each (quantifier, label), with their
/// cumulative slot-iid weights, computed once per process.
fn satisfying_counts(q: Quantifier, target: bool) -> &'static SatisfyingTable {
    static TABLES: OnceLock<Vec<SatisfyingTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut raw = vec![Vec::new(); QUANTIFIER_DIM * 2];
        for counts in quant::enumerate_counts(SCENE_SIZE as u8) {
            for q in Quantifier::ALL {
                let value = evaluate(q, counts);
                raw[q.index() * 2 + value as usize].push(counts);
            }
        }
        raw.into_iter()
            .map(|counts| {
                let mut total = 0.0;
                let cumulative = counts
                    .iter()
                    .map(|&c| {
                        total += multinomial_weight(c);
                        total
                    })
                    .collect();
                SatisfyingTable { counts, cumulative }
            })
            .collect()
    });
    &tables[q.index() * 2 + target as usize]
}

fn scene_from_counts(rng: &mut impl Rng, counts: ZoneCounts) -> Scene {
    let mut slots = [Zone::Null; SCENE_SIZE];
    let mut at = 0;
    for (zone, n) in [
        (Zone::AOnly, counts.a_only),
        (Zone::AAndB, counts.ab),
        (Zone::BOnly, counts.b_only),
        (Zone::Outside, counts.outside),
        (Zone::Null, counts.null),
    ] {
        slots[at..at + n as usize].fill(zone);
        at += n as usize;
    }
    slots.shuffle(rng);
    Scene::new(slots)
}

/// Samples a scene with `evaluate(q, zone_counts(scene)) == target`: counts
/// uniform over all satisfying tuples, slot order a uniform permutation.
pub fn sample_scene(
    rng: &mut impl Rng,
    q: Quantifier,
    target: bool,
) -> Result<Scene, DataError> {
    let table = satisfying_counts(q, target);
    if table.counts.is_empty() {
        return Err(DataError::UnsatisfiableTarget { quantifier: q, target });
    }
    let counts = table.counts[rng.gen_range(0..table.counts.len())];
    Ok(scene_from_counts(rng, counts))
}

/// Samples a scene under the chosen distribution.
pub fn sample_scene_with(
    rng: &mut impl Rng,
    q: Quantifier,
    target: bool,
    distribution: SceneDistribution,
) -> Result<Scene, DataError> {
    match distribution {
        SceneDistribution::UniformCounts => sample_scene(rng, q, target),
        SceneDistribution::SlotIid => {
            let table = satisfying_counts(q, target);
            if table.counts.is_empty() {
                return Err(DataError::UnsatisfiableTarget { quantifier: q, target });
            }
            let total = *table.cumulative.last().unwrap();
            let pick = rng.gen_range(0.0..total);
            let idx = table.cumulative.partition_point(|&c| c <= pick);
            let counts = table.counts[idx.min(table.counts.len() - 1)];
            Ok(scene_from_counts(rng, counts))
        }
    }
}

/// Label sequence for one quantifier: the requested balance with any
/// rounding surplus going to true, interleaved T/F for an even spread.
fn balanced_labels(n: usize, balance: f64) -> Vec<bool> {
    let n_true = ((n as f64 * balance) + 0.5).floor() as usize;
    let n_true = n_true.min(n);
    let mut labels = Vec::with_capacity(n);
    let (mut trues, mut falses) = (n_true, n - n_true);
    while trues + falses > 0 {
        if trues > 0 {
            labels.push(true);
            trues -= 1;
        }
        if falses > 0 {
            labels.push(false);
            falses -= 1;
        }
    }
    labels
}

const DEDUP_RETRY_BUDGET: usize = 10_000;

/// Generates both splits of a dataset.
///
/// Per quantifier, labels follow the spec balance; the test split never
/// repeats an exact (quantifier, slot sequence) seen in training. Output is
/// a pure function of the spec.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset, DataError> {
    if !(0.0..=1.0).contains(&spec.balance) || !spec.balance.is_finite() {
        return Err(DataError::InvalidBalance(spec.balance));
    }

    let mut train = Vec::new();
    for &(q, n) in &spec.train_counts {
        let seed = seeds::derive(spec.seed, &[seeds::TAG_TRAIN_SPLIT, q.index() as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for label in balanced_labels(n, spec.balance) {
            let scene = sample_scene_with(&mut rng, q, label, spec.distribution)?;
            train.push(Example { quantifier: q, scene, label });
        }
    }

    let train_keys: HashSet<(Quantifier, Scene)> =
        train.iter().map(|ex| (ex.quantifier, ex.scene)).collect();

    let mut test = Vec::new();
    for &(q, n) in &spec.test_counts {
        let seed = seeds::derive(spec.seed, &[seeds::TAG_TEST_SPLIT, q.index() as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for label in balanced_labels(n, spec.balance) {
            let mut rejections = 0;
            let scene = loop {
                let candidate = sample_scene_with(&mut rng, q, label, spec.distribution)?;
                if !train_keys.contains(&(q, candidate)) {
                    break candidate;
                }
                rejections += 1;
                if rejections >= DEDUP_RETRY_BUDGET {
                    return Err(DataError::RetryBudgetExhausted {
                        quantifier: q,
                        budget: DEDUP_RETRY_BUDGET,
                    });
                }
            };
            test.push(Example { quantifier: q, scene, label });
        }
    }

    Ok(Dataset { train, test })
}

/// On-disk record: one JSON object per line.
#[derive(Serialize, Deserialize)]
struct Row {
    q: String,
    slots: Vec<u8>,
    label: u8,
}

/// Writes examples as newline-delimited JSON records.
pub fn write_dataset(path: &Path, examples: &[Example]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in examples {
        let row = Row {
            q: ex.quantifier.name().to_string(),
            slots: ex.scene.slots().iter().map(|z| z.code()).collect(),
            label: ex.label as u8,
        };
        let line = serde_json::to_string(&row).expect("row serialization cannot fail");
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads a dataset file, validating slot counts, zone codes, and label
/// consistency with the quantifier relation. Errors carry 1-based line
/// numbers.
pub fn read_dataset(path: &Path) -> Result<Vec<Example>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line.map_err(|e| io_err(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&text)
            .map_err(|e| DataError::Parse { line: line_no, message: e.to_string() })?;
        let quantifier = Quantifier::from_name(&row.q)
            .ok_or(DataError::UnknownQuantifier { line: line_no, name: row.q })?;
        if row.slots.len() != SCENE_SIZE {
            return Err(DataError::BadSlotCount { line: line_no, got: row.slots.len() });
        }
        let mut slots = [Zone::Null; SCENE_SIZE];
        for (slot, &code) in slots.iter_mut().zip(row.slots.iter()) {
            *slot = Zone::from_code(code).ok_or(DataError::BadZoneCode { line: line_no, code })?;
        }
        let label = match row.label {
            0 => false,
            1 => true,
            got => return Err(DataError::BadLabel { line: line_no, got }),
        };
        let scene = Scene::new(slots);
        if evaluate(quantifier, zone_counts(&scene)) != label {
            return Err(DataError::LabelMismatch { line: line_no });
        }
        examples.push(Example { quantifier, scene, label });
    }
    Ok(examples)
}
