//! Run configuration: flat dotted-key JSON files, profiles, `--set`
//! overrides, and the QUANTLEARN_SEED environment variable.
//!
//! Precedence, lowest to highest: built-in defaults, `--profile`, config
//! file, environment, `--set` flags. The fully resolved configuration is
//! echoed to disk next to any results it produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quantlearn::data::SceneDistribution;
use quantlearn::experiment::{BaseConfig, ConditionId, DataProfile};
use quantlearn::nn::{NetConfig, TrainConfig};
use serde_json::{json, Value};

use crate::CliError;

/// Everything a gen or experiment invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub conditions: Vec<ConditionId>,
    pub runs: u32,
    pub trials: u32,
    pub base_seed: u64,
    pub record_train: bool,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub data: DataProfile,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            conditions: ConditionId::ALL.to_vec(),
            runs: 3,
            trials: 30,
            base_seed: 42,
            record_train: false,
            net: NetConfig::default(),
            train: TrainConfig::default(),
            data: DataProfile::paper(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn base_config(&self) -> BaseConfig {
        BaseConfig {
            base_seed: self.base_seed,
            net: self.net.clone(),
            train: self.train.clone(),
            data: self.data,
            record_train: self.record_train,
        }
    }

    /// Applies a named profile: `paper` is the full 3×30 scale, `desk` is
    /// 1 run × 5 trials at one-tenth data scale.
    pub fn apply_profile(&mut self, profile: &str) -> Result<(), CliError> {
        match profile {
            "paper" => {
                self.runs = 3;
                self.trials = 30;
                self.data = DataProfile { balance: self.data.balance, ..DataProfile::paper() };
            }
            "desk" => {
                self.runs = 1;
                self.trials = 5;
                self.data = DataProfile { balance: self.data.balance, ..DataProfile::desk() };
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown profile {other:?} (expected paper or desk)"
                )))
            }
        }
        Ok(())
    }

    /// Applies one flat dotted key.
    pub fn set(&mut self, key: &str, value: &Value) -> Result<(), CliError> {
        let bad = |what: &str| {
            CliError::Usage(format!("config key {key}: expected {what}, got {value}"))
        };
        let as_usize = || value.as_u64().map(|v| v as usize).ok_or_else(|| bad("an integer"));
        let as_u32 = || value.as_u64().map(|v| v as u32).ok_or_else(|| bad("an integer"));
        let as_f64 = || value.as_f64().ok_or_else(|| bad("a number"));
        let as_bool = || value.as_bool().ok_or_else(|| bad("a boolean"));

        match key {
            "experiment.conditions" => self.conditions = parse_conditions(value)?,
            "experiment.runs" => self.runs = as_u32()?,
            "experiment.trials" => self.trials = as_u32()?,
            "experiment.record_train" => self.record_train = as_bool()?,
            "data.base_seed" => {
                self.base_seed = value.as_u64().ok_or_else(|| bad("a 64-bit integer"))?
            }
            "data.balance" => self.data.balance = as_f64()?,
            "data.distribution" => {
                let name = value.as_str().ok_or_else(|| bad("a string"))?;
                self.data.distribution = SceneDistribution::from_name(name).ok_or_else(|| {
                    CliError::Usage(format!(
                        "config key {key}: unknown distribution {name:?} (expected slot_iid or uniform_counts)"
                    ))
                })?;
            }
            "data.train_per_training_quantifier" => self.data.train_per_training = as_usize()?,
            "data.train_per_testing_quantifier" => self.data.train_per_testing = as_usize()?,
            "data.test_per_quantifier" => self.data.test_per = as_usize()?,
            "net.input_width" => self.net.input_width = as_usize()?,
            "net.embed_width" => self.net.embed_width = as_usize()?,
            "net.hidden_width" => self.net.hidden_width = as_usize()?,
            "net.num_layers" => self.net.num_layers = as_usize()?,
            "net.num_classes" => self.net.num_classes = as_usize()?,
            "net.forget_bias" => self.net.forget_bias = as_f64()?,
            "net.init_gain" => self.net.init_gain = as_f64()?,
            "train.batch_size" => self.train.batch_size = as_usize()?,
            "train.total_steps" => self.train.total_steps = as_u32()?,
            "train.eval_every" => self.train.eval_every = as_u32()?,
            "train.learning_rate" => self.train.learning_rate = as_f64()?,
            "train.beta1" => self.train.beta1 = as_f64()?,
            "train.beta2" => self.train.beta2 = as_f64()?,
            "train.adam_eps" => self.train.adam_eps = as_f64()?,
            "train.grad_clip_norm" => {
                self.train.grad_clip_norm = if value.is_null() { None } else { Some(as_f64()?) }
            }
            "train.shuffle_each_epoch" => self.train.shuffle_each_epoch = as_bool()?,
            "out.dir" => {
                self.out_dir =
                    PathBuf::from(value.as_str().ok_or_else(|| bad("a path string"))?)
            }
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// The flat dotted-key form, with sorted keys; this is what the config
    /// echo files contain.
    pub fn to_flat_json(&self) -> Value {
        let mut map = BTreeMap::new();
        let conditions: Vec<String> =
            self.conditions.iter().map(|c| c.letter().to_string()).collect();
        map.insert("experiment.conditions".to_string(), json!(conditions));
        map.insert("experiment.runs".to_string(), json!(self.runs));
        map.insert("experiment.trials".to_string(), json!(self.trials));
        map.insert("experiment.record_train".to_string(), json!(self.record_train));
        map.insert("data.base_seed".to_string(), json!(self.base_seed));
        map.insert("data.balance".to_string(), json!(self.data.balance));
        map.insert("data.distribution".to_string(), json!(self.data.distribution.name()));
        map.insert(
            "data.train_per_training_quantifier".to_string(),
            json!(self.data.train_per_training),
        );
        map.insert(
            "data.train_per_testing_quantifier".to_string(),
            json!(self.data.train_per_testing),
        );
        map.insert("data.test_per_quantifier".to_string(), json!(self.data.test_per));
        map.insert("net.input_width".to_string(), json!(self.net.input_width));
        map.insert("net.embed_width".to_string(), json!(self.net.embed_width));
        map.insert("net.hidden_width".to_string(), json!(self.net.hidden_width));
        map.insert("net.num_layers".to_string(), json!(self.net.num_layers));
        map.insert("net.num_classes".to_string(), json!(self.net.num_classes));
        map.insert("net.forget_bias".to_string(), json!(self.net.forget_bias));
        map.insert("net.init_gain".to_string(), json!(self.net.init_gain));
        map.insert("train.batch_size".to_string(), json!(self.train.batch_size));
        map.insert("train.total_steps".to_string(), json!(self.train.total_steps));
        map.insert("train.eval_every".to_string(), json!(self.train.eval_every));
        map.insert("train.learning_rate".to_string(), json!(self.train.learning_rate));
        map.insert("train.beta1".to_string(), json!(self.train.beta1));
        map.insert("train.beta2".to_string(), json!(self.train.beta2));
        map.insert("train.adam_eps".to_string(), json!(self.train.adam_eps));
        map.insert("train.grad_clip_norm".to_string(), json!(self.train.grad_clip_norm));
        map.insert(
            "train.shuffle_each_epoch".to_string(),
            json!(self.train.shuffle_each_epoch),
        );
        map.insert("out.dir".to_string(), json!(self.out_dir.display().to_string()));
        serde_json::to_value(map).expect("flat config serializes")
    }
}

fn parse_conditions(value: &Value) -> Result<Vec<ConditionId>, CliError> {
    let parse_one = |s: &str| {
        s.parse::<ConditionId>().map_err(CliError::Usage)
    };
    let list: Vec<ConditionId> = match value {
        Value::String(s) => s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(parse_one)
            .collect::<Result<_, _>>()?,
        Value::Array(items) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| CliError::Usage("conditions must be strings".to_string()))
                    .and_then(parse_one)
            })
            .collect::<Result<_, _>>()?,
        other => {
            return Err(CliError::Usage(format!(
                "experiment.conditions must be a string or array, got {other}"
            )))
        }
    };
    if list.is_empty() {
        return Err(CliError::Usage("no conditions".to_string()));
    }
    Ok(list)
}

/// Resolves the final configuration from all sources.
pub fn resolve(
    profile: Option<&str>,
    config_path: Option<&Path>,
    sets: &[String],
    out_override: Option<&Path>,
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();

    if let Some(profile) = profile {
        cfg.apply_profile(profile)?;
    }

    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let object = doc
            .as_object()
            .ok_or_else(|| CliError::Usage(format!("{}: expected a JSON object", path.display())))?;
        for (key, value) in object {
            cfg.set(key, value)?;
        }
    }

    if let Ok(seed) = std::env::var("QUANTLEARN_SEED") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| CliError::Usage(format!("QUANTLEARN_SEED={seed:?} is not a 64-bit integer")))?;
        cfg.base_seed = seed;
    }

    for pair in sets {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {pair:?}")))?;
        // Accept JSON literals; fall back to treating the text as a string.
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        cfg.set(key.trim(), &value)?;
    }

    if let Some(dir) = out_override {
        cfg.out_dir = dir.to_path_buf();
    }

    if cfg.conditions.is_empty() {
        return Err(CliError::Usage("no conditions".to_string()));
    }
    if cfg.runs < 1 || cfg.trials < 1 {
        return Err(CliError::Usage("runs and trials must be at least 1".to_string()));
    }
    Ok(cfg)
}
