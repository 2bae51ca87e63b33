//! Checkpoint files: a JSON document with a version header, the network
//! config, and nested numeric arrays per parameter tensor.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use num_traits::Float;
use serde_json::{json, Map, Value};

use super::{ModelParams, NetConfig, NnError};

const FORMAT_VERSION: &str = "1";

fn io_err(path: &Path, source: std::io::Error) -> NnError {
    NnError::Io { path: path.display().to_string(), source }
}

fn mat_to_value<F: Float>(mat: &super::Mat<F>) -> Value {
    let rows: Vec<Value> = (0..mat.rows())
        .map(|r| Value::from(mat.row(r).iter().map(|v| v.to_f64().unwrap()).collect::<Vec<f64>>()))
        .collect();
    Value::from(rows)
}

fn vec_to_value<F: Float>(v: &[F]) -> Value {
    Value::from(v.iter().map(|x| x.to_f64().unwrap()).collect::<Vec<f64>>())
}

/// Writes parameters and their config. The tensor keys are proj.w, proj.b,
/// lstm.<layer>.{wi,wf,wc,wo,bi,bf,bc,bo}, head.w, head.b.
pub fn save_checkpoint<F: Float>(
    path: &Path,
    params: &ModelParams<F>,
    cfg: &NetConfig,
) -> Result<(), NnError> {
    let mut tensors = Map::new();
    let names = ModelParams::<F>::tensor_names(params.num_layers());
    let mut name_iter = names.iter();

    tensors.insert(name_iter.next().unwrap().clone(), mat_to_value(&params.proj_w));
    tensors.insert(name_iter.next().unwrap().clone(), vec_to_value(&params.proj_b));
    for layer in &params.layers {
        for mat in [&layer.wi, &layer.wf, &layer.wc, &layer.wo] {
            tensors.insert(name_iter.next().unwrap().clone(), mat_to_value(mat));
        }
        for bias in [&layer.bi, &layer.bf, &layer.bc, &layer.bo] {
            tensors.insert(name_iter.next().unwrap().clone(), vec_to_value(bias));
        }
    }
    tensors.insert(name_iter.next().unwrap().clone(), mat_to_value(&params.head_w));
    tensors.insert(name_iter.next().unwrap().clone(), vec_to_value(&params.head_b));

    let doc = json!({
        "version": FORMAT_VERSION,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "params": Value::Object(tensors),
    });

    let file = File::create(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &doc)
        .map_err(|e| NnError::CheckpointParse(e.to_string()))
}

fn tensor_err(key: &str, problem: impl Into<String>) -> NnError {
    NnError::CheckpointTensor { key: key.to_string(), problem: problem.into() }
}

fn fill_vec<F: Float>(key: &str, value: &Value, out: &mut [F]) -> Result<(), NnError> {
    let arr = value.as_array().ok_or_else(|| tensor_err(key, "expected an array"))?;
    if arr.len() != out.len() {
        return Err(tensor_err(key, format!("expected {} values, got {}", out.len(), arr.len())));
    }
    for (o, v) in out.iter_mut().zip(arr) {
        let x = v.as_f64().ok_or_else(|| tensor_err(key, "expected a number"))?;
        *o = F::from(x).ok_or_else(|| tensor_err(key, "value not representable"))?;
    }
    Ok(())
}

fn fill_mat<F: Float>(key: &str, value: &Value, out: &mut super::Mat<F>) -> Result<(), NnError> {
    let rows = value.as_array().ok_or_else(|| tensor_err(key, "expected an array of rows"))?;
    if rows.len() != out.rows() {
        return Err(tensor_err(key, format!("expected {} rows, got {}", out.rows(), rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        fill_vec(key, row, out.row_mut(r))?;
    }
    Ok(())
}

/// Loads a checkpoint, validating the version and that every tensor matches
/// the shapes implied by the file's own config header.
pub fn load_checkpoint<F: Float>(path: &Path) -> Result<(ModelParams<F>, NetConfig), NnError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let doc: Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| NnError::CheckpointParse(e.to_string()))?;

    let version = doc.get("version").and_then(Value::as_str).unwrap_or("");
    if version != FORMAT_VERSION {
        return Err(NnError::CheckpointVersion(version.to_string()));
    }

    let cfg: NetConfig = serde_json::from_value(
        doc.get("config").cloned().ok_or_else(|| NnError::CheckpointParse("missing config".into()))?,
    )
    .map_err(|e| NnError::CheckpointParse(e.to_string()))?;

    let tensors = doc
        .get("params")
        .and_then(Value::as_object)
        .ok_or_else(|| NnError::CheckpointParse("missing params object".into()))?;

    let mut params: ModelParams<F> = ModelParams::zeros(&cfg);
    let names = ModelParams::<F>::tensor_names(cfg.num_layers);
    let fetch = |key: &str| -> Result<&Value, NnError> {
        tensors.get(key).ok_or_else(|| tensor_err(key, "missing"))
    };

    let mut name_iter = names.iter();
    let key = name_iter.next().unwrap();
    fill_mat(key, fetch(key)?, &mut params.proj_w)?;
    let key = name_iter.next().unwrap();
    fill_vec(key, fetch(key)?, &mut params.proj_b)?;
    for layer in &mut params.layers {
        for mat in [&mut layer.wi, &mut layer.wf, &mut layer.wc, &mut layer.wo] {
            let key = name_iter.next().unwrap();
            fill_mat(key, fetch(key)?, mat)?;
        }
        for bias in [&mut layer.bi, &mut layer.bf, &mut layer.bc, &mut layer.bo] {
            let key = name_iter.next().unwrap();
            fill_vec(key, fetch(key)?, bias)?;
        }
    }
    let key = name_iter.next().unwrap();
    fill_mat(key, fetch(key)?, &mut params.head_w)?;
    let key = name_iter.next().unwrap();
    fill_vec(key, fetch(key)?, &mut params.head_b)?;

    Ok((params, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let cfg = NetConfig { seed: 123, ..NetConfig::default() };
        let params: ModelParams<f64> = init_params(&cfg);

        save_checkpoint(&path, &params, &cfg).unwrap();
        let (loaded, loaded_cfg) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(loaded_cfg, cfg);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let cfg = NetConfig::default();
        let params: ModelParams<f64> = init_params(&cfg);
        save_checkpoint(&path, &params, &cfg).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(NnError::CheckpointParse(_))));
    }

    #[test]
    fn tensor_shape_mismatch_is_reported_with_its_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let cfg = NetConfig::default();
        let params: ModelParams<f64> = init_params(&cfg);
        save_checkpoint(&path, &params, &cfg).unwrap();

        // Claim a different hidden width in the header; tensors no longer fit.
        let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        doc["config"]["hidden_width"] = Value::from(4);
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        match load_checkpoint::<f64>(&path) {
            Err(NnError::CheckpointTensor { key, .. }) => assert!(key.starts_with("lstm.0.")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{\"version\":\"9\",\"config\":{},\"params\":{}}").unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(NnError::CheckpointVersion(_))));
    }
}
