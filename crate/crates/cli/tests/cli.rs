//! End-to-end tests of the quantlearn binary: exit codes, file outputs,
//! determinism, and resumability.

use std::path::Path;
use std::process::{Command, Output};

fn quantlearn(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quantlearn"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

#[test]
fn verify_passes_with_exit_zero() {
    let out = quantlearn(&["verify"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("CONSERVATIVE").count(), 5);
    assert!(text.contains("5/10 conservative, 10/10 dualities hold"));
}

#[test]
fn verify_at_zero_total_is_vacuous() {
    let out = quantlearn(&["verify", "--max-total", "0"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn verify_detects_a_corrupted_relation() {
    let out = quantlearn(&["verify"], &[("QUANTLEARN_TEST_CORRUPT_RELATION", "most_ab")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(quantlearn(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(quantlearn(&["verify", "--no-such-flag"], &[]).status.code(), Some(1));
    assert_eq!(quantlearn(&["verify", "--max-total", "21"], &[]).status.code(), Some(1));
    let out = quantlearn(&["gen", "--set", "experiment.conditions="], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no conditions"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(quantlearn(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn gen_writes_desk_scale_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("one");
    let out_b = dir.path().join("two");
    for out in [&out_a, &out_b] {
        let result = quantlearn(
            &[
                "gen",
                "--profile",
                "desk",
                "--out",
                out.to_str().unwrap(),
                "--set",
                "experiment.conditions=a",
            ],
            &[],
        );
        assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
        assert!(stdout(&result).contains("2550 train / 450 test"));
    }
    for file in ["a_train.jsonl", "a_test.jsonl", "manifest.json"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["conditions"]["a"]["train_items"], 2550);
    assert_eq!(manifest["conditions"]["a"]["test_items"], 450);
}

#[test]
fn seed_env_variable_overrides_base_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = quantlearn(
        &[
            "gen",
            "--profile",
            "desk",
            "--out",
            dir.path().to_str().unwrap(),
            "--set",
            "experiment.conditions=a",
        ],
        &[("QUANTLEARN_SEED", "777")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["base_seed"], 777);
}

fn tiny_experiment_args(out: &Path) -> Vec<String> {
    vec![
        "experiment".to_string(),
        "--profile".to_string(),
        "desk".to_string(),
        "--out".to_string(),
        out.display().to_string(),
        "--set".to_string(),
        "experiment.conditions=a".to_string(),
        "--set".to_string(),
        "experiment.trials=2".to_string(),
        "--set".to_string(),
        "train.total_steps=11".to_string(),
        "--set".to_string(),
        "train.eval_every=5".to_string(),
        "--jobs".to_string(),
        "2".to_string(),
    ]
}

#[test]
fn experiment_writes_records_and_resumes_from_shards() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let args = tiny_experiment_args(&out_dir);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();

    let first = quantlearn(&args, &[]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let records = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    // Header + 2 trials × 3 eval steps × 6 quantifiers.
    assert_eq!(records.lines().count(), 1 + 2 * 3 * 6);
    assert!(out_dir.join("resolved_config.json").exists());
    assert!(out_dir.join("shards").join("a_r1_t1.csv").exists());

    // Rerun: shards are reused and the merged file is unchanged.
    let second = quantlearn(&args, &[]);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    assert!(stderr(&second).contains("shard exists, skipping"));
    assert_eq!(std::fs::read_to_string(out_dir.join("records.csv")).unwrap(), records);
}

#[test]
fn experiment_refuses_a_conflicting_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let args = tiny_experiment_args(&out_dir);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(quantlearn(&args, &[]).status.code(), Some(0));

    let mut changed = args.clone();
    changed.push("--set");
    changed.push("data.base_seed=7");
    let out = quantlearn(&changed, &[]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("different configuration"));
}

#[test]
fn analyze_and_plot_consume_experiment_records() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let args = tiny_experiment_args(&out_dir);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(quantlearn(&args, &[]).status.code(), Some(0));
    let records = out_dir.join("records.csv");

    let analyze = quantlearn(
        &["analyze", "--records", records.to_str().unwrap(), "--pair", "all_ab:only_ab", "--m", "305"],
        &[],
    );
    assert_eq!(analyze.status.code(), Some(0), "{}", stderr(&analyze));
    let text = stdout(&analyze);
    assert!(text.contains("0.000164"), "threshold echo missing: {text}");
    assert!(out_dir.join("significance_all_ab_vs_only_ab_pooled.csv").exists());
    assert!(out_dir.join("significance_all_ab_vs_only_ab_a.csv").exists());
    let table =
        std::fs::read_to_string(out_dir.join("significance_all_ab_vs_only_ab_pooled.csv")).unwrap();
    assert!(table.starts_with("step,t,df,p,alpha,significant,degenerate\n"));

    let plot = quantlearn(
        &["plot", "--records", records.to_str().unwrap(), "--condition", "a", "--run", "1"],
        &[],
    );
    assert_eq!(plot.status.code(), Some(0), "{}", stderr(&plot));
    let svg = std::fs::read_to_string(out_dir.join("curves_a_run1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
    let medians = std::fs::read_to_string(out_dir.join("curves_a_run1_medians.csv")).unwrap();
    // Header + 6 quantifiers × 3 steps.
    assert_eq!(medians.lines().count(), 1 + 6 * 3);

    // The CSV is exactly the library's median computation.
    let parsed = quantlearn::experiment::read_records(&records).unwrap();
    let curves = quantlearn::experiment::median_curves(
        &parsed,
        quantlearn::experiment::ConditionId::A,
        1,
    )
    .unwrap();
    let mut expected = String::from("quantifier,step,accuracy\n");
    for (q, points) in &curves {
        for (step, accuracy) in points {
            expected.push_str(&format!("{},{step},{accuracy:.6}\n", q.name()));
        }
    }
    assert_eq!(medians, expected);
}

#[test]
fn analyze_rejects_single_trial_records() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let mut args = tiny_experiment_args(&out_dir);
    let pos = args.iter().position(|a| a == "experiment.trials=2").unwrap();
    args[pos] = "experiment.trials=1".to_string();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(quantlearn(&args, &[]).status.code(), Some(0));

    let records = out_dir.join("records.csv");
    let analyze = quantlearn(
        &["analyze", "--records", records.to_str().unwrap(), "--pair", "all_ab:only_ab"],
        &[],
    );
    assert_eq!(analyze.status.code(), Some(3), "{}", stderr(&analyze));
    assert!(stderr(&analyze).contains("at least 2"));
}

#[test]
fn analyze_names_a_missing_quantifier() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    std::fs::write(
        &records,
        "condition,run,trial,step,quantifier,split,accuracy\n\
         a,1,1,1,all_ab,test,0.500000\n\
         a,1,2,1,all_ab,test,0.600000\n",
    )
    .unwrap();
    let out = quantlearn(
        &["analyze", "--records", records.to_str().unwrap(), "--pair", "all_ab:only_ab"],
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("only_ab"));
}

#[test]
fn plot_rejects_an_empty_selection() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.csv");
    std::fs::write(
        &records,
        "condition,run,trial,step,quantifier,split,accuracy\na,1,1,1,all_ab,test,0.500000\n",
    )
    .unwrap();
    let out = quantlearn(
        &["plot", "--records", records.to_str().unwrap(), "--condition", "b", "--run", "1"],
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
}
