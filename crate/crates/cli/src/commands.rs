//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use quantlearn::chart::render_accuracy_chart;
use quantlearn::data::{generate_dataset, write_dataset};
use quantlearn::experiment::{
    condition_spec, median_curves, read_records, run_trial, write_records, AccuracyRecord,
    ConditionId,
};
use quantlearn::quant::{
    check_conservative_with, check_duality_with, check_symmetric_with, evaluate, CheckOutcome,
    Quantifier, ZoneCounts,
};
use quantlearn::seeds;
use quantlearn::stats::{bonferroni, compare_pair, hypothesis_count, write_significance};
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

/// Test-harness hook: inverts the named quantifier's relation so the
/// verification failure path can be exercised end to end.
const CORRUPT_ENV: &str = "QUANTLEARN_TEST_CORRUPT_RELATION";

pub fn verify(max_total: u8) -> Result<(), CliError> {
    if max_total > 20 {
        return Err(CliError::Usage(format!(
            "--max-total must be at most 20, got {max_total}"
        )));
    }

    let corrupted = std::env::var(CORRUPT_ENV).ok().and_then(|name| {
        let q = Quantifier::from_name(&name);
        if q.is_none() {
            eprintln!("warning: {CORRUPT_ENV}={name:?} names no quantifier; ignored");
        }
        q
    });
    let eval_fn = move |q: Quantifier, c: ZoneCounts| {
        let value = evaluate(q, c);
        if Some(q) == corrupted {
            !value
        } else {
            value
        }
    };

    let describe = |outcome: &CheckOutcome, ok_word: &str| match outcome {
        CheckOutcome::Holds => ok_word.to_string(),
        CheckOutcome::Witness(w) => format!("witness {w}"),
    };

    println!(
        "{:<16} {:<14} {:<24} {:<10} symmetry",
        "quantifier", "declared", "conservativity", "duality"
    );
    let mut failures = Vec::new();
    for q in Quantifier::ALL {
        let conservative = check_conservative_with(eval_fn, q, max_total);
        let duality = check_duality_with(eval_fn, q, max_total);
        let symmetry = check_symmetric_with(eval_fn, q, max_total);

        println!(
            "{:<16} {:<14} {:<24} {:<10} {}",
            q.name(),
            if q.conservative() { "conservative" } else { "non-cons." },
            describe(&conservative, "CONSERVATIVE"),
            describe(&duality, "HOLDS").split_whitespace().next().unwrap(),
            describe(&symmetry, "SYMMETRIC"),
        );

        if q.conservative() {
            if let Some(w) = conservative.witness() {
                failures.push(format!(
                    "{}: declared conservative but {w} is a counterexample",
                    q.name()
                ));
            }
        } else if conservative.holds() && max_total >= 2 {
            // Every non-conservative quantifier in the inventory has a
            // counterexample once two entities fit in the model; below
            // that the check is vacuous.
            failures.push(format!(
                "{}: declared non-conservative but no witness found",
                q.name()
            ));
        }
        if !duality.holds() {
            failures.push(format!("{}: duality with {} fails", q.name(), q.dual().name()));
        }
    }

    let conservative_count = Quantifier::ALL
        .iter()
        .filter(|q| check_conservative_with(eval_fn, **q, max_total).holds())
        .count();
    println!(
        "\n{conservative_count}/10 conservative, {}/10 dualities hold (model size {max_total})",
        Quantifier::ALL
            .iter()
            .filter(|q| check_duality_with(eval_fn, **q, max_total).holds())
            .count()
    );

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

pub fn gen(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.out_dir)?;

    let mut manifest_conditions = serde_json::Map::new();
    for &condition in &cfg.conditions {
        let seed = seeds::derive(cfg.base_seed, &[seeds::TAG_GEN, condition.index() as u64]);
        let spec = cfg.data.dataset_spec(&condition_spec(condition), seed);
        let dataset = generate_dataset(&spec)?;

        let train_file = format!("{condition}_train.jsonl");
        let test_file = format!("{condition}_test.jsonl");
        write_dataset(&cfg.out_dir.join(&train_file), &dataset.train)?;
        write_dataset(&cfg.out_dir.join(&test_file), &dataset.test)?;

        println!(
            "condition {condition}: {} train / {} test items",
            dataset.train.len(),
            dataset.test.len()
        );
        manifest_conditions.insert(
            condition.letter().to_string(),
            json!({
                "seed": seed,
                "train_items": dataset.train.len(),
                "test_items": dataset.test.len(),
                "train_file": train_file,
                "test_file": test_file,
            }),
        );
    }

    let manifest = json!({
        "base_seed": cfg.base_seed,
        "balance": cfg.data.balance,
        "distribution": cfg.data.distribution.name(),
        "conditions": manifest_conditions,
    });
    let path = cfg.out_dir.join("manifest.json");
    fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&manifest).unwrap()))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Compares against (or writes) the resolved-config echo in the output
/// directory; refuses to mix results from different configurations.
fn check_config_echo(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.out_dir.join("resolved_config.json");
    let current = format!("{}\n", serde_json::to_string_pretty(&cfg.to_flat_json()).unwrap());
    match fs::read_to_string(&path) {
        Ok(existing) => {
            if existing != current {
                return Err(CliError::Usage(format!(
                    "{} holds results from a different configuration; use a fresh output directory",
                    cfg.out_dir.display()
                )));
            }
            Ok(())
        }
        Err(_) => fs::write(&path, current)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
    }
}

pub fn experiment(cfg: &RunConfig, jobs: Option<usize>) -> Result<(), CliError> {
    use rayon::prelude::*;

    if let Some(jobs) = jobs {
        // Ignore the error from re-initializing in the same process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    ensure_dir(&cfg.out_dir)?;
    check_config_echo(cfg)?;
    let shards_dir = cfg.out_dir.join("shards");
    ensure_dir(&shards_dir)?;

    let base = cfg.base_config();
    let mut plans = Vec::new();
    for &condition in &cfg.conditions {
        for run in 1..=cfg.runs {
            for trial in 1..=cfg.trials {
                plans.push(base.plan(condition, run, trial));
            }
        }
    }
    let total = plans.len();

    let results: Result<Vec<Vec<AccuracyRecord>>, CliError> = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| {
            let shard = shards_dir
                .join(format!("{}_r{}_t{}.csv", plan.condition, plan.run, plan.trial));
            if shard.exists() {
                eprintln!(
                    "[{}/{total}] condition {} run {} trial {}: shard exists, skipping",
                    i + 1,
                    plan.condition,
                    plan.run,
                    plan.trial
                );
                return Ok(read_records(&shard)?);
            }
            eprintln!(
                "[{}/{total}] condition {} run {} trial {}: training",
                i + 1,
                plan.condition,
                plan.run,
                plan.trial
            );
            let records = run_trial(plan).map_err(|e| {
                CliError::Runtime(format!(
                    "condition {} run {} trial {}: {e}",
                    plan.condition, plan.run, plan.trial
                ))
            })?;
            write_records(&shard, &records)?;
            Ok(records)
        })
        .collect();

    let records: Vec<AccuracyRecord> = results?.into_iter().flatten().collect();
    let path = cfg.out_dir.join("records.csv");
    write_records(&path, &records)?;
    println!("wrote {} ({} records, {total} trials)", path.display(), records.len());
    Ok(())
}

fn parse_pair(pair: &str) -> Result<(Quantifier, Quantifier), CliError> {
    let (a, b) = pair
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--pair expects qa:qb, got {pair:?}")))?;
    let qa = Quantifier::from_name(a)
        .ok_or_else(|| CliError::Usage(format!("unknown quantifier {a:?}")))?;
    let qb = Quantifier::from_name(b)
        .ok_or_else(|| CliError::Usage(format!("unknown quantifier {b:?}")))?;
    Ok((qa, qb))
}

pub fn analyze(
    records_path: &Path,
    pair: &str,
    m: Option<usize>,
    alpha0: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (qa, qb) = parse_pair(pair)?;
    let records = read_records(records_path)?;

    for q in [qa, qb] {
        if !records.iter().any(|r| r.quantifier == q) {
            return Err(CliError::Runtime(format!(
                "records contain no accuracies for {}",
                q.name()
            )));
        }
    }

    let conditions: BTreeSet<ConditionId> = records.iter().map(|r| r.condition).collect();
    let steps: BTreeSet<u32> = records.iter().map(|r| r.step).collect();
    let m = m.unwrap_or_else(|| hypothesis_count(conditions.len(), steps.len()));
    let plan = bonferroni(alpha0, m);
    println!(
        "pair {}:{}  m={}  alpha = {}/{} = {:.6}",
        qa.name(),
        qb.name(),
        plan.m,
        plan.alpha0,
        plan.m,
        plan.alpha
    );

    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| records_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    ensure_dir(&out_dir)?;

    let stem = format!("significance_{}_vs_{}", qa.name(), qb.name());
    let mut tables = vec![("pooled".to_string(), records.clone())];
    for &condition in &conditions {
        let subset: Vec<AccuracyRecord> =
            records.iter().filter(|r| r.condition == condition).copied().collect();
        let has_both = [qa, qb]
            .iter()
            .all(|q| subset.iter().any(|r| r.quantifier == *q));
        if has_both {
            tables.push((condition.letter().to_string(), subset));
        }
    }

    for (tag, subset) in tables {
        let table = compare_pair(&subset, qa, qb, &plan)?;
        let significant = table.iter().filter(|row| row.significant()).count();
        let degenerate = table.iter().filter(|row| row.degenerate()).count();
        let path = out_dir.join(format!("{stem}_{tag}.csv"));
        write_significance(&path, &table, &plan)?;
        println!(
            "{tag}: {significant}/{} steps significant at alpha={:.6} ({degenerate} degenerate) -> {}",
            table.len(),
            plan.alpha,
            path.display()
        );
    }
    Ok(())
}

pub fn plot(
    records_path: &Path,
    condition: &str,
    run: u32,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let condition: ConditionId = condition.parse().map_err(CliError::Usage)?;
    let records = read_records(records_path)?;
    let curves = median_curves(&records, condition, run)?;

    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| records_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    ensure_dir(&out_dir)?;

    let title = format!("condition {condition}, run {run} (median over trials)");
    let svg = render_accuracy_chart(&curves, &title);
    let svg_path = out_dir.join(format!("curves_{condition}_run{run}.svg"));
    fs::write(&svg_path, svg)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", svg_path.display())))?;

    let csv_path: PathBuf = out_dir.join(format!("curves_{condition}_run{run}_medians.csv"));
    write_median_csv(&csv_path, &curves)?;

    println!("wrote {} and {}", svg_path.display(), csv_path.display());
    Ok(())
}

fn write_median_csv(
    path: &Path,
    curves: &BTreeMap<Quantifier, Vec<(u32, f64)>>,
) -> Result<(), CliError> {
    let mut text = String::from("quantifier,step,accuracy\n");
    for (q, points) in curves {
        for (step, accuracy) in points {
            text.push_str(&format!("{},{step},{accuracy:.6}\n", q.name()));
        }
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
