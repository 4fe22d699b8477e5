//! End-to-end tests of the `aglab` binary: exit codes, artifacts, and
//! report shapes.

use std::path::Path;
use std::process::{Command, Output};

fn aglab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aglab"))
        .args(args)
        .current_dir(dir)
        .env_remove("AGLAB_RUN_DIR")
        .output()
        .expect("binary runs")
}

fn write_grammar_config(dir: &Path, dative_rate: f64) -> std::path::PathBuf {
    let path = dir.join("grammar.json");
    let config = format!(
        r#"{{
  "sentence_count": 400,
  "seed": 11,
  "grammar": {{
    "noun_lexicon_size": 30,
    "a_final_lemma_fraction": 0.3,
    "dative_rate": {dative_rate},
    "ergative_omission_rate": 0.55,
    "transitive_rate": 0.5,
    "multi_clause_rate": 0.3,
    "max_clauses": 2,
    "word_order_shuffle": true,
    "seed": 0
  }}
}}"#
    );
    std::fs::write(&path, config).unwrap();
    path
}

fn write_pipeline_config(dir: &Path, task: &str, ablations: &str) -> std::path::PathBuf {
    let path = dir.join(format!("pipeline-{task}.json"));
    let config = format!(
        r#"{{
  "seed": 13,
  "sentence_count": 300,
  "task": "{task}",
  "ablations": [{ablations}],
  "grammar": {{
    "noun_lexicon_size": 25,
    "a_final_lemma_fraction": 0.3,
    "dative_rate": 0.05,
    "ergative_omission_rate": 0.55,
    "transitive_rate": 0.5,
    "multi_clause_rate": 0.3,
    "max_clauses": 2,
    "word_order_shuffle": true,
    "seed": 0
  }},
  "model": {{ "dims": {{ "embed": 10, "hidden": 8, "head_hidden": 6 }} }},
  "train": {{ "max_updates": 30, "eval_every": 15, "patience": 3, "batch_size": 16 }}
}}"#
    );
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn gen_corpus_writes_files_and_consistent_stats() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_grammar_config(dir.path(), 0.05);
    let out = dir.path().join("corpus-out");
    let res = aglab(
        &[
            "gen-corpus",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(res.status.success(), "{res:?}");
    assert!(out.join("corpus.jsonl").exists());
    assert!(out.join("lexicon.tsv").exists());
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n_sentences"], 400);

    // recount the dative rate from the emitted JSONL
    let text = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    let mut with_dative = 0usize;
    let mut total = 0usize;
    for line in text.lines() {
        let s: serde_json::Value = serde_json::from_str(line).unwrap();
        total += 1;
        let has = s["clauses"].as_array().unwrap().iter().any(|c| {
            c["args"]
                .as_array()
                .unwrap()
                .iter()
                .any(|a| a[1] == "dat")
        });
        with_dative += usize::from(has);
    }
    assert_eq!(total, 400);
    let recounted = with_dative as f64 / total as f64;
    let reported = stats["dative_sentence_rate"].as_f64().unwrap();
    assert!((recounted - reported).abs() < 1e-12);
}

#[test]
fn invalid_ratio_exits_2_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_grammar_config(dir.path(), 1.5);
    let res = aglab(
        &["gen-corpus", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("dative_rate"), "{stderr}");
}

#[test]
fn unknown_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let res = aglab(&["gen-corpus", "--nonsense"], dir.path());
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verb_pipeline_report_has_role_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(dir.path(), "verb", "");
    let out = dir.path().join("run-verb");
    let res = aglab(
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(res.status.success(), "{res:?}");
    let stdout = String::from_utf8_lossy(&res.stdout);
    for col in ["Ergative A/R", "Absolutive A/R", "Dative A/R"] {
        assert!(stdout.contains(col), "missing {col} in:\n{stdout}");
    }
    assert!(out.join("metrics/eval.json").exists());
    assert!(out.join("checkpoints/best.ckpt").exists());
}

#[test]
fn suffix_no_verb_report_lists_all_classes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(dir.path(), "suffix", "\"no-verb\"");
    let out = dir.path().join("run-suffix");
    let res = aglab(
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(res.status.success(), "{res:?}");
    let stdout = String::from_utf8_lossy(&res.stdout);
    for class in ["-a", "-ak", "-ek", "-ari", "-ei", "Any"] {
        assert!(stdout.contains(class), "missing {class} in:\n{stdout}");
    }
}

#[test]
fn no_verb_on_verb_task_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(dir.path(), "verb", "\"no-verb\"");
    let res = aglab(
        &["pipeline", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn probe_skips_missing_layers_and_validates_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(dir.path(), "suffix", "");
    let out = dir.path().join("run-probe");
    let res = aglab(
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(res.status.success(), "{res:?}");
    let res = aglab(
        &[
            "probe",
            "--run",
            out.to_str().unwrap(),
            "--seeds",
            "2",
            "--max-records",
            "400",
        ],
        dir.path(),
    );
    assert!(res.status.success(), "{res:?}");
    let stdout = String::from_utf8_lossy(&res.stdout);
    // synthetic corpora carry no dependency labels: skipped, exit 0
    assert!(stdout.contains("dep-label"), "{stdout}");
    assert!(stdout.contains("skipped"), "{stdout}");
    assert!(stdout.contains("linear"), "{stdout}");
    assert!(stdout.contains("majority"), "{stdout}");

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("reports/probe_report.json")).unwrap(),
    )
    .unwrap();
    let schema: serde_json::Value = serde_json::from_str(include_str!(
        "../schemas/probe_report.schema.json"
    ))
    .unwrap();
    schema_check::validate(&schema, &report).unwrap();
}

#[test]
fn report_rerenders_from_eval_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_pipeline_config(dir.path(), "verb", "");
    let out = dir.path().join("run-report");
    let res = aglab(
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(res.status.success());
    let res = aglab(&["report", "--run", out.to_str().unwrap()], dir.path());
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("Ergative"));
}

#[test]
fn aglab_run_dir_env_sets_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_grammar_config(dir.path(), 0.05);
    let root = dir.path().join("env-root");
    let res = Command::new(env!("CARGO_BIN_EXE_aglab"))
        .args(["gen-corpus", "--config", config.to_str().unwrap()])
        .current_dir(dir.path())
        .env("AGLAB_RUN_DIR", root.to_str().unwrap())
        .output()
        .unwrap();
    assert!(res.status.success(), "{res:?}");
    assert!(root.join("corpus.jsonl").exists());
}

/// Minimal JSON-Schema subset validator (type, required, properties,
/// items, $ref into definitions, union types).
mod schema_check {
    use serde_json::Value;

    pub fn validate(schema: &Value, value: &Value) -> Result<(), String> {
        let root = schema;
        check(schema, value, root, "$")
    }

    fn resolve<'a>(node: &'a Value, root: &'a Value) -> &'a Value {
        if let Some(r) = node.get("$ref").and_then(Value::as_str) {
            let path = r.trim_start_matches("#/");
            let mut cur = root;
            for part in path.split('/') {
                cur = cur.get(part).expect("dangling $ref");
            }
            cur
        } else {
            node
        }
    }

    fn type_matches(t: &str, value: &Value) -> bool {
        match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        }
    }

    fn check(node: &Value, value: &Value, root: &Value, at: &str) -> Result<(), String> {
        let node = resolve(node, root);
        if let Some(ty) = node.get("type") {
            let ok = match ty {
                Value::String(t) => type_matches(t, value),
                Value::Array(ts) => ts
                    .iter()
                    .filter_map(Value::as_str)
                    .any(|t| type_matches(t, value)),
                _ => true,
            };
            if !ok {
                return Err(format!("{at}: type mismatch (expected {ty}, got {value})"));
            }
        }
        if let Some(required) = node.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if value.get(key).is_none() {
                    return Err(format!("{at}: missing required key {key:?}"));
                }
            }
        }
        if let (Some(props), Some(obj)) = (
            node.get("properties").and_then(Value::as_object),
            value.as_object(),
        ) {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    check(sub, v, root, &format!("{at}.{key}"))?;
                }
            }
        }
        if let (Some(items), Some(arr)) = (node.get("items"), value.as_array()) {
            for (i, v) in arr.iter().enumerate() {
                check(items, v, root, &format!("{at}[{i}]"))?;
            }
        }
        Ok(())
    }
}
