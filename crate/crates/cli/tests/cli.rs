use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hwgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwgnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn design(root: &Path, name: &str, source: &str) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(format!("{name}.v")), source).unwrap();
    dir
}

const ONE_ASSIGN: &str = "module m(input a, input b, output y);\n  assign y = a & b;\nendmodule\n";

const TINY_TRAIN: &str = "\
train:
  epochs: 2
  batch_size: 4
  conv_dims: [8]
  mlp_dims: [4]
  mini_test_interval: 2
";

fn gen(set: &str, out: &Path, extra: &[&str]) {
    let mut args = vec!["gen-corpus", "--set", set, "--out", p(out)];
    args.extend_from_slice(extra);
    let o = hwgnn(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn single_assignment_dfg_has_four_nodes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = design(tmp.path(), "and2", ONE_ASSIGN);
    let out = tmp.path().join("graphs");
    let o = hwgnn(&["graph", p(&d), "--kind", "dfg", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g: Value = serde_json::from_str(&fs::read_to_string(out.join("and2.json")).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(g["edges"].as_array().unwrap().len(), 3);
    assert_eq!(g["design"], "and2");
    assert!(stdout(&o).contains("and2"));
}

#[test]
fn graph_without_inputs_is_a_usage_error() {
    let o = hwgnn(&["graph"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn one_failing_design_makes_the_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let good = design(tmp.path(), "good", ONE_ASSIGN);
    let bad = design(tmp.path(), "bad", "module broken(input a;\n");
    let out = tmp.path().join("graphs");
    let o = hwgnn(&["graph", p(&good), p(&bad), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("good.json").exists());
    assert!(!out.join("bad.json").exists());
    assert!(stderr(&o).contains("bad"));
}

#[test]
fn graph_output_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("ip");
    gen("ip", &corpus, &["--bases", "2", "--variants", "3"]);
    let dirs: Vec<String> = ["core0_v0", "core0_v1", "core1_v2"]
        .iter()
        .map(|n| corpus.join(n).to_string_lossy().into_owned())
        .collect();
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let mut args = vec!["graph", "--out", p(&out)];
        args.extend(dirs.iter().map(String::as_str));
        assert!(hwgnn(&args).status.success());
        runs.push(out);
    }
    for n in ["core0_v0", "core0_v1", "core1_v2"] {
        let file = format!("{n}.json");
        assert_eq!(
            fs::read(runs[0].join(&file)).unwrap(),
            fs::read(runs[1].join(&file)).unwrap()
        );
    }
}

#[test]
fn missing_manifest_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    design(tmp.path(), "only", ONE_ASSIGN);
    let o = hwgnn(&["train-ht", "--corpus", p(tmp.path()), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("labels.json"));
}

#[test]
fn manifest_mismatch_lists_every_design() {
    let tmp = tempfile::tempdir().unwrap();
    design(tmp.path(), "a", ONE_ASSIGN);
    design(tmp.path(), "b", ONE_ASSIGN);
    design(tmp.path(), "c", ONE_ASSIGN);
    fs::write(tmp.path().join("labels.json"), r#"{"a": "Trojan", "zz": "Non_Trojan"}"#).unwrap();
    let o = hwgnn(&["train-ht", "--corpus", p(tmp.path()), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("b, c"), "{err}");
    assert!(err.contains("zz"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.yaml");
    fs::write(&cfg, "train:\n  epochs: 1\n  learning_rate: 0.1\n").unwrap();
    let d = design(tmp.path(), "and2", ONE_ASSIGN);
    let o = hwgnn(&["graph", p(&d), "--config", p(&cfg), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rate"));
}

#[test]
fn help_documents_configuration_keys() {
    let o = hwgnn(&["--help"]);
    let text = stdout(&o);
    for key in ["mini_test_interval:", "pooling_ratio:", "leave_out:", "delta:", "cache:"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn trojan_training_leaving_out_a_circuit() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("ht");
    gen("ht", &corpus, &["--clean", "12", "--trojan", "12"]);
    let cfg = tmp.path().join("run.yaml");
    fs::write(&cfg, format!("task: ht\n{TINY_TRAIN}")).unwrap();
    let out = tmp.path().join("run");
    let cache = tmp.path().join("cache");
    let o = hwgnn(&[
        "train-ht", "--config", p(&cfg), "--corpus", p(&corpus), "--out", p(&out), "--cache", p(&cache),
        "--leave-out", "adder",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let items = report["per_item"].as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i["id"].as_str().unwrap().contains("_adder_")));
    assert!(fs::read_dir(&cache).unwrap().count() > 0);

    let ckpt = out.join("model.ckpt");
    let dirs: Vec<PathBuf> = fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .take(3)
        .collect();
    let mut args = vec!["infer-ht", "--model", p(&ckpt)];
    args.extend(dirs.iter().map(|d| p(d)));
    let o = hwgnn(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let cols: Vec<&str> = l.split('\t').collect();
        assert!(cols[1] == "Trojan" || cols[1] == "Non_Trojan", "{l}");
    }

    let o = hwgnn(&["embed", "--model", p(&ckpt), "--corpus", p(&corpus), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = fs::read_to_string(out.join("embeddings.tsv")).unwrap();
    assert!(tsv.starts_with("# graph_id\tlabel"));
    assert_eq!(tsv.lines().count(), 25);
}

#[test]
fn unknown_leave_out_circuit_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("ht");
    gen("ht", &corpus, &["--clean", "6", "--trojan", "6"]);
    let o = hwgnn(&[
        "train-ht", "--corpus", p(&corpus), "--out", p(&tmp.path().join("o")), "--leave-out", "nonexistent",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nonexistent"));
}

#[test]
fn identical_designs_are_flagged_as_piracy() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("ip");
    gen("ip", &corpus, &["--bases", "3", "--variants", "3"]);
    let cfg = tmp.path().join("run.yaml");
    fs::write(&cfg, format!("task: piracy\n{TINY_TRAIN}")).unwrap();
    let out = tmp.path().join("run");
    let o = hwgnn(&["train-ip", "--config", p(&cfg), "--corpus", p(&corpus), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let a = corpus.join("core0_v0");
    let ckpt = out.join("model.ckpt");
    let o = hwgnn(&["infer-ip", "--model", p(&ckpt), p(&a), p(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let cols: Vec<&str> = line.trim().split('\t').collect();
    let sim: f64 = cols[2].parse().unwrap();
    assert!((sim - 1.0).abs() < 1e-6, "{line}");
    assert_eq!(cols[3], "Piracy");

    let o = hwgnn(&["infer-ip", "--model", p(&ckpt), "--delta", "1.5", p(&a), p(&a)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_task_must_match_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.yaml");
    fs::write(&cfg, "task: piracy\n").unwrap();
    let o = hwgnn(&["train-ht", "--config", p(&cfg), "--corpus", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}
