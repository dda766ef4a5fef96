use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use hwgnn::graphdata::{
    build_vocab, cache_key, encode, leave_one_circuit_out, make_pairs, normalize, split, GraphCache, GraphPair,
    GraphTensors, NodeVocab,
};
use hwgnn::hwgraph::{graph_to_json, GraphKind, HwGraph};
use hwgnn::learnpipe::{
    embedding_table, evaluate_classifier, evaluate_pairs, load_checkpoint, predict_ht, predict_piracy, save_checkpoint,
    train_graph_classifier, train_pair_model, EvalReport, TrainOutcome, TROJAN_CLASS,
};
use hwgnn::synth;
use rayon::prelude::*;

use crate::config::{RunConfig, Task};
use crate::corpus::{
    check_manifest, design_dirs, design_name, extract, read_category_manifest, read_ht_manifest, usage,
};
use crate::{Common, CorpusSet, KindArg};

const MODEL_FILE: &str = "model.ckpt";
const REPORT_FILE: &str = "report.json";

fn resolve(common: &Common, task: Option<Task>) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    if let (Some(t), Some(task)) = (cfg.task, task) {
        if t != task {
            return Err(usage(format!("configuration task {t:?} does not match this command ({task:?})")));
        }
    }
    if let Some(k) = common.kind {
        cfg.graph_kind = match k {
            KindArg::Ast => GraphKind::Ast,
            KindArg::Dfg => GraphKind::Dfg,
        };
    }
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    if let Some(c) = &common.cache {
        cfg.paths.cache = Some(c.clone());
    }
    if let Some(o) = &common.out {
        cfg.paths.out = Some(o.clone());
    }
    if let Some(c) = &common.corpus {
        cfg.paths.corpus = Some(c.clone());
    }
    Ok(cfg)
}

fn corpus_root(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    cfg.paths
        .corpus
        .clone()
        .ok_or_else(|| usage("no corpus given; pass --corpus or set paths.corpus"))
}

fn create_out(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

/// Extracts every directory in parallel, failing with the full list of
/// designs that could not be processed.
fn extract_all(dirs: &[PathBuf], cfg: &RunConfig, top: Option<&str>) -> anyhow::Result<Vec<HwGraph>> {
    let results: Vec<_> = dirs.par_iter().map(|d| extract(d, cfg.graph_kind, top)).collect();
    let mut graphs = Vec::with_capacity(dirs.len());
    let mut failures = Vec::new();
    for (dir, r) in dirs.iter().zip(results) {
        match r {
            Ok((g, _)) => graphs.push(g),
            Err(e) => failures.push(format!("  {}: {e:#}", design_name(dir))),
        }
    }
    if !failures.is_empty() {
        bail!("{} design(s) failed to extract\n{}", failures.len(), failures.join("\n"));
    }
    Ok(graphs)
}

/// Normalizes and encodes graphs, reading and filling the tensor cache when
/// one is configured.
fn encode_all(graphs: &[HwGraph], cfg: &RunConfig) -> anyhow::Result<(NodeVocab, Vec<GraphTensors<f64>>)> {
    let normalized = graphs.iter().map(normalize).collect::<Result<Vec<_>, _>>()?;
    let vocab = build_vocab(&normalized)?;
    let fp = vocab.fingerprint();
    let cache = cfg.paths.cache.as_ref().map(GraphCache::open).transpose()?;
    let mut out = Vec::with_capacity(graphs.len());
    for g in &normalized {
        let key = cache_key(&graph_to_json(g), &fp);
        let cached = match &cache {
            Some(c) => c.get(&key, &fp)?,
            None => None,
        };
        let t = match cached {
            Some(t) => t,
            None => {
                let t = encode(g, &vocab)?;
                if let Some(c) = &cache {
                    c.put(&key, &fp, &t)?;
                }
                t
            }
        };
        out.push(t);
    }
    Ok((vocab, out))
}

/// Random split of `items` into (train, validation, test).
fn three_way<I: Clone>(items: &[I], cfg: &RunConfig) -> anyhow::Result<(Vec<I>, Vec<I>, Vec<I>)> {
    let outer = split(items, cfg.split.test_ratio, cfg.train.seed)?;
    let (train, val) = carve_validation(&outer.train, cfg)?;
    Ok((train, val, outer.test))
}

fn carve_validation<I: Clone>(items: &[I], cfg: &RunConfig) -> anyhow::Result<(Vec<I>, Vec<I>)> {
    let inner = split(items, cfg.split.val_ratio, cfg.train.seed.wrapping_add(1))
        .context("training set too small to carve a validation set")?;
    Ok((inner.train, inner.test))
}

fn write_report(out: &Path, report: &EvalReport) -> anyhow::Result<()> {
    let path = out.join(REPORT_FILE);
    fs::write(&path, report.to_json()).with_context(|| format!("writing {}", path.display()))
}

fn print_outcome<T>(outcome: &TrainOutcome<T>, report: &EvalReport, out: &Path) {
    let m = &report.metrics;
    println!(
        "trained {} steps, best validation metric {:.4}",
        outcome.steps, outcome.checkpoint.best_metric
    );
    println!(
        "test: precision {:.4} recall {:.4} f1 {:.4} accuracy {:.4}{}",
        m.precision,
        m.recall,
        m.f1,
        m.accuracy,
        if m.degenerate { " (degenerate)" } else { "" }
    );
    println!("wrote {} and {}", out.join(MODEL_FILE).display(), out.join(REPORT_FILE).display());
}

pub fn graph(inputs: &[PathBuf], common: &Common) -> anyhow::Result<ExitCode> {
    let cfg = resolve(common, None)?;
    if inputs.is_empty() {
        return Err(usage("no input designs"));
    }
    let out = create_out(&cfg)?;
    let top = common.top.as_deref();
    let results: Vec<_> = inputs
        .par_iter()
        .map(|dir| {
            let (g, secs) = extract(dir, cfg.graph_kind, top)?;
            let path = out.join(format!("{}.json", g.design));
            fs::write(&path, graph_to_json(&g)).with_context(|| format!("writing {}", path.display()))?;
            Ok::<_, anyhow::Error>((g.num_nodes(), g.num_edges(), secs))
        })
        .collect();
    println!("{:<32} {:>8} {:>8} {:>10}", "design", "nodes", "edges", "seconds");
    let mut failed = 0;
    for (dir, r) in inputs.iter().zip(results) {
        let name = design_name(dir);
        match r {
            Ok((n, e, s)) => println!("{name:<32} {n:>8} {e:>8} {s:>10.4}"),
            Err(err) => {
                failed += 1;
                println!("{name:<32} {:>8} {:>8} {:>10}", "-", "-", "failed");
                eprintln!("{name}: {err:#}");
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn checkpoint_path(model: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    model.unwrap_or_else(|| cfg.out_dir().join(MODEL_FILE))
}

fn inputs_or_corpus(designs: &[PathBuf], cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    if !designs.is_empty() {
        return Ok(designs.to_vec());
    }
    match &cfg.paths.corpus {
        Some(root) => design_dirs(root),
        None => Err(usage("no designs given; list design directories or pass --corpus")),
    }
}

pub fn embed(model: Option<PathBuf>, designs: &[PathBuf], common: &Common) -> anyhow::Result<ExitCode> {
    let cfg = resolve(common, None)?;
    let ckpt = load_checkpoint::<f64>(&checkpoint_path(model, &cfg), None)?;
    let dirs = inputs_or_corpus(designs, &cfg)?;
    let graphs = extract_all(&dirs, &cfg, common.top.as_deref())?;
    let tensors = graphs.iter().map(|g| ckpt.encode(g)).collect::<Result<Vec<_>, _>>()?;
    let labels: BTreeMap<String, String> = match cfg.labels_path().filter(|p| p.exists()) {
        Some(p) => {
            let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(&fs::read_to_string(&p)?)?;
            raw.into_iter()
                .map(|(k, v)| {
                    let label = match &v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.get("label").and_then(|l| l.as_str()).unwrap_or("-").to_string(),
                    };
                    (k, label)
                })
                .collect()
        }
        None => BTreeMap::new(),
    };
    let table = embedding_table(&ckpt.model, &tensors, |g| {
        labels.get(&g.graph_id).cloned().unwrap_or_else(|| "-".into())
    })?;
    let out = create_out(&cfg)?;
    let path = out.join("embeddings.tsv");
    fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} embeddings to {}", tensors.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn train_ht(leave_out: Option<String>, common: &Common) -> anyhow::Result<ExitCode> {
    let mut cfg = resolve(common, Some(Task::Ht))?;
    if leave_out.is_some() {
        cfg.split.leave_out = leave_out;
    }
    cfg.train.validate()?;
    let root = corpus_root(&cfg)?;
    let labels_path = cfg.labels_path().expect("corpus is set");
    if !labels_path.exists() {
        return Err(usage(format!("label manifest {} not found", labels_path.display())));
    }
    let manifest = read_ht_manifest(&labels_path)?;
    let dirs = design_dirs(&root)?;
    let names: Vec<String> = dirs.iter().map(|d| design_name(d)).collect();
    check_manifest(&names, &manifest)?;
    let graphs = extract_all(&dirs, &cfg, common.top.as_deref())?;
    let (vocab, mut tensors) = encode_all(&graphs, &cfg)?;
    for t in &mut tensors {
        let trojan = manifest[&t.graph_id].trojan;
        t.label = Some(if trojan { TROJAN_CLASS } else { 1 - TROJAN_CLASS });
    }

    let (train_ids, val_ids, test_ids) = match &cfg.split.leave_out {
        Some(circuit) => {
            let mut circuit_of = HashMap::new();
            for (name, l) in &manifest {
                let c = l
                    .circuit
                    .clone()
                    .ok_or_else(|| usage(format!("--leave-out needs a circuit for every design; {name} has none")))?;
                circuit_of.insert(name.clone(), c);
            }
            let s = leave_one_circuit_out(&names, &circuit_of, circuit)?;
            let (train, val) = carve_validation(&s.train, &cfg)?;
            (train, val, s.test)
        }
        None => three_way(&names, &cfg)?,
    };
    let by_id: HashMap<&str, &GraphTensors<f64>> = tensors.iter().map(|t| (t.graph_id.as_str(), t)).collect();
    let pick = |ids: &[String]| ids.iter().map(|i| by_id[i.as_str()].clone()).collect::<Vec<_>>();
    let (train, val, test) = (pick(&train_ids), pick(&val_ids), pick(&test_ids));
    println!(
        "{} designs: {} train, {} validation, {} test",
        names.len(),
        train.len(),
        val.len(),
        test.len()
    );

    let outcome = train_graph_classifier(&train, &val, &vocab, &cfg.train)?;
    let (report, _) = evaluate_classifier(&outcome.checkpoint.model, &test)?;
    let out = create_out(&cfg)?;
    save_checkpoint(&outcome.checkpoint, &out.join(MODEL_FILE))?;
    write_report(&out, &report)?;
    print_outcome(&outcome, &report, &out);
    Ok(ExitCode::SUCCESS)
}

pub fn infer_ht(model: Option<PathBuf>, designs: &[PathBuf], common: &Common) -> anyhow::Result<ExitCode> {
    let cfg = resolve(common, Some(Task::Ht))?;
    let ckpt = load_checkpoint::<f64>(&checkpoint_path(model, &cfg), None)?;
    let dirs = inputs_or_corpus(designs, &cfg)?;
    let top = common.top.as_deref();
    let results: Vec<_> = dirs.par_iter().map(|d| extract(d, cfg.graph_kind, top)).collect();
    let mut failed = 0;
    for (dir, r) in dirs.iter().zip(results) {
        let name = design_name(dir);
        match r.and_then(|(g, _)| Ok(predict_ht(&ckpt, &g)?)) {
            Ok((verdict, y)) => println!("{name}\t{verdict}\t{:.6}", y[0]),
            Err(e) => {
                failed += 1;
                eprintln!("{name}: {e:#}");
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn train_ip(common: &Common) -> anyhow::Result<ExitCode> {
    let cfg = resolve(common, Some(Task::Piracy))?;
    cfg.train.validate()?;
    let root = corpus_root(&cfg)?;
    let labels_path = cfg.labels_path().expect("corpus is set");
    if !labels_path.exists() {
        return Err(usage(format!("category manifest {} not found", labels_path.display())));
    }
    let manifest = read_category_manifest(&labels_path)?;
    let dirs = design_dirs(&root)?;
    let names: Vec<String> = dirs.iter().map(|d| design_name(d)).collect();
    check_manifest(&names, &manifest)?;
    let graphs = extract_all(&dirs, &cfg, common.top.as_deref())?;
    let (vocab, tensors) = encode_all(&graphs, &cfg)?;
    let idx: Vec<usize> = (0..tensors.len()).collect();
    let category: HashMap<usize, &str> = idx.iter().map(|&i| (i, manifest[&names[i]].as_str())).collect();
    let pairs: Vec<GraphPair<usize>> = make_pairs(&idx, &category)?;
    let (train, val, test) = three_way(&pairs, &cfg)?;
    println!(
        "{} designs, {} pairs: {} train, {} validation, {} test",
        names.len(),
        pairs.len(),
        train.len(),
        val.len(),
        test.len()
    );

    let outcome = train_pair_model(&tensors, &train, &val, &vocab, &cfg.train)?;
    let (report, _) = evaluate_pairs(&outcome.checkpoint.model, &tensors, &test, cfg.train.delta, cfg.train.margin)?;
    let out = create_out(&cfg)?;
    save_checkpoint(&outcome.checkpoint, &out.join(MODEL_FILE))?;
    write_report(&out, &report)?;
    print_outcome(&outcome, &report, &out);
    Ok(ExitCode::SUCCESS)
}

pub fn infer_ip(
    model: Option<PathBuf>,
    delta: Option<f64>,
    a: &Path,
    b: &Path,
    common: &Common,
) -> anyhow::Result<ExitCode> {
    let cfg = resolve(common, Some(Task::Piracy))?;
    let delta = delta.unwrap_or(cfg.train.delta);
    if !(delta > -1.0 && delta < 1.0) {
        return Err(usage("--delta must lie in (-1, 1)"));
    }
    let ckpt = load_checkpoint::<f64>(&checkpoint_path(model, &cfg), None)?;
    let top = common.top.as_deref();
    let (ga, _) = extract(a, cfg.graph_kind, top)?;
    let (gb, _) = extract(b, cfg.graph_kind, top)?;
    let (verdict, y) = predict_piracy(&ckpt, &ga, &gb, delta)?;
    println!("{}\t{}\t{y:.6}\t{verdict}", ga.design, gb.design);
    Ok(ExitCode::SUCCESS)
}

pub fn gen_corpus(
    set: CorpusSet,
    out: &Path,
    seed: u64,
    (clean, trojan): (usize, usize),
    (bases, variants): (usize, usize),
) -> anyhow::Result<ExitCode> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let n = match set {
        CorpusSet::Ht => {
            let designs = synth::ht_corpus(clean, trojan, seed);
            synth::write_ht_corpus(out, &designs)?;
            designs.len()
        }
        CorpusSet::Ip => {
            let designs = synth::ip_corpus(bases, variants, seed);
            synth::write_ip_corpus(out, &designs)?;
            designs.len()
        }
    };
    println!("wrote {n} designs to {}", out.display());
    Ok(ExitCode::SUCCESS)
}
