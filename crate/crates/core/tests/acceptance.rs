//! End-to-end acceptance criteria. Each test prints one PASS or FAIL line.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hwgnn::graph2vec::{Activation, GnnModel, HeadConfig, ModelConfig};
use hwgnn::graphdata::{cache_key, make_pairs, prepare, split, GraphCache, GraphTensors, NodeVocab};
use hwgnn::hwgraph::{graph_from_json, graph_to_json, hw2graph, GraphEdge, GraphKind, GraphNode, HwGraph, SourceUnit};
use hwgnn::learnpipe::{
    cross_entropy_on_tape, evaluate_classifier, evaluate_pairs, load_checkpoint, save_checkpoint, train_graph_classifier,
    train_pair_model, Checkpoint, Metrics, TrainConfig,
};
use hwgnn::nncore::{central_differences, relative_error, Matrix, Tape};
use hwgnn::synth::{ht_corpus, ip_corpus, TROJAN_LABEL};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("[criterion {n}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn dfg(name: &str, src: &str) -> HwGraph {
    hw2graph(&SourceUnit::single(format!("{name}.v"), src), GraphKind::Dfg, None).unwrap()
}

/// Random graph with one-hot rows perturbed by small noise so that pooling
/// scores are distinct.
fn jittered_graph(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> GraphTensors<f64> {
    let mut x = Matrix::zeros(n, dim);
    for i in 0..n {
        let row = x.row_mut(i);
        row[rng.gen_range(0..dim)] = 1.0;
        for v in row.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..n / 2 {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    edges.sort_unstable();
    edges.dedup();
    GraphTensors {
        graph_id: "g".into(),
        x,
        edges,
        label: Some(rng.gen_range(0..2)),
    }
}

#[test]
fn criterion_1_metric_reproduction() {
    let start = Instant::now();
    let m = Metrics::from_precision_recall(0.87334, 0.98572);
    let elapsed = start.elapsed();
    let pass = (m.f1 - 0.92596).abs() <= 1e-4 && elapsed < Duration::from_millis(1);
    report(
        1,
        "F1 from precision and recall",
        pass,
        format!("F1 = {:.6}, target 0.92596 ± 1e-4, |diff| = {:.2e}, {elapsed:?}", m.f1, (m.f1 - 0.92596).abs()),
    );
    assert!(pass);
}

#[test]
fn criterion_2_gradient_correctness() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..=20);
        let g = jittered_graph(&mut rng, n, 4);
        let cfg = ModelConfig {
            conv_dims: vec![5, 4],
            activation: Activation::Tanh,
            ..ModelConfig::new(4, HeadConfig::Classifier { hidden: vec![3] })
        };
        let mut model = GnnModel::<f64>::new(cfg, seed).unwrap();
        let nbrs = model.neighborhood(&g).unwrap();
        let mut target = Matrix::zeros(1, 2);
        target.as_mut_slice()[g.label.unwrap()] = 1.0;

        let loss_on = |m: &GnnModel<f64>, tape: &mut Tape<f64>| {
            let f = m.forward(tape, &g, &nbrs).unwrap();
            let p = m.classify_on_tape(tape, f.embedding).unwrap();
            cross_entropy_on_tape(tape, p, &target).unwrap()
        };
        let mut tape = Tape::new();
        let loss = loss_on(&model, &mut tape);
        model.params_mut().zero_grad();
        tape.backward(loss).unwrap().accumulate(model.params_mut()).unwrap();

        let mut store = model.params().clone();
        let numeric = central_differences(&mut store, 1e-5, |s| {
            let mut m = model.clone();
            *m.params_mut() = s.clone();
            let mut tape = Tape::new();
            let l = loss_on(&m, &mut tape);
            Ok::<f64, ()>(tape.value(l)[(0, 0)])
        })
        .unwrap();
        for (p, num) in model.params().iter().zip(&numeric) {
            for (&a, &b) in p.grad.as_slice().iter().zip(num.as_slice()) {
                worst = worst.max(relative_error(a, b, 1e-6));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-4 && elapsed < Duration::from_secs(60);
    report(
        2,
        "full-model gradient check",
        pass,
        format!("max relative error {worst:.3e} over 100 seeds, {elapsed:.1?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_permutation_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = GnnModel::<f64>::new(ModelConfig::new(6, HeadConfig::Siamese), 3).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=40);
        let g = jittered_graph(&mut rng, n, 6);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = model.embed(&g).unwrap();
        let b = model.embed(&g.permuted(&perm)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-6 && elapsed < Duration::from_secs(30);
    report(
        3,
        "permutation invariance",
        pass,
        format!("max |Δh| = {worst:.3e} over 200 graphs, {elapsed:.1?}"),
    );
    assert!(pass);
}

/// Expression tree of the random modules used by the data-flow oracle.
#[derive(Debug, Clone)]
enum OExpr {
    Sig(String),
    Const(String),
    Un(&'static str, &'static str, Box<OExpr>),
    Bin(&'static str, &'static str, Box<OExpr>, Box<OExpr>),
    Tern(Box<OExpr>, Box<OExpr>, Box<OExpr>),
}

impl OExpr {
    fn text(&self) -> String {
        match self {
            OExpr::Sig(s) | OExpr::Const(s) => s.clone(),
            OExpr::Un(sym, _, a) => format!("{sym}({})", a.text()),
            OExpr::Bin(sym, _, a, b) => format!("({} {sym} {})", a.text(), b.text()),
            OExpr::Tern(c, t, f) => format!("({} ? {} : {})", c.text(), t.text(), f.text()),
        }
    }

    /// Canonical form: signals are leaves, operators list their distinct
    /// signal operands and every expression operand, sorted.
    fn canon(&self) -> String {
        match self {
            OExpr::Sig(s) => format!("S({s})"),
            OExpr::Const(c) => format!("const({c})[]"),
            OExpr::Un(_, label, a) => format!("{label}[{}]", children_canon(&[&**a])),
            OExpr::Bin(_, label, a, b) => format!("{label}[{}]", children_canon(&[&**a, &**b])),
            OExpr::Tern(c, t, f) => format!("Branch[{}]", children_canon(&[&**c, &**t, &**f])),
        }
    }

    fn count_nodes(&self, signals: &mut std::collections::BTreeSet<String>) -> usize {
        match self {
            OExpr::Sig(s) => {
                signals.insert(s.clone());
                0
            }
            OExpr::Const(_) => 1,
            OExpr::Un(_, _, a) => 1 + a.count_nodes(signals),
            OExpr::Bin(_, _, a, b) => 1 + a.count_nodes(signals) + b.count_nodes(signals),
            OExpr::Tern(c, t, f) => 1 + c.count_nodes(signals) + t.count_nodes(signals) + f.count_nodes(signals),
        }
    }

    fn count_edges(&self) -> usize {
        let kids: Vec<&OExpr> = match self {
            OExpr::Sig(_) | OExpr::Const(_) => return 0,
            OExpr::Un(_, _, a) => vec![a],
            OExpr::Bin(_, _, a, b) => vec![a, b],
            OExpr::Tern(c, t, f) => vec![c, t, f],
        };
        distinct_edges(&kids) + kids.iter().map(|k| k.count_edges()).sum::<usize>()
    }
}

fn distinct_edges(kids: &[&OExpr]) -> usize {
    let mut sigs = std::collections::BTreeSet::new();
    let mut n = 0;
    for k in kids {
        match k {
            OExpr::Sig(s) => {
                sigs.insert(s.clone());
            }
            _ => n += 1,
        }
    }
    n + sigs.len()
}

fn children_canon(kids: &[&OExpr]) -> String {
    let mut sigs = std::collections::BTreeSet::new();
    let mut parts = Vec::new();
    for k in kids {
        match k {
            OExpr::Sig(s) => {
                sigs.insert(format!("S({s})"));
            }
            other => parts.push(other.canon()),
        }
    }
    parts.extend(sigs);
    parts.sort();
    parts.join(",")
}

fn random_oexpr(rng: &mut ChaCha8Rng, names: &[String], width: usize, depth: usize) -> OExpr {
    const BIN: &[(&str, &str)] = &[
        ("+", "Plus"),
        ("-", "Minus"),
        ("&", "And"),
        ("|", "Or"),
        ("^", "Xor"),
        ("*", "Times"),
        ("==", "Eq"),
        ("<", "LessThan"),
        ("&&", "Land"),
        ("<<", "Sll"),
    ];
    const UN: &[(&str, &str)] = &[("~", "Unot"), ("!", "Ulnot"), ("^", "Uxor")];
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.15) {
            OExpr::Const(format!("{width}'d{}", rng.gen_range(0..(1u32 << width))))
        } else {
            OExpr::Sig(names[rng.gen_range(0..names.len())].clone())
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_oexpr(rng, names, width, depth - 1));
    match rng.gen_range(0..10) {
        0 => OExpr::Tern(sub(rng), sub(rng), sub(rng)),
        1 | 2 => {
            let (s, l) = UN[rng.gen_range(0..UN.len())];
            OExpr::Un(s, l, sub(rng))
        }
        _ => {
            let (s, l) = BIN[rng.gen_range(0..BIN.len())];
            OExpr::Bin(s, l, sub(rng), sub(rng))
        }
    }
}

/// Expected graph summary computed directly from the generated statements:
/// every driven signal, the transitive closure of what it reads, and one
/// node per operator or literal occurrence.
struct Expected {
    nodes: usize,
    edges: usize,
    signal_children: HashMap<String, Vec<String>>,
    expr_canons: Vec<String>,
}

fn brute_force(assigns: &[(String, OExpr)]) -> Expected {
    let mut signals = std::collections::BTreeSet::new();
    let mut nodes = 0;
    let mut edges = 0;
    let mut signal_children = HashMap::new();
    let mut expr_canons = Vec::new();
    for (lhs, e) in assigns {
        signals.insert(lhs.clone());
        nodes += e.count_nodes(&mut signals);
        edges += 1 + e.count_edges();
        let canon = match e {
            OExpr::Sig(s) => format!("S({s})"),
            other => other.canon(),
        };
        signal_children.insert(lhs.clone(), vec![canon]);
        collect_canons(e, &mut expr_canons);
    }
    for s in &signals {
        signal_children.entry(s.clone()).or_default();
    }
    expr_canons.sort();
    Expected {
        nodes: nodes + signals.len(),
        edges,
        signal_children,
        expr_canons,
    }
}

fn collect_canons(e: &OExpr, out: &mut Vec<String>) {
    match e {
        OExpr::Sig(_) => {}
        OExpr::Const(_) => out.push(e.canon()),
        OExpr::Un(_, _, a) => {
            out.push(e.canon());
            collect_canons(a, out);
        }
        OExpr::Bin(_, _, a, b) => {
            out.push(e.canon());
            collect_canons(a, out);
            collect_canons(b, out);
        }
        OExpr::Tern(c, t, f) => {
            out.push(e.canon());
            for k in [c, t, f] {
                collect_canons(k, out);
            }
        }
    }
}

/// The same summary read back from an extracted graph.
fn observed(g: &HwGraph) -> Expected {
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        kids[e.src].push(e.dst);
    }
    fn canon(g: &HwGraph, kids: &[Vec<usize>], v: usize) -> String {
        let n = &g.nodes[v];
        if n.label == "signal" {
            return format!("S({})", n.name.as_deref().unwrap_or(""));
        }
        let mut parts: Vec<String> = kids[v].iter().map(|&c| canon(g, kids, c)).collect();
        parts.sort();
        match n.label.as_str() {
            "const" => format!("const({})[{}]", n.name.as_deref().unwrap_or(""), parts.join(",")),
            l => format!("{l}[{}]", parts.join(",")),
        }
    }
    let mut signal_children = HashMap::new();
    let mut expr_canons = Vec::new();
    for (v, n) in g.nodes.iter().enumerate() {
        if n.label == "signal" {
            let c: Vec<String> = kids[v].iter().map(|&c| canon(g, &kids, c)).collect();
            signal_children.insert(n.name.clone().unwrap_or_default(), c);
        } else {
            expr_canons.push(canon(g, &kids, v));
        }
    }
    expr_canons.sort();
    Expected {
        nodes: g.nodes.len(),
        edges: g.edges.len(),
        signal_children,
        expr_canons,
    }
}

fn same_summary(a: &Expected, b: &Expected) -> bool {
    a.nodes == b.nodes && a.edges == b.edges && a.expr_canons == b.expr_canons && a.signal_children == b.signal_children
}

#[test]
fn criterion_4_dfg_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    for case in 0..50 {
        let total = rng.gen_range(3..=15);
        let n_in = rng.gen_range(1..total - 1);
        let n_out = rng.gen_range(1..=(total - n_in).min(3));
        let width = rng.gen_range(1..=8usize);
        let names: Vec<String> = (0..total).map(|i| format!("s{i}")).collect();
        let (inputs, rest) = names.split_at(n_in);
        let (outputs, wires) = rest.split_at(n_out);
        let mut targets: Vec<&String> = rest.iter().collect();
        targets.shuffle(&mut rng);
        let mut assigns: Vec<(String, OExpr)> = Vec::new();
        for t in targets {
            if rng.gen_bool(0.9) {
                assigns.push((t.clone(), random_oexpr(&mut rng, &names, width, 3)));
            }
        }
        if assigns.is_empty() {
            continue;
        }
        let bus = if width > 1 { format!("[{}:0] ", width - 1) } else { String::new() };
        let ports: Vec<String> = inputs
            .iter()
            .map(|i| format!("input {bus}{i}"))
            .chain(outputs.iter().map(|o| format!("output {bus}{o}")))
            .collect();
        let mut src = format!("module rnd({});\n", ports.join(", "));
        for w in wires {
            src.push_str(&format!("  wire {bus}{w};\n"));
        }
        for (lhs, e) in &assigns {
            src.push_str(&format!("  assign {lhs} = {};\n", e.text()));
        }
        src.push_str("endmodule\n");

        let expected = brute_force(&assigns);
        let mut graph = dfg("rnd", &src);
        if !same_summary(&expected, &observed(&graph)) {
            mismatches.push(case);
        }
        if let Some(n) = graph.nodes.iter_mut().find(|n| n.label != "signal") {
            n.label = "Mystery".into();
            assert!(!same_summary(&expected, &observed(&graph)), "oracle misses a relabelled node");
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(30);
    report(
        4,
        "DFG oracle equivalence",
        pass,
        format!("{} of 50 modules differ {mismatches:?}, {elapsed:.1?}", mismatches.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_5_synthetic_trojan_detection() {
    let start = Instant::now();
    let designs = ht_corpus(30, 30, 2024);
    let graphs: Vec<HwGraph> = designs.iter().map(|d| dfg(&d.name, &d.source)).collect();
    let (vocab, mut tensors) = prepare::<f64>(&graphs).unwrap();
    for (t, d) in tensors.iter_mut().zip(&designs) {
        t.graph_id = d.name.clone();
        t.label = Some(if d.label == TROJAN_LABEL { 0 } else { 1 });
    }
    let s = split(&tensors, 0.2, 7).unwrap();
    let n_val = s.train.len() / 5;
    let (val, train) = s.train.split_at(n_val);
    let outcome = train_graph_classifier(train, val, &vocab, &TrainConfig::default()).unwrap();
    let (rep, _) = evaluate_classifier(&outcome.checkpoint.model, &s.test).unwrap();
    let elapsed = start.elapsed();
    let pass = rep.metrics.f1 >= 0.90 && elapsed < Duration::from_secs(300);
    report(
        5,
        "synthetic HT end-to-end",
        pass,
        format!("test F1 = {:.4} ({:?}), {elapsed:.1?}", rep.metrics.f1, rep.counts),
    );
    assert!(pass);
}

#[test]
fn criterion_6_synthetic_ip_piracy() {
    let start = Instant::now();
    let designs = ip_corpus(8, 5, 77);
    let graphs: Vec<HwGraph> = designs.iter().map(|d| dfg(&d.name, &d.source)).collect();
    let (vocab, mut tensors) = prepare::<f64>(&graphs).unwrap();
    for (t, d) in tensors.iter_mut().zip(&designs) {
        t.graph_id = d.name.clone();
    }
    let idx: Vec<usize> = (0..designs.len()).collect();
    let category: HashMap<usize, &str> = idx.iter().map(|&i| (i, designs[i].label.as_str())).collect();
    let pairs = make_pairs(&idx, &category).unwrap();
    let s = split(&pairs, 0.2, 11).unwrap();
    let n_val = s.train.len() / 5;
    let (val, train) = s.train.split_at(n_val);
    let cfg = TrainConfig::default();
    let outcome = train_pair_model(&tensors, train, val, &vocab, &cfg).unwrap();
    let (rep, _) = evaluate_pairs(&outcome.checkpoint.model, &tensors, &s.test, cfg.delta, cfg.margin).unwrap();
    let elapsed = start.elapsed();
    let pass = rep.metrics.accuracy >= 0.90 && elapsed < Duration::from_secs(600);
    report(
        6,
        "synthetic IP piracy end-to-end",
        pass,
        format!("test accuracy = {:.4} ({:?}), {elapsed:.1?}", rep.metrics.accuracy, rep.counts),
    );
    assert!(pass);
}

#[test]
fn criterion_7_training_step_timing() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = jittered_graph(&mut rng, 1000, 24);
    let mut model = GnnModel::<f64>::new(ModelConfig::new(24, HeadConfig::Classifier { hidden: vec![32] }), 7).unwrap();
    let mut target = Matrix::zeros(1, 2);
    target.as_mut_slice()[0] = 1.0;
    let step = |model: &mut GnnModel<f64>| {
        let start = Instant::now();
        let nbrs = model.neighborhood(&g).unwrap();
        let mut tape = Tape::new();
        let f = model.forward(&mut tape, &g, &nbrs).unwrap();
        let p = model.classify_on_tape(&mut tape, f.embedding).unwrap();
        let loss = cross_entropy_on_tape(&mut tape, p, &target).unwrap();
        model.params_mut().zero_grad();
        tape.backward(loss).unwrap().accumulate(model.params_mut()).unwrap();
        start.elapsed()
    };
    step(&mut model);
    let worst = (0..3).map(|_| step(&mut model)).max().unwrap();
    let pass = worst < Duration::from_millis(250);
    report(
        7,
        "forward and backward step on 1000 nodes",
        pass,
        format!("slowest of 3 steps {worst:.1?} (limit 250ms)"),
    );
    assert!(pass);
}

fn random_hwgraph(rng: &mut ChaCha8Rng) -> HwGraph {
    const LABELS: &[&str] = &["signal", "const", "And", "Plus", "Branch", "ModuleDef", "Identifier"];
    const NAMES: &[&str] = &["a", "b_1", "u1.x", "q\"uote", "back\\slash", "tab\there", "ü"];
    let n = rng.gen_range(1..30);
    let kind = if rng.gen_bool(0.5) { GraphKind::Ast } else { GraphKind::Dfg };
    let nodes = (0..n)
        .map(|id| GraphNode {
            id,
            label: LABELS[rng.gen_range(0..LABELS.len())].to_string(),
            name: rng.gen_bool(0.6).then(|| NAMES[rng.gen_range(0..NAMES.len())].to_string()),
        })
        .collect();
    let mut edges: Vec<GraphEdge> = match kind {
        GraphKind::Ast => (1..n).map(|v| GraphEdge { src: rng.gen_range(0..v), dst: v }).collect(),
        GraphKind::Dfg => (0..rng.gen_range(0..2 * n))
            .map(|_| GraphEdge {
                src: rng.gen_range(0..n),
                dst: rng.gen_range(0..n),
            })
            .collect(),
    };
    edges.sort_unstable();
    edges.dedup();
    HwGraph {
        design: format!("d{n}"),
        kind,
        nodes,
        edges,
    }
}

#[test]
fn criterion_8_round_trips() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    let cache = GraphCache::open(dir.path().join("cache")).unwrap();
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let g = random_hwgraph(&mut rng);
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        if back != g || graph_to_json(&back) != text {
            failures.push(format!("json {i}"));
        }

        let vocab = NodeVocab::from_labels(["And", "const", "signal"]);
        let head = if i % 2 == 0 {
            HeadConfig::Siamese
        } else {
            HeadConfig::Classifier { hidden: vec![4] }
        };
        let cfg = ModelConfig {
            conv_dims: vec![rng.gen_range(1..8), rng.gen_range(1..8)],
            ..ModelConfig::new(3, head)
        };
        let ckpt = Checkpoint {
            model: GnnModel::<f64>::new(cfg, i).unwrap(),
            vocab: vocab.clone(),
            best_metric: rng.gen(),
        };
        let path = dir.path().join(format!("m{i}.ckpt"));
        save_checkpoint(&ckpt, &path).unwrap();
        let loaded: Checkpoint<f64> = load_checkpoint(&path, Some(&vocab.fingerprint())).unwrap();
        let n = rng.gen_range(1..15);
        let t = jittered_graph(&mut rng, n, 3);
        let same_params = loaded
            .model
            .params()
            .iter()
            .zip(ckpt.model.params().iter())
            .all(|(a, b)| a.name == b.name && a.value.as_slice().iter().zip(b.value.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let h0 = ckpt.model.embed(&t).unwrap();
        let h1 = loaded.model.embed(&t).unwrap();
        if !same_params || h0.iter().zip(&h1).any(|(a, b)| a.to_bits() != b.to_bits()) || loaded.to_bytes() != ckpt.to_bytes() {
            failures.push(format!("checkpoint {i}"));
        }

        let key = cache_key(&text, &vocab.fingerprint());
        cache.put(&key, &vocab.fingerprint(), &t).unwrap();
        if cache.get::<f64>(&key, &vocab.fingerprint()).unwrap().as_ref() != Some(&t) {
            failures.push(format!("cache {i}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(10);
    report(
        8,
        "JSON, checkpoint and cache round trips",
        pass,
        format!("{} failures {failures:?}, {elapsed:.1?}", failures.len()),
    );
    assert!(pass);
}

fn bundled_designs() -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut out = Vec::new();
    for set in ["ht", "ip"] {
        let Ok(entries) = std::fs::read_dir(root.join(set)) else {
            continue;
        };
        for e in entries.flatten() {
            if e.path().is_dir() {
                out.push(e.path());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_9_ast_structure_on_bundled_corpus() {
    let designs = bundled_designs();
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for dir in &designs {
        let unit = SourceUnit::from_dir(dir, hwgnn::hwgraph::Abstraction::Rtl).unwrap();
        let start = Instant::now();
        let g = hw2graph(&unit, GraphKind::Ast, None);
        let t = start.elapsed();
        slowest = slowest.max(t);
        let ok = match &g {
            Ok(g) => {
                let roots = g.in_degrees().iter().filter(|&&d| d == 0).count();
                g.num_edges() + 1 == g.num_nodes() && roots == 1
            }
            Err(_) => false,
        };
        if !ok || t >= Duration::from_secs(2) {
            bad.push(dir.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let pass = !designs.is_empty() && bad.is_empty();
    report(
        9,
        "AST structure on the bundled corpus",
        pass,
        format!("{} designs, {} failing {bad:?}, slowest extraction {slowest:.1?}", designs.len(), bad.len()),
    );
    assert!(pass);
}
