//! Synthetic Verilog corpora: clean and Trojan-infected designs for
//! classification and renamed, reordered variants of base circuits for
//! similarity.
//!
//! Designs are written as `<root>/<design>/<design>.v` with a `labels.json`
//! manifest at `<root>`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
enum Ex {
    Sig(String),
    Const(usize, u64),
    Not(Box<Ex>),
    Bin(&'static str, Box<Ex>, Box<Ex>),
    Tern(Box<Ex>, Box<Ex>, Box<Ex>),
}

impl Ex {
    fn sig(s: &str) -> Self {
        Ex::Sig(s.to_string())
    }

    fn bin(op: &'static str, a: Ex, b: Ex) -> Self {
        Ex::Bin(op, Box::new(a), Box::new(b))
    }

    fn render(&self, out: &mut String) {
        match self {
            Ex::Sig(s) => out.push_str(s),
            Ex::Const(w, v) => write!(out, "{w}'h{v:x}").unwrap(),
            Ex::Not(a) => {
                out.push('~');
                a.render(out);
            }
            Ex::Bin(op, a, b) => {
                out.push('(');
                a.render(out);
                write!(out, " {op} ").unwrap();
                b.render(out);
                out.push(')');
            }
            Ex::Tern(c, t, f) => {
                out.push('(');
                c.render(out);
                out.push_str(" ? ");
                t.render(out);
                out.push_str(" : ");
                f.render(out);
                out.push(')');
            }
        }
    }

    fn rename(&mut self, map: &HashMap<String, String>) {
        match self {
            Ex::Sig(s) => {
                if let Some(n) = map.get(s) {
                    *s = n.clone();
                }
            }
            Ex::Const(..) => {}
            Ex::Not(a) => a.rename(map),
            Ex::Bin(_, a, b) => {
                a.rename(map);
                b.rename(map);
            }
            Ex::Tern(c, t, f) => {
                c.rename(map);
                t.rename(map);
                f.rename(map);
            }
        }
    }

    /// Swaps the operands of commutative operators with probability 1/2.
    fn shuffle_operands(&mut self, rng: &mut ChaCha8Rng) {
        match self {
            Ex::Not(a) => a.shuffle_operands(rng),
            Ex::Bin(op, a, b) => {
                a.shuffle_operands(rng);
                b.shuffle_operands(rng);
                if matches!(*op, "+" | "&" | "|" | "^" | "*") && rng.gen_bool(0.5) {
                    std::mem::swap(a, b);
                }
            }
            Ex::Tern(c, t, f) => {
                c.shuffle_operands(rng);
                t.shuffle_operands(rng);
                f.shuffle_operands(rng);
            }
            _ => {}
        }
    }
}

/// A module before rendering.
#[derive(Debug, Clone, PartialEq)]
struct Sketch {
    name: String,
    width: usize,
    clocked: bool,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wires: Vec<(String, usize)>,
    regs: Vec<String>,
    assigns: Vec<(String, Ex)>,
    /// Register updates under `posedge clk` with synchronous reset.
    updates: Vec<(String, Ex)>,
}

impl Sketch {
    fn render(&self) -> String {
        let w = self.width;
        let bus = |n: usize| if n > 1 { format!("[{}:0] ", n - 1) } else { String::new() };
        let mut ports = Vec::new();
        if self.clocked {
            ports.push("input clk".to_string());
            ports.push("input rst".to_string());
        }
        ports.extend(self.inputs.iter().map(|i| format!("input {}{i}", bus(w))));
        ports.extend(self.outputs.iter().map(|o| format!("output {}{o}", bus(w))));
        let mut s = format!("module {} (\n  {}\n);\n", self.name, ports.join(",\n  "));
        for (name, width) in &self.wires {
            writeln!(s, "  wire {}{name};", bus(*width)).unwrap();
        }
        for r in &self.regs {
            writeln!(s, "  reg {}{r};", bus(w)).unwrap();
        }
        for (lhs, e) in &self.assigns {
            write!(s, "  assign {lhs} = ").unwrap();
            e.render(&mut s);
            s.push_str(";\n");
        }
        if !self.updates.is_empty() {
            s.push_str("  always @(posedge clk) begin\n    if (rst) begin\n");
            for (r, _) in &self.updates {
                writeln!(s, "      {r} <= {w}'h0;").unwrap();
            }
            s.push_str("    end else begin\n");
            for (r, e) in &self.updates {
                write!(s, "      {r} <= ").unwrap();
                e.render(&mut s);
                s.push_str(";\n");
            }
            s.push_str("    end\n  end\n");
        }
        s.push_str("endmodule\n");
        s
    }

    fn rename(&mut self, map: &HashMap<String, String>) {
        let r = |s: &mut String| {
            if let Some(n) = map.get(s) {
                *s = n.clone();
            }
        };
        self.inputs.iter_mut().for_each(r);
        self.outputs.iter_mut().for_each(r);
        self.regs.iter_mut().for_each(r);
        self.wires.iter_mut().for_each(|(n, _)| r(n));
        for (lhs, e) in self.assigns.iter_mut().chain(self.updates.iter_mut()) {
            r(lhs);
            e.rename(map);
        }
    }
}

/// Operator mix and size of one circuit family.
#[derive(Debug, Clone, Copy)]
struct Family {
    name: &'static str,
    ops: &'static [&'static str],
    wires: (usize, usize),
    regs: usize,
    ternary: f64,
}

const HT_FAMILIES: &[Family] = &[
    Family { name: "adder", ops: &["+", "-", "^"], wires: (3, 6), regs: 0, ternary: 0.1 },
    Family { name: "counter", ops: &["+", "&", "|"], wires: (2, 4), regs: 2, ternary: 0.2 },
    Family { name: "shifter", ops: &["<<", ">>", "|", "&"], wires: (3, 6), regs: 1, ternary: 0.15 },
    Family { name: "mixer", ops: &["^", "&", "|", "+"], wires: (4, 7), regs: 0, ternary: 0.1 },
    Family { name: "accumulator", ops: &["+", "-", "&"], wires: (2, 5), regs: 2, ternary: 0.15 },
    Family { name: "parity", ops: &["^", "|", "&"], wires: (3, 6), regs: 1, ternary: 0.05 },
];

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    width: usize,
    family: Family,
}

impl Builder<'_> {
    fn leaf(&mut self, pool: &[String]) -> Ex {
        if self.rng.gen_bool(0.12) {
            Ex::Const(self.width, self.rng.gen_range(1..(1u64 << self.width)))
        } else {
            Ex::sig(pool.choose(self.rng).expect("pool is nonempty"))
        }
    }

    fn expr(&mut self, pool: &[String], depth: usize) -> Ex {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(pool);
        }
        let roll: f64 = self.rng.gen();
        if roll < self.family.ternary {
            let cond = Ex::bin(if self.rng.gen_bool(0.5) { "<" } else { ">" }, self.leaf(pool), self.leaf(pool));
            let t = self.expr(pool, depth - 1);
            let f = self.expr(pool, depth - 1);
            return Ex::Tern(Box::new(cond), Box::new(t), Box::new(f));
        }
        if roll < self.family.ternary + 0.1 {
            return Ex::Not(Box::new(self.expr(pool, depth - 1)));
        }
        let op = *self.family.ops.choose(self.rng).expect("families have operators");
        let a = self.expr(pool, depth - 1);
        let b = if matches!(op, "<<" | ">>") {
            Ex::Const(self.width, self.rng.gen_range(1..4))
        } else {
            self.expr(pool, depth - 1)
        };
        Ex::bin(op, a, b)
    }

    fn sketch(&mut self, name: &str) -> Sketch {
        let n_in = self.rng.gen_range(2..=4);
        let n_wires = self.rng.gen_range(self.family.wires.0..=self.family.wires.1);
        let n_out = self.rng.gen_range(1..=2);
        let inputs: Vec<String> = (0..n_in).map(|i| format!("in{i}")).collect();
        let mut pool = inputs.clone();
        let regs: Vec<String> = (0..self.family.regs).map(|i| format!("r{i}")).collect();
        pool.extend(regs.iter().cloned());
        let mut wires = Vec::new();
        let mut assigns = Vec::new();
        for i in 0..n_wires {
            let w = format!("w{i}");
            let e = self.expr(&pool, 3);
            wires.push((w.clone(), self.width));
            assigns.push((w.clone(), e));
            pool.push(w);
        }
        let updates = regs.iter().map(|r| (r.clone(), self.expr(&pool, 2))).collect();
        let outputs: Vec<String> = (0..n_out).map(|i| format!("out{i}")).collect();
        for o in &outputs {
            let recent = &pool[pool.len().saturating_sub(3)..];
            let e = Ex::bin(self.family.ops.first().unwrap(), self.leaf(recent), self.leaf(&pool));
            assigns.push((o.clone(), e));
        }
        Sketch {
            name: name.to_string(),
            width: self.width,
            clocked: !regs.is_empty(),
            inputs,
            outputs,
            wires,
            regs,
            assigns,
            updates,
        }
    }
}

/// Adds a comparator trigger on rare input values and a leak that switches
/// an output to internal data while the trigger holds.
fn insert_trojan(s: &mut Sketch, rng: &mut ChaCha8Rng) {
    let w = s.width;
    let rare = |rng: &mut ChaCha8Rng| Ex::Const(w, rng.gen_range(1..(1u64 << w)));
    let a = Ex::sig(&s.inputs[0]);
    let b = Ex::sig(s.inputs.last().unwrap());
    let (k1, k2) = (rare(rng), rare(rng));
    let trigger = Ex::bin("&&", Ex::bin("==", a, k1), Ex::bin("==", b, k2));
    s.wires.push(("trig".into(), 1));
    s.assigns.push(("trig".into(), trigger));
    let victim = rng.gen_range(0..s.outputs.len());
    let out = s.outputs[victim].clone();
    let pos = s.assigns.iter().position(|(l, _)| *l == out).expect("outputs are assigned");
    let (_, normal) = s.assigns.remove(pos);
    s.wires.push(("payload".into(), w));
    s.assigns.push(("payload".into(), normal));
    let secret = s
        .wires
        .iter()
        .find(|(n, _)| n.starts_with('w'))
        .map(|(n, _)| Ex::sig(n))
        .unwrap_or_else(|| Ex::sig(&s.inputs[0]));
    let leak = Ex::Tern(
        Box::new(Ex::sig("trig")),
        Box::new(Ex::bin("^", secret, rare(rng))),
        Box::new(Ex::sig("payload")),
    );
    s.assigns.push((out, leak));
}

/// One generated design with its manifest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDesign {
    pub name: String,
    pub source: String,
    /// Trojan label for classification corpora, base circuit for
    /// similarity corpora.
    pub label: String,
    pub circuit: String,
}

/// Manifest value for classification corpora.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtLabel {
    pub label: String,
    pub circuit: String,
}

pub const TROJAN_LABEL: &str = "Trojan";
pub const CLEAN_LABEL: &str = "Non_Trojan";

/// `n_clean` clean and `n_trojan` infected designs spread over six circuit
/// families.
pub fn ht_corpus(n_clean: usize, n_trojan: usize, seed: u64) -> Vec<GeneratedDesign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_clean + n_trojan);
    for i in 0..n_clean + n_trojan {
        let trojan = i >= n_clean;
        let family = HT_FAMILIES[i % HT_FAMILIES.len()];
        let name = format!("{}_{}_{i:02}", if trojan { "ht" } else { "clean" }, family.name);
        let width = *[4, 8, 8, 16].choose(&mut rng).unwrap();
        let mut sketch = Builder { rng: &mut rng, width, family }.sketch(&name);
        if trojan {
            insert_trojan(&mut sketch, &mut rng);
        }
        out.push(GeneratedDesign {
            source: sketch.render(),
            name,
            label: if trojan { TROJAN_LABEL } else { CLEAN_LABEL }.to_string(),
            circuit: family.name.to_string(),
        });
    }
    out
}

const IP_OPS: &[&[&str]] = &[
    &["+", "-"],
    &["&", "|"],
    &["^", "&"],
    &["<<", "|", "+"],
    &["*", "+"],
    &["-", "^", ">>"],
    &["|", "^"],
    &["+", "&", "^", "-"],
];

/// `bases` distinct circuits with `variants` copies each. Variant 0 is the
/// original; the others rename every signal, permute ports and statements
/// and swap commutative operands.
pub fn ip_corpus(bases: usize, variants: usize, seed: u64) -> Vec<GeneratedDesign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(bases * variants);
    for b in 0..bases {
        let family = Family {
            name: "ip",
            ops: IP_OPS[b % IP_OPS.len()],
            wires: (4 + b % 4, 8 + b % 4),
            regs: b % 3,
            ternary: 0.05 * (b % 4) as f64,
        };
        let base_name = format!("core{b}");
        let width = [4, 8, 16][b % 3];
        let original = Builder { rng: &mut rng, width, family }.sketch(&base_name);
        for v in 0..variants {
            let mut s = original.clone();
            s.name = format!("{base_name}_v{v}");
            if v > 0 {
                obfuscate(&mut s, &mut rng);
            }
            out.push(GeneratedDesign {
                name: s.name.clone(),
                source: s.render(),
                label: base_name.clone(),
                circuit: base_name.clone(),
            });
        }
    }
    out
}

const SYLLABLES: &[&str] = &["da", "ke", "lo", "mi", "nu", "pa", "ri", "so", "ta", "ve", "xo", "zu"];

fn obfuscate(s: &mut Sketch, rng: &mut ChaCha8Rng) {
    let mut names: Vec<String> = s
        .inputs
        .iter()
        .chain(&s.outputs)
        .chain(&s.regs)
        .cloned()
        .chain(s.wires.iter().map(|(n, _)| n.clone()))
        .collect();
    names.sort();
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        let a = SYLLABLES.choose(rng).unwrap();
        let b = SYLLABLES.choose(rng).unwrap();
        map.insert(n.clone(), format!("{a}{b}_{i}"));
    }
    s.rename(&map);
    s.inputs.shuffle(rng);
    s.outputs.shuffle(rng);
    s.wires.shuffle(rng);
    s.assigns.shuffle(rng);
    s.updates.shuffle(rng);
    for (_, e) in s.assigns.iter_mut().chain(s.updates.iter_mut()) {
        e.shuffle_operands(rng);
    }
}

fn io_err(path: &Path, e: std::io::Error) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

fn write_designs(root: &Path, designs: &[GeneratedDesign]) -> std::io::Result<()> {
    for d in designs {
        let dir = root.join(&d.name);
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let file = dir.join(format!("{}.v", d.name));
        std::fs::write(&file, &d.source).map_err(|e| io_err(&file, e))?;
    }
    Ok(())
}

fn write_manifest<V: Serialize>(root: &Path, entries: BTreeMap<String, V>) -> std::io::Result<()> {
    let path = root.join("labels.json");
    let mut text = serde_json::to_string_pretty(&entries).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))
}

/// Writes designs and a `{design: {label, circuit}}` manifest.
pub fn write_ht_corpus(root: &Path, designs: &[GeneratedDesign]) -> std::io::Result<()> {
    write_designs(root, designs)?;
    let entries = designs
        .iter()
        .map(|d| {
            let v = HtLabel {
                label: d.label.clone(),
                circuit: d.circuit.clone(),
            };
            (d.name.clone(), v)
        })
        .collect();
    write_manifest(root, entries)
}

/// Writes designs and a `{design: category}` manifest.
pub fn write_ip_corpus(root: &Path, designs: &[GeneratedDesign]) -> std::io::Result<()> {
    write_designs(root, designs)?;
    write_manifest(root, designs.iter().map(|d| (d.name.clone(), d.label.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwgraph::{hw2graph, GraphKind, SourceUnit};

    fn parses(d: &GeneratedDesign) {
        let unit = SourceUnit::single(format!("{}.v", d.name), d.source.clone());
        for kind in [GraphKind::Ast, GraphKind::Dfg] {
            if let Err(e) = hw2graph(&unit, kind, None) {
                panic!("{}: {e}\n{}", d.name, d.source);
            }
        }
    }

    #[test]
    fn ht_designs_parse_and_are_labelled() {
        let c = ht_corpus(6, 6, 3);
        assert_eq!(c.len(), 12);
        assert_eq!(c.iter().filter(|d| d.label == TROJAN_LABEL).count(), 6);
        for d in &c {
            parses(d);
            assert_eq!(d.source.contains("=="), d.label == TROJAN_LABEL);
        }
        assert_eq!(ht_corpus(6, 6, 3), c);
    }

    #[test]
    fn ip_variants_are_renamed() {
        let c = ip_corpus(3, 3, 1);
        assert_eq!(c.len(), 9);
        for d in &c {
            parses(d);
        }
        assert_ne!(c[0].source, c[1].source);
        assert_eq!(c[1].label, "core0");
    }
}
