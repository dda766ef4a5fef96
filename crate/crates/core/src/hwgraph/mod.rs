//! Verilog to graph extraction.
//!
//! A design moves through four stages:
//!
//! 1. [`flatten`] concatenates the design files, resolves `` `include ``
//!    directives, strips comments and counts module-name occurrences so the
//!    top module can be located with [`find_top_module`].
//! 2. [`parse_verilog`] turns the flattened text into a [`ParseTree`].
//! 3. [`ast_graph`] emits the syntax tree as a graph, or
//!    [`dfg_for_signal`] / [`merge_dfgs`] build the data-flow graph.
//! 4. [`graph_to_json`] / [`graph_from_json`] convert to and from the
//!    canonical JSON document.
//!
//! [`hw2graph`] runs the whole pipeline.

mod ast;
mod dfg;
mod flatten;
mod json;
mod lexer;
mod parser;
pub mod syntax;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{ast_graph, ast_labels, SyntaxNode};
pub use dfg::{dfg_for_signal, dfg_labels, merge_dfgs, DfgFragment, Elaboration, NodeKey};
pub use flatten::{find_top_module, flatten, FlatDesign};
pub use json::{graph_from_json, graph_to_json};
pub use parser::{parse_verilog, ParseTree};

/// Maximum depth of nested module instantiation during elaboration.
pub const DEFAULT_MAX_DEPTH: usize = 32;

/// Design abstraction level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Abstraction {
    #[serde(rename = "RTL")]
    Rtl,
    #[serde(rename = "GLN")]
    Gln,
}

/// Raw hardware design: one or more Verilog files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub files: Vec<(String, String)>,
    pub abstraction: Abstraction,
}

impl SourceUnit {
    pub fn new(files: Vec<(String, String)>, abstraction: Abstraction) -> Self {
        Self { files, abstraction }
    }

    /// Convenience constructor for a single in-memory RTL file.
    pub fn single(path: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(vec![(path.into(), text.into())], Abstraction::Rtl)
    }

    /// Every `.v` file directly inside `dir`, in file-name order.
    pub fn from_dir(dir: &std::path::Path, abstraction: Abstraction) -> std::io::Result<Self> {
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "v") {
                paths.push(path);
            }
        }
        paths.sort();
        let files = paths
            .into_iter()
            .map(|p| Ok((p.display().to_string(), std::fs::read_to_string(&p)?)))
            .collect::<std::io::Result<Vec<_>>>()?;
        Ok(Self::new(files, abstraction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphKind {
    #[serde(rename = "AST")]
    Ast,
    #[serde(rename = "DFG")]
    Dfg,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Ast => "AST",
            GraphKind::Dfg => "DFG",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ast" => Ok(GraphKind::Ast),
            "dfg" => Ok(GraphKind::Dfg),
            other => Err(format!("unknown graph kind {other:?} (expected ast or dfg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub label: String,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
}

/// Directed labelled graph extracted from one design.
///
/// Node ids are dense (`0..nodes.len()`) and equal to the node's position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HwGraph {
    pub design: String,
    pub kind: GraphKind,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl HwGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }

    /// Sorts edges by `(src, dst)` and drops duplicates.
    pub fn canonicalize(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.dst] += 1;
        }
        deg
    }

    /// Checks dense ids and edge endpoints, plus the rooted-tree shape for
    /// AST graphs.
    pub fn validate(&self) -> Result<(), HwGraphError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(HwGraphError::InvalidGraph(format!(
                    "node at position {i} has id {}",
                    n.id
                )));
            }
        }
        let n = self.nodes.len();
        for e in &self.edges {
            if e.src >= n || e.dst >= n {
                return Err(HwGraphError::InvalidGraph(format!(
                    "edge ({}, {}) references a missing node",
                    e.src, e.dst
                )));
            }
        }
        if self.kind == GraphKind::Ast {
            self.check_tree()?;
        }
        Ok(())
    }

    fn check_tree(&self) -> Result<(), HwGraphError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(HwGraphError::InvalidGraph("AST has no nodes".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(HwGraphError::InvalidGraph(format!(
                "AST has {} nodes but {} edges",
                n,
                self.edges.len()
            )));
        }
        let deg = self.in_degrees();
        let roots = deg.iter().filter(|&&d| d == 0).count();
        if roots != 1 || deg.iter().any(|&d| d > 1) {
            return Err(HwGraphError::InvalidGraph("AST is not a rooted tree".into()));
        }
        if self.edges.iter().any(|e| e.src == e.dst) {
            return Err(HwGraphError::InvalidGraph("AST contains a self-loop".into()));
        }
        // n-1 edges, one root and in-degree ≤ 1 leave only the possibility of
        // a cycle detached from the root; reachability rules it out.
        let mut children = vec![Vec::new(); n];
        for e in &self.edges {
            children[e.src].push(e.dst);
        }
        let root = deg.iter().position(|&d| d == 0).unwrap();
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(&children[v]);
        }
        if seen.iter().any(|s| !s) {
            return Err(HwGraphError::InvalidGraph("AST is not connected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HwGraphError {
    #[error("design has no source files")]
    EmptyDesign,
    #[error("file {0} is empty after comment stripping")]
    EmptyFile(String),
    #[error("unbalanced module/endmodule keywords in {0}")]
    Unbalanced(String),
    #[error("module {name} declared in both {first} and {second}")]
    DuplicateModule {
        name: String,
        first: String,
        second: String,
    },
    #[error("cannot resolve `include \"{include}\" in {file}")]
    UnresolvedInclude { file: String, include: String },
    #[error("no top module: every module is instantiated (counts {counts:?})")]
    NoTopModule { counts: BTreeMap<String, usize> },
    #[error("ambiguous top module: candidates {candidates:?} (counts {counts:?}); pass an explicit top")]
    AmbiguousTopModule {
        candidates: Vec<String>,
        counts: BTreeMap<String, usize>,
    },
    #[error("requested top module {0} is not declared")]
    UnknownTopModule(String),
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported construct {construct} at {line}:{col}")]
    UnsupportedConstruct {
        construct: String,
        line: usize,
        col: usize,
    },
    #[error("instance of undeclared module {0}")]
    UnknownModule(String),
    #[error("module instantiation deeper than {0} levels")]
    InstanceDepth(usize),
    #[error("unknown signal {0}")]
    UnknownSignal(String),
    #[error("design has no driven signals; the data-flow graph would be empty")]
    EmptyGraph,
    #[error("schema violation at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// Runs the full extraction pipeline on one design.
///
/// `top` overrides automatic top-module detection.
pub fn hw2graph(design: &SourceUnit, kind: GraphKind, top: Option<&str>) -> Result<HwGraph, HwGraphError> {
    let flat = flatten(design, top)?;
    let tree = parse_verilog(&flat)?;
    match kind {
        GraphKind::Ast => ast_graph(&tree),
        GraphKind::Dfg => {
            let elab = Elaboration::new(&tree, DEFAULT_MAX_DEPTH)?;
            elab.design_graph()
        }
    }
}
