use serde_json::{Map, Value};

use super::{GraphEdge, GraphKind, GraphNode, HwGraph, HwGraphError};

/// Canonical JSON text: nodes by id, edges by `(src, dst)`, two-space
/// indent, LF line endings and a trailing newline.
pub fn graph_to_json(g: &HwGraph) -> String {
    let mut canonical = g.clone();
    canonical.nodes.sort_by_key(|n| n.id);
    canonical.canonicalize();
    let mut text = serde_json::to_string_pretty(&canonical).expect("graph serialization cannot fail");
    text.push('\n');
    text
}

/// Parses and validates a graph document, reporting the first violation
/// with its JSON pointer.
pub fn graph_from_json(doc: &str) -> Result<HwGraph, HwGraphError> {
    let root: Value = serde_json::from_str(doc).map_err(|e| violation("", format!("invalid JSON: {e}")))?;
    let obj = root.as_object().ok_or_else(|| violation("", "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "design" | "kind" | "nodes" | "edges") {
            return Err(violation(&format!("/{key}"), "unknown field"));
        }
    }
    let design = field(obj, "", "design")?
        .as_str()
        .ok_or_else(|| violation("/design", "expected a string"))?
        .to_string();
    let kind = match field(obj, "", "kind")?.as_str() {
        Some("AST") => GraphKind::Ast,
        Some("DFG") => GraphKind::Dfg,
        _ => return Err(violation("/kind", "expected \"AST\" or \"DFG\"")),
    };
    let raw_nodes = field(obj, "", "nodes")?
        .as_array()
        .ok_or_else(|| violation("/nodes", "expected an array"))?;
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for (i, n) in raw_nodes.iter().enumerate() {
        let at = format!("/nodes/{i}");
        let o = n.as_object().ok_or_else(|| violation(&at, "expected an object"))?;
        check_keys(o, &at, &["id", "label", "name"])?;
        let id = index(field(o, &at, "id")?, &format!("{at}/id"))?;
        let label = field(o, &at, "label")?
            .as_str()
            .ok_or_else(|| violation(&format!("{at}/label"), "expected a string"))?
            .to_string();
        let name = match field(o, &at, "name")? {
            Value::Null => None,
            Value::String(s) => Some(s.clone()),
            _ => return Err(violation(&format!("{at}/name"), "expected a string or null")),
        };
        if id != i {
            return Err(violation(&format!("{at}/id"), format!("expected dense id {i}, found {id}")));
        }
        nodes.push(GraphNode { id, label, name });
    }
    let raw_edges = field(obj, "", "edges")?
        .as_array()
        .ok_or_else(|| violation("/edges", "expected an array"))?;
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (i, e) in raw_edges.iter().enumerate() {
        let at = format!("/edges/{i}");
        let o = e.as_object().ok_or_else(|| violation(&at, "expected an object"))?;
        check_keys(o, &at, &["src", "dst"])?;
        let src = index(field(o, &at, "src")?, &format!("{at}/src"))?;
        let dst = index(field(o, &at, "dst")?, &format!("{at}/dst"))?;
        for (v, name) in [(src, "src"), (dst, "dst")] {
            if v >= nodes.len() {
                return Err(violation(&format!("{at}/{name}"), format!("node {v} does not exist")));
            }
        }
        let edge = GraphEdge { src, dst };
        if let Some(prev) = edges.last() {
            if *prev >= edge {
                return Err(violation(&at, "edges must be sorted by (src, dst) without duplicates"));
            }
        }
        edges.push(edge);
    }
    let g = HwGraph {
        design,
        kind,
        nodes,
        edges,
    };
    g.validate()
        .map_err(|e| violation("", e.to_string()))?;
    Ok(g)
}

fn violation(pointer: &str, message: impl Into<String>) -> HwGraphError {
    HwGraphError::SchemaViolation {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn field<'a>(o: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value, HwGraphError> {
    o.get(key)
        .ok_or_else(|| violation(&format!("{at}/{key}"), "missing required field"))
}

fn check_keys(o: &Map<String, Value>, at: &str, allowed: &[&str]) -> Result<(), HwGraphError> {
    match o.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(violation(&format!("{at}/{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn index(v: &Value, at: &str) -> Result<usize, HwGraphError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| violation(at, "expected a non-negative integer"))
}
