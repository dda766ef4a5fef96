use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use hwgnn::hwgraph::{hw2graph, Abstraction, GraphKind, HwGraph, SourceUnit};
use serde::Deserialize;

/// A problem with how the command was invoked; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn design_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Subdirectories of `root`, sorted by name.
pub fn design_dirs(root: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).with_context(|| format!("reading corpus {}", root.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Extracts one design directory; the graph takes the directory name.
pub fn extract(dir: &Path, kind: GraphKind, top: Option<&str>) -> anyhow::Result<(HwGraph, f64)> {
    let start = Instant::now();
    let unit = SourceUnit::from_dir(dir, Abstraction::Rtl).with_context(|| format!("reading {}", dir.display()))?;
    if unit.files.is_empty() {
        bail!("no .v files in {}", dir.display());
    }
    let mut g = hw2graph(&unit, kind, top)?;
    g.design = design_name(dir);
    Ok((g, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum HtEntry {
    Plain(String),
    Full {
        label: String,
        #[serde(default)]
        circuit: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtLabel {
    pub trojan: bool,
    pub circuit: Option<String>,
}

fn read_manifest<V: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<BTreeMap<String, V>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
}

pub fn read_ht_manifest(path: &Path) -> anyhow::Result<BTreeMap<String, HtLabel>> {
    let raw: BTreeMap<String, HtEntry> = read_manifest(path)?;
    raw.into_iter()
        .map(|(name, e)| {
            let (label, circuit) = match e {
                HtEntry::Plain(l) => (l, None),
                HtEntry::Full { label, circuit } => (label, circuit),
            };
            let trojan = match label.as_str() {
                "Trojan" => true,
                "Non_Trojan" => false,
                other => bail!("design {name}: label {other:?} is neither Trojan nor Non_Trojan"),
            };
            Ok((name, HtLabel { trojan, circuit }))
        })
        .collect()
}

pub fn read_category_manifest(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    read_manifest(path)
}

/// Fails with every design missing from either side.
pub fn check_manifest<V>(designs: &[String], manifest: &BTreeMap<String, V>) -> anyhow::Result<()> {
    let unlabeled: Vec<&str> = designs
        .iter()
        .filter(|d| !manifest.contains_key(*d))
        .map(String::as_str)
        .collect();
    let missing: Vec<&str> = manifest
        .keys()
        .filter(|k| !designs.contains(k))
        .map(String::as_str)
        .collect();
    if unlabeled.is_empty() && missing.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("manifest and corpus disagree");
    if !unlabeled.is_empty() {
        msg.push_str(&format!("\n  designs without a label: {}", unlabeled.join(", ")));
    }
    if !missing.is_empty() {
        msg.push_str(&format!("\n  labelled designs not in the corpus: {}", missing.join(", ")));
    }
    bail!(msg)
}
