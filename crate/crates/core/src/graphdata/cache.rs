use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{GraphDataError, GraphTensors};
use crate::binio::{write_atomic, Reader, Writer};
use crate::nncore::{Matrix, Scalar};

const MAGIC: &[u8; 4] = b"HWGT";
const VERSION: u32 = 1;

/// Cache key: hex SHA-256 of the canonical graph JSON followed by the
/// vocabulary fingerprint.
pub fn cache_key(canonical_json: &str, vocab_fingerprint: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_json.as_bytes());
    h.update(vocab_fingerprint.as_bytes());
    hex::encode(h.finalize())
}

/// Content-addressed directory of encoded graphs, one `<key>.gt` file each.
#[derive(Debug, Clone)]
pub struct GraphCache {
    root: PathBuf,
}

impl GraphCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, GraphDataError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| GraphDataError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.gt"))
    }

    pub fn put<T: Scalar>(&self, key: &str, vocab_fingerprint: &str, t: &GraphTensors<T>) -> Result<(), GraphDataError> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.str(vocab_fingerprint);
        w.str(&t.graph_id);
        match t.label {
            Some(l) => {
                w.u32(1);
                w.u64(l as u64);
            }
            None => w.u32(0),
        }
        w.u64(t.x.rows() as u64);
        w.u64(t.x.cols() as u64);
        for v in t.x.as_slice() {
            w.f64(v.as_f64());
        }
        w.u64(t.edges.len() as u64);
        for &(s, d) in &t.edges {
            w.u64(s as u64);
            w.u64(d as u64);
        }
        let path = self.path_for(key);
        write_atomic(&path, &w.finish()).map_err(|e| GraphDataError::io(&path, e))
    }

    /// `Ok(None)` on a miss, including entries produced under another
    /// vocabulary.
    pub fn get<T: Scalar>(&self, key: &str, vocab_fingerprint: &str) -> Result<Option<GraphTensors<T>>, GraphDataError> {
        let path = self.path_for(key);
        let data = match std::fs::read(&path) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GraphDataError::io(&path, e)),
        };
        let corrupt = |reason: &str| GraphDataError::CacheCorrupt {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let decoded = decode::<T>(&data, vocab_fingerprint).map_err(corrupt)?;
        Ok(decoded)
    }
}

fn decode<T: Scalar>(data: &[u8], fp: &str) -> Result<Option<GraphTensors<T>>, &'static str> {
    let mut r = Reader::open(data)?;
    if r.bytes(4)? != MAGIC {
        return Err("bad magic");
    }
    if r.u32()? != VERSION {
        return Err("unsupported version");
    }
    if r.str()? != fp {
        return Ok(None);
    }
    let graph_id = r.str()?;
    let label = match r.u32()? {
        0 => None,
        1 => Some(r.u64()? as usize),
        _ => return Err("bad label flag"),
    };
    let rows = r.len()?;
    let cols = r.len()?;
    let count = rows.checked_mul(cols).ok_or("length overflow")?;
    if count.checked_mul(8).is_none_or(|b| b > data.len()) {
        return Err("matrix exceeds file size");
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(T::lit(r.f64()?));
    }
    let x = Matrix::new(rows, cols, values).map_err(|_| "bad matrix shape")?;
    let n_edges = r.len()?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let s = r.len()?;
        let d = r.len()?;
        if s >= rows || d >= rows {
            return Err("edge endpoint out of range");
        }
        edges.push((s, d));
    }
    if !r.finished() {
        return Err("trailing data");
    }
    Ok(Some(GraphTensors { graph_id, x, edges, label }))
}
