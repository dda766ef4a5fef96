use std::fmt::Write as _;
use std::path::Path;

use crate::binio::write_atomic;
use crate::graph2vec::GnnModel;
use crate::graphdata::GraphTensors;
use crate::nncore::Scalar;

use super::LearnError;

/// Tab-separated embeddings: one `#` metadata line, then
/// `graph_id, label, h_1 … h_d` per graph.
pub fn embedding_table<T: Scalar>(
    model: &GnnModel<T>,
    graphs: &[GraphTensors<T>],
    label_of: impl Fn(&GraphTensors<T>) -> String,
) -> Result<String, LearnError> {
    let cfg = model.config();
    let mut out = String::new();
    writeln!(
        out,
        "# graph_id\tlabel\tdim={}\tcount={}\treadout={}",
        cfg.embedding_dim(),
        graphs.len(),
        serde_json::to_value(cfg.readout).expect("readout serializes").as_str().unwrap_or("")
    )
    .unwrap();
    for g in graphs {
        let h = model.embed(g)?;
        out.push_str(&g.graph_id);
        out.push('\t');
        out.push_str(&label_of(g));
        for v in h {
            write!(out, "\t{}", v.as_f64()).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn export_embeddings<T: Scalar>(
    model: &GnnModel<T>,
    graphs: &[GraphTensors<T>],
    label_of: impl Fn(&GraphTensors<T>) -> String,
    path: &Path,
) -> Result<(), LearnError> {
    let table = embedding_table(model, graphs, label_of)?;
    write_atomic(path, table.as_bytes()).map_err(|e| LearnError::io(path, e))
}
